"""Seeded generator of small random programs in the analyzed C subset.

The programs mix byte-level union punning, struct fields, arrays, pointer
casts, bounded loops and branches on volatile inputs. They are meant for
differential testing, so they may contain run-time errors.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

PRELUDE = """\
union U {
  struct { uint8 b0, b1, b2, b3; } b;
  struct { uint16 w0, w1; } w;
  uint32 d;
};
struct S { int x; short y; unsigned char c[4]; int *p; };

union U u;
struct S s;
int arr[8];
unsigned char buf[16];
int g0, g1, g2;
int t0 = 5, t1 = -3;
"""

COPY_FN = """\
void copy(void *dst, void *src, unsigned n) {
  unsigned char *d = (unsigned char *) dst;
  unsigned char *q = (unsigned char *) src;
  while (n != 0) { *d = *q; d++; q++; n--; }
}
"""

INT_LVALUES = ["g0", "g1", "g2", "s.x", "arr[0]", "arr[7]"]
BYTE_LVALUES = ["u.b.b0", "u.b.b1", "u.b.b2", "u.b.b3", "s.c[0]", "s.c[3]", "buf[0]", "buf[5]"]
WORD_LVALUES = ["u.w.w0", "u.w.w1", "s.y"]
READS = INT_LVALUES + BYTE_LVALUES + WORD_LVALUES + ["u.d", "t0", "t1"]


@dataclass
class _Gen:
    rng: random.Random
    volatile: dict = field(default_factory=dict)
    loops: int = 0
    lines: list = field(default_factory=list)
    uses_copy: bool = False

    def vol(self) -> str:
        name = f"v{self.rng.randrange(3)}"
        if name not in self.volatile:
            lo = self.rng.choice([0, 0, -10])
            self.volatile[name] = (lo, lo + self.rng.choice([1, 3, 10, 255, 1000]))
        return name

    def atom(self, locals_) -> str:
        r = self.rng.random()
        if r < 0.25:
            return str(self.rng.choice([0, 1, 2, 3, 7, 100, 255, 256, -1]))
        if r < 0.45:
            return self.vol()
        if r < 0.55 and locals_:
            return self.rng.choice(locals_)
        return self.rng.choice(READS)

    def expr(self, locals_, depth=2) -> str:
        if depth == 0 or self.rng.random() < 0.35:
            return self.atom(locals_)
        op = self.rng.choice(["+", "-", "*", "&", "|", "^", ">>", "/", "%", "<", "=="])
        a = self.expr(locals_, depth - 1)
        if op == ">>":
            b = str(self.rng.randrange(0, 9))
        elif op in "/%":
            b = self.rng.choice([str(self.rng.randrange(1, 9)), self.vol()])
        else:
            b = self.expr(locals_, depth - 1)
        return f"({a} {op} {b})"

    def cond(self, locals_) -> str:
        op = self.rng.choice(["<", "<=", "==", "!=", ">"])
        return f"{self.expr(locals_, 1)} {op} {self.expr(locals_, 1)}"

    def emit(self, indent, text):
        self.lines.append("  " * indent + text)

    def stmt(self, indent, locals_, depth):
        r = self.rng.random()
        rng = self.rng
        if r < 0.22:
            self.emit(indent, f"{rng.choice(INT_LVALUES)} = {self.expr(locals_)};")
        elif r < 0.34:
            self.emit(indent, f"{rng.choice(BYTE_LVALUES)} = {self.expr(locals_)} & 255;")
        elif r < 0.44:
            self.emit(indent, f"{rng.choice(WORD_LVALUES)} = {self.expr(locals_)};")
        elif r < 0.50:
            self.emit(indent, f"u.d = {self.expr(locals_)};")
        elif r < 0.56:
            self.emit(indent, f"s.p = {rng.choice(['&g0', '&t0', '&t1', '&arr[3]'])};")
            self.emit(indent, f"{rng.choice(['g1', 'g2'])} = *s.p + {self.atom(locals_)};")
        elif r < 0.62:
            k = rng.randrange(4)
            self.emit(indent, f"((unsigned char *) &s.x)[{k}] = ((unsigned char *) &u.d)[{3 - k}];")
        elif r < 0.67:
            self.uses_copy = True
            src, dst, n = rng.choice([("&u", "&s.x", 4), ("&s", "buf", 12), ("arr", "buf", 16),
                                      ("buf", "&u", 4), ("&s.c[0]", "&g0", 4)])
            self.emit(indent, f"copy({dst}, {src}, {n});")
        elif r < 0.72:
            idx = self.expr(locals_, 1)
            self.emit(indent, f"arr[({idx}) & 7] = {self.expr(locals_)};")
        elif r < 0.76:
            self.emit(indent, f"g0 = *((int *) buf + ({self.expr(locals_, 1)} & 3));")
        elif r < 0.86 and depth > 0:
            self.emit(indent, f"if ({self.cond(locals_)}) {{")
            self.block(indent + 1, locals_, depth - 1)
            if rng.random() < 0.5:
                self.emit(indent, "} else {")
                self.block(indent + 1, locals_, depth - 1)
            self.emit(indent, "}")
        elif depth > 0 and self.loops < 3:
            i = f"i{self.loops}"
            self.loops += 1
            bound = rng.choice(["4", "8", "3", f"({self.vol()} & 7)"])
            step = rng.choice(["++", " += 2"])
            self.emit(indent, f"for ({i} = 0; {i} < {bound}; {i}{step}) {{")
            self.block(indent + 1, locals_ + [i], depth - 1)
            self.emit(indent, "}")
        else:
            self.emit(indent, f"g2 = g2 + {self.expr(locals_, 1)};")

    def block(self, indent, locals_, depth):
        for _ in range(self.rng.randint(1, 4)):
            self.stmt(indent, locals_, depth)


def generate(seed: int) -> tuple[str, dict]:
    """Program text and volatile ranges for ``seed`` (deterministic)."""
    g = _Gen(random.Random(seed))
    g.block(1, [], 2)
    for _ in range(2):
        g.stmt(1, [], 0)
    body = g.lines
    vols = sorted(g.volatile)
    head = [PRELUDE]
    head += [f"volatile int {v};" for v in vols]
    head.append("")
    if g.uses_copy:
        head.append(COPY_FN)
    decl = [f"  int i{k};" for k in range(g.loops)]
    text = "\n".join(head + ["void main(void) {"] + decl + body + ["}", ""])
    return text, dict(g.volatile)
