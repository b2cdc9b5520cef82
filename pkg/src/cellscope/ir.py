"""The byte-level control-flow-graph language.

Expressions carry the scalar type of their result (``None`` on the synthetic
relation expressions built by the memory domain, which use exact arithmetic).
Instructions are limited to scalar assignment, copy assignment and guards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .abi import ScalarType
from .ctype import CType

ARITH_OPS = frozenset("+ - * / %".split())
BIT_OPS = frozenset("& | ^ << >>".split())
CMP_OPS = frozenset("< <= > >= == !=".split())
BINARY_OPS = ARITH_OPS | BIT_OPS | CMP_OPS
UNARY_OPS = frozenset("- ~ !".split())


class Expr:
    ty: ScalarType | None


@dataclass(frozen=True)
class Const(Expr):
    value: int | float
    ty: ScalarType | None

    def __str__(self):
        return repr(self.value) if isinstance(self.value, float) else str(self.value)


@dataclass(frozen=True)
class AddrOf(Expr):
    name: str
    ty: ScalarType = ScalarType.PTR

    def __str__(self):
        return f"&{self.name}"


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr
    ty: ScalarType | None

    def __str__(self):
        return f"{self.op}{_paren(self.arg)}"


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    ty: ScalarType | None

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Deref(Expr):
    ty: ScalarType
    addr: Expr

    def __str__(self):
        return f"*{self.ty}{_paren(self.addr)}"


@dataclass(frozen=True)
class Cast(Expr):
    ty: ScalarType
    arg: Expr

    def __str__(self):
        return f"({self.ty}){_paren(self.arg)}"


@dataclass(frozen=True)
class Input(Expr):
    """A fresh environment input, produced by each read of a volatile variable."""

    ty: ScalarType
    source: str

    def __str__(self):
        return f"input<{self.ty}>({self.source})"


@dataclass(frozen=True)
class CellRef(Expr):
    """A dereference resolved to one or several abstract cells."""

    cells: tuple
    ty: ScalarType

    def __str__(self):
        return "|".join(str(c) for c in self.cells)


def _paren(e: Expr) -> str:
    s = str(e)
    if isinstance(e, (Const, AddrOf, Binary, Input, CellRef)):
        return s
    return f"({s})"


def children(e: Expr) -> tuple:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Deref):
        return (e.addr,)
    if isinstance(e, Cast):
        return (e.arg,)
    return ()


def walk(e: Expr):
    yield e
    for c in children(e):
        yield from walk(c)


class Inst:
    pass


@dataclass(frozen=True)
class Assign(Inst):
    """``*ty addr <- value``."""

    ty: ScalarType
    addr: Expr
    value: Expr

    def __str__(self):
        return f"*{self.ty}{_paren(self.addr)} <- {self.value}"


@dataclass(frozen=True)
class Copy(Inst):
    """``*t dst <- *t src``: a raw byte copy of ``size`` bytes."""

    size: int
    align: int
    dst: Expr
    src: Expr
    tyname: str = ""

    def __str__(self):
        t = self.tyname or f"byte[{self.size}]"
        return f"*{t}{_paren(self.dst)} <- *{t}{_paren(self.src)}"


@dataclass(frozen=True)
class Guard(Inst):
    """Passes iff ``expr`` evaluates to 0."""

    expr: Expr

    def __str__(self):
        return f"{self.expr} == 0 ?"


SKIP = Guard(Const(0, ScalarType.INT))


@dataclass(frozen=True)
class Loc:
    file: str
    line: int
    column: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NOLOC = Loc("<builtin>", 0, 0)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    inst: Inst
    loc: Loc = NOLOC

    def __str__(self):
        return f"{self.src} -> {self.dst} : {self.inst}"


@dataclass(frozen=True)
class VarInfo:
    name: str
    ctype: CType
    size: int
    align: int
    static: bool
    volatile: bool = False
    source: str = ""


@dataclass
class Point:
    id: int
    stack: tuple
    vars: frozenset = frozenset()
    labels: list = field(default_factory=list)
    trap: str | None = None


@dataclass
class Cfg:
    points: list
    edges: list
    entry: int
    exit: int
    vars: dict            # name -> VarInfo, every variable of every frame
    functions: frozenset  # function names (sizeof 0)
    source_file: str = "<input>"

    def succs(self, p: int) -> list:
        return self._out.get(p, [])

    def preds(self, p: int) -> list:
        return self._in.get(p, [])

    def __post_init__(self):
        self.reindex()

    def reindex(self):
        self._out: dict[int, list] = {}
        self._in: dict[int, list] = {}
        for e in self.edges:
            self._out.setdefault(e.src, []).append(e)
            self._in.setdefault(e.dst, []).append(e)

    def label(self, name: str) -> int:
        """The unique control point carrying ``name``."""
        found = [p.id for p in self.points if name in p.labels]
        if len(found) != 1:
            raise KeyError(f"label {name!r} names {len(found)} control points")
        return found[0]

    def globals(self) -> frozenset:
        return frozenset(v for v, info in self.vars.items() if info.static)

    def size_of(self, name: str) -> int:
        if name in self.functions:
            return 0
        return self.vars[name].size

    def dump(self) -> str:
        lines = []
        for p in self.points:
            tags = []
            if p.labels:
                tags.append("labels=" + ",".join(p.labels))
            if p.trap:
                tags.append(f"trap={p.trap}")
            if p.id == self.entry:
                tags.append("entry")
            if p.id == self.exit:
                tags.append("exit")
            lines.append(f"point {p.id} stack={'/'.join(p.stack)} "
                         f"vars={','.join(sorted(p.vars))}"
                         + (" " + " ".join(tags) if tags else ""))
        for e in self.edges:
            lines.append(str(e))
        return "\n".join(lines) + "\n"
