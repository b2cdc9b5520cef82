"""Abstract memory states over dynamic cell sets.

A state keeps a set of cells (variable, offset, scalar type) with a value
environment over them.  Overlapping cells are all meant to hold at once, so
dropping a cell only loses precision.  Missing cells are realized on demand
from the overlapping ones.

Two byte-range maps complement the cells: ``written`` (bytes some path may
have stored to since the variable was created) and ``uninit`` (bytes that may
still hold no value).  Static bytes outside ``written`` are known to be zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..abi import Abi, ScalarType as T
from ..ir import Assign, Binary, Cast, CellRef, Const, Copy, Deref, Expr, Guard, Input, Unary
from .numeric import Bottom, EvalConfig, Num, const, join, meet, mk, top
from . import numeric as nm
from .values import NULL_BASE, NULL_ONLY, OMEGA_BASE, TOP_BASES, BaseSet, ValueEnv, ValueEval

UNKNOWN = "<unknown>"


@dataclass(frozen=True)
class Cell:
    var: str
    off: int
    ty: T
    size: int = field(compare=False, default=0)

    @property
    def end(self) -> int:
        return self.off + self.size

    def overlaps(self, lo: int, hi: int) -> bool:
        return self.off < hi and lo < self.end

    def key(self):
        return (self.var, self.off, self.ty.value if hasattr(self.ty, "value") else str(self.ty))

    def __str__(self):
        return f"({self.var},{self.off},{self.ty})"


def cell_sort_key(c: Cell):
    return (c.var, c.off, str(c.ty))


# -- byte ranges (sorted tuples of disjoint half-open intervals) --------------


def r_add(rs: tuple, lo: int, hi: int) -> tuple:
    if lo >= hi:
        return rs
    out = []
    for a, b in rs:
        if b < lo or hi < a:
            out.append((a, b))
        else:
            lo, hi = min(lo, a), max(hi, b)
    out.append((lo, hi))
    return tuple(sorted(out))


def r_union(x: tuple, y: tuple) -> tuple:
    for a, b in y:
        x = r_add(x, a, b)
    return x


def r_sub(rs: tuple, lo: int, hi: int) -> tuple:
    out = []
    for a, b in rs:
        if b <= lo or hi <= a:
            out.append((a, b))
            continue
        if a < lo:
            out.append((a, lo))
        if hi < b:
            out.append((hi, b))
    return tuple(out)


def r_hits(rs: tuple, lo: int, hi: int) -> bool:
    return any(a < hi and lo < b for a, b in rs)


def r_clip(rs: tuple, lo: int, hi: int) -> tuple:
    return tuple((max(a, lo), min(b, hi)) for a, b in rs if a < hi and lo < b)


def r_leq(x: tuple, y: tuple) -> bool:
    return all(any(c <= a and b <= d for c, d in y) for a, b in x)


def r_str(rs: tuple) -> str:
    return " ".join(f"[{a},{b})" for a, b in rs)


# -- relations ------------------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    """A constraint ``expr == 0`` between live cells, or a NULL link.

    ``byte-extract``, ``byte-compose`` and ``null-link`` hold for every memory
    in which the cells exist; ``copy`` records a scalar assignment and lives
    only as long as neither side is written.
    """

    kind: str
    cells: tuple
    expr: Expr | None = None

    def __str__(self):
        if self.kind == "null-link":
            return f"null-link {self.cells[0]} ~ {self.cells[1]}"
        return f"{self.kind}: {self.expr} == 0"


@dataclass
class MemoryState:
    env: ValueEnv
    live: frozenset
    written: dict = field(default_factory=dict)
    uninit: dict = field(default_factory=dict)
    rels: frozenset = frozenset()
    exact: frozenset = frozenset()
    bottom: bool = False

    def copy(self) -> MemoryState:
        return MemoryState(self.env.copy(), self.live, dict(self.written), dict(self.uninit),
                           self.rels, self.exact, self.bottom)

    @property
    def cells(self):
        return self.env.kinds.keys()

    def cells_of(self, var: str) -> list:
        return [c for c in self.env.kinds if c.var == var]

    def value(self, cell: Cell):
        return self.env.get(cell)

    def bases(self, cell: Cell) -> BaseSet:
        return self.env.get_bases(cell)

    def __eq__(self, other):
        if not isinstance(other, MemoryState):
            return NotImplemented
        if self.bottom or other.bottom:
            return self.bottom == other.bottom
        return (self.env == other.env and self.live == other.live
                and self.written == other.written and self.uninit == other.uninit
                and self.rels == other.rels and self.exact == other.exact)

    def dump(self) -> list[str]:
        if self.bottom:
            return ["bottom"]
        lines = []
        for c in sorted(self.env.kinds, key=cell_sort_key):
            s = f"{c} = {self.env.get(c)}"
            if c.ty is T.PTR:
                s = f"{c} = bases {self.env.get_bases(c)} offset {self.env.get(c)}"
            lines.append(s)
        for v in sorted(self.written):
            if self.written[v]:
                lines.append(f"written {v}: {r_str(self.written[v])}")
        for v in sorted(self.uninit):
            if self.uninit[v]:
                lines.append(f"uninit {v}: {r_str(self.uninit[v])}")
        for r in sorted(self.rels, key=str):
            lines.append(f"rel {r}")
        return lines


@dataclass
class DomainConfig:
    fanout: int = 64
    thresholds: tuple = nm.DEFAULT_THRESHOLDS
    eval: EvalConfig = field(default_factory=EvalConfig)
    relations: bool = True
    overlap_removal: bool = True     # switching this off breaks soundness (negative control)


class Fanout(Exception):
    """A dereference with more candidate locations than the configured limit."""


@dataclass
class Effects:
    """What a transfer wrote, for the equality domain."""

    writes: list = field(default_factory=list)     # (var, lo, hi)
    window: tuple | None = None                    # (src_var, s, dst_var, d, l) of an exact copy


class MemoryDomain:
    """Transfer functions and lattice operations on MemoryState.

    ``var_sizes`` and ``statics`` describe every variable of the program;
    ``functions`` are valid pointer bases of size 0 that cannot be accessed.
    """

    def __init__(self, abi: Abi, var_sizes: dict, statics=(), functions=(), config=None):
        self.abi = abi
        self.var_sizes = dict(var_sizes)
        self.statics = frozenset(statics)
        self.functions = frozenset(functions)
        self.config = config or DomainConfig()
        self.sizes = dict(self.var_sizes)
        for f in self.functions:
            self.sizes[f] = 0
        self.diagnostics: dict = {}

    @classmethod
    def for_cfg(cls, cfg, abi: Abi, config=None):
        return cls(abi, {n: v.size for n, v in cfg.vars.items()},
                   [n for n, v in cfg.vars.items() if v.static], cfg.functions, config)

    def cell(self, var: str, off: int, ty: T) -> Cell:
        return Cell(var, off, ty, self.abi.sizeof(ty))

    # -- construction --------------------------------------------------------------

    def bottom(self, live=frozenset()) -> MemoryState:
        return MemoryState(ValueEnv.bottom(), frozenset(live), bottom=True)

    def initial(self, live) -> MemoryState:
        s = MemoryState(ValueEnv(), frozenset())
        for v in sorted(live):
            s = self.create(s, v)
        return s

    def create(self, s: MemoryState, var: str) -> MemoryState:
        if s.bottom:
            return MemoryState(s.env, s.live | {var}, bottom=True)
        s = s.copy()
        self._drop_var(s, var)
        s.live = s.live | {var}
        s.written.pop(var, None)
        if var in self.statics:
            s.uninit.pop(var, None)
        else:
            s.uninit[var] = ((0, self.var_sizes[var]),) if self.var_sizes[var] else ()
        return s

    def delete(self, s: MemoryState, var: str) -> MemoryState:
        if s.bottom:
            return MemoryState(s.env, s.live - {var}, bottom=True)
        s = s.copy()
        self._drop_var(s, var)
        s.live = s.live - {var}
        s.written.pop(var, None)
        s.uninit.pop(var, None)
        for c, b in list(s.env.bases.items()):
            if var in (b.names or ()):
                s.env.bases[c] = b.replace(var, OMEGA_BASE)
        return s

    def remove(self, s: MemoryState, c: Cell) -> MemoryState:
        """Forget the cell ``c`` (never shrinks the concretization)."""
        if s.bottom or c not in s.env.kinds:
            return s
        s = s.copy()
        self._remove(s, c)
        return s

    def _drop_var(self, s: MemoryState, var: str):
        for c in s.cells_of(var):
            self._remove(s, c)

    def _remove(self, s: MemoryState, c: Cell):
        s.env = s.env.remove_cell(c)
        s.rels = frozenset(r for r in s.rels if c not in r.cells)
        if c in s.exact:
            s.exact = s.exact - {c}

    def _forget(self, s: MemoryState, touched):
        touched = set(touched)
        s.rels = frozenset(r for r in s.rels if not touched.intersection(r.cells))

    # -- realization ------------------------------------------------------------------

    def realize(self, s: MemoryState, c: Cell) -> MemoryState:
        if s.bottom or c in s.env.kinds:
            return s
        s = s.copy()
        self._realize(s, c)
        return s

    def _realize(self, s: MemoryState, c: Cell):
        """Add ``c`` to the private state ``s``, refined from its overlapping cells."""
        if c in s.env.kinds or s.bottom:
            return
        if c.off < 0 or c.end > self.var_sizes.get(c.var, -1):
            raise ValueError(f"cell {c} outside its variable")
        over = [o for o in s.env.kinds if o.var == c.var and o.overlaps(c.off, c.end)]
        s.env = s.env.add_cell(c, c.ty, self.abi)
        new_rels = []
        if c.ty.is_int:
            for o in over:
                if o.ty.is_int and o.off <= c.off and c.end <= o.end:
                    new_rels.append(self._extract(c, o))
                elif o.ty.is_int and c.off <= o.off and o.end <= c.end and o.size < c.size:
                    pass
                elif o.ty is T.PTR and o.off == c.off and o.size == c.size:
                    new_rels.append(Relation("null-link", (c, o)))
            tiling = self._tiling(c, over)
            if tiling:
                new_rels.append(self._compose(c, tiling))
        elif c.ty is T.PTR:
            for o in over:
                if o.ty.is_int and o.off == c.off and o.size == c.size:
                    new_rels.append(Relation("null-link", (o, c)))
        if c.var in self.statics and not r_hits(s.written.get(c.var, ()), c.off, c.end):
            if c.ty.is_int:
                s.env.set(c, const(0))
            elif c.ty is T.PTR:
                s.env.set(c, const(0), NULL_ONLY)
        if not self.config.relations:
            new_rels = [r for r in new_rels if r.kind == "null-link"]
        for r in new_rels:
            self._apply(s, r)
            if s.bottom:
                return
        s.rels = s.rels | frozenset(new_rels)
        self.diagnostics["realized"] = self.diagnostics.get("realized", 0) + 1

    def _sig(self, inner_off, inner_end, outer_off, outer_end) -> int:
        """Significance (in bytes) of an inner byte range within an outer one."""
        if self.abi.little_endian:
            return inner_off - outer_off
        return outer_end - inner_end

    def _extract(self, c: Cell, o: Cell) -> Relation:
        delta = self._sig(c.off, c.end, o.off, o.end)
        src = Cast(o.ty.to_unsigned(), CellRef((o,), o.ty))
        if delta:
            src = Binary("/", src, Const(256 ** delta, None), None)
        e = Binary("-", CellRef((c,), c.ty), Cast(c.ty, src), None)
        return Relation("byte-extract", (c, o), e)

    def _tiling(self, c: Cell, over: list):
        parts = [o for o in over if o.ty.is_int and c.off <= o.off and o.end <= c.end
                 and o.size < c.size]
        by_start: dict = {}
        for o in parts:
            by_start.setdefault(o.off, []).append(o)
        for lst in by_start.values():
            lst.sort(key=lambda o: (-o.size, str(o.ty)))

        def search(pos, acc):
            if pos == c.end:
                return list(acc)
            for o in by_start.get(pos, ()):
                acc.append(o)
                r = search(o.end, acc)
                if r:
                    return r
                acc.pop()
            return None

        t = search(c.off, [])
        return t if t and len(t) > 1 else None

    def _compose(self, c: Cell, parts: list) -> Relation:
        total = None
        for o in parts:
            w = 256 ** self._sig(o.off, o.end, c.off, c.end)
            term = Cast(o.ty.to_unsigned(), CellRef((o,), o.ty))
            if w != 1:
                term = Binary("*", term, Const(w, None), None)
            total = term if total is None else Binary("+", total, term, None)
        e = Binary("-", CellRef((c,), c.ty), Cast(c.ty, total), None)
        return Relation("byte-compose", (c,) + tuple(parts), e)

    def _apply(self, s: MemoryState, r: Relation):
        if s.bottom:
            return
        if r.kind == "null-link":
            i, p = r.cells
            iv, pb = s.env.get(i), s.env.get_bases(p)
            if iv.lo == iv.hi == 0:
                nb = pb.intersect(NULL_ONLY)
                if nb.is_empty():
                    self._to_bottom(s)
                    return
                s.env.set(p, const(0), nb)
            elif not iv.contains(0) and NULL_BASE in pb and not pb.is_top:
                s.env.set(p, s.env.get(p), pb.without(NULL_BASE))
            pb = s.env.get_bases(p)
            if pb == NULL_ONLY:
                nv = meet(iv, const(0))
                if nv is None:
                    self._to_bottom(s)
                    return
                s.env.set(i, nv)
            return
        env, _ = s.env.test(r.expr, self.abi, EvalConfig(), sizes=self.sizes)
        if env.is_bottom:
            self._to_bottom(s)
        else:
            s.env = env

    def _to_bottom(self, s: MemoryState):
        s.bottom = True
        s.env = ValueEnv.bottom(s.env.kinds)

    def reapply(self, s: MemoryState, rounds: int = 4):
        """Propagate every stored relation until stable (bounded)."""
        for _ in range(rounds):
            if s.bottom or not s.rels:
                return
            before = s.env.copy()
            for r in sorted(s.rels, key=str):
                self._apply(s, r)
                if s.bottom:
                    return
            if s.env == before:
                return

    # -- dereferences -------------------------------------------------------------

    def evaluator(self, s: MemoryState) -> ValueEval:
        return ValueEval(s.env, self.abi, self.config.eval, self.sizes)

    def targets(self, s: MemoryState, addr: Expr, size: int, align: int, alarms: list):
        """Candidate (base, offset) locations of an access of ``size`` bytes at ``addr``.

        Raises Fanout when there are too many; the result may be empty.
        """
        ev = self.evaluator(s)
        off = ev.eval(addr)
        alarms.extend(k for k, _ in ev.alarms)
        if off is None:
            return []
        bases = ev.bases_of(addr)
        if NULL_BASE in bases:
            alarms.append("null-deref")
        if OMEGA_BASE in bases:
            alarms.append("invalid-pointer")
        real = bases.real()
        if real is None:
            alarms.extend(["invalid-pointer", "out-of-bound", "misaligned"])
            raise Fanout
        out = []
        for b in sorted(real):
            if b in self.functions:
                alarms.append("invalid-pointer")
                continue
            if b not in s.live:
                alarms.append("invalid-pointer")
                continue
            hi_ok = self.var_sizes[b] - size
            if off.lo < 0 or off.hi > hi_ok:
                alarms.append("out-of-bound")
            lo, hi = max(off.lo, 0), min(off.hi, hi_ok)
            if lo > hi:
                continue
            if align > 1 and self._may_misalign(off, lo, hi, align):
                alarms.append("misaligned")
            cm = nm.cong_meet(off.m, off.r, align, 0)
            if cm is None:
                continue
            m, r = cm
            if m == 0:
                if lo <= r <= hi:
                    out.append((b, r))
                continue
            first = lo + (r - lo) % m
            n = (hi - first) // m + 1 if first <= hi else 0
            if len(out) + n > self.config.fanout:
                alarms.append("fanout")
                raise Fanout
            out.extend((b, i) for i in range(first, hi + 1, m))
        return out

    @staticmethod
    def _may_misalign(off: Num, lo, hi, align) -> bool:
        if off.m == 0:
            return off.r % align != 0
        if off.m % align == 0 and off.r % align == 0:
            return False
        return hi > lo or lo % align != 0

    def resolve(self, s: MemoryState, e: Expr, alarms: list, read=True) -> Expr:
        """Replace every dereference in ``e`` by the cells it may access (innermost first)."""
        if isinstance(e, Deref):
            addr = self.resolve(s, e.addr, alarms)
            size, align = self.abi.sizeof(e.ty), self.abi.alignof(e.ty)
            try:
                locs = self.targets(s, addr, size, align, alarms)
            except Fanout:
                if read and any(s.uninit.values()):
                    alarms.append("uninit-read")
                return Input(e.ty, UNKNOWN)
            if not locs:
                raise Bottom
            cells = []
            for b, i in locs:
                c = self.cell(b, i, e.ty)
                self._realize(s, c)
                if s.bottom:
                    raise Bottom
                if read and r_hits(s.uninit.get(b, ()), c.off, c.end):
                    alarms.append("uninit-read")
                cells.append(c)
            return CellRef(tuple(cells), e.ty)
        if isinstance(e, Unary):
            a = self.resolve(s, e.arg, alarms)
            return e if a is e.arg else Unary(e.op, a, e.ty)
        if isinstance(e, Binary):
            a = self.resolve(s, e.left, alarms)
            b = self.resolve(s, e.right, alarms)
            return e if (a is e.left and b is e.right) else Binary(e.op, a, b, e.ty)
        if isinstance(e, Cast):
            a = self.resolve(s, e.arg, alarms)
            return e if a is e.arg else Cast(e.ty, a)
        return e

    # -- writes -----------------------------------------------------------------

    def _clobber(self, s: MemoryState, var: str, lo: int, hi: int, keep=()):
        """Remove the cells of ``var`` overlapping [lo, hi) other than ``keep``."""
        keep = set(keep)
        if not self.config.overlap_removal:
            return
        for o in [o for o in s.env.kinds if o.var == var and o.overlaps(lo, hi)]:
            if o not in keep:
                self._remove(s, o)

    def _invalidate_all(self, s: MemoryState, vars_, fx: Effects):
        for v in vars_:
            self._drop_var(s, v)
            s.written[v] = r_add(s.written.get(v, ()), 0, self.var_sizes[v])
            fx.writes.append((v, 0, self.var_sizes[v]))

    def _writable(self, s: MemoryState):
        return sorted(v for v in s.live if self.var_sizes.get(v, 0) > 0)

    # -- transfers ----------------------------------------------------------------

    def transfer(self, s: MemoryState, inst):
        """Returns (state, alarm kinds, Effects)."""
        fx = Effects()
        if s.bottom:
            return s, [], fx
        s = s.copy()
        alarms: list = []
        try:
            if isinstance(inst, Guard):
                self._guard(s, inst, alarms)
            elif isinstance(inst, Assign):
                self._assign(s, inst, alarms, fx)
            elif isinstance(inst, Copy):
                self._copy(s, inst, alarms, fx)
            else:
                raise TypeError(inst)
        except Bottom:
            self._to_bottom(s)
        if s.bottom:
            s = self.bottom(s.live)
        return s, alarms, fx

    def _guard(self, s: MemoryState, inst: Guard, alarms: list):
        e = self.resolve(s, inst.expr, alarms)
        env, al = s.env.test(e, self.abi, self.config.eval, truth=False, sizes=self.sizes)
        alarms.extend(k for k, _ in al)
        if env.is_bottom:
            raise Bottom
        s.env = env
        self.reapply(s)

    def _assign(self, s: MemoryState, inst: Assign, alarms: list, fx: Effects):
        size, align = self.abi.sizeof(inst.ty), self.abi.alignof(inst.ty)
        addr = self.resolve(s, inst.addr, alarms)
        value = self.resolve(s, inst.value, alarms)
        ev = self.evaluator(s)
        v = ev.eval(value)
        alarms.extend(k for k, _ in ev.alarms)
        if v is None:
            raise Bottom
        v = ev.fit(v, inst.ty, None, alarm=False)
        bases = ev.bases_of(value) if inst.ty is T.PTR else None
        if bases is not None:
            if bases.is_empty():
                raise Bottom
            if bases.only_markers():
                v = const(0)
        try:
            locs = self.targets(s, addr, size, align, alarms)
        except Fanout:
            self._invalidate_all(s, self._writable(s), fx)
            return
        if not locs:
            raise Bottom
        if len(locs) == 1:
            b, i = locs[0]
            c = self.cell(b, i, inst.ty)
            self._clobber(s, b, c.off, c.end)
            if c in s.env.kinds:
                self._remove(s, c)
            s.env = s.env.add_cell(c, c.ty, self.abi, v, bases)
            s.exact = s.exact | {c}
            s.written[b] = r_add(s.written.get(b, ()), c.off, c.end)
            if b in s.uninit:
                s.uninit[b] = r_sub(s.uninit[b], c.off, c.end)
            fx.writes.append((b, c.off, c.end))
            self._copy_relation(s, c, value)
            return
        cells = [self.cell(b, i, inst.ty) for b, i in locs]
        for c in cells:
            self._realize(s, c)
        if s.bottom:
            raise Bottom
        for c in cells:
            self._clobber(s, c.var, c.off, c.end, keep=cells)
        self._forget(s, cells)
        for c in cells:
            old = s.env.get(c)
            if c.ty is T.PTR:
                ob = s.env.get_bases(c)
                nv = join(None if ob.only_markers() else old, None if bases.only_markers() else v)
                s.env.set(c, nv if nv is not None else const(0), ob.union(bases))
            else:
                s.env.set(c, join(old, v))
            s.written[c.var] = r_add(s.written.get(c.var, ()), c.off, c.end)
            fx.writes.append((c.var, c.off, c.end))

    def _copy_relation(self, s: MemoryState, c: Cell, value: Expr):
        if not self.config.relations or not c.ty.is_int:
            return
        inner = value.arg if isinstance(value, Cast) else value
        if not (isinstance(inner, CellRef) and len(inner.cells) == 1):
            return
        x = inner.cells[0]
        if x == c or not x.ty.is_int or x not in s.exact or x not in s.env.kinds:
            return
        e = Binary("-", CellRef((c,), c.ty), value, None)
        s.rels = s.rels | {Relation("copy", (c, x), e)}

    def _copy(self, s: MemoryState, inst: Copy, alarms: list, fx: Effects):
        n = inst.size
        dst = self.resolve(s, inst.dst, alarms)
        src = self.resolve(s, inst.src, alarms)
        try:
            slocs = self.targets(s, src, n, inst.align, alarms)
        except Fanout:
            slocs = None
        try:
            dlocs = self.targets(s, dst, n, inst.align, alarms)
        except Fanout:
            dlocs = None
        if slocs is not None and not slocs or dlocs is not None and not dlocs:
            raise Bottom
        scalar = _scalar_of(inst.tyname)
        if scalar is not None and slocs:
            for b, i in slocs:
                self._realize(s, self.cell(b, i, scalar))
            if s.bottom:
                raise Bottom
        src_uninit = True if slocs is None else any(
            r_hits(s.uninit.get(b, ()), i, i + n) for b, i in slocs)
        if dlocs is None:
            vars_ = self._writable(s)
            self._invalidate_all(s, vars_, fx)
            if src_uninit:
                for v in vars_:
                    s.uninit[v] = r_add(s.uninit.get(v, ()), 0, self.var_sizes[v])
            return
        if slocs is not None and len(slocs) == 1 and len(dlocs) == 1:
            (sb, si), (db, di) = slocs[0], dlocs[0]
            if (sb, si) == (db, di):
                return
            inside = [c for c in s.env.kinds if c.var == sb and si <= c.off and c.end <= si + n]
            saved = [(c, s.env.get(c), s.env.get_bases(c) if c.ty is T.PTR else None,
                      c in s.exact) for c in inside]
            sun = r_clip(s.uninit.get(sb, ()), si, si + n)
            self._clobber(s, db, di, di + n)
            for c, v, b, ex in saved:
                d = Cell(db, c.off - si + di, c.ty, c.size)
                if d in s.env.kinds:
                    self._remove(s, d)
                s.env = s.env.add_cell(d, d.ty, self.abi, v, b)
                if ex:
                    s.exact = s.exact | {d}
            s.written[db] = r_add(s.written.get(db, ()), di, di + n)
            un = r_sub(s.uninit.get(db, ()), di, di + n)
            for a, b2 in sun:
                un = r_add(un, a - si + di, b2 - si + di)
            if db in s.uninit or un:
                s.uninit[db] = un
            fx.writes.append((db, di, di + n))
            fx.window = (sb, si, db, di, n)
            return
        for b, i in dlocs:
            self._clobber(s, b, i, i + n)
            s.written[b] = r_add(s.written.get(b, ()), i, i + n)
            if src_uninit:
                s.uninit[b] = r_add(s.uninit.get(b, ()), i, i + n)
            fx.writes.append((b, i, i + n))

    # -- lattice ------------------------------------------------------------------

    def unify(self, a: MemoryState, b: MemoryState):
        """Realize on each side the cells only the other side has."""
        missing_a = [c for c in b.env.kinds if c not in a.env.kinds]
        missing_b = [c for c in a.env.kinds if c not in b.env.kinds]
        if missing_a:
            a = a.copy()
            for c in sorted(missing_a, key=cell_sort_key):
                self._realize(a, c)
        if missing_b:
            b = b.copy()
            for c in sorted(missing_b, key=cell_sort_key):
                self._realize(b, c)
        return a, b

    def _combine(self, a: MemoryState, b: MemoryState, env: ValueEnv) -> MemoryState:
        written = dict(a.written)
        for v, rs in b.written.items():
            written[v] = r_union(written.get(v, ()), rs)
        uninit = dict(a.uninit)
        for v, rs in b.uninit.items():
            uninit[v] = r_union(uninit.get(v, ()), rs)
        return MemoryState(env, a.live, written, uninit, a.rels & b.rels, a.exact & b.exact)

    def join(self, a: MemoryState, b: MemoryState) -> MemoryState:
        if a.bottom:
            return b
        if b.bottom:
            return a
        a, b = self.unify(a, b)
        if a.bottom or b.bottom:
            return b if a.bottom else a
        return self._combine(a, b, a.env.join(b.env))

    def widen(self, a: MemoryState, b: MemoryState, cong_top=True) -> MemoryState:
        if a.bottom:
            return b
        if b.bottom:
            return a
        a, b = self.unify(a, b)
        if a.bottom or b.bottom:
            return b if a.bottom else a
        return self._combine(a, b, a.env.widen(b.env, self.abi, self.config.thresholds, cong_top))

    def narrow(self, a: MemoryState, b: MemoryState) -> MemoryState:
        """``b`` where it improves on ``a`` (both over the same program point)."""
        if a.bottom or b.bottom:
            return b
        return b

    def leq(self, a: MemoryState, b: MemoryState) -> bool:
        if a.bottom:
            return True
        if b.bottom:
            return False
        missing = [c for c in b.env.kinds if c not in a.env.kinds]
        if missing:
            a = a.copy()
            for c in sorted(missing, key=cell_sort_key):
                self._realize(a, c)
            if a.bottom:
                return True
        for c in b.env.kinds:
            va, vb = a.env.get(c), b.env.get(c)
            if c.ty is T.PTR:
                ba, bb = a.env.get_bases(c), b.env.get_bases(c)
                if not ba.leq(bb):
                    return False
                if ba.only_markers():
                    continue
            if not nm.leq(va, vb):
                return False
        for v, rs in a.written.items():
            if not r_leq(rs, b.written.get(v, ())):
                return False
        for v, rs in a.uninit.items():
            if not r_leq(rs, b.uninit.get(v, ())):
                return False
        if not {r for r in b.rels if r.kind == "copy"} <= a.rels:
            return False
        return b.exact <= a.exact

    # -- queries -------------------------------------------------------------------

    def read(self, s: MemoryState, var: str, off: int, ty: T):
        """The abstract value of a cell (realized if needed): (Num, BaseSet or None)."""
        c = self.cell(var, off, ty)
        s = self.realize(s, c)
        if s.bottom:
            return None, None
        return s.env.get(c), (s.env.get_bases(c) if ty is T.PTR else None)

    def meet_cell(self, s: MemoryState, c: Cell, v: Num, bases: BaseSet | None):
        """Refine a cell of the private state ``s`` (realizing it first)."""
        self._realize(s, c)
        if s.bottom:
            return
        if c.ty is T.PTR:
            cb = s.env.get_bases(c)
            nb = cb.intersect(bases) if bases is not None else cb
            if nb.is_empty():
                self._to_bottom(s)
                return
            if nb.only_markers():
                s.env.set(c, s.env.get(c), nb)
                return
            cur = s.env.get(c)
            nv = meet(cur, v) if not (bases is not None and bases.only_markers()) else cur
            if nv is None:
                self._to_bottom(s)
                return
            s.env.set(c, nv, nb)
            return
        nv = meet(s.env.get(c), v)
        if nv is None:
            self._to_bottom(s)
            return
        s.env.set(c, nv)


_SCALAR_NAMES = {str(t): t for t in T}


def _scalar_of(tyname: str):
    return _SCALAR_NAMES.get(tyname)
