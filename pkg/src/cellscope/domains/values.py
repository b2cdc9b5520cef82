"""Scalar values with pointers: numeric environments plus per-pointer base sets.

A pointer cell keeps one numeric dimension (its byte offset) and a set of
possible bases.  The offset only constrains valid pointers; NULL and the
invalid pointer are tracked as the markers ``NULL_BASE`` and ``OMEGA_BASE``.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..abi import Abi, ScalarType as T
from ..ir import AddrOf, Binary, Cast, CellRef, Const, Expr, Input, Unary
from .numeric import (INF, Bottom, ContractViolation, EvalConfig, Num, NumEval, NumericEnv,
                      const, join, leq, meet, mk, top)
from . import numeric as nm

NULL_BASE = "<null>"
OMEGA_BASE = "<omega>"
_MARKERS = (NULL_BASE, OMEGA_BASE)


@dataclass(frozen=True)
class BaseSet:
    """A finite set of bases, or every base when ``names`` is None."""

    names: frozenset | None = None

    @staticmethod
    def of(*names) -> BaseSet:
        return BaseSet(frozenset(names))

    @property
    def is_top(self) -> bool:
        return self.names is None

    def __contains__(self, name) -> bool:
        return self.names is None or name in self.names

    def union(self, other: BaseSet) -> BaseSet:
        if self.names is None or other.names is None:
            return TOP_BASES
        return BaseSet(self.names | other.names)

    def intersect(self, other: BaseSet) -> BaseSet:
        if self.names is None:
            return other
        if other.names is None:
            return self
        return BaseSet(self.names & other.names)

    def leq(self, other: BaseSet) -> bool:
        if other.names is None:
            return True
        return self.names is not None and self.names <= other.names

    def real(self) -> frozenset | None:
        """The variables and functions, or None for top."""
        if self.names is None:
            return None
        return frozenset(n for n in self.names if n not in _MARKERS)

    def without(self, *names) -> BaseSet:
        if self.names is None:
            return self
        return BaseSet(self.names - set(names))

    def replace(self, old, new) -> BaseSet:
        if self.names is None or old not in self.names:
            return self
        return BaseSet((self.names - {old}) | {new})

    def is_empty(self) -> bool:
        return self.names is not None and not self.names

    def only_markers(self) -> bool:
        return self.names is not None and all(n in _MARKERS for n in self.names)

    def __str__(self):
        if self.names is None:
            return "T"
        names = sorted("NULL" if n == NULL_BASE else "omega" if n == OMEGA_BASE else n
                       for n in self.names)
        return "{" + ", ".join(names) + "}"


TOP_BASES = BaseSet(None)
NULL_ONLY = BaseSet(frozenset([NULL_BASE]))


class ValueEnv(NumericEnv):
    """A NumericEnv whose PTR cells additionally carry a BaseSet."""

    __slots__ = ("bases",)

    def __init__(self, vals=None, kinds=None, is_bottom=False, bases=None):
        super().__init__(vals, kinds, is_bottom)
        self.bases: dict = {} if is_bottom else dict(bases or {})

    @classmethod
    def bottom(cls, kinds=None):
        return cls(None, kinds, True)

    def copy(self):
        return ValueEnv(self.vals, self.kinds, self.is_bottom, self.bases)

    def __eq__(self, other):
        return (isinstance(other, ValueEnv) and NumericEnv.__eq__(self, other)
                and self.bases == other.bases)

    def __repr__(self):
        if self.is_bottom:
            return "ValueEnv(bottom)"
        items = []
        for c in sorted(self.kinds, key=str):
            s = f"{c}: {self.vals[c]}"
            if c in self.bases:
                s += f" {self.bases[c]}"
            items.append(s)
        return "ValueEnv(" + ", ".join(items) + ")"

    def set(self, cell, value, bases=None):
        super().set(cell, value)
        if not self.is_bottom and bases is not None:
            if bases.is_empty():
                self.set(cell, None)
            else:
                self.bases[cell] = bases

    def get_bases(self, cell) -> BaseSet:
        return self.bases.get(cell, TOP_BASES)

    def add_cell(self, cell, kind, abi, value=None, bases=None):
        out = NumericEnv.add_cell(self, cell, kind, abi, value)
        if kind is T.PTR and not out.is_bottom:
            out.bases[cell] = bases if bases is not None else TOP_BASES
        return out

    def remove_cell(self, cell):
        out = NumericEnv.remove_cell(self, cell)
        out.bases.pop(cell, None)
        return out

    def rename_cell(self, old, new):
        out = NumericEnv.rename_cell(self, old, new)
        if old in out.bases:
            out.bases[new] = out.bases.pop(old)
        return out

    def _offset_pair(self, other, c):
        """Offsets to combine; an offset is irrelevant when no valid base is possible."""
        a, b = self.vals[c], other.vals[c]
        if self.kinds[c] is T.PTR:
            if self.bases[c].only_markers():
                a = None
            if other.bases[c].only_markers():
                b = None
        return a, b

    def join(self, other):
        self._check(other)
        if self.is_bottom:
            return other.copy()
        if other.is_bottom:
            return self.copy()
        vals = {}
        for c in self.vals:
            a, b = self._offset_pair(other, c)
            vals[c] = join(a, b) or self.vals[c]
        bases = {c: b.union(other.bases[c]) for c, b in self.bases.items()}
        return ValueEnv(vals, self.kinds, False, bases)

    def meet(self, other):
        self._check(other)
        if self.is_bottom or other.is_bottom:
            return ValueEnv.bottom(self.kinds)
        out = ValueEnv(self.vals, self.kinds, False, self.bases)
        for c in self.vals:
            bases = self.bases[c].intersect(other.bases[c]) if c in self.bases else None
            v = meet(self.vals[c], other.vals[c])
            if v is None and bases is not None and bases.only_markers():
                v = self.vals[c]
            if v is None or (bases is not None and bases.is_empty()):
                return ValueEnv.bottom(self.kinds)
            out.vals[c] = v
            if bases is not None:
                out.bases[c] = bases
        return out

    def leq(self, other) -> bool:
        self._check(other)
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        for c in self.vals:
            if c in self.bases:
                if not self.bases[c].leq(other.bases[c]):
                    return False
                if self.bases[c].only_markers():
                    continue
            if not leq(self.vals[c], other.vals[c]):
                return False
        return True

    def widen(self, other, abi, thresholds=nm.DEFAULT_THRESHOLDS, cong_top=True):
        self._check(other)
        if self.is_bottom:
            return other.copy()
        if other.is_bottom:
            return self.copy()
        vals = {}
        for c in self.vals:
            a, b = self._offset_pair(other, c)
            t = top(self.kinds[c], abi)
            if a is None or b is None:
                vals[c] = join(a, b) or self.vals[c]
            else:
                vals[c] = nm.widen(a, b, thresholds, (t.lo, t.hi), cong_top)
        bases = {c: b.union(other.bases[c]) for c, b in self.bases.items()}
        return ValueEnv(vals, self.kinds, False, bases)

    def narrow(self, other):
        return self.meet(other)

    def assign(self, cell, expr: Expr, abi: Abi, config=None, sizes=None):
        if self.is_bottom:
            return self.copy(), []
        ev = ValueEval(self, abi, config, sizes)
        v = ev.eval(expr)
        bases = ev.bases_of(expr) if self.kinds[cell] is T.PTR else None
        out = self.copy()
        v = ev.fit(v, self.kinds[cell])
        if self.kinds[cell] is T.PTR and v is not None and bases is not None and bases.only_markers():
            v = const(0)
        out.set(cell, v, bases)
        return out, ev.alarms

    def test(self, expr: Expr, abi: Abi, config=None, truth=False, sizes=None):
        if self.is_bottom:
            return self.copy(), []
        ev = ValueEval(self, abi, config, sizes)
        out = ev.constrain(expr, truth)
        return out, ev.alarms


def offset_top(abi: Abi) -> Num:
    return top(T.PTR, abi)


class ValueEval(NumEval):
    """NumEval extended to pointer-typed nodes.

    ``eval`` returns the offset for pointer nodes; ``bases_of`` their base set.
    ``sizes`` maps a base name to its byte size (functions have size 0).
    """

    def __init__(self, env: ValueEnv, abi: Abi, config: EvalConfig | None = None, sizes=None):
        super().__init__(env, abi, config)
        self.sizes = sizes or {}
        self.bcache: dict = {}

    def bases_of(self, e: Expr) -> BaseSet:
        self.eval(e)
        return self.bcache.get(id(e), TOP_BASES)

    def is_ptr(self, e: Expr) -> bool:
        return e.ty is T.PTR

    def max_size(self, bases: BaseSet) -> int:
        real = bases.real()
        if real is None:
            return max(self.sizes.values(), default=0)
        return max((self.sizes.get(b, 0) for b in real), default=0)

    def _eval(self, e: Expr):
        if isinstance(e, AddrOf):
            self.bcache[id(e)] = BaseSet.of(e.name)
            return const(0)
        if isinstance(e, CellRef) and e.ty is T.PTR:
            off, bases = None, BaseSet(frozenset())
            for c in e.cells:
                b = self.env.get_bases(c)
                bases = bases.union(b)
                if not b.only_markers():
                    off = join(off, self.env.get(c))
            self.bcache[id(e)] = bases
            return off if off is not None else const(0)
        if isinstance(e, Input) and e.ty is T.PTR:
            self.bcache[id(e)] = TOP_BASES
            return offset_top(self.abi)
        if isinstance(e, Const) and e.ty is T.PTR:
            self.bcache[id(e)] = NULL_ONLY if e.value == 0 else TOP_BASES
            return const(0) if e.value == 0 else offset_top(self.abi)
        if isinstance(e, Cast):
            return self.eval_ptr_cast(e)
        if isinstance(e, Unary) and e.op == "!" and self.is_ptr(e.arg):
            return self.ptr_not(e)
        if isinstance(e, Binary):
            lp, rp = self.is_ptr(e.left), self.is_ptr(e.right)
            if lp or rp:
                return self.eval_ptr_binary(e, lp, rp)
        return super()._eval(e)

    def eval_ptr_cast(self, e: Cast):
        src = e.arg.ty
        if e.ty is T.PTR and src is T.PTR:
            v = self.eval(e.arg)
            self.bcache[id(e)] = self.bases_of(e.arg)
            return v
        if e.ty is T.PTR:
            v = self.eval(e.arg)
            if v is None:
                return None
            if v.lo == v.hi == 0:
                self.bcache[id(e)] = NULL_ONLY
                return const(0)
            self.bcache[id(e)] = TOP_BASES
            return offset_top(self.abi)
        if src is T.PTR:
            v = self.eval(e.arg)
            if v is None:
                return None
            b = self.bases_of(e.arg)
            if b.names is not None and b.names == {NULL_BASE}:
                return const(0.0) if e.ty.is_float else const(0)
            return top(e.ty, self.abi)
        return super()._eval(e)

    def ptr_not(self, e: Unary):
        self.eval(e.arg)
        b = self.bases_of(e.arg)
        if OMEGA_BASE in b:
            self.alarm("invalid-pointer", e)
        vals = set()
        if NULL_BASE in b:
            vals.add(1)
        if b.is_top or b.real():
            vals.add(0)
        return mk(min(vals), max(vals)) if vals else None

    def eval_ptr_binary(self, e: Binary, lp: bool, rp: bool):
        a, b = self.eval(e.left), self.eval(e.right)
        if a is None or b is None:
            return None
        op = e.op
        if op in ("==", "!=", "<", "<=", ">", ">="):
            return self.ptr_compare(e, a, b, lp, rp)
        if lp and rp and op == "-":
            return self.ptr_diff(e, a, b)
        if lp and not rp and op in ("+", "-"):
            return self.ptr_add(e, a, b, op)
        if rp and not lp and op == "+":
            return self.ptr_add(e, b, a, op, ptr_node=e.right)
        self.alarm("invalid-pointer", e)
        self.bcache[id(e)] = TOP_BASES
        return top(e.ty, self.abi) if e.ty is not None else offset_top(self.abi)

    def ptr_add(self, e: Binary, off: Num, d: Num, op: str, ptr_node=None):
        ptr_node = ptr_node if ptr_node is not None else e.left
        bases = self.bases_of(ptr_node)
        if NULL_BASE in bases or OMEGA_BASE in bases:
            self.alarm("invalid-pointer", e)
        real = bases.real()
        r = nm.add(off, d) if op == "+" else nm.sub(off, d)
        if r is None:
            return None
        if real is not None and not real:
            return None
        limit = self.max_size(bases)
        smallest = min((self.sizes.get(x, 0) for x in real), default=0) if real is not None else 0
        if r.lo < 0 or r.hi > smallest:
            self.alarm("out-of-bound", e)
        r = meet(r, Num(0, limit))
        if r is None:
            return None
        self.bcache[id(e)] = bases.without(NULL_BASE, OMEGA_BASE) if real is not None else bases
        return r

    def ptr_diff(self, e: Binary, a: Num, b: Num):
        ba, bb = self.bases_of(e.left), self.bases_of(e.right)
        if OMEGA_BASE in ba or OMEGA_BASE in bb or NULL_BASE in ba or NULL_BASE in bb:
            self.alarm("invalid-pointer", e)
        ra, rb = ba.real(), bb.real()
        if ra is not None and rb is not None:
            if not ra or not rb:
                return None
            if len(ra) == 1 and ra == rb:
                return self.fit(nm.sub(a, b), e.ty, e)
            if not (ra & rb):
                self.alarm("cross-base-arith", e)
                return None
        self.alarm("cross-base-arith", e)
        r = nm.sub(a, b)
        return self.fit(r, e.ty, e) if r is not None else None

    def ptr_compare(self, e: Binary, a: Num, b: Num, lp: bool, rp: bool):
        ba = self.bases_of(e.left) if lp else (NULL_ONLY if a.lo == a.hi == 0 else TOP_BASES)
        bb = self.bases_of(e.right) if rp else (NULL_ONLY if b.lo == b.hi == 0 else TOP_BASES)
        if OMEGA_BASE in ba or OMEGA_BASE in bb:
            self.alarm("invalid-pointer", e)
        ba, bb = ba.without(OMEGA_BASE), bb.without(OMEGA_BASE)
        if ba.is_empty() or bb.is_empty():
            return None
        op = e.op
        if op in ("==", "!="):
            can_eq = self._may_equal(ba, bb, a, b)
            can_ne = not self._must_equal(ba, bb, a, b)
            if op == "!=":
                can_eq, can_ne = can_ne, can_eq
            vals = [v for v, ok in ((1, can_eq), (0, can_ne)) if ok]
            return mk(min(vals), max(vals)) if vals else None
        ra, rb = ba.real(), bb.real()
        same = (ra is not None and rb is not None and len(ra | rb) == 1
                and NULL_BASE not in ba and NULL_BASE not in bb)
        both_null = ba == NULL_ONLY and bb == NULL_ONLY
        if both_null:
            return self.compare(op, const(0), const(0))
        if not same:
            self.alarm("cross-base-arith", e)
        return self.compare(op, a, b)

    def _may_equal(self, ba, bb, a, b) -> bool:
        if NULL_BASE in ba and NULL_BASE in bb:
            return True
        ra, rb = ba.real(), bb.real()
        if ra is None or rb is None:
            return True
        return bool(ra & rb) and meet(a, b) is not None

    def _must_equal(self, ba, bb, a, b) -> bool:
        if ba == NULL_ONLY and bb == NULL_ONLY:
            return True
        ra, rb = ba.real(), bb.real()
        return (ra is not None and ra == rb and len(ra) == 1 and NULL_BASE not in ba
                and NULL_BASE not in bb and a.lo == a.hi == b.lo == b.hi)

    # backward

    def write_cell(self, e: CellRef, target):
        if e.ty is T.PTR:
            if len(e.cells) != 1:
                return
            c = e.cells[0]
            if self.env.get_bases(c).only_markers():
                return
        super().write_cell(e, target)

    def write_bases(self, e: Expr, bases: BaseSet):
        if not isinstance(e, CellRef) or len(e.cells) != 1:
            if isinstance(e, Cast) and e.arg.ty is T.PTR:
                self.write_bases(e.arg, bases)
            return
        c = e.cells[0]
        cur = self.env.get_bases(c)
        new = cur.intersect(bases)
        if new.is_empty():
            raise Bottom
        if new != cur:
            self.env.bases[c] = new
            self.bcache[id(e)] = new

    def _constrain(self, e: Expr, truth: bool):
        if self.is_ptr(e) and not isinstance(e, Binary):
            # a pointer guard: ``e == 0`` means NULL
            self.eval(e)
            b = self.bases_of(e)
            if OMEGA_BASE in b:
                self.alarm("invalid-pointer", e)
            if truth:
                self.write_bases(e, b.without(NULL_BASE, OMEGA_BASE))
            else:
                self.write_bases(e, NULL_ONLY)
            return
        if isinstance(e, Unary) and e.op == "!" and self.is_ptr(e.arg):
            self.eval(e)
            self._constrain(e.arg, not truth)
            return
        super()._constrain(e, truth)

    def refine_cmp(self, op, left: Expr, right: Expr):
        lp, rp = self.is_ptr(left), self.is_ptr(right)
        if not (lp or rp):
            return super().refine_cmp(op, left, right)
        self.eval(left)
        self.eval(right)
        ba = self.bases_of(left) if lp else None
        bb = self.bases_of(right) if rp else None
        if op in ("==", "!="):
            null_l = ba == NULL_ONLY if lp else self._is_zero(left)
            null_r = bb == NULL_ONLY if rp else self._is_zero(right)
            if op == "==":
                if lp and null_r:
                    self.write_bases(left, NULL_ONLY)
                elif rp and null_l:
                    self.write_bases(right, NULL_ONLY)
                elif lp and rp:
                    both = ba.without(OMEGA_BASE).intersect(bb.without(OMEGA_BASE))
                    if both.is_empty():
                        raise Bottom
                    self.write_bases(left, both)
                    self.write_bases(right, both)
                    if both.real() and len(both.real()) == 1 and NULL_BASE not in both:
                        super().refine_cmp("==", left, right)
            else:
                if lp and null_r:
                    self.write_bases(left, ba.without(NULL_BASE, OMEGA_BASE))
                elif rp and null_l:
                    self.write_bases(right, bb.without(NULL_BASE, OMEGA_BASE))
                elif lp and rp and ba.real() and bb.real() and len(ba.real() | bb.real()) == 1 \
                        and NULL_BASE not in ba and NULL_BASE not in bb \
                        and OMEGA_BASE not in ba and OMEGA_BASE not in bb:
                    super().refine_cmp("!=", left, right)
                elif lp and rp:
                    self._exclude_address(left, ba, right, bb)
                    self._exclude_address(right, bb, left, ba)
            return
        if lp and rp:
            ra, rb = ba.real(), bb.real()
            if (ra is not None and rb is not None and len(ra | rb) == 1
                    and NULL_BASE not in ba and NULL_BASE not in bb
                    and OMEGA_BASE not in ba and OMEGA_BASE not in bb):
                super().refine_cmp(op, left, right)

    def _exclude_address(self, e: Expr, be: BaseSet, other: Expr, bo: BaseSet):
        """``e != other`` where ``other`` is one exact address: drop its base from ``e``."""
        if bo.names is None or len(bo.names) != 1 or bo.only_markers() or be.names is None:
            return
        (name,) = bo.names
        if name not in be.names:
            return
        oe, oo = self.eval(e), self.eval(other)
        if oe is None or oo is None:
            return
        if oe.lo == oe.hi == oo.lo == oo.hi:
            self.write_bases(e, be.without(name))

    def _is_zero(self, e: Expr) -> bool:
        v = self.eval(e)
        return v is not None and v.lo == v.hi == 0

    def backward(self, e: Expr, target):
        if self.is_ptr(e) and not isinstance(e, CellRef):
            if isinstance(e, Binary) and e.op in ("+", "-") and self.is_ptr(e.left) \
                    and not self.is_ptr(e.right) and id(e) not in self.wrapped:
                cur = self.eval(e)
                new = meet(cur, target)
                if new is None:
                    raise Bottom
                self.cache[id(e)] = new
                d = self.eval(e.right)
                if e.op == "+":
                    self.backward(e.left, nm.sub(new, d))
                else:
                    self.backward(e.left, nm.add(new, d))
            return
        if isinstance(e, Binary) and (self.is_ptr(e.left) or self.is_ptr(e.right)) \
                and e.op not in ("==", "!=", "<", "<=", ">", ">="):
            return
        if isinstance(e, Cast) and (e.ty is T.PTR or e.arg.ty is T.PTR):
            return
        super().backward(e, target)
