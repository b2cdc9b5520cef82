"""Byte-zone equality predicates produced by copies.

``EqualityState`` maps a source variable V to a binding ``(s, W, d, l)``
meaning bytes ``V[s..s+l)`` equal bytes ``W[d..d+l)``; a missing key is top.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..abi import ScalarType as T


@dataclass(frozen=True)
class Binding:
    s: int
    dst: str
    d: int
    l: int

    @property
    def shift(self) -> int:
        return self.s - self.d

    def __str__(self):
        return f"({self.s}, {self.dst}, {self.d}, {self.l})"


class EqualityState:
    """An immutable map from source variables to bindings."""

    __slots__ = ("map",)

    def __init__(self, m=None):
        self.map: dict = dict(m or {})

    def get(self, v) -> Binding | None:
        return self.map.get(v)

    def __eq__(self, other):
        return isinstance(other, EqualityState) and self.map == other.map

    def __hash__(self):
        return hash(frozenset(self.map.items()))

    def __repr__(self):
        return "EqualityState(" + ", ".join(f"{v}: {b}" for v, b in sorted(self.map.items())) + ")"

    def dump(self) -> list[str]:
        return [f"eq: {v} -> {b}" for v, b in sorted(self.map.items())]


TOP = EqualityState()


def _hits(lo, hi, a, b) -> bool:
    return lo < b and a < hi


def eq_transfer_assign(eps: EqualityState, var: str, lo: int | None = None,
                       hi: int | None = None) -> EqualityState:
    """Forget bindings whose source or destination zone meets the written bytes."""
    out = {}
    for v, b in eps.map.items():
        if lo is None:
            if v == var or b.dst == var:
                continue
        else:
            if v == var and _hits(lo, hi, b.s, b.s + b.l):
                continue
            if b.dst == var and _hits(lo, hi, b.d, b.d + b.l):
                continue
        out[v] = b
    return EqualityState(out)


def eq_delete(eps: EqualityState, var: str) -> EqualityState:
    return EqualityState({v: b for v, b in eps.map.items() if v != var and b.dst != var})


def eq_transfer_copy(eps: EqualityState, src: str, s2: int, dst: str, d2: int,
                     l2: int) -> EqualityState:
    """The equalities after copying ``l2`` bytes from ``src[s2..]`` to ``dst[d2..]``."""
    cur = eps.get(src)
    # the copy changes dst bytes: bindings reading from them die
    base = eq_transfer_assign(eps, dst, d2, d2 + l2)
    new = Binding(s2, dst, d2, l2)
    if cur is not None and cur.dst == dst and cur.shift == s2 - d2 and (
            src != dst or not _hits(cur.s, cur.s + cur.l, cur.d, cur.d + cur.l)):
        if cur.s <= s2 <= cur.s + cur.l:
            new = Binding(cur.s, dst, cur.d, max(cur.l, l2 + s2 - cur.s))
        elif s2 <= cur.s <= s2 + l2:
            new = Binding(s2, dst, d2, max(l2, cur.l + cur.s - s2))
    out = {v: b for v, b in base.map.items() if b.dst != dst and v != src}
    if src == dst and _hits(new.s, new.s + new.l, new.d, new.d + new.l):
        return EqualityState(out)
    out[src] = new
    return EqualityState(out)


def eq_leq(a: EqualityState, b: EqualityState) -> bool:
    """``a`` below ``b``: every zone of ``b`` is covered by the zone ``a`` has for that key.

    A longer zone states more equal bytes, so it is the smaller element.
    """
    for v, bb in b.map.items():
        ba = a.map.get(v)
        if ba is None or ba.dst != bb.dst or ba.shift != bb.shift:
            return False
        if not (ba.s <= bb.s and bb.s + bb.l <= ba.s + ba.l):
            return False
    return True


def eq_lub(a: EqualityState, b: EqualityState) -> EqualityState:
    out = {}
    for v, ba in a.map.items():
        bb = b.map.get(v)
        if bb is None or ba.dst != bb.dst or ba.shift != bb.shift:
            continue
        lo = max(ba.s, bb.s)
        hi = min(ba.s + ba.l, bb.s + bb.l)
        if lo < hi:
            out[v] = Binding(lo, ba.dst, lo - ba.shift, hi - lo)
    return EqualityState(out)


def eq_reduce(eps: EqualityState, mem, domain, src: str):
    """Propagate the binding of ``src`` into the memory state ``mem``.

    Every live cell wholly inside the source zone gives its value to the
    corresponding destination cell.
    """
    b = eps.get(src)
    if b is None or mem.bottom:
        return mem
    inside = [c for c in mem.env.kinds
              if c.var == src and b.s <= c.off and c.end <= b.s + b.l]
    if not inside:
        return mem
    mem = mem.copy()
    for c in sorted(inside, key=lambda c: (c.off, str(c.ty))):
        if c not in mem.env.kinds:
            continue
        v = mem.env.get(c)
        bases = mem.env.get_bases(c) if c.ty is T.PTR else None
        target = domain.cell(b.dst, c.off - b.s + b.d, c.ty)
        if target == c:
            continue
        domain.meet_cell(mem, target, v, bases)
        if mem.bottom:
            return domain.bottom(mem.live)
    return mem
