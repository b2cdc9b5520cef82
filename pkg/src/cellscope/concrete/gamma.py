"""Membership of a concrete memory in the concretization of an abstract state."""

from __future__ import annotations

import math

from ..abi import Abi, DEFAULT_ABI, ScalarType as T
from ..domains.values import NULL_BASE, OMEGA_BASE
from .values import NULL, OMEGA, UNINIT, ZERO_BYTE, Finite, Full, IntRanges, Ptr, _same, phi


def _num_admits(num, v) -> bool:
    if isinstance(v, float) and math.isnan(v):
        return num.lo == -math.inf and num.hi == math.inf
    return num.contains(v)


def value_admitted(ty: T, vs, num, bases, sizes=None) -> bool:
    """Every value of the set ``vs`` lies in the abstract value (num, bases)."""
    if ty is T.PTR:
        if isinstance(vs, Full):
            if not bases.is_top:
                return False
            top = max((sizes or {}).values(), default=0)
            return num.lo <= 0 and num.hi >= top
        for v in vs.values:
            if v is NULL:
                ok = NULL_BASE in bases
            elif v is OMEGA:
                ok = OMEGA_BASE in bases
            elif isinstance(v, Ptr):
                ok = v.base in bases and num.contains(v.offset)
            else:
                ok = False
            if not ok:
                return False
        return True
    if isinstance(vs, Full):
        if ty.is_float:
            return num.lo == -math.inf and num.hi == math.inf
        return vs.ty is ty and num.m == 1 and _covers_type(num, ty)
    if isinstance(vs, IntRanges):
        return vs.within(num.lo, num.hi, num.m, num.r)
    if isinstance(vs, Finite):
        return all(_num_admits(num, v) for v in vs.values)
    fin = vs.finite(4096)
    if fin is None:
        return False
    return all(_num_admits(num, v) for v in fin)


_ABI_FOR_RANGE = [DEFAULT_ABI]


def _covers_type(num, ty) -> bool:
    lo, hi = _ABI_FOR_RANGE[0].int_range(ty)
    return num.lo <= lo and num.hi >= hi


def cells_by_var(mem) -> dict:
    out: dict = {}
    for c in sorted(mem.env.kinds, key=lambda c: (c.var, c.off, str(c.ty))):
        out.setdefault(c.var, []).append(c)
    return out


def var_violations(mem, cells, var, data, abi: Abi = DEFAULT_ABI, static=False,
                   sizes=None) -> list:
    """The violations that only involve the bytes ``data`` of ``var``."""
    _ABI_FOR_RANGE[0] = abi
    out = []
    for c in cells:
        vs = phi(c.ty, data[c.off:c.end], abi)
        num = mem.env.get(c)
        bases = mem.env.get_bases(c) if c.ty is T.PTR else None
        if not value_admitted(c.ty, vs, num, bases, sizes):
            shown = vs.values if isinstance(vs, Finite) else vs
            out.append(f"cell {c}: concrete {_show(shown)} not in {num}"
                       + (f" {bases}" if bases is not None else ""))
        if c in mem.exact and not _whole(c, data[c.off:c.end]):
            out.append(f"cell {c}: bytes no longer hold one {c.ty} value")
    written = mem.written.get(var, ())
    uninit = mem.uninit.get(var, ())
    for i, b in enumerate(data):
        if static and b != ZERO_BYTE and not any(a <= i < e for a, e in written):
            out.append(f"byte {var}[{i}] changed but not recorded as written")
            break
        if b is UNINIT and not any(a <= i < e for a, e in uninit):
            out.append(f"byte {var}[{i}] uninitialized but not flagged")
            break
    return out


def eq_violations(eq, m) -> list:
    out = []
    for v, bd in sorted(eq.map.items()):
        if v not in m.vars or bd.dst not in m.vars:
            out.append(f"equality on dead variable {v}")
            continue
        if m.read(v, bd.s, bd.l) != m.read(bd.dst, bd.d, bd.l):
            out.append(f"equality {v} -> {bd} broken")
    return out


def gamma_violations(mem, m, abi: Abi = DEFAULT_ABI, statics=(), eq=None, sizes=None) -> list:
    """Why ``m`` is outside the concretization of ``mem`` (empty when it is inside).

    Besides the cell values, checks that cells marked exact still hold the
    bytes of one store of their type, that never-written static bytes are
    zero, that uninitialized bytes are flagged, and the equality bindings
    of ``eq`` when given.
    """
    if mem.bottom:
        return ["abstract state is bottom"]
    live = set(m.vars)
    if live != set(mem.live):
        return [f"variable sets differ: {sorted(live ^ set(mem.live))}"]
    out = []
    by_var = cells_by_var(mem)
    statics = set(statics)
    for var in sorted(live):
        out += var_violations(mem, by_var.get(var, ()), var, m.vars[var], abi,
                              var in statics, sizes)
    if eq is not None:
        out += eq_violations(eq, m)
    return out


def _whole(c, data) -> bool:
    """The bytes were produced together by one store of type ``c.ty``."""
    first = data[0]
    if first is UNINIT or first.ty is not c.ty:
        return False
    return all(b is not UNINIT and b.ty is c.ty and b.index == k and _same(b.value, first.value)
               for k, b in enumerate(data))


def _show(vs):
    if isinstance(vs, frozenset):
        items = sorted(vs, key=str)
        if len(items) > 4:
            return "{" + ", ".join(map(str, items[:4])) + ", ...}"
        return "{" + ", ".join(map(str, items)) + "}"
    return str(vs)


def gamma_member(state, m, abi: Abi = DEFAULT_ABI, statics=(), sizes=None) -> bool:
    """True iff ``m`` is in the concretization of ``state`` (a MemoryState or AState)."""
    eq = getattr(state, "eq", None)
    mem = getattr(state, "mem", state)
    return not gamma_violations(mem, m, abi, statics, eq, sizes)
