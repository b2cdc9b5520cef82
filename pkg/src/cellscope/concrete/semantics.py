"""Byte-level concrete memories and the semantics of expressions and instructions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from ..abi import Abi, ScalarType as T
from ..ir import (AddrOf, Assign, Binary, Cast, Const, Copy, Deref, Expr, Guard, Input,
                  Unary)
from .values import (NULL, OMEGA, UNINIT, ZERO_BYTE, ByteValue, Finite, Full, Ptr, VSet,
                     is_pointer_value, phi, round_float, singleton, store_bytes)

ERROR_KINDS = ("overflow", "div-by-zero", "out-of-bound", "misaligned", "invalid-pointer",
               "null-deref", "cross-base-arith", "uninit-read")

SET_CAP = 4096


class EvalError(Exception):
    """A run-time error event raised while evaluating an expression."""

    def __init__(self, kind: str, expr=None):
        assert kind in ERROR_KINDS, kind
        self.kind = kind
        self.expr = expr
        super().__init__(f"{kind} in {expr}" if expr is not None else kind)


class ConcreteMemory:
    """A total map from the byte locations of the live variables to byte values.

    Values are treated as immutable: every update returns a new memory that
    shares the byte tuples of untouched variables.
    """

    __slots__ = ("vars",)

    def __init__(self, vars_=None):
        self.vars: dict[str, tuple] = dict(vars_ or {})

    def __eq__(self, other):
        return isinstance(other, ConcreteMemory) and self.vars == other.vars

    def __hash__(self):
        return hash(tuple(sorted(self.vars.items(), key=lambda kv: kv[0])))

    def __contains__(self, name):
        return name in self.vars

    def size(self, name) -> int:
        return len(self.vars[name])

    def read(self, name: str, off: int, n: int) -> tuple:
        return self.vars[name][off:off + n]

    def write(self, name: str, off: int, data) -> ConcreteMemory:
        old = self.vars[name]
        out = ConcreteMemory(self.vars)
        out.vars[name] = old[:off] + tuple(data) + old[off + len(data):]
        return out

    def byte(self, name, i):
        return self.vars[name][i]

    def dump(self) -> str:
        from .values import byte_str
        lines = []
        for name in sorted(self.vars):
            lines.append(f"{name}: " + " ".join(byte_str(b) for b in self.vars[name]))
        return "\n".join(lines)


def create_variable(m: ConcreteMemory, name: str, size: int, static: bool) -> ConcreteMemory:
    if name in m.vars:
        raise ValueError(f"variable {name!r} already exists")
    out = ConcreteMemory(m.vars)
    out.vars[name] = (ZERO_BYTE if static else UNINIT,) * size
    return out


def delete_variable(m: ConcreteMemory, name: str) -> ConcreteMemory:
    """Remove ``name`` and turn every remaining pointer byte into it into omega."""
    if name not in m.vars:
        raise ValueError(f"variable {name!r} does not exist")
    out = {}
    for v, data in m.vars.items():
        if v == name:
            continue
        if any(isinstance(b, ByteValue) and isinstance(b.value, Ptr) and b.value.base == name
               for b in data):
            data = tuple(ByteValue(b.ty, b.index, OMEGA)
                         if isinstance(b, ByteValue) and isinstance(b.value, Ptr)
                         and b.value.base == name else b for b in data)
        out[v] = data
    return ConcreteMemory(out)


# -- scalar operators ---------------------------------------------------------


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _float_result(ty: T, v: float, abi: Abi, expr) -> float:
    v = round_float(ty, v)
    if not math.isfinite(v) or abs(v) > abi.float_max(ty):
        raise EvalError("overflow", expr)
    return v


def _int_result(ty: T, v: int, abi: Abi, expr) -> int:
    lo, hi = abi.int_range(ty)
    if lo <= v <= hi:
        return v
    if ty.is_unsigned:
        return abi.wrap(ty, v)
    raise EvalError("overflow", expr)


def _cdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _ptr_cmp(op, a, b, expr):
    if a is OMEGA or b is OMEGA:
        raise EvalError("invalid-pointer", expr)
    if op in ("==", "!="):
        eq = a == b
        return int(eq if op == "==" else not eq)
    if a is NULL and b is NULL:
        x = y = 0
    elif isinstance(a, Ptr) and isinstance(b, Ptr) and a.base == b.base:
        x, y = a.offset, b.offset
    else:
        raise EvalError("cross-base-arith", expr)
    return _cmp(op, x, y)


def _cmp(op, x, y) -> int:
    if op == "<":
        return int(x < y)
    if op == "<=":
        return int(x <= y)
    if op == ">":
        return int(x > y)
    if op == ">=":
        return int(x >= y)
    if op == "==":
        return int(x == y)
    return int(x != y)


def ptr_offset(p, delta: int, sizes, expr):
    """``p + delta`` in bytes, checking the one-past-the-end bound."""
    if not isinstance(p, Ptr):
        raise EvalError("invalid-pointer", expr)
    off = p.offset + delta
    if not 0 <= off <= sizes(p.base):
        raise EvalError("out-of-bound", expr)
    return Ptr(p.base, off)


def apply_binary(op: str, ty: T, a, b, abi: Abi, sizes, expr=None):
    """One concrete binary operation; raises EvalError on a run-time error."""
    if op in ("<", "<=", ">", ">=", "==", "!="):
        if is_pointer_value(a) or is_pointer_value(b):
            return _ptr_cmp(op, a, b, expr)
        return _cmp(op, a, b)
    if is_pointer_value(a) or is_pointer_value(b):
        if ty is T.PTR:
            delta = b if op == "+" else -b
            return ptr_offset(a, delta, sizes, expr)
        if op == "-" and is_pointer_value(a) and is_pointer_value(b):
            if not (isinstance(a, Ptr) and isinstance(b, Ptr)):
                raise EvalError("invalid-pointer", expr)
            if a.base != b.base:
                raise EvalError("cross-base-arith", expr)
            return _int_result(ty, a.offset - b.offset, abi, expr)
        raise EvalError("invalid-pointer", expr)
    if ty.is_float:
        a, b = float(a), float(b)
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0:
                raise EvalError("div-by-zero", expr)
            r = a / b
        else:
            raise ValueError(f"operator {op} on {ty}")
        return _float_result(ty, r, abi, expr)
    a, b = int(a), int(b)
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    elif op in ("/", "%"):
        if b == 0:
            raise EvalError("div-by-zero", expr)
        q = _cdiv(a, b)
        r = q if op == "/" else a - b * q
        if op == "%":
            _int_result(ty, q, abi, expr)
    elif op == "&":
        r = a & b
    elif op == "|":
        r = a | b
    elif op == "^":
        r = a ^ b
    elif op in ("<<", ">>"):
        if not 0 <= b < abi.bits(ty):
            raise EvalError("overflow", expr)
        if op == ">>":
            r = a >> b
        else:
            if ty.is_signed and a < 0:
                raise EvalError("overflow", expr)
            r = a << b
    else:
        raise ValueError(f"unknown operator {op}")
    return _int_result(ty, r, abi, expr)


def apply_unary(op: str, ty: T, a, abi: Abi, expr=None):
    if op == "!":
        if a is OMEGA:
            raise EvalError("invalid-pointer", expr)
        if is_pointer_value(a):
            return int(a is NULL)
        return int(a == 0)
    if op == "-":
        if ty.is_float:
            return -float(a)
        return _int_result(ty, -a, abi, expr)
    if op == "~":
        return abi.wrap(ty, ~a)
    raise ValueError(f"unknown unary operator {op}")


def apply_cast(ty: T, v, abi: Abi) -> VSet:
    """The values of ``(ty) v``; never an error (out-of-range conversions go to top)."""
    if ty is T.PTR:
        if is_pointer_value(v):
            return singleton(T.PTR, v)
        if v == 0:
            return singleton(T.PTR, NULL)
        return Full(T.PTR)
    if is_pointer_value(v):
        if v is NULL:
            return singleton(ty, 0.0 if ty.is_float else 0)
        return Full(ty)
    if ty.is_float:
        r = round_float(ty, float(v))
        if not math.isfinite(r) or abs(r) > abi.float_max(ty):
            return Full(ty)
        return singleton(ty, r)
    if isinstance(v, float):
        if not math.isfinite(v):
            return Full(ty)
        v = math.trunc(v)
        lo, hi = abi.int_range(ty)
        if not lo <= v <= hi:
            return Full(ty)
        return singleton(ty, v)
    return singleton(ty, abi.wrap(ty, v))


def guard_passes(v, expr=None) -> bool:
    if v is OMEGA:
        raise EvalError("invalid-pointer", expr)
    if is_pointer_value(v):
        return v is NULL
    return v == 0


# -- dereference ------------------------------------------------------------


def check_target(p, ty_size: int, align: int, sizes, expr):
    if p is NULL:
        raise EvalError("null-deref", expr)
    if not isinstance(p, Ptr):
        raise EvalError("invalid-pointer", expr)
    if p.base in getattr(sizes, "functions", ()):
        raise EvalError("invalid-pointer", expr)
    size = sizes(p.base)
    if p.offset + ty_size > size:
        raise EvalError("out-of-bound", expr)
    if p.offset % align:
        raise EvalError("misaligned", expr)


def read_scalar(m: ConcreteMemory, p, ty: T, abi: Abi, sizes, expr=None) -> VSet:
    check_target(p, abi.sizeof(ty), abi.alignof(ty), sizes, expr)
    data = m.read(p.base, p.offset, abi.sizeof(ty))
    if any(b is UNINIT for b in data):
        raise EvalError("uninit-read", expr)
    return phi(ty, data, abi)


class Sizes:
    """Byte size of each variable, functions having size 0."""

    def __init__(self, var_sizes: dict, functions=()):
        self.var_sizes = dict(var_sizes)
        self.functions = frozenset(functions)

    def __call__(self, name) -> int:
        if name in self.functions:
            return 0
        return self.var_sizes[name]

    @classmethod
    def of_cfg(cls, cfg):
        return cls({n: v.size for n, v in cfg.vars.items()}, cfg.functions)


# -- sampling evaluation (executor) -------------------------------------------


@dataclass
class Context:
    abi: Abi
    sizes: Sizes
    rng: object = None
    inputs: dict = None        # volatile name -> (lo, hi)
    draws: list = None

    def draw(self, vs: VSet, why: str):
        fin = vs.finite(1)
        if fin is not None and len(fin) == 1:
            return next(iter(fin))
        if self.rng is None:
            raise ValueError("non-deterministic value without a random source")
        v = vs.sample(self.rng, self.abi)
        if self.draws is not None:
            self.draws.append((why, v))
        return v


def eval_one(e: Expr, m: ConcreteMemory, ctx: Context):
    """Evaluate ``e`` to a single value, drawing from non-singleton sets."""
    abi = ctx.abi
    if isinstance(e, Const):
        return e.value
    if isinstance(e, AddrOf):
        return Ptr(e.name, 0)
    if isinstance(e, Deref):
        p = eval_one(e.addr, m, ctx)
        return ctx.draw(read_scalar(m, p, e.ty, abi, ctx.sizes, e), str(e))
    if isinstance(e, Unary):
        return apply_unary(e.op, e.ty, eval_one(e.arg, m, ctx), abi, e)
    if isinstance(e, Binary):
        a = eval_one(e.left, m, ctx)
        b = eval_one(e.right, m, ctx)
        return apply_binary(e.op, e.ty, a, b, abi, ctx.sizes, e)
    if isinstance(e, Cast):
        return ctx.draw(apply_cast(e.ty, eval_one(e.arg, m, ctx), abi), str(e))
    if isinstance(e, Input):
        return ctx.draw(input_set(e, ctx.inputs, abi), str(e))
    raise TypeError(f"cannot evaluate {e!r}")


def input_set(e: Input, inputs, abi: Abi) -> VSet:
    rng = (inputs or {}).get(e.source)
    if rng is None:
        return Full(e.ty)
    lo, hi = rng
    if e.ty.is_int:
        if hi - lo < 256:
            return Finite(e.ty, frozenset(range(int(lo), int(hi) + 1)))
        return _IntervalSet(e.ty, int(lo), int(hi))
    return _FloatInterval(e.ty, float(lo), float(hi))


@dataclass(frozen=True)
class _IntervalSet(VSet):
    ty: T
    lo: int
    hi: int

    def finite(self, cap=4096):
        if self.hi - self.lo + 1 > cap:
            return None
        return frozenset(range(self.lo, self.hi + 1))

    def contains(self, v):
        return isinstance(v, int) and self.lo <= v <= self.hi

    def sample(self, rng, abi):
        return rng.randint(self.lo, self.hi)


@dataclass(frozen=True)
class _FloatInterval(VSet):
    ty: T
    lo: float
    hi: float

    def finite(self, cap=4096):
        return frozenset([self.lo]) if self.lo == self.hi else None

    def contains(self, v):
        return isinstance(v, (int, float)) and self.lo <= v <= self.hi

    def sample(self, rng, abi):
        return round_float(self.ty, rng.uniform(self.lo, self.hi))


def exec_one(inst, m: ConcreteMemory, ctx: Context):
    """Execute one instruction with sampled choices.

    Returns the successor memory, or None when a guard blocks.  Raises
    EvalError on a run-time error.
    """
    abi = ctx.abi
    if isinstance(inst, Guard):
        v = eval_one(inst.expr, m, ctx)
        return m if guard_passes(v, inst.expr) else None
    if isinstance(inst, Assign):
        p = eval_one(inst.addr, m, ctx)
        v = eval_one(inst.value, m, ctx)
        check_target(p, abi.sizeof(inst.ty), abi.alignof(inst.ty), ctx.sizes, inst.addr)
        return m.write(p.base, p.offset, store_bytes(inst.ty, v, abi))
    if isinstance(inst, Copy):
        dst = eval_one(inst.dst, m, ctx)
        src = eval_one(inst.src, m, ctx)
        check_target(src, inst.size, inst.align, ctx.sizes, inst.src)
        check_target(dst, inst.size, inst.align, ctx.sizes, inst.dst)
        return m.write(dst.base, dst.offset, m.read(src.base, src.offset, inst.size))
    raise TypeError(f"unknown instruction {inst!r}")


# -- set-valued evaluation ------------------------------------------------------


def _as_finite(vs: VSet):
    return vs.finite(SET_CAP)


def eval_expr(e: Expr, m: ConcreteMemory, abi: Abi, sizes, inputs=None):
    """All values of ``e`` in ``m`` plus the error events met on the way.

    Erroneous combinations contribute no value.  Sets larger than the
    enumeration cap are widened to the full type.
    """
    events: set = set()
    vs = _eval_set(e, m, abi, sizes, inputs, events)
    return vs, events


def _eval_set(e, m, abi, sizes, inputs, events) -> VSet:
    if isinstance(e, Const):
        return singleton(e.ty, e.value)
    if isinstance(e, AddrOf):
        return singleton(T.PTR, Ptr(e.name, 0))
    if isinstance(e, Input):
        return input_set(e, inputs, abi)
    if isinstance(e, Deref):
        ps = _eval_set(e.addr, m, abi, sizes, inputs, events)
        fin = _as_finite(ps)
        if fin is None:
            events.update(("invalid-pointer", "out-of-bound", "misaligned", "null-deref"))
            return Full(e.ty)
        out = set()
        for p in fin:
            try:
                vs = read_scalar(m, p, e.ty, abi, sizes, e)
            except EvalError as exc:
                events.add(exc.kind)
                if exc.kind == "uninit-read":
                    return Full(e.ty)
                continue
            f = _as_finite(vs)
            if f is None:
                return Full(e.ty)
            out |= f
        return Finite(e.ty, frozenset(out))
    if isinstance(e, Cast):
        arg = _as_finite(_eval_set(e.arg, m, abi, sizes, inputs, events))
        if arg is None:
            return Full(e.ty)
        out = set()
        for v in arg:
            f = _as_finite(apply_cast(e.ty, v, abi))
            if f is None:
                return Full(e.ty)
            out |= f
        return Finite(e.ty, frozenset(out))
    if isinstance(e, (Unary, Binary)):
        args = [_eval_set(a, m, abi, sizes, inputs, events)
                for a in ((e.arg,) if isinstance(e, Unary) else (e.left, e.right))]
        fins = [_as_finite(a) for a in args]
        ty = e.ty
        if any(f is None for f in fins) or math.prod(len(f) for f in fins) > SET_CAP:
            if e.op in ("/", "%"):
                events.add("div-by-zero")
            if ty is not None and (ty.is_signed or ty.is_float):
                events.add("overflow")
            if ty is T.PTR:
                events.add("out-of-bound")
            return Full(ty if ty is not None else T.LLONG)
        out = set()
        for combo in itertools.product(*fins):
            try:
                if isinstance(e, Unary):
                    out.add(apply_unary(e.op, ty, combo[0], abi, e))
                else:
                    out.add(apply_binary(e.op, ty, combo[0], combo[1], abi, sizes, e))
            except EvalError as exc:
                events.add(exc.kind)
        return Finite(ty, frozenset(out))
    raise TypeError(f"cannot evaluate {e!r}")


def exec_inst(inst, m: ConcreteMemory, abi: Abi, sizes, inputs=None):
    """All successor memories of ``inst`` from ``m`` and the error events.

    Raises ValueError when a stored value set is too large to enumerate.
    """
    events: set = set()
    if isinstance(inst, Guard):
        vs = _eval_set(inst.expr, m, abi, sizes, inputs, events)
        fin = _as_finite(vs)
        if fin is None:
            return [m], events
        ok = False
        for v in fin:
            try:
                ok |= guard_passes(v, inst.expr)
            except EvalError as exc:
                events.add(exc.kind)
        return ([m] if ok else []), events
    if isinstance(inst, Assign):
        ps = _as_finite(_eval_set(inst.addr, m, abi, sizes, inputs, events))
        vs = _as_finite(_eval_set(inst.value, m, abi, sizes, inputs, events))
        if ps is None or vs is None:
            raise ValueError("successor set too large to enumerate")
        out = []
        for p in sorted(ps, key=str):
            try:
                check_target(p, abi.sizeof(inst.ty), abi.alignof(inst.ty), sizes, inst.addr)
            except EvalError as exc:
                events.add(exc.kind)
                continue
            for v in vs:
                mm = m.write(p.base, p.offset, store_bytes(inst.ty, v, abi))
                if mm not in out:
                    out.append(mm)
        return out, events
    if isinstance(inst, Copy):
        ds = _as_finite(_eval_set(inst.dst, m, abi, sizes, inputs, events))
        ss = _as_finite(_eval_set(inst.src, m, abi, sizes, inputs, events))
        if ds is None or ss is None:
            raise ValueError("successor set too large to enumerate")
        out = []
        for d in sorted(ds, key=str):
            for s in sorted(ss, key=str):
                try:
                    check_target(s, inst.size, inst.align, sizes, inst.src)
                    check_target(d, inst.size, inst.align, sizes, inst.dst)
                except EvalError as exc:
                    events.add(exc.kind)
                    continue
                mm = m.write(d.base, d.offset, m.read(s.base, s.offset, inst.size))
                if mm not in out:
                    out.append(mm)
        return out, events
    raise TypeError(f"unknown instruction {inst!r}")
