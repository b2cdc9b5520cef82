"""Reduced product of intervals and simple congruences over named cells.

A value is a ``Num(lo, hi, m, r)``: the integers of ``[lo, hi]`` congruent to
``r`` modulo ``m`` (``m == 0`` pins the value to ``r``, ``m == 1`` is no
constraint).  Floating-point values use only the interval part, with
outward rounding.  ``None`` is the empty value throughout.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

from ..abi import Abi, ScalarType as T
from ..ir import Binary, Cast, CellRef, Const, Expr, Input, Unary

INF = math.inf

DEFAULT_THRESHOLDS = (0, 1, -1, 255, -255, 32767, -32767, 65535, -65535,
                      2 ** 31 - 1, -(2 ** 31 - 1))


class ContractViolation(Exception):
    """Misuse of the domain API (mismatched cell sets, duplicate cells, ...)."""


class Bottom(Exception):
    """Raised internally when a refinement proves a state unreachable."""


# -- congruences ------------------------------------------------------------


def _norm_cong(m: int, r: int) -> tuple[int, int]:
    m = abs(m)
    if m == 0:
        return 0, r
    return m, r % m


def cong_join(m1, r1, m2, r2):
    return _norm_cong(math.gcd(m1, m2, abs(r1 - r2)), r1)


def cong_meet(m1, r1, m2, r2):
    """Chinese-remainder meet; None when empty."""
    if m1 == 0 and m2 == 0:
        return (0, r1) if r1 == r2 else None
    if m1 == 0:
        return (0, r1) if (r1 - r2) % m2 == 0 else None
    if m2 == 0:
        return (0, r2) if (r2 - r1) % m1 == 0 else None
    g = math.gcd(m1, m2)
    if (r1 - r2) % g:
        return None
    lcm = m1 // g * m2
    # r1 + m1 * k == r2 (mod m2)
    k = ((r2 - r1) // g) * pow(m1 // g, -1, m2 // g) % (m2 // g) if m2 // g > 1 else 0
    return _norm_cong(lcm, r1 + m1 * k)


def cong_leq(m1, r1, m2, r2) -> bool:
    if m2 == 1:
        return True
    if m2 == 0:
        return m1 == 0 and r1 == r2
    return m1 % m2 == 0 and (r1 - r2) % m2 == 0


# -- numbers ------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    lo: object
    hi: object
    m: int = 1
    r: int = 0

    def is_const(self) -> bool:
        return self.lo == self.hi

    @property
    def fl(self) -> bool:
        """Floating-point semantics; integer bounds may still be infinite."""
        return _real_float(self.lo) or _real_float(self.hi) or (self.lo == -INF and self.hi == INF)

    def contains(self, v) -> bool:
        if not self.lo <= v <= self.hi:
            return False
        if isinstance(v, float) and not v.is_integer():
            return self.m == 1
        v = int(v)
        if self.m == 0:
            return v == self.r
        return self.m == 1 or (v - self.r) % self.m == 0

    def __str__(self):
        s = f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"
        if self.m == 0 or self.lo == self.hi:
            return s
        if self.m != 1:
            s += f" = {self.r} mod {self.m}"
        return s


def _real_float(v) -> bool:
    return isinstance(v, float) and not math.isinf(v)


def _fmt(v):
    if v == INF:
        return "+oo"
    if v == -INF:
        return "-oo"
    return repr(v) if isinstance(v, float) else str(v)


def const(v) -> Num:
    if isinstance(v, float):
        return Num(v, v)
    return Num(v, v, 0, v)


def rng(lo, hi) -> Num | None:
    return mk(lo, hi, 1, 0, _real_float(lo) or _real_float(hi) or (lo == -INF and hi == INF))


def mk(lo, hi, m=1, r=0, fl=False) -> Num | None:
    """Build and reduce a value; ``fl`` selects floating-point semantics."""
    if fl:
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            return None
        if lo == hi == 0.0:
            lo, hi = -0.0, 0.0
        return Num(lo, hi, 1, 0)
    if lo != -INF:
        lo = math.ceil(lo)
    if hi != INF:
        hi = math.floor(hi)
    if lo > hi:
        return None
    m, r = _norm_cong(m, r)
    if m == 0:
        if not lo <= r <= hi:
            return None
        return Num(r, r, 0, r)
    if m > 1:
        if lo != -INF:
            lo = lo + (r - lo) % m
        if hi != INF:
            hi = hi - (hi - r) % m
        if lo > hi:
            return None
    if lo == hi:
        return Num(lo, hi, 0, lo)
    return Num(lo, hi, m, r)


def is_float_kind(kind) -> bool:
    return kind is not None and kind.is_float


def top(kind: T, abi: Abi) -> Num:
    if kind.is_float:
        return Num(-INF, INF)
    if kind is T.PTR:
        return Num(0, 2 ** abi.bits(T.PTR) - 1)
    lo, hi = abi.int_range(kind)
    return Num(lo, hi)


def join(a: Num | None, b: Num | None) -> Num | None:
    if a is None:
        return b
    if b is None:
        return a
    fl = a.fl or b.fl
    m, r = (1, 0) if fl else cong_join(a.m, a.r, b.m, b.r)
    return mk(min(a.lo, b.lo), max(a.hi, b.hi), m, r, fl)


def meet(a: Num | None, b: Num | None) -> Num | None:
    if a is None or b is None:
        return None
    fl = a.fl or b.fl
    if fl:
        return mk(max(a.lo, b.lo), min(a.hi, b.hi), fl=True)
    c = cong_meet(a.m, a.r, b.m, b.r)
    if c is None:
        return None
    return mk(max(a.lo, b.lo), min(a.hi, b.hi), c[0], c[1])


def leq(a: Num | None, b: Num | None) -> bool:
    if a is None:
        return True
    if b is None:
        return False
    if a.lo < b.lo or a.hi > b.hi:
        return False
    if a.m == 0 and a.lo == a.hi:
        return b.contains(a.lo)
    return cong_leq(a.m, a.r, b.m, b.r)


def widen(a: Num | None, b: Num | None, thresholds=DEFAULT_THRESHOLDS, bounds=(-INF, INF),
          cong_top=True) -> Num | None:
    """``a`` widened by ``b``: unstable bounds jump to the next threshold, then to ``bounds``."""
    if a is None:
        return b
    if b is None:
        return a
    fl = a.fl
    lo, hi = a.lo, a.hi
    if b.lo < a.lo:
        cands = [t for t in thresholds if t <= b.lo and t >= bounds[0]]
        lo = max(cands) if cands else bounds[0]
    if b.hi > a.hi:
        cands = [t for t in thresholds if t >= b.hi and t <= bounds[1]]
        hi = min(cands) if cands else bounds[1]
    if fl:
        return mk(lo, hi, fl=True)
    if cong_leq(b.m, b.r, a.m, a.r):
        m, r = a.m, a.r
    elif cong_top:
        m, r = 1, 0
    else:
        m, r = cong_join(a.m, a.r, b.m, b.r)
    if m == 0 and lo != hi:
        m, r = cong_join(a.m, a.r, b.m, b.r)
    return mk(lo, hi, m, r)


def narrow(a: Num | None, b: Num | None) -> Num | None:
    """Refine the infinite (or type-bound) ends of ``a`` with ``b``."""
    if a is None or b is None:
        return None
    m = meet(a, b)
    return m


# -- arithmetic on Num (mathematical, no wrap) -----------------------------------


def _f32_down(x: float) -> float:
    if not math.isfinite(x):
        return x
    try:
        r = struct.unpack("f", struct.pack("f", x))[0]
    except OverflowError:
        return -INF if x < 0 else 3.4028234663852886e38
    if r > x:
        r = _f32_step(r, -1)
    return r


def _f32_up(x: float) -> float:
    if not math.isfinite(x):
        return x
    try:
        r = struct.unpack("f", struct.pack("f", x))[0]
    except OverflowError:
        return INF if x > 0 else -3.4028234663852886e38
    if r < x:
        r = _f32_step(r, 1)
    return r


def _f32_step(x: float, d: int) -> float:
    if x == 0.0:
        tiny = struct.unpack("f", struct.pack("I", 1))[0]
        return tiny if d > 0 else -tiny
    bits = struct.unpack("I", struct.pack("f", x))[0]
    if (x > 0) == (d > 0):
        bits += 1
    else:
        bits -= 1
    return struct.unpack("f", struct.pack("I", bits))[0]


def round_out(lo: float, hi: float, kind) -> tuple[float, float]:
    lo = math.nextafter(lo, -INF) if math.isfinite(lo) else lo
    hi = math.nextafter(hi, INF) if math.isfinite(hi) else hi
    if kind is T.FLOAT:
        lo, hi = _f32_down(lo), _f32_up(hi)
    return lo, hi


def _fmul(x, y):
    if (x == 0 and math.isinf(y)) or (y == 0 and math.isinf(x)):
        return 0.0
    return x * y


def add(a: Num, b: Num, fl=False) -> Num | None:
    if fl:
        return mk(a.lo + b.lo, a.hi + b.hi, fl=True)
    m, r = _norm_cong(math.gcd(a.m, b.m), a.r + b.r)
    return mk(a.lo + b.lo, a.hi + b.hi, m, r)


def neg(a: Num, fl=False) -> Num | None:
    if fl:
        return mk(-a.hi, -a.lo, fl=True)
    return mk(-a.hi, -a.lo, a.m, -a.r)


def sub(a: Num, b: Num, fl=False) -> Num | None:
    return add(a, neg(b, fl), fl)


def mul(a: Num, b: Num, fl=False) -> Num | None:
    prods = [_fmul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
    if fl:
        return mk(min(prods), max(prods), fl=True)
    if a.m == 0 and b.m == 0:
        m, r = 0, a.r * b.r
    elif a.m == 0:
        m, r = abs(a.r) * b.m, a.r * b.r
    elif b.m == 0:
        m, r = abs(b.r) * a.m, a.r * b.r
    else:
        m, r = math.gcd(a.m * b.m, a.m * b.r, b.m * a.r), a.r * b.r
    return mk(min(prods), max(prods), m, r)


def _tdiv(x, y):
    """C truncating division extended to infinite bounds."""
    if math.isinf(x) or math.isinf(y):
        if math.isinf(y) and not math.isinf(x):
            return 0
        q = x / y
        return q
    q = abs(x) // abs(y)
    return q if (x >= 0) == (y >= 0) else -q


def nonzero_parts(b: Num, fl=False) -> list[Num]:
    parts = []
    if b.lo < 0:
        p = mk(b.lo, min(b.hi, -0.0 if fl else -1), b.m, b.r, fl)
        if fl and p is not None and p.hi == 0:
            p = Num(p.lo, -5e-324)
        if p is not None:
            parts.append(p)
    if b.hi > 0:
        p = mk(max(b.lo, 0.0 if fl else 1), b.hi, b.m, b.r, fl)
        if fl and p is not None and p.lo == 0:
            p = Num(5e-324, p.hi)
        if p is not None:
            parts.append(p)
    return parts


def div(a: Num, b: Num, fl=False) -> Num | None:
    """``a / b`` over the non-zero part of ``b`` (C truncation for integers)."""
    out = None
    for part in nonzero_parts(b, fl):
        if fl:
            qs = [x / y if not (math.isinf(x) and math.isinf(y)) else (INF if (x > 0) == (y > 0) else -INF)
                  for x in (a.lo, a.hi) for y in (part.lo, part.hi)]
            if part.lo < 0 < part.hi:
                qs += [-INF, INF]
            out = join(out, mk(min(qs), max(qs), fl=True))
            continue
        qs = [_tdiv(x, y) for x in (a.lo, a.hi) for y in (part.lo, part.hi)]
        if a.lo < 0 < a.hi:
            qs.append(0)
        m, r = 1, 0
        if part.m == 0 and part.r != 0:
            c = part.r
            if a.m == 0:
                m, r = 0, _tdiv(a.r, c)
            elif a.m % c == 0 and a.r % abs(c) == 0:
                m, r = a.m // abs(c), a.r // c
        out = join(out, mk(min(qs), max(qs), m, r))
    return out


def mod(a: Num, b: Num) -> Num | None:
    parts = nonzero_parts(b)
    if not parts:
        return None
    if a.m == 0 and b.m == 0:
        q = _tdiv(a.r, b.r)
        return const(a.r - b.r * q)
    bound = max(max(abs(p.lo), abs(p.hi)) for p in parts) - 1
    lo = 0 if a.lo >= 0 else max(a.lo, -bound)
    hi = 0 if a.hi <= 0 else min(a.hi, bound)
    m, r = 1, 0
    if b.m == 0 and a.m != 0 and a.m % abs(b.r) == 0:
        g = math.gcd(a.m, abs(b.r))
        if a.lo >= 0:
            m, r = g, a.r
    return mk(lo, hi, m, r)


def _bitlen_mask(v: int) -> int:
    return (1 << int(v).bit_length()) - 1


def bitop(op: str, a: Num, b: Num) -> Num | None:
    if a.m == 0 and b.m == 0:
        x, y = a.r, b.r
        return const(x & y if op == "&" else x | y if op == "|" else x ^ y)
    if a.lo >= 0 and b.lo >= 0 and a.hi != INF and b.hi != INF:
        if op == "&":
            hi = min(a.hi, b.hi)
            m, r = 1, 0
            if b.m == 0 and b.r & (b.r + 1) == 0:      # low-bit mask
                return mk(0, min(a.hi, b.r), 1, 0)
            return mk(0, hi, m, r)
        return mk(0, max(_bitlen_mask(a.hi), _bitlen_mask(b.hi)))
    return None


def shift(op: str, a: Num, b: Num, fl=False) -> Num | None:
    """Shifts by every count of ``b`` (assumed already restricted to valid counts)."""
    if b.hi - b.lo > 64:
        return None
    out = None
    for c in range(int(b.lo), int(b.hi) + 1):
        if not b.contains(c):
            continue
        p = 2 ** c
        if op == "<<":
            r = mul(a, const(p))
        else:
            lo = a.lo // p if a.lo != -INF else -INF
            hi = a.hi // p if a.hi != INF else INF
            m, rr = 1, 0
            if a.m == 0:
                m, rr = 0, a.r // p
            elif a.m % p == 0 and a.r % p == 0:
                m, rr = a.m // p, a.r // p
            r = mk(lo, hi, m, rr)
        out = join(out, r)
    return out


def wrap(a: Num, kind: T, abi: Abi) -> tuple[Num, bool]:
    """Two's-complement reduction into ``kind``; also reports whether wrapping happened."""
    lo_t, hi_t = abi.int_range(kind)
    if lo_t <= a.lo and a.hi <= hi_t:
        return a, False
    span = hi_t - lo_t + 1
    if a.lo != -INF and a.hi != INF:
        k = (a.lo - lo_t) // span
        if a.hi - k * span <= hi_t:
            return mk(a.lo - k * span, a.hi - k * span, a.m, a.r - k * span), True
    m, r = _norm_cong(math.gcd(a.m, span), a.r)
    return mk(lo_t, hi_t, m, r), True


def wrap_preimage(res: Num, arg: Num, span: int) -> Num | None:
    """The values of ``arg`` whose reduction modulo ``span`` falls in ``res``."""
    if arg.lo == -INF or arg.hi == INF:
        return arg
    k0 = math.floor((arg.lo - res.hi) / span)
    k1 = math.ceil((arg.hi - res.lo) / span)
    if k1 - k0 > 8:
        return arg
    out = None
    for k in range(k0, k1 + 1):
        shifted = Num(res.lo + k * span, res.hi + k * span,
                      res.m, res.r + k * span) if res.m != 0 else const(res.r + k * span)
        out = join(out, meet(arg, shifted))
    return out


def to_float(a: Num, kind: T, abi: Abi) -> Num:
    lo, hi = float(a.lo), float(a.hi)
    if abs(lo) >= 2 ** 24 or abs(hi) >= 2 ** 24 or kind is not T.FLOAT:
        lo, hi = round_out(lo, hi, kind)
    return Num(lo, hi)


def float_to_int(a: Num, kind: T, abi: Abi) -> Num:
    lo_t, hi_t = abi.int_range(kind)
    if a.lo == -INF or a.hi == INF or math.isnan(a.lo):
        return Num(lo_t, hi_t)
    lo, hi = math.trunc(a.lo), math.trunc(a.hi)
    if lo < lo_t or hi > hi_t:
        return Num(lo_t, hi_t)
    return mk(lo, hi)


# -- environments --------------------------------------------------------------


class NumericEnv:
    """An immutable map from cell names to values, or the canonical bottom.

    ``kinds`` gives the scalar type of each cell, which fixes its full range
    and whether integer or floating-point semantics apply.
    """

    __slots__ = ("vals", "kinds", "is_bottom")

    def __init__(self, vals=None, kinds=None, is_bottom=False):
        self.vals: dict = {} if is_bottom else dict(vals or {})
        self.kinds: dict = dict(kinds or {})
        self.is_bottom = is_bottom

    @classmethod
    def bottom(cls, kinds=None):
        return cls(None, kinds, True)

    def copy(self):
        return type(self)(self.vals, self.kinds, self.is_bottom)

    def cells(self) -> frozenset:
        return frozenset(self.kinds)

    def get(self, cell) -> Num | None:
        if self.is_bottom:
            return None
        return self.vals[cell]

    def __eq__(self, other):
        return (isinstance(other, NumericEnv) and self.is_bottom == other.is_bottom
                and self.kinds == other.kinds and self.vals == other.vals)

    def __repr__(self):
        if self.is_bottom:
            return "NumericEnv(bottom)"
        return "NumericEnv(" + ", ".join(f"{c}: {v}" for c, v in sorted(
            self.vals.items(), key=lambda kv: str(kv[0]))) + ")"

    # dimension management

    def add_cell(self, cell, kind: T, abi: Abi, value: Num | None = None):
        if cell in self.kinds:
            raise ContractViolation(f"cell {cell} already present")
        out = self.copy()
        out.kinds[cell] = kind
        if not out.is_bottom:
            out.vals[cell] = value if value is not None else top(kind, abi)
        return out

    def remove_cell(self, cell):
        if cell not in self.kinds:
            raise ContractViolation(f"cell {cell} not present")
        out = self.copy()
        del out.kinds[cell]
        out.vals.pop(cell, None)
        return out

    def rename_cell(self, old, new):
        if old not in self.kinds or new in self.kinds:
            raise ContractViolation(f"cannot rename {old} to {new}")
        out = self.copy()
        out.kinds[new] = out.kinds.pop(old)
        if not out.is_bottom:
            out.vals[new] = out.vals.pop(old)
        return out

    def set(self, cell, value: Num | None):
        """Replace a cell's value in place (used on private copies)."""
        if value is None:
            self.is_bottom = True
            self.vals = {}
        elif not self.is_bottom:
            self.vals[cell] = value

    # lattice

    def _check(self, other):
        if self.kinds.keys() != other.kinds.keys():
            raise ContractViolation("environments over different cell sets")

    def join(self, other):
        self._check(other)
        if self.is_bottom:
            return other.copy()
        if other.is_bottom:
            return self.copy()
        return type(self)({c: join(v, other.vals[c]) for c, v in self.vals.items()}, self.kinds)

    def meet(self, other):
        self._check(other)
        if self.is_bottom or other.is_bottom:
            return type(self).bottom(self.kinds)
        vals = {}
        for c, v in self.vals.items():
            x = meet(v, other.vals[c])
            if x is None:
                return type(self).bottom(self.kinds)
            vals[c] = x
        return type(self)(vals, self.kinds)

    def leq(self, other) -> bool:
        self._check(other)
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return all(leq(v, other.vals[c]) for c, v in self.vals.items())

    def widen(self, other, abi: Abi, thresholds=DEFAULT_THRESHOLDS, cong_top=True):
        self._check(other)
        if self.is_bottom:
            return other.copy()
        if other.is_bottom:
            return self.copy()
        vals = {}
        for c, v in self.vals.items():
            t = top(self.kinds[c], abi)
            vals[c] = widen(v, other.vals[c], thresholds, (t.lo, t.hi), cong_top)
        return type(self)(vals, self.kinds)

    def narrow(self, other):
        self._check(other)
        if self.is_bottom or other.is_bottom:
            return type(self).bottom(self.kinds)
        vals = {}
        for c, v in self.vals.items():
            x = narrow(v, other.vals[c])
            if x is None:
                return type(self).bottom(self.kinds)
            vals[c] = x
        return type(self)(vals, self.kinds)

    # transfer functions

    def assign(self, cell, expr: Expr, abi: Abi, config=None):
        """Strong assignment of ``expr`` to ``cell``; returns (env, alarms)."""
        if self.is_bottom:
            return self.copy(), []
        ev = NumEval(self, abi, config)
        v = ev.eval(expr)
        out = self.copy()
        v = ev.fit(v, self.kinds[cell])
        out.set(cell, v)
        return out, ev.alarms

    def test(self, expr: Expr, abi: Abi, config=None, truth=False):
        """Keep the environments where ``expr == 0`` (or ``!= 0`` with ``truth``)."""
        if self.is_bottom:
            return self.copy(), []
        ev = NumEval(self, abi, config)
        out = ev.constrain(expr, truth)
        return out, ev.alarms


@dataclass
class EvalConfig:
    signed_overflow: str = "wrap"       # or "clamp"
    inputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


_CMP_NEG = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "==": "!=", "!=": "=="}
_CMP_SWAP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}


class NumEval:
    """Forward evaluation and backward refinement of dereference-free expressions.

    Leaves are ``CellRef`` nodes (several cells mean a weak read, the join of
    their values).  Forward evaluation records alarms as ``(kind, node)``.
    """

    def __init__(self, env: NumericEnv, abi: Abi, config: EvalConfig | None = None):
        self.env = env.copy()
        self.abi = abi
        self.config = config or EvalConfig()
        self.alarms: list = []
        self.cache: dict = {}
        self.wrapped: set = set()

    def alarm(self, kind, node):
        self.alarms.append((kind, node))

    # forward

    def eval(self, e: Expr):
        key = id(e)
        if key in self.cache:
            return self.cache[key]
        v = self._eval(e)
        self.cache[key] = v
        return v

    def fl(self, e) -> bool:
        return is_float_kind(e.ty)

    def read_cell(self, c):
        return self.env.get(c)

    def _eval(self, e: Expr):
        if isinstance(e, Const):
            return const(e.value) if not isinstance(e.value, float) else const(float(e.value))
        if isinstance(e, CellRef):
            out = None
            for c in e.cells:
                out = join(out, self.read_cell(c))
            return out
        if isinstance(e, Input):
            r = self.config.inputs.get(e.source)
            if r is None:
                return top(e.ty, self.abi)
            return mk(r[0], r[1], fl=e.ty.is_float)
        if isinstance(e, Unary):
            return self.eval_unary(e)
        if isinstance(e, Binary):
            return self.eval_binary(e)
        if isinstance(e, Cast):
            return self.eval_cast(e)
        self.config.diagnostics["unknown-node"] = self.config.diagnostics.get("unknown-node", 0) + 1
        return top(e.ty, self.abi) if e.ty is not None else Num(-INF, INF)

    def fit(self, v: Num | None, kind, node=None, alarm=True) -> Num | None:
        """Bring a mathematical result into the range of ``kind``."""
        if v is None or kind is None:
            return v
        if kind.is_float:
            if isinstance(v.lo, int) or isinstance(v.hi, int):
                v = to_float(v, kind, self.abi)
            mx = self.abi.float_max(kind)
            if v.lo < -mx or v.hi > mx:
                if alarm and node is not None:
                    self.alarm("overflow", node)
                return mk(max(v.lo, -mx), min(v.hi, mx), fl=True)
            return v
        if kind is T.PTR:
            return v
        lo_t, hi_t = self.abi.int_range(kind)
        if lo_t <= v.lo and v.hi <= hi_t:
            return v
        if kind.is_signed and node is not None:
            if alarm:
                self.alarm("overflow", node)
            if self.config.signed_overflow == "clamp":
                return meet(v, Num(lo_t, hi_t))
        if node is not None:
            self.wrapped.add(id(node))
        return wrap(v, kind, self.abi)[0]

    def eval_unary(self, e: Unary):
        a = self.eval(e.arg)
        if a is None:
            return None
        fl = self.fl(e)
        if e.op == "!":
            return self.truth_value(a, e.arg, negate=True)
        if e.op == "-":
            return self.fit(neg(a, fl), e.ty, e)
        if e.op == "~":
            r = sub(neg(a), const(1))
            return self.fit(r, e.ty, None)
        raise ValueError(e.op)

    def truth_value(self, a: Num, node=None, negate=False):
        zero = a.contains(0) if a.m != 0 or a.lo == a.hi else a.contains(0)
        nonzero = not (a.lo == a.hi == 0)
        vals = set()
        if zero:
            vals.add(1 if negate else 0)
        if nonzero:
            vals.add(0 if negate else 1)
        return mk(min(vals), max(vals)) if vals else None

    def eval_binary(self, e: Binary):
        a = self.eval(e.left)
        b = self.eval(e.right)
        if a is None or b is None:
            return None
        op = e.op
        if op in _CMP_NEG:
            return self.compare(op, a, b)
        fl = self.fl(e) or a.fl or b.fl
        if op == "+":
            r = add(a, b, fl)
        elif op == "-":
            r = sub(a, b, fl)
        elif op == "*":
            r = mul(a, b, fl)
        elif op in ("/", "%"):
            if b.contains(0):
                self.alarm("div-by-zero", e)
            if op == "/":
                r = div(a, b, fl)
            else:
                r = mod(a, b)
            if r is not None and e.ty is not None and e.ty.is_signed:
                lo_t, hi_t = self.abi.int_range(e.ty)
                if a.lo <= lo_t and b.contains(-1):
                    # INT_MIN / -1 (and the quotient inside %)
                    self.alarm("overflow", e)
                    if op == "/":
                        return meet(r, Num(lo_t, hi_t))
        elif op in ("&", "|", "^"):
            r = bitop(op, a, b)
            if r is None:
                return top(e.ty, self.abi)
        elif op in ("<<", ">>"):
            bits = self.abi.bits(e.ty)
            if b.lo < 0 or b.hi >= bits:
                self.alarm("overflow", e)
                b = meet(b, Num(0, bits - 1))
                if b is None:
                    return None
            if op == "<<" and e.ty.is_signed and a.lo < 0:
                self.alarm("overflow", e)
                a = meet(a, Num(0, INF))
                if a is None:
                    return None
            r = shift(op, a, b)
            if r is None:
                return top(e.ty, self.abi)
        else:
            raise ValueError(op)
        if r is None:
            return None
        if fl and e.ty is not None:
            r = Num(*round_out(r.lo, r.hi, e.ty))
        return self.fit(r, e.ty, e)

    def compare(self, op, a: Num, b: Num):
        t = self._cmp_true_possible(op, a, b)
        f = self._cmp_true_possible(_CMP_NEG[op], a, b)
        if t and f:
            return Num(0, 1)
        if t:
            return const(1)
        if f:
            return const(0)
        return None

    def _cmp_true_possible(self, op, a: Num, b: Num) -> bool:
        if op == "<":
            return a.lo < b.hi
        if op == "<=":
            return a.lo <= b.hi
        if op == ">":
            return a.hi > b.lo
        if op == ">=":
            return a.hi >= b.lo
        if op == "==":
            return meet(a, b) is not None
        return not (a.lo == a.hi == b.lo == b.hi)

    def eval_cast(self, e: Cast):
        a = self.eval(e.arg)
        if a is None:
            return None
        src = e.arg.ty
        return self.cast_value(a, src, e.ty, e)

    def cast_value(self, a: Num, src, dst: T, node=None):
        if dst.is_float:
            if src is not None and src.is_float:
                if dst is T.FLOAT and src is not T.FLOAT:
                    lo, hi = _f32_down(a.lo), _f32_up(a.hi)
                    mx = self.abi.float_max(dst)
                    if lo < -mx or hi > mx:
                        return Num(-INF, INF)
                    return Num(lo, hi)
                return a
            return to_float(a, dst, self.abi)
        if dst is T.PTR:
            return a
        if src is not None and src.is_float:
            return float_to_int(a, dst, self.abi)
        if node is not None:
            lo_t, hi_t = self.abi.int_range(dst)
            if not (lo_t <= a.lo and a.hi <= hi_t):
                self.wrapped.add(id(node))
        return wrap(a, dst, self.abi)[0]

    # backward

    def constrain(self, e: Expr, truth: bool) -> NumericEnv:
        try:
            self._constrain(e, truth)
        except Bottom:
            return NumericEnv.bottom(self.env.kinds)
        return self.env

    def _constrain(self, e: Expr, truth: bool):
        v = self.eval(e)
        if v is None:
            raise Bottom
        if isinstance(e, Unary) and e.op == "!":
            self._constrain(e.arg, not truth)
            return
        if isinstance(e, Binary) and e.op in _CMP_NEG:
            self.refine_cmp(e.op if truth else _CMP_NEG[e.op], e.left, e.right)
            return
        if truth:
            target = self.nonzero(v)
        else:
            target = const(0.0 if v.fl else 0)
        self.backward(e, target)

    def nonzero(self, v: Num) -> Num:
        if v.lo == 0 and v.hi == 0:
            raise Bottom
        if v.lo == 0:
            r = mk(1 if not v.fl else 5e-324, v.hi, v.m, v.r,
                   v.fl)
            return r if r is not None else v
        if v.hi == 0:
            r = mk(v.lo, -1 if not v.fl else -5e-324, v.m, v.r,
                   v.fl)
            return r if r is not None else v
        return v

    def refine_cmp(self, op, left: Expr, right: Expr):
        a, b = self.eval(left), self.eval(right)
        if a is None or b is None:
            raise Bottom
        fl = a.fl or b.fl
        one = 0 if fl else 1
        if op == "==":
            m = meet(a, b)
            if m is None:
                raise Bottom
            na, nb = m, m
        elif op == "!=":
            na, nb = a, b
            if b.lo == b.hi:
                na = self._exclude(a, b.lo)
            if a.lo == a.hi:
                nb = self._exclude(b, a.lo)
        elif op in ("<", "<="):
            d = one if op == "<" else 0
            na = meet(a, mk(-INF, b.hi - d, fl=fl))
            nb = meet(b, mk(a.lo + d, INF, fl=fl))
        else:
            d = one if op == ">" else 0
            na = meet(a, mk(b.lo + d, INF, fl=fl))
            nb = meet(b, mk(-INF, a.hi - d, fl=fl))
        if na is None or nb is None:
            raise Bottom
        if na != a:
            self.backward(left, na)
        if nb != b:
            self.backward(right, nb)

    def _exclude(self, a: Num, c) -> Num:
        if a.lo == a.hi == c:
            raise Bottom
        fl = a.fl
        if fl:
            return a
        step = a.m if a.m > 0 else 1
        if a.lo == c:
            return mk(a.lo + step, a.hi, a.m, a.r)
        if a.hi == c:
            return mk(a.lo, a.hi - step, a.m, a.r)
        return a

    def write_cell(self, e: CellRef, target: Num):
        if len(e.cells) != 1:
            return
        c = e.cells[0]
        cur = self.env.get(c)
        new = meet(cur, target)
        if new is None:
            raise Bottom
        if new != cur:
            self.env.set(c, new)

    def backward(self, e: Expr, target: Num):
        cur = self.eval(e)
        new = meet(cur, target)
        if new is None:
            raise Bottom
        self.cache[id(e)] = new
        if new == cur and not isinstance(e, CellRef):
            return
        if isinstance(e, CellRef):
            self.write_cell(e, new)
            return
        if isinstance(e, (Const, Input)):
            return
        if id(e) in self.wrapped:
            return
        if isinstance(e, Unary):
            if e.op == "-":
                self.backward(e.arg, neg(new, new.fl))
            elif e.op == "!":
                if new.lo == new.hi == 1:
                    self.backward(e.arg, const(0.0 if self.fl(e.arg) else 0))
                elif new.lo == new.hi == 0:
                    self._constrain(e.arg, True)
            return
        if isinstance(e, Cast):
            self.backward_cast(e, new)
            return
        if isinstance(e, Binary):
            self.backward_binary(e, new)

    def backward_cast(self, e: Cast, new: Num):
        src = e.arg.ty
        a = self.eval(e.arg)
        if a is None:
            raise Bottom
        if e.ty is T.PTR or src is T.PTR:
            return
        if e.ty.is_float:
            if src is not None and src.is_float:
                if e.ty is src:
                    self.backward(e.arg, new)
                return
            if not a.fl:
                lo = new.lo if new.lo == -INF else math.floor(new.lo) - (0 if abs(new.lo) < 2 ** 24 else abs(new.lo) * 2 ** -22)
                hi = new.hi if new.hi == INF else math.ceil(new.hi) + (0 if abs(new.hi) < 2 ** 24 else abs(new.hi) * 2 ** -22)
                self.backward(e.arg, mk(lo, hi))
            return
        if src is not None and src.is_float:
            self.backward(e.arg, mk(new.lo - 1 if new.lo != -INF else -INF,
                                    new.hi + 1 if new.hi != INF else INF, fl=True))
            return
        lo_t, hi_t = self.abi.int_range(e.ty)
        if lo_t <= a.lo and a.hi <= hi_t:
            self.backward(e.arg, new)
            return
        pre = wrap_preimage(new, a, hi_t - lo_t + 1)
        if pre is None:
            raise Bottom
        self.backward(e.arg, pre)

    def backward_binary(self, e: Binary, new: Num):
        a, b = self.eval(e.left), self.eval(e.right)
        if a is None or b is None:
            raise Bottom
        op = e.op
        fl = new.fl or a.fl or b.fl
        if op in _CMP_NEG:
            if new.lo == new.hi == 1:
                self.refine_cmp(op, e.left, e.right)
            elif new.lo == new.hi == 0:
                self.refine_cmp(_CMP_NEG[op], e.left, e.right)
            return
        if fl:
            # undo the outward rounding slack conservatively
            new = Num(*round_out(new.lo, new.hi, T.DOUBLE))
        if op == "+":
            self.backward(e.left, sub(new, b, fl))
            self.backward(e.right, sub(new, a, fl))
        elif op == "-":
            self.backward(e.left, add(new, b, fl))
            self.backward(e.right, sub(a, new, fl))
        elif op == "*":
            if fl:
                return
            for x, y, side in ((a, b, e.left), (b, a, e.right)):
                if y.m == 0 and y.r != 0:
                    c = y.r
                    lo, hi = sorted((new.lo / c, new.hi / c))
                    m, r = 1, 0
                    if new.m == 0:
                        if new.r % c:
                            raise Bottom
                        m, r = 0, new.r // c
                    self.backward(side, mk(lo, hi, m, r))
        elif op == "|":
            # x | y == 0 forces both operands to 0
            if new.lo == new.hi == 0 and not fl:
                self.backward(e.left, const(0))
                self.backward(e.right, const(0))
        elif op == "/":
            if fl or not (b.m == 0 and b.r > 0):
                return
            c = b.r
            lo = new.lo * c if new.lo > 0 else new.lo * c - (c - 1)
            hi = new.hi * c + (c - 1) if new.hi >= 0 else new.hi * c
            self.backward(e.left, mk(lo, hi))
