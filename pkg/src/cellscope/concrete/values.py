"""Concrete scalar values, byte values and the recomposition function phi."""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass

from ..abi import Abi, ScalarType as T


@dataclass(frozen=True)
class Ptr:
    """A valid pointer: byte ``offset`` from the start of ``base``."""

    base: str
    offset: int

    def __str__(self):
        return f"&{self.base}+{self.offset}"


class _Special:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_special, (self.name,))


NULL = _Special("NULL")
OMEGA = _Special("omega")
UNINIT = _Special("uninit")
_SPECIALS = {"NULL": NULL, "omega": OMEGA, "uninit": UNINIT}


def _special(name):
    return _SPECIALS[name]


def is_pointer_value(v) -> bool:
    return isinstance(v, Ptr) or v is NULL or v is OMEGA


@dataclass(frozen=True)
class ByteValue:
    """Byte ``index`` (in memory order) of the scalar ``value`` of type ``ty``."""

    ty: T
    index: int
    value: object

    def __str__(self):
        v = self.value
        if isinstance(v, int) and not isinstance(v, bool):
            v = hex(v) if v >= 0 else f"-{hex(-v)}"
        return f"({self.ty},{self.index},{v})"


ZERO_BYTE = ByteValue(T.UCHAR, 0, 0)


def byte_str(b) -> str:
    return "uninit" if b is UNINIT else str(b)


def store_bytes(ty: T, value, abi: Abi) -> tuple:
    return tuple(ByteValue(ty, k, value) for k in range(abi.sizeof(ty)))


# -- value sets -------------------------------------------------------------


class VSet:
    """A set of scalar values of one type, possibly infinite."""

    ty: T

    def finite(self, cap: int = 4096):
        """The elements as a frozenset, or None when there are more than ``cap``."""
        raise NotImplementedError

    def contains(self, v) -> bool:
        raise NotImplementedError

    def sample(self, rng: random.Random, abi: Abi):
        raise NotImplementedError


@dataclass(frozen=True)
class Finite(VSet):
    ty: T
    values: frozenset

    def finite(self, cap=4096):
        return self.values if len(self.values) <= cap else None

    def contains(self, v):
        return v in self.values

    def sample(self, rng, abi):
        if not self.values:
            raise ValueError("sampling from the empty set")
        return rng.choice(sorted(self.values, key=_sort_key))

    def is_empty(self):
        return not self.values


def _sort_key(v):
    if isinstance(v, Ptr):
        return (2, v.base, v.offset)
    if isinstance(v, _Special):
        return (1, v.name, 0)
    return (0, "", v)


@dataclass(frozen=True)
class IntSet:
    """``{const + sum(w * x_w) | lo_w <= x_w <= hi_w}`` for distinct powers ``w`` of 256."""

    const: int
    free: tuple  # ((weight, lo, hi), ...) sorted by decreasing weight

    @property
    def min(self) -> int:
        return self.const + sum(w * lo for w, lo, _ in self.free)

    @property
    def max(self) -> int:
        return self.const + sum(w * hi for w, _, hi in self.free)

    def size(self) -> int:
        return math.prod(hi - lo + 1 for _, lo, hi in self.free)

    def contains(self, v: int) -> bool:
        rem = v - self.const
        if rem < 0:
            return False
        for w, lo, hi in self.free:
            d = (rem // w) % 256
            if not lo <= d <= hi:
                return False
            rem -= d * w
        return rem == 0

    def elements(self):
        vals = [self.const]
        for w, lo, hi in self.free:
            vals = [v + w * d for v in vals for d in range(lo, hi + 1)]
        return vals

    def sample(self, rng):
        return self.const + sum(w * rng.randint(lo, hi) for w, lo, hi in self.free)

    def within(self, lo, hi, m, r) -> bool:
        """Exact check that every element lies in [lo,hi] and is congruent to r mod m."""
        if self.min < lo or self.max > hi:
            return False
        if m == 1:
            return True
        varying = [w for w, a, b in self.free if a < b]
        if m == 0:
            return not varying and self.min == r
        return (self.min - r) % m == 0 and all(w % m == 0 for w in varying)


@dataclass(frozen=True)
class IntRanges(VSet):
    ty: T
    parts: tuple

    def finite(self, cap=4096):
        if sum(p.size() for p in self.parts) > cap:
            return None
        return frozenset(v for p in self.parts for v in p.elements())

    def contains(self, v):
        return isinstance(v, int) and any(p.contains(v) for p in self.parts)

    def sample(self, rng, abi):
        sizes = [p.size() for p in self.parts]
        k = rng.randrange(sum(sizes))
        for p, s in zip(self.parts, sizes):
            if k < s:
                return p.sample(rng)
            k -= s
        raise AssertionError

    def within(self, lo, hi, m, r) -> bool:
        return all(p.within(lo, hi, m, r) for p in self.parts)


FLOAT_SAMPLE_RANGE = 1e9


@dataclass(frozen=True)
class Full(VSet):
    """Every value of the type (``V_tau``)."""

    ty: T

    def finite(self, cap=4096):
        return None

    def contains(self, v):
        if self.ty is T.PTR:
            return is_pointer_value(v)
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    def sample(self, rng, abi):
        if self.ty is T.PTR:
            # the absolute address of a variable is unknown: a forged pointer
            # is always invalid
            return OMEGA
        if self.ty.is_float:
            return round_float(self.ty, rng.uniform(-FLOAT_SAMPLE_RANGE, FLOAT_SAMPLE_RANGE))
        lo, hi = abi.int_range(self.ty)
        return rng.randint(lo, hi)


def singleton(ty, v) -> Finite:
    return Finite(ty, frozenset([v]))


def round_float(ty: T, v: float) -> float:
    if ty is T.FLOAT and math.isfinite(v):
        try:
            return struct.unpack("f", struct.pack("f", v))[0]
        except OverflowError:
            return math.copysign(math.inf, v)
    return v


# -- recomposition ------------------------------------------------------------


def _significance(k: int, n: int, abi: Abi) -> int:
    return k if abi.little_endian else n - 1 - k


def uchar_byte(b: ByteValue, abi: Abi):
    """The unsigned-char reading of one byte: an int, or None for [0,255]."""
    v = b.value
    if v is NULL:
        return 0
    if b.ty.is_int:
        sig = _significance(b.index, abi.sizeof(b.ty), abi)
        return (v // 256 ** sig) % 256
    return None


def _compose(bytes_, abi: Abi) -> IntSet:
    n = len(bytes_)
    const = 0
    free = []
    for k, b in enumerate(bytes_):
        w = 256 ** _significance(k, n, abi)
        d = uchar_byte(b, abi)
        if d is None:
            free.append((w, 0, 255))
        else:
            const += w * d
    free.sort(reverse=True)
    return IntSet(const, tuple(free))


def _ints(ty: T, parts) -> VSet:
    parts = tuple(p for p in parts if p.size() > 0)
    if len(parts) == 1 and not parts[0].free:
        return singleton(ty, parts[0].const)
    return IntRanges(ty, parts)


def phi(ty: T, bytes_, abi: Abi) -> VSet:
    """All values of type ``ty`` that the byte sequence may denote."""
    n = abi.sizeof(ty)
    if len(bytes_) != n:
        raise ValueError(f"phi<{ty}> expects {n} bytes, got {len(bytes_)}")
    if any(b is UNINIT for b in bytes_):
        return Full(ty)
    first = bytes_[0]
    if first.ty is ty and all(b.ty is ty and b.index == k and _same(b.value, first.value)
                              for k, b in enumerate(bytes_)):
        return singleton(ty, first.value)
    if ty.is_int:
        u = _compose(bytes_, abi)
        if ty.is_unsigned:
            return _ints(ty, [u])
        top = 256 ** (n - 1)
        shift = 256 ** n
        top_free = [f for f in u.free if f[0] == top]
        if not top_free:
            return _ints(ty, [IntSet(u.const - shift if u.const >= shift // 2 else u.const, u.free)])
        rest = tuple(f for f in u.free if f[0] != top)
        low = IntSet(u.const, ((top, 0, 127),) + rest)
        high = IntSet(u.const - shift, ((top, 128, 255),) + rest)
        return _ints(ty, [high, low])
    if ty is T.PTR:
        u = _compose(bytes_, abi)
        if not u.free and u.const == 0:
            return singleton(T.PTR, NULL)
        return Full(T.PTR)
    return Full(ty)


def _same(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b and type(a) is type(b)
