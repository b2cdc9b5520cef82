"""Scalar types and the ABI parameters (sizes, alignments, byte order)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path


class AbiError(ValueError):
    pass


class ScalarType(enum.Enum):
    SCHAR = "schar"
    UCHAR = "uchar"
    SHORT = "short"
    USHORT = "ushort"
    INT = "int"
    UINT = "uint"
    LONG = "long"
    ULONG = "ulong"
    LLONG = "llong"
    ULLONG = "ullong"
    FLOAT = "float"
    DOUBLE = "double"
    LDOUBLE = "ldouble"
    PTR = "ptr"

    def __lt__(self, other):
        if not isinstance(other, ScalarType):
            return NotImplemented
        return _ORDER[self] < _ORDER[other]

    def __str__(self):
        return self.value

    @property
    def is_int(self) -> bool:
        return self in _SIGNED or self in _UNSIGNED

    @property
    def is_float(self) -> bool:
        return self in (ScalarType.FLOAT, ScalarType.DOUBLE, ScalarType.LDOUBLE)

    @property
    def is_ptr(self) -> bool:
        return self is ScalarType.PTR

    @property
    def is_signed(self) -> bool:
        return self in _SIGNED

    @property
    def is_unsigned(self) -> bool:
        return self in _UNSIGNED

    def to_unsigned(self) -> ScalarType:
        return _TO_UNSIGNED.get(self, self)

    def to_signed(self) -> ScalarType:
        return _TO_SIGNED.get(self, self)

    @property
    def rank(self) -> int:
        """Integer conversion rank (char < short < int < long < long long)."""
        return _RANK[self]


_ORDER = {t: i for i, t in enumerate(ScalarType)}
_SIGNED = frozenset({ScalarType.SCHAR, ScalarType.SHORT, ScalarType.INT,
                     ScalarType.LONG, ScalarType.LLONG})
_UNSIGNED = frozenset({ScalarType.UCHAR, ScalarType.USHORT, ScalarType.UINT,
                       ScalarType.ULONG, ScalarType.ULLONG})
_PAIRS = [(ScalarType.SCHAR, ScalarType.UCHAR), (ScalarType.SHORT, ScalarType.USHORT),
          (ScalarType.INT, ScalarType.UINT), (ScalarType.LONG, ScalarType.ULONG),
          (ScalarType.LLONG, ScalarType.ULLONG)]
_TO_UNSIGNED = {s: u for s, u in _PAIRS}
_TO_SIGNED = {u: s for s, u in _PAIRS}
_RANK = {}
for _r, (_s, _u) in enumerate(_PAIRS):
    _RANK[_s] = _RANK[_u] = _r

INT_TYPES = tuple(t for t in ScalarType if t.is_int)
FLOAT_TYPES = (ScalarType.FLOAT, ScalarType.DOUBLE, ScalarType.LDOUBLE)
REAL_TYPES = INT_TYPES + FLOAT_TYPES

_DEFAULT_SIZES = {
    ScalarType.SCHAR: 1, ScalarType.UCHAR: 1,
    ScalarType.SHORT: 2, ScalarType.USHORT: 2,
    ScalarType.INT: 4, ScalarType.UINT: 4,
    ScalarType.LONG: 4, ScalarType.ULONG: 4,
    ScalarType.LLONG: 8, ScalarType.ULLONG: 8,
    ScalarType.FLOAT: 4, ScalarType.DOUBLE: 8, ScalarType.LDOUBLE: 8,
    ScalarType.PTR: 4,
}


def _default_aligns(sizes):
    return {t: min(s, 4) for t, s in sizes.items()}


@dataclass(frozen=True)
class Abi:
    """Sizes and alignments of the scalar types plus the byte order.

    Pointers are as wide as ``unsigned long``; the recomposition of a pointer
    from its bytes goes through that type.
    """

    sizes: dict = field(default_factory=lambda: dict(_DEFAULT_SIZES))
    aligns: dict = field(default_factory=lambda: _default_aligns(_DEFAULT_SIZES))
    little_endian: bool = True

    def __post_init__(self):
        for t in ScalarType:
            if t not in self.sizes or t not in self.aligns:
                raise AbiError(f"missing size or alignment for {t}")
            s, a = self.sizes[t], self.aligns[t]
            if s < 1 or a < 1:
                raise AbiError(f"size and alignment of {t} must be >= 1")
            if a & (a - 1):
                raise AbiError(f"alignment of {t} must be a power of two")
            if s % a and a % s:
                raise AbiError(f"alignment {a} and size {s} of {t} are incompatible")
        if self.sizes[ScalarType.PTR] != self.sizes[ScalarType.ULONG]:
            raise AbiError("sizeof.ptr must equal sizeof.ulong")

    def __hash__(self):
        return hash((tuple(sorted((t.value, s) for t, s in self.sizes.items())),
                     tuple(sorted((t.value, a) for t, a in self.aligns.items())),
                     self.little_endian))

    def sizeof(self, t: ScalarType) -> int:
        return self.sizes[t]

    def alignof(self, t: ScalarType) -> int:
        return self.aligns[t]

    @property
    def ptr_size(self) -> int:
        return self.sizes[ScalarType.PTR]

    @property
    def address_type(self) -> ScalarType:
        return ScalarType.ULONG

    def bits(self, t: ScalarType) -> int:
        return 8 * self.sizes[t]

    def int_range(self, t: ScalarType) -> tuple[int, int]:
        n = self.bits(t)
        if t.is_signed:
            return -(1 << (n - 1)), (1 << (n - 1)) - 1
        if t.is_unsigned:
            return 0, (1 << n) - 1
        raise AbiError(f"{t} is not an integer type")

    def wrap(self, t: ScalarType, v: int) -> int:
        """Two's-complement conversion of ``v`` into the range of ``t``."""
        n = self.bits(t)
        v &= (1 << n) - 1
        if t.is_signed and v >= 1 << (n - 1):
            v -= 1 << n
        return v

    def float_max(self, t: ScalarType) -> float:
        if self.sizes[t] == 4:
            return 3.4028234663852886e38
        return 1.7976931348623157e308

    def summary(self) -> dict:
        return {
            "endian": "little" if self.little_endian else "big",
            "sizeof": {t.value: self.sizes[t] for t in ScalarType},
            "alignof": {t.value: self.aligns[t] for t in ScalarType},
        }


DEFAULT_ABI = Abi()


def parse_abi(text: str) -> Abi:
    """Read a ``key = value`` ABI description; unspecified keys keep the defaults.

    Changing ``sizeof.<t>`` without giving ``alignof.<t>`` resets the alignment
    to ``min(size, 4)``.
    """
    sizes = dict(_DEFAULT_SIZES)
    aligns: dict = {}
    little = True
    names = {t.value: t for t in ScalarType}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise AbiError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key == "endian":
            if value not in ("little", "big"):
                raise AbiError(f"line {lineno}: endian must be 'little' or 'big'")
            little = value == "little"
            continue
        kind, _, tname = key.partition(".")
        if kind not in ("sizeof", "alignof") or tname not in names:
            raise AbiError(f"line {lineno}: unknown key {key!r}")
        try:
            n = int(value, 0)
        except ValueError:
            raise AbiError(f"line {lineno}: {value!r} is not an integer") from None
        (sizes if kind == "sizeof" else aligns)[names[tname]] = n
    full_aligns = _default_aligns(sizes)
    full_aligns.update(aligns)
    return Abi(sizes=sizes, aligns=full_aligns, little_endian=little)


def load_abi(path: str | Path) -> Abi:
    return parse_abi(Path(path).read_text(encoding="utf-8"))
