"""C object types and their ABI-determined layout."""

from __future__ import annotations

from dataclasses import dataclass

from .abi import Abi, ScalarType


class CType:
    is_scalar = False


@dataclass(frozen=True)
class Scalar(CType):
    kind: ScalarType
    is_scalar = True

    def __str__(self):
        return str(self.kind)


@dataclass(frozen=True)
class Pointer(CType):
    """A ``ptr`` scalar that remembers its pointee for arithmetic scaling."""

    target: CType
    is_scalar = True

    @property
    def kind(self) -> ScalarType:
        return ScalarType.PTR

    def __str__(self):
        return f"{self.target}*"


@dataclass(frozen=True)
class Array(CType):
    elem: CType
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("array length must be >= 0")

    def __str__(self):
        return f"{self.elem}[{self.length}]"


class Record(CType):
    """A struct (``union=False``) or an overlay (``union=True``).

    Identity-compared so that self-referential types can be built by filling
    ``fields`` after creation.
    """

    def __init__(self, name: str | None, union: bool, fields=None):
        self.name = name
        self.union = union
        self.fields: list[tuple[str, CType]] | None = fields

    @property
    def complete(self) -> bool:
        return self.fields is not None

    def field(self, name: str) -> CType | None:
        for fname, ft in self.fields or ():
            if fname == name:
                return ft
        return None

    def __repr__(self):
        kw = "union" if self.union else "struct"
        return f"{kw} {self.name or '<anon>'}"

    __str__ = __repr__


@dataclass(frozen=True)
class Void(CType):
    def __str__(self):
        return "void"


@dataclass(frozen=True)
class Func(CType):
    ret: CType
    params: tuple
    variadic: bool = False

    def __str__(self):
        return f"{self.ret}({', '.join(map(str, self.params))})"


def scalar_kind(t: CType) -> ScalarType | None:
    if isinstance(t, (Scalar, Pointer)):
        return t.kind
    return None


def alignof(t: CType, abi: Abi) -> int:
    if isinstance(t, (Scalar, Pointer)):
        return abi.alignof(t.kind)
    if isinstance(t, Array):
        return alignof(t.elem, abi)
    if isinstance(t, Record):
        if not t.complete:
            raise ValueError(f"incomplete type {t}")
        return max((alignof(ft, abi) for _, ft in t.fields), default=1)
    raise ValueError(f"type {t} has no alignment")


def sizeof(t: CType, abi: Abi) -> int:
    return layout(t, abi)[0]


def _round_up(n: int, a: int) -> int:
    return (n + a - 1) // a * a


def field_offsets(rec: Record, abi: Abi) -> list[tuple[str, int, CType]]:
    """Direct fields of ``rec`` with their byte offsets."""
    out = []
    off = 0
    for name, ft in rec.fields:
        if rec.union:
            out.append((name, 0, ft))
            continue
        off = _round_up(off, alignof(ft, abi))
        out.append((name, off, ft))
        off += sizeof(ft, abi)
    return out


def layout(t: CType, abi: Abi) -> tuple[int, dict[str, int]]:
    """Total byte size of ``t`` and the offset of every (nested) field path.

    Records lay fields out in declaration order with alignment padding,
    overlays put every alternative at offset 0, arrays place element k at
    k * sizeof(elem), and the total size is padded to the type's alignment.
    """
    if isinstance(t, (Scalar, Pointer)):
        return abi.sizeof(t.kind), {}
    if isinstance(t, Array):
        return t.length * sizeof(t.elem, abi), {}
    if isinstance(t, Record):
        if not t.complete:
            raise ValueError(f"incomplete type {t}")
        paths: dict[str, int] = {}
        size = 0
        for name, off, ft in field_offsets(t, abi):
            fsize, sub = layout(ft, abi)
            paths[name] = off
            for p, o in sub.items():
                paths[f"{name}.{p}"] = off + o
            size = max(size, off + fsize)
        return _round_up(size, alignof(t, abi)), paths
    raise ValueError(f"type {t} has no layout")
