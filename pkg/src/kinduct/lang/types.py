"""Type universe: fixed-width scalars, a 16.16 fixed-point type, and arrays."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class Scalar:
    name: str
    width: int
    signed: bool
    is_fixed: bool = False  # raw 16.16 two's-complement when True

    def __str__(self) -> str:
        return self.name

    @property
    def min_value(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max_value(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1


@dataclass(frozen=True)
class Array:
    elem: Scalar
    length: int

    def __str__(self) -> str:
        return f"{self.elem}[{self.length}]"


Type = "Scalar | Array"

BOOL = Scalar("bool", 1, False)
U8 = Scalar("u8", 8, False)
I8 = Scalar("i8", 8, True)
U16 = Scalar("u16", 16, False)
I16 = Scalar("i16", 16, True)
U32 = Scalar("u32", 32, False)
I32 = Scalar("i32", 32, True)
FX = Scalar("fx", 32, True, is_fixed=True)

SURFACE_SCALARS = {t.name: t for t in (BOOL, U8, I8, U16, I16, U32, I32, FX)}
INTEGER_SCALARS = (U8, I8, U16, I16, U32, I32)
FX_ONE = 1 << 16  # raw value of fixed-point 1.0


@lru_cache(maxsize=None)
def unsigned(width: int) -> Scalar:
    """Internal unsigned type of arbitrary width (monitor counters)."""
    if width == 1:
        return BOOL
    std = {8: U8, 16: U16, 32: U32}.get(width)
    return std if std else Scalar(f"u{width}", width, False)


def is_integer(t: Scalar) -> bool:
    return t is not BOOL and not t.is_fixed


def can_widen(src: Scalar, dst: Scalar) -> bool:
    """Lossless implicit conversion between integer scalars."""
    if src == dst:
        return True
    if not (is_integer(src) and is_integer(dst)):
        return False
    if src.signed and not dst.signed:
        return False
    if src.signed == dst.signed:
        return dst.width > src.width
    # unsigned -> signed needs strictly more bits
    return dst.width > src.width
