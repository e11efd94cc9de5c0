"""Reference numeric semantics.

All operators are total. Values live in the canonical range of their type
(signed types carry a Python int in [-2^(w-1), 2^(w-1)), unsigned in
[0, 2^w)); fx is the raw 16.16 two's-complement integer. Every operation
wraps modulo 2^width. Division truncates toward zero like C; division or
modulo by zero yields 0 here (callers flag the event; verification treats
the result as unconstrained instead). Shift amounts are masked to width-1.
"""

from __future__ import annotations

from kinduct.lang.types import BOOL, FX, Scalar


def wrap(v: int, t: Scalar) -> int:
    m = v & ((1 << t.width) - 1)
    if t.signed and m >= (1 << (t.width - 1)):
        m -= 1 << t.width
    return m


def to_raw(v: int, t: Scalar) -> int:
    """Canonical value -> unsigned bit pattern."""
    return v & ((1 << t.width) - 1)


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def add(t: Scalar, a: int, b: int) -> int:
    return wrap(a + b, t)


def sub(t: Scalar, a: int, b: int) -> int:
    return wrap(a - b, t)


def neg(t: Scalar, a: int) -> int:
    return wrap(-a, t)


def mul(t: Scalar, a: int, b: int) -> int:
    if t.is_fixed:
        return wrap((a * b) >> 16, t)
    return wrap(a * b, t)


def div(t: Scalar, a: int, b: int) -> int:
    """Total division; b == 0 handled by callers (this returns 0)."""
    if b == 0:
        return 0
    if t.is_fixed:
        return wrap(trunc_div(a << 16, b), t)
    return wrap(trunc_div(a, b), t)


def mod(t: Scalar, a: int, b: int) -> int:
    if b == 0:
        return 0
    # C remainder: a == (a/b)*b + a%b with truncating division
    return wrap(a - trunc_div(a, b) * b, t)


def bit_and(t: Scalar, a: int, b: int) -> int:
    return wrap(to_raw(a, t) & to_raw(b, t), t)


def bit_or(t: Scalar, a: int, b: int) -> int:
    return wrap(to_raw(a, t) | to_raw(b, t), t)


def bit_xor(t: Scalar, a: int, b: int) -> int:
    return wrap(to_raw(a, t) ^ to_raw(b, t), t)


def bit_not(t: Scalar, a: int) -> int:
    return wrap(~to_raw(a, t), t)


def shl(t: Scalar, a: int, s: int) -> int:
    return wrap(to_raw(a, t) << (s & (t.width - 1)), t)


def shr(t: Scalar, a: int, s: int) -> int:
    s = s & (t.width - 1)
    if t.signed:
        return wrap(a >> s, t)  # arithmetic: Python >> floors
    return wrap(to_raw(a, t) >> s, t)


def cast(src: Scalar, dst: Scalar, v: int) -> int:
    if src == dst:
        return v
    if src.is_fixed and not dst.is_fixed:
        return wrap(v >> 16, dst)  # floor of the fixed-point value
    if dst.is_fixed and not src.is_fixed:
        return wrap(v << 16, dst)
    return wrap(v, dst)


def clamp_index(idx: int, length: int) -> tuple[int, bool]:
    """Array index clamping; second component flags out-of-range."""
    if idx < 0:
        return 0, True
    if idx >= length:
        return length - 1, True
    return idx, False


BINOPS = {
    "+": add,
    "-": sub,
    "*": mul,
    "/": div,
    "%": mod,
    "&": bit_and,
    "|": bit_or,
    "^": bit_xor,
    "<<": shl,
    ">>": shr,
}

CMPOPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_binop(op: str, t: Scalar, a: int, b: int) -> int:
    """Dispatch for arithmetic/bitwise ops on operand type t."""
    return BINOPS[op](t, a, b)


def eval_cmp(op: str, a: int, b: int) -> bool:
    return CMPOPS[op](a, b)


def fx_from_decimal(text: str) -> int:
    """Parse a decimal fx literal into its raw 16.16 value (round to
    nearest, ties to even)."""
    from fractions import Fraction

    raw = Fraction(text) * (1 << 16)
    lo = raw.numerator // raw.denominator
    rem = Fraction(raw - lo)
    if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and lo % 2 == 1):
        lo += 1
    return wrap(lo, FX)


def fx_to_decimal(raw: int) -> str:
    """Exact decimal rendering of a raw 16.16 value."""
    sign = "-" if raw < 0 else ""
    mag = abs(raw)
    whole, frac = divmod(mag, 1 << 16)
    if frac == 0:
        return f"{sign}{whole}.0"
    # 2^16 divides 10^16, so 16 decimal digits are always exact
    digits = f"{frac * 10**16 >> 16:016d}".rstrip("0")
    return f"{sign}{whole}.{digits}"


def bool_val(v: bool) -> int:
    return 1 if v else 0


assert BOOL.width == 1
