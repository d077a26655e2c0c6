"""Arbitrary-precision scalars and intervals for 1D coordinates.

The interval targets produced by the neighborhood construction have lengths
like eps^sigma with sigma > 50, far below double-precision underflow, so every
1D coordinate that can get that small is carried as a BigReal.  Times, y- and
z-coordinates stay machine doubles throughout (their magnitudes are tame).

Backed by mpmath (gmpy2 backend is picked up automatically when installed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from mpmath import ldexp, mp, mpf, workprec

Number = Union[int, float, str, "BigReal", mpf]

_LN2 = math.log(2.0)


def _to_mpf(value: Number, precision_bits: int) -> mpf:
    if isinstance(value, BigReal):
        return value.value
    with workprec(precision_bits):
        return mpf(value)


@dataclass(frozen=True)
class BigReal:
    """A real number carried at an explicit binary precision.

    Arithmetic between BigReals is performed at the larger of the two
    operand precisions; the result records that precision.  Conversion to
    a machine double is explicit (`to_float`) and flagged lossy when the
    value cannot be represented.
    """

    value: mpf
    precision_bits: int

    def __post_init__(self):
        if self.precision_bits <= 0:
            raise ValueError("precision_bits must be positive")

    # -- construction -------------------------------------------------

    @staticmethod
    def from_number(value: Number, precision_bits: int) -> "BigReal":
        return BigReal(_to_mpf(value, precision_bits), precision_bits)

    @staticmethod
    def from_str(decimal: str, precision_bits: int) -> "BigReal":
        with workprec(precision_bits):
            return BigReal(mpf(decimal), precision_bits)

    # -- conversion ----------------------------------------------------

    def to_float(self) -> tuple[float, bool]:
        """Machine double plus a lossy flag.

        The flag is set when the round-trip through float does not recover
        the stored value (normal for any genuinely high-precision number)
        or when the magnitude underflows/overflows the double range.
        """
        f = float(self.value)
        lossy = (mpf(f) != self.value) or (f == 0.0 and self.value != 0)
        return f, lossy

    def float_approx(self) -> float:
        return float(self.value)

    def log2_abs(self) -> float:
        """log2 |value| as a double, exact to double precision.

        Works far outside the double exponent range: reads the mantissa and
        exponent of the mpf directly instead of converting the value.
        """
        if self.value == 0:
            return float("-inf")
        v = abs(self.value)
        man, exp = int(v.man), int(v.exp)
        bits = man.bit_length()
        if bits > 64:
            top = man >> (bits - 64)
            return math.log2(top) + (exp + bits - 64)
        return math.log2(man) + exp

    def log_abs(self) -> float:
        """Natural log of |value| as a double (cheap at any precision)."""
        return self.log2_abs() * _LN2

    # -- arithmetic (result at max operand precision) -------------------

    def _lift(self, other: Number) -> tuple[mpf, int]:
        if isinstance(other, BigReal):
            return other.value, max(self.precision_bits, other.precision_bits)
        return _to_mpf(other, self.precision_bits), self.precision_bits

    def __add__(self, other: Number) -> "BigReal":
        v, p = self._lift(other)
        with workprec(p):
            return BigReal(self.value + v, p)

    def __sub__(self, other: Number) -> "BigReal":
        v, p = self._lift(other)
        with workprec(p):
            return BigReal(self.value - v, p)

    def __mul__(self, other: Number) -> "BigReal":
        v, p = self._lift(other)
        with workprec(p):
            return BigReal(self.value * v, p)

    def __truediv__(self, other: Number) -> "BigReal":
        v, p = self._lift(other)
        with workprec(p):
            return BigReal(self.value / v, p)

    def __neg__(self) -> "BigReal":
        with workprec(self.precision_bits):
            return BigReal(-self.value, self.precision_bits)

    def __abs__(self) -> "BigReal":
        with workprec(self.precision_bits):
            return BigReal(abs(self.value), self.precision_bits)

    # -- comparison (exact, precision-free) ------------------------------

    def __lt__(self, other: Number):
        v, _ = self._lift(other)
        return self.value < v

    def __le__(self, other: Number):
        v, _ = self._lift(other)
        return self.value <= v

    def __gt__(self, other: Number):
        v, _ = self._lift(other)
        return self.value > v

    def __ge__(self, other: Number):
        v, _ = self._lift(other)
        return self.value >= v

    def __eq__(self, other):
        if isinstance(other, (BigReal, int, float, mpf)):
            v, _ = self._lift(other)
            return self.value == v
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def sign(self) -> int:
        if self.value > 0:
            return 1
        if self.value < 0:
            return -1
        return 0

    def with_precision(self, precision_bits: int) -> "BigReal":
        """Re-round to a new declared precision."""
        with workprec(precision_bits):
            return BigReal(mpf(self.value), precision_bits)

    def to_decimal_string(self) -> str:
        """Full decimal expansion recovering the value exactly on re-parse."""
        digits = int(self.precision_bits / 3.3219280948873626) + 3
        with workprec(self.precision_bits + 16):
            return mp.nstr(self.value, digits, strip_zeros=True)

    def __repr__(self):
        return f"BigReal({mp.nstr(self.value, 12)}, bits={self.precision_bits})"


def ulp_scaled(x: BigReal, shift_bits: int) -> BigReal:
    """2^(-(precision - shift_bits)) relative to |x|, as a BigReal."""
    e = int(math.floor(x.log2_abs())) - x.precision_bits + shift_bits
    return BigReal(ldexp(1, e), x.precision_bits)


@dataclass(frozen=True)
class BigInterval:
    """Closed interval with BigReal endpoints, kept inside [-1, 1]."""

    lo: BigReal
    hi: BigReal

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("interval endpoints must satisfy lo < hi")
        if self.lo < -1 or self.hi > 1:
            raise ValueError("interval must lie inside [-1, 1]")

    @staticmethod
    def from_floats(lo: Number, hi: Number, precision_bits: int) -> "BigInterval":
        return BigInterval(
            BigReal.from_number(lo, precision_bits),
            BigReal.from_number(hi, precision_bits),
        )

    @property
    def precision_bits(self) -> int:
        return max(self.lo.precision_bits, self.hi.precision_bits)

    def length(self) -> BigReal:
        return self.hi - self.lo

    def midpoint(self) -> BigReal:
        return (self.lo + self.hi) / 2

    def contains(self, x: Number) -> bool:
        v = x.value if isinstance(x, BigReal) else mpf(x)
        return self.lo.value <= v <= self.hi.value

    def contains_interior(self, x: Number) -> bool:
        v = x.value if isinstance(x, BigReal) else mpf(x)
        return self.lo.value < v < self.hi.value

    def contains_zero(self) -> bool:
        return self.lo.value <= 0 <= self.hi.value

    def is_subset_of(self, other: "BigInterval") -> bool:
        return other.lo.value <= self.lo.value and self.hi.value <= other.hi.value

    def is_interior_subset_of(self, other: "BigInterval") -> bool:
        return other.lo.value < self.lo.value and self.hi.value < other.hi.value

    def intersect(self, other: "BigInterval") -> "BigInterval":
        lo = self.lo if self.lo.value >= other.lo.value else other.lo
        hi = self.hi if self.hi.value <= other.hi.value else other.hi
        if not lo.value < hi.value:
            raise ValueError("empty intersection")
        return BigInterval(lo, hi)

    def mirrored(self) -> "BigInterval":
        return BigInterval(-self.hi, -self.lo)

    def __repr__(self):
        return f"BigInterval[{mp.nstr(self.lo.value, 10)}, {mp.nstr(self.hi.value, 10)}]"
