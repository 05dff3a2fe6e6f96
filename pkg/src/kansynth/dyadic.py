"""Exact dyadic rationals ``m / 2**r``."""

from dataclasses import dataclass
from fractions import Fraction
import math
import re


@dataclass(frozen=True, order=False)
class Dyadic:
    """The rational ``m / 2**r`` in canonical form (``m`` odd or ``r == 0``)."""

    m: int
    r: int = 0

    def __post_init__(self):
        m, r = int(self.m), int(self.r)
        if r < 0:
            raise ValueError(f"dyadic exponent must be nonnegative, got {r}")
        if m == 0:
            r = 0
        else:
            tz = min((m & -m).bit_length() - 1, r)
            m >>= tz
            r -= tz
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_fraction(cls, q):
        q = Fraction(q)
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not dyadic")
        return cls(q.numerator, den.bit_length() - 1)

    @classmethod
    def from_float(cls, x):
        """Exact conversion; every finite binary float is dyadic."""
        if not math.isfinite(x):
            raise ValueError(f"cannot convert {x!r} to a dyadic")
        return cls.from_fraction(Fraction(float(x)))

    @classmethod
    def coerce(cls, x):
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.from_fraction(x)
        if isinstance(x, str):
            return cls.parse(x)
        return cls.from_float(float(x))

    @classmethod
    def parse(cls, text):
        """Parse ``"m/2^r"``, ``"m/den"``, an integer or a decimal literal."""
        text = text.strip()
        hit = re.fullmatch(r"([+-]?\d+)\s*/\s*2\s*\^\s*(\d+)", text)
        if hit:
            return cls(int(hit.group(1)), int(hit.group(2)))
        return cls.from_fraction(Fraction(text))

    @property
    def fraction(self):
        return Fraction(self.m, 1 << self.r)

    def __float__(self):
        return math.ldexp(self.m, -self.r)

    @property
    def exact_in_float(self):
        return abs(self.m) < 2**53

    def __str__(self):
        return str(self.m) if self.r == 0 else f"{self.m}/2^{self.r}"


def round_to_dyadic(x, r):
    """Nearest ``m / 2**r`` to ``x`` (ties to even), as a float."""
    return math.ldexp(round(math.ldexp(float(x), r)), -r)
