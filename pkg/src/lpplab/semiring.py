"""Scalar semiring arithmetic for partition functions.

Two semirings are supported: max-plus (last passage percolation) and
sum-product (directed polymers).  The additive identity of max-plus is an
explicit ``BOTTOM`` element rather than a large negative sentinel, so exact
integer computations can never alias it.
"""

from __future__ import annotations

import enum
from fractions import Fraction


class SemiringTag(enum.Enum):
    MAX_PLUS = "max-plus"
    SUM_PRODUCT = "sum-product"


class NumericMode(enum.Enum):
    EXACT_INT = "exact-int"
    EXACT_RATIONAL = "exact-rational"
    FLOAT64 = "float64"


class _Bottom:
    """Additive identity of the max-plus semiring (the value of an empty sum)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"


BOTTOM = _Bottom()

Scalar = object  # int | Fraction | float | _Bottom


class Semiring:
    """Operation bundle for one semiring (mode-independent)."""

    __slots__ = ("tag",)

    def __init__(self, tag: SemiringTag):
        self.tag = tag

    @property
    def zero(self):
        return BOTTOM if self.tag is SemiringTag.MAX_PLUS else 0

    @property
    def one(self):
        return 0 if self.tag is SemiringTag.MAX_PLUS else 1

    def add(self, a, b):
        if self.tag is SemiringTag.MAX_PLUS:
            if a is BOTTOM:
                return b
            if b is BOTTOM:
                return a
            return a if a >= b else b
        return a + b

    def mul(self, a, b):
        if self.tag is SemiringTag.MAX_PLUS:
            if a is BOTTOM or b is BOTTOM:
                return BOTTOM
            return a + b
        return a * b

    def div(self, a, b):
        """``a`` times the multiplicative inverse of ``b``."""
        if self.tag is SemiringTag.MAX_PLUS:
            if a is BOTTOM or b is BOTTOM:
                raise ZeroDivisionError("BOTTOM has no multiplicative inverse")
            return a - b
        if isinstance(a, int) and isinstance(b, int):
            return Fraction(a, b)
        return a / b

    def sum(self, values):
        acc = self.zero
        for v in values:
            acc = self.add(acc, v)
        return acc

    def prod(self, values):
        acc = self.one
        for v in values:
            acc = self.mul(acc, v)
        return acc


MAX_PLUS = Semiring(SemiringTag.MAX_PLUS)
SUM_PRODUCT = Semiring(SemiringTag.SUM_PRODUCT)


def semiring_for(tag: SemiringTag) -> Semiring:
    return MAX_PLUS if tag is SemiringTag.MAX_PLUS else SUM_PRODUCT
