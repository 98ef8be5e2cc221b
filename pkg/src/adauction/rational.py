"""Exact-number helpers shared by every module.

All money, click and probability quantities are held as ``Fraction``.
Floats are accepted on input through their shortest decimal repr so that
``0.1`` becomes ``1/10`` rather than a binary approximation.
"""
from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, str, Fraction, float, Decimal]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x: Number) -> Fraction:
    """Convert ``x`` to an exact ``Fraction``.

    Strings may be integers, decimals (``"2.60"``) or ratios (``"21/25"``).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as an exact number")


def fmt(x: Fraction, decimals: int | None = None) -> str:
    """Canonical text form: ``"num/den"`` in lowest terms, or ``"n"`` for integers.

    With ``decimals`` the value is rounded half-even to that many places instead.
    """
    x = Fraction(x)
    if decimals is not None:
        q = Decimal(x.numerator) / Decimal(x.denominator)
        return str(q.quantize(Decimal(1).scaleb(-decimals)))
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
