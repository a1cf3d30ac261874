"""Wigner 3j symbols from the Racah formula.

``wigner_3j`` accumulates log-factorials in floating point. ``wigner_3j_exact``
runs the same sum in rational arithmetic and returns the sign together with
the exact square of the symbol; it is slow and meant for certification.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial, lgamma, exp

__all__ = ["wigner_3j", "wigner_3j_exact", "twice"]


def twice(x) -> int:
    """Return ``2*x`` as an int, rejecting anything that is not a half-integer."""
    d = 2 * x
    r = round(d)
    if abs(d - r) > 1e-9:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(r)


def _selection(tj, tm):
    """Shared selection rules on doubled arguments; ``None`` means the symbol vanishes."""
    j1, j2, j3 = tj
    m1, m2, m3 = tm
    if min(tj) < 0:
        raise ValueError("angular momenta must be non-negative")
    for j, m in zip(tj, tm):
        if abs(m) > j:
            raise ValueError(f"|m| = {abs(m) / 2} exceeds j = {j / 2}")
        if (j - m) % 2:
            raise ValueError("j and m must be both integer or both half-integer")
    if m1 + m2 + m3 != 0:
        return None
    if j3 > j1 + j2 or j3 < abs(j1 - j2) or (j1 + j2 + j3) % 2:
        return None
    # everything below is an integer count
    a = ((j1 + j2 - j3) // 2, (j1 - j2 + j3) // 2, (-j1 + j2 + j3) // 2, (j1 + j2 + j3) // 2 + 1)
    f = ((j1 + m1) // 2, (j1 - m1) // 2, (j2 + m2) // 2, (j2 - m2) // 2, (j3 + m3) // 2, (j3 - m3) // 2)
    k_lo = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    k_hi = min((j1 + j2 - j3) // 2, (j1 - m1) // 2, (j2 + m2) // 2)
    phase = (j1 - j2 - m3) // 2
    return a, f, k_lo, k_hi, phase


def _denominators(tj, tm, k):
    j1, j2, j3 = tj
    m1, m2, _ = tm
    return (k, (j3 - j2 + m1) // 2 + k, (j3 - j1 - m2) // 2 + k,
            (j1 + j2 - j3) // 2 - k, (j1 - m1) // 2 - k, (j2 + m2) // 2 - k)


def _lf(x: int) -> float:
    return lgamma(x + 1)


@lru_cache(maxsize=None)
def _w3j_doubled(tj, tm) -> float:
    sel = _selection(tj, tm)
    if sel is None:
        return 0.0
    a, f, k_lo, k_hi, phase = sel
    log_pref = 0.5 * (_lf(a[0]) + _lf(a[1]) + _lf(a[2]) - _lf(a[3]) + sum(_lf(x) for x in f))
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        den = sum(_lf(x) for x in _denominators(tj, tm, k))
        term = exp(log_pref - den)
        total += -term if k % 2 else term
    return -total if phase % 2 else total


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """The 3j symbol ``(j1 j2 j3; m1 m2 m3)``; zero whenever a selection rule fails."""
    tj = (twice(j1), twice(j2), twice(j3))
    tm = (twice(m1), twice(m2), twice(m3))
    return _w3j_doubled(tj, tm)


def wigner_3j_exact(j1, j2, j3, m1, m2, m3) -> tuple[int, Fraction]:
    """``(sign, value**2)`` of the 3j symbol in exact rational arithmetic."""
    tj = (twice(j1), twice(j2), twice(j3))
    tm = (twice(m1), twice(m2), twice(m3))
    sel = _selection(tj, tm)
    if sel is None:
        return 0, Fraction(0)
    a, f, k_lo, k_hi, phase = sel
    pref = Fraction(factorial(a[0]) * factorial(a[1]) * factorial(a[2]), factorial(a[3]))
    for x in f:
        pref *= factorial(x)
    s = Fraction(0)
    for k in range(k_lo, k_hi + 1):
        den = 1
        for x in _denominators(tj, tm, k):
            den *= factorial(x)
        s += Fraction((-1) ** k, den)
    if s == 0:
        return 0, Fraction(0)
    sign = (1 if s > 0 else -1) * (-1) ** (phase % 2)
    return sign, pref * s * s
