"""Exact minimizers for two-segment signals.

Both solvers work in the orientation ``f1 < f2`` and reflect the data
(``f -> -f``, ``u -> -u``) otherwise; G is invariant under that map.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class K2Solution:
    u1: float
    u2: float
    merged: bool
    unique: bool
    lambda_threshold: float
    degenerate: bool = False

    @property
    def values(self) -> tuple[float, float]:
        return (self.u1, self.u2)


def lambda_threshold(p: float, L1: float, L2: float, f1: float, f2: float) -> float:
    """Largest lambda at which the two-segment minimizer is constant.

    ``(1/p) (L1^q + L2^q)^(p-1) / (L1 L2 |f2 - f1|^(p-1))`` with
    ``q = 1/(p-1)``.
    """
    if not p > 1:
        raise ValueError("lambda_threshold needs p > 1")
    if L1 <= 0 or L2 <= 0:
        raise ValueError("lengths must be positive")
    if f1 == f2:
        raise ValueError("threshold undefined for f1 == f2")
    q = 1.0 / (p - 1.0)
    # factor out max(L)^q: L^q overflows for p close to 1
    big = max(L1, L2)
    s = (L1 / big) ** q + (L2 / big) ** q
    return big * s ** (p - 1.0) / (p * L1 * L2 * abs(f2 - f1) ** (p - 1.0))


def lambda_threshold_p1(L1: float, L2: float) -> float:
    """p = 1 threshold: ``1/L2`` if ``L1 > L2``, else ``1/L1``."""
    if L1 <= 0 or L2 <= 0:
        raise ValueError("lengths must be positive")
    return 1.0 / L2 if L1 > L2 else 1.0 / L1


def _reflect(sol: K2Solution) -> K2Solution:
    return K2Solution(-sol.u1, -sol.u2, sol.merged, sol.unique,
                      sol.lambda_threshold, sol.degenerate)


def merged_value(p: float, L1: float, L2: float, f1: float, f2: float) -> float:
    """Weighted combination with weights ``L_i^(1/(p-1))``."""
    q = 1.0 / (p - 1.0)
    big = max(L1, L2)
    w1 = (L1 / big) ** q
    w2 = (L2 / big) ** q
    return (w1 * f1 + w2 * f2) / (w1 + w2)


def solve_k2(p: float, lam: float, L1: float, L2: float, f1: float, f2: float) -> K2Solution:
    if not p > 1:
        raise ValueError("solve_k2 needs p > 1; use solve_k2_p1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if f1 == f2:
        return K2Solution(f1, f1, True, True, float("inf"), degenerate=True)
    if f1 > f2:
        return _reflect(solve_k2(p, lam, L1, L2, -f1, -f2))

    thr = lambda_threshold(p, L1, L2, f1, f2)
    if lam <= thr:
        c = merged_value(p, L1, L2, f1, f2)
        return K2Solution(c, c, True, True, thr)
    q = 1.0 / (p - 1.0)
    u1 = f1 + (1.0 / (p * lam * L1)) ** q
    u2 = f2 - (1.0 / (p * lam * L2)) ** q
    return K2Solution(u1, u2, False, True, thr)


def solve_k2_p1(lam: float, L1: float, L2: float, f1: float, f2: float) -> K2Solution:
    """Two-segment minimizer for p = 1.

    Below the threshold the solution collapses onto the value of the longer
    segment.  At the threshold (and below it when ``L1 == L2``) the minimizer
    is not unique; the constant representative is returned, using the
    smaller data value when the lengths tie.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if f1 == f2:
        return K2Solution(f1, f1, True, True, float("inf"), degenerate=True)

    thr = lambda_threshold_p1(L1, L2)
    # thr = 1/min(L) is rarely a float; decide the side exactly on the inputs
    side = Fraction(lam) * Fraction(min(L1, L2)) - 1
    if side > 0:
        return K2Solution(f1, f2, False, True, thr)
    if L1 > L2:
        c = f1
    elif L1 < L2:
        c = f2
    else:
        c = min(f1, f2)
    unique = side < 0 and L1 != L2
    return K2Solution(c, c, True, unique, thr)
