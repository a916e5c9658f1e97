"""The discrete energy

    G(v) = sum_{i>=2} |v_i - v_{i-1}| + lam * sum_i L_i |f_i - v_i|^p

and a first-order optimality certificate for p > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .signal_core import Signal, SignalError, SolutionVector


@dataclass(frozen=True)
class EnergyBreakdown:
    tv: float
    fidelity: float
    lam: float

    @property
    def total(self) -> float:
        return self.tv + self.lam * self.fidelity

    def to_dict(self) -> dict:
        return {"tv": self.tv, "fidelity": self.fidelity, "total": self.total}


@dataclass(frozen=True)
class OptimalityReport:
    """Outcome of :func:`check_optimality`.

    ``worst`` is the largest residual found and ``edge`` the 0-based edge
    (between entries ``edge`` and ``edge + 1``) where it occurred; ``edge ==
    k - 1`` denotes the global balance condition.
    """

    ok: bool
    worst: float
    edge: int

    def __bool__(self) -> bool:
        return self.ok


def _values(v) -> tuple[float, ...]:
    if isinstance(v, SolutionVector):
        return v.values
    return tuple(float(x) for x in v)


def _aligned(signal: Signal, v) -> tuple[float, ...]:
    vals = _values(v)
    if len(vals) != signal.k:
        raise SignalError(f"expected {signal.k} values, got {len(vals)}")
    return vals


def signed_power(x: float, q: float) -> float:
    """``sign(x) * |x|**q``; zero at zero for any ``q > 0``."""
    if x > 0:
        return x ** q
    if x < 0:
        return -((-x) ** q)
    return 0.0


def total_variation(v) -> float:
    vals = _values(v)
    if not vals:
        raise ValueError("empty vector")
    if not all(math.isfinite(x) for x in vals):
        raise ValueError("non-finite entry")
    return math.fsum(abs(b - a) for a, b in zip(vals, vals[1:]))


def fidelity(signal: Signal, v, p: float) -> float:
    vals = _aligned(signal, v)
    return math.fsum(L * abs(f - u) ** p
                     for L, f, u in zip(signal.lengths, signal.values, vals))


def energy_G(signal: Signal, v, p: float, lam: float) -> EnergyBreakdown:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    vals = _aligned(signal, v)
    return EnergyBreakdown(total_variation(vals), fidelity(signal, vals, p), float(lam))


def energy_exact(signal: Signal, v, p: int, lam: float) -> Fraction:
    """G evaluated in rational arithmetic; ``p`` must be a positive integer.

    Floats are exact binary rationals, so this gives the true value of G at
    the given inputs, free of summation-order rounding.
    """
    if int(p) != p or p < 1:
        raise ValueError("exact energy requires integer p >= 1")
    p = int(p)
    vals = [Fraction(x) for x in _aligned(signal, v)]
    f = [Fraction(x) for x in signal.values]
    L = [Fraction(x) for x in signal.lengths]
    tv = sum((abs(b - a) for a, b in zip(vals, vals[1:])), Fraction(0))
    fid = sum((Li * abs(fi - ui) ** p for Li, fi, ui in zip(L, f, vals)), Fraction(0))
    return tv + Fraction(lam) * fid


def fidelity_gradient(signal: Signal, v, p: float, lam: float) -> list[float]:
    """Gradient of ``lam * sum L_i |f_i - v_i|^p`` (requires p > 1)."""
    vals = _aligned(signal, v)
    return [p * lam * L * signed_power(u - f, p - 1)
            for L, f, u in zip(signal.lengths, signal.values, vals)]


def check_optimality(signal: Signal, v, p: float, lam: float, tol: float = 1e-7,
                     tie_tol: float = 1e-9, ulps: int = 2) -> OptimalityReport:
    """Certify ``0 in dG(v)`` up to ``tol``.

    Write ``t_i`` for the subgradient chosen for ``|v_{i+1} - v_i|``.
    Stationarity forces ``t_i = g_1 + ... + g_i`` with ``g`` the fidelity
    gradient, and the balance over the whole vector must vanish.  Edges with
    ``|v_{i+1} - v_i| <= tie_tol`` are ties and only need ``|t_i| <= 1``;
    every other edge needs ``t_i = sign(v_{i+1} - v_i)``.  Summing over a run
    of tied entries gives the aggregated group condition, and the partial
    sums inside the run rule out profitable splits, so the test is exact.

    Each ``g_i`` is taken as the interval spanned by moving ``v_i`` by
    ``ulps`` units in the last place.  Close to ``f_i`` with ``p < 2`` the
    gradient is steep enough that a single ulp moves it by more than any
    useful ``tol``.
    """
    if not p > 1:
        raise ValueError("optimality certificate needs p > 1")
    vals = _aligned(signal, v)
    c = p * lam
    g_lo, g_hi = [], []
    for L, f, u in zip(signal.lengths, signal.values, vals):
        du = ulps * math.ulp(u)
        g_lo.append(c * L * signed_power(u - du - f, p - 1))
        g_hi.append(c * L * signed_power(u + du - f, p - 1))

    worst = 0.0
    where = 0
    lo = hi = 0.0
    for i in range(signal.k - 1):
        lo += g_lo[i]
        hi += g_hi[i]
        d = vals[i + 1] - vals[i]
        if abs(d) <= tie_tol:
            r = max(0.0, lo - 1.0, -1.0 - hi)
            lo, hi = max(lo, -1.0), min(hi, 1.0)
            if lo > hi:
                lo = hi = math.copysign(1.0, lo)
        else:
            s = math.copysign(1.0, d)
            r = max(0.0, lo - s, s - hi)
            # restart from the exact sign so residuals do not accumulate
            lo = hi = s
        if r > worst:
            worst, where = r, i
    lo += g_lo[-1]
    hi += g_hi[-1]
    r = max(0.0, lo, -hi)
    if r > worst:
        worst, where = r, signal.k - 1
    return OptimalityReport(bool(worst <= tol), float(worst), where)
