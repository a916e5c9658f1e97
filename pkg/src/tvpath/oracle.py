"""Reference solvers used to validate the path solver.

``solve_oracle_p1`` is an exact chain dynamic program over the data values
(for p = 1 some minimizer only takes values among the f_i).
``solve_oracle_pgt1`` is a cyclic exact block-coordinate minimizer for
p > 1.  Neither shares code with :mod:`tvpath.path`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .energy import check_optimality, energy_G, energy_exact
from .signal_core import Signal

MAX_SWEEPS = 10_000
BISECTION_DEPTH = 200
EXACT_DP_MAX_K = 64


@dataclass(frozen=True)
class OracleResult:
    values: tuple[float, ...]
    energy: float
    iterations: int
    converged: bool


# -- p = 1 -------------------------------------------------------------------

def _dp_exact(signal: Signal, lam: float) -> list[int]:
    V = sorted(set(signal.values))
    Vq = [Fraction(v) for v in V]
    lamq = Fraction(lam)
    fq = [Fraction(x) for x in signal.values]
    Lq = [Fraction(x) for x in signal.lengths]
    m = len(V)

    cost = [lamq * Lq[0] * abs(fq[0] - v) for v in Vq]
    back: list[list[int]] = []
    for i in range(1, signal.k):
        new = []
        arg = []
        for b in range(m):
            best, best_a = None, 0
            for a in range(m):
                c = cost[a] + abs(Vq[b] - Vq[a])
                if best is None or c < best:
                    best, best_a = c, a
            new.append(best + lamq * Lq[i] * abs(fq[i] - Vq[b]))
            arg.append(best_a)
        cost = new
        back.append(arg)
    return _backtrack(cost, back)


def _dp_float(signal: Signal, lam: float) -> list[int]:
    V = np.array(sorted(set(signal.values)))
    f = np.asarray(signal.values)
    L = np.asarray(signal.lengths)
    jump = np.abs(V[None, :] - V[:, None])  # jump[a, b] = |V_b - V_a|
    cost = lam * L[0] * np.abs(f[0] - V)
    back = []
    for i in range(1, signal.k):
        total = cost[:, None] + jump
        arg = np.argmin(total, axis=0)  # first minimum = smallest value
        cost = total[arg, np.arange(len(V))] + lam * L[i] * np.abs(f[i] - V)
        back.append(arg.tolist())
    return _backtrack(cost.tolist(), back)


def _backtrack(cost, back) -> list[int]:
    best = min(cost)
    idx = [next(b for b, c in enumerate(cost) if c == best)]
    for arg in reversed(back):
        idx.append(arg[idx[-1]])
    idx.reverse()
    return idx


def solve_oracle_p1(signal: Signal, lam: float, exact: bool | None = None) -> OracleResult:
    """Global minimizer of G for p = 1 with every entry drawn from the f_i.

    States are (segment, value) pairs with transition cost ``|v - w| +
    lam * L_i |f_i - v|``; ties go to the smaller value.  By default the DP
    runs in rational arithmetic (exact ties) for ``k <= 64`` and in floating
    point above that.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if exact is None:
        exact = signal.k <= EXACT_DP_MAX_K
    idx = _dp_exact(signal, lam) if exact else _dp_float(signal, lam)
    V = sorted(set(signal.values))
    u = tuple(V[j] for j in idx)
    return OracleResult(u, energy_G(signal, u, 1.0, lam).total, 0, True)


def exhaustive_p1(signal: Signal, lam: float) -> tuple[Fraction, tuple[float, ...]]:
    """Exact minimum of G over ``{f_1..f_k}^k`` by enumeration.

    Candidates are screened in floating point and the survivors re-scored
    exactly, so the returned minimum is exact.  Use only for small k.
    """
    V = np.array(sorted(set(signal.values)))
    k = signal.k
    f = np.asarray(signal.values)
    L = np.asarray(signal.lengths)
    grid = np.array(list(itertools.product(range(len(V)), repeat=k)))
    U = V[grid]
    E = np.abs(np.diff(U, axis=1)).sum(axis=1) + lam * (L * np.abs(f - U)).sum(axis=1)
    emin = E.min()
    near = np.nonzero(E <= emin + 1e-9 * max(1.0, abs(emin)))[0]
    best = None
    for r in near:
        cand = tuple(float(x) for x in U[r])
        e = energy_exact(signal, cand, 1, lam)
        if best is None or e < best[0]:
            best = (e, cand)
    return best


# -- p > 1 -------------------------------------------------------------------

def _minimize_run(kinks, Ls, fs, p, lam):
    """Minimize ``sum_kink |x - kink| + lam * sum_j L_j |x - f_j|^p``.

    A kink is returned exactly when 0 lies in its subdifferential, which keeps
    ties exact.  Otherwise the root of the derivative is bracketed between
    consecutive kinks; single-member runs are solved in closed form, longer
    runs by bisection.
    """
    kinks = sorted(kinks)
    plam = p * lam

    def smooth(x):
        return plam * sum(L * _spow(x - f, p - 1) for L, f in zip(Ls, fs))

    lo = min(min(fs), kinks[0] if kinks else math.inf)
    hi = max(max(fs), kinks[-1] if kinks else -math.inf)
    n = len(kinks)
    # below all kinks the kink part contributes -n; each kink passed adds 2
    for j, kappa in enumerate(kinks):
        d = smooth(kappa)
        left = d + (2 * j - n)
        right = d + (2 * (j + 1) - n)
        if left <= 0 <= right:
            return kappa
        if left > 0:
            hi = kappa
            s = 2 * j - n
            break
        lo = kappa
    else:
        s = n
    # on (lo, hi) the derivative is s + smooth(x), strictly increasing
    if len(fs) == 1:
        r = -s / (plam * Ls[0])
        x = fs[0] + _spow(r, 1.0 / (p - 1))
        return min(max(x, lo), hi)
    a, b = lo, hi
    for _ in range(BISECTION_DEPTH):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if s + smooth(mid) > 0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def _spow(x, q):
    if x > 0:
        return x ** q
    if x < 0:
        return -((-x) ** q)
    return 0.0


def _sweep(u, L, f, p, lam):
    """One pass of run moves and prefix/suffix split moves; returns max change."""
    k = len(u)
    plam = p * lam
    change = 0.0
    i = 0
    while i < k:
        j = i
        while j + 1 < k and u[j + 1] == u[i]:
            j += 1
        kinks = []
        if i > 0:
            kinks.append(u[i - 1])
        if j < k - 1:
            kinks.append(u[j + 1])
        x = _minimize_run(kinks, L[i:j + 1], f[i:j + 1], p, lam)
        change = max(change, abs(x - u[i]))
        for m in range(i, j + 1):
            u[m] = x

        # after landing on a neighbour the run is no longer maximal; the next
        # sweep treats the larger run
        if j > i and (i == 0 or u[i - 1] != x) and (j == k - 1 or u[j + 1] != x):
            c = u[i]
            g = [plam * L[m] * _spow(c - f[m], p - 1) for m in range(i, j + 1)]
            s_left = math.copysign(1.0, c - u[i - 1]) if i > 0 else 0.0
            s_right = math.copysign(1.0, u[j + 1] - c) if j < k - 1 else 0.0
            acc = s_left
            split = None
            for m in range(i, j):
                acc += g[m - i]
                if abs(acc) > 1.0 + 1e-13:
                    split = ("prefix", m)
                    break
            if split is None:
                acc = -s_right
                for m in range(j, i, -1):
                    acc += g[m - i]
                    if abs(acc) > 1.0 + 1e-13:
                        split = ("suffix", m)
                        break
            if split is not None:
                kind, m = split
                if kind == "prefix":
                    lo_, hi_ = i, m
                    kinks = [c] + ([u[i - 1]] if i > 0 else [])
                else:
                    lo_, hi_ = m, j
                    kinks = [c] + ([u[j + 1]] if j < k - 1 else [])
                x = _minimize_run(kinks, L[lo_:hi_ + 1], f[lo_:hi_ + 1], p, lam)
                change = max(change, abs(x - c))
                for q in range(lo_, hi_ + 1):
                    u[q] = x
        i = j + 1
    return change


def solve_oracle_pgt1(signal: Signal, p: float, lam: float, tol: float = 1e-10,
                      max_sweeps: int = MAX_SWEEPS) -> OracleResult:
    """Minimize G for p > 1 by cyclic exact block-coordinate moves.

    Each move takes a run of equal entries (a maximal run, or a prefix or
    suffix of one whose partial subgradient sum shows that splitting pays)
    and sets it to the exact minimizer of the convex one-dimensional slice
    of G.  Plain single-coordinate moves stall at ties of the TV term; the
    run and split moves are exactly the directions needed to certify
    optimality.  Iterates lie in ``[min f, max f]`` throughout.
    """
    if not p > 1:
        raise ValueError("solve_oracle_pgt1 needs p > 1")
    if not lam > 0 or not tol > 0:
        raise ValueError("lambda and tol must be positive")
    L = list(signal.lengths)
    f = list(signal.values)
    u = list(f)
    for it in range(1, max_sweeps + 1):
        change = _sweep(u, L, f, p, lam)
        if change < tol and check_optimality(signal, u, p, lam, tol=10 * tol):
            vals = tuple(u)
            return OracleResult(vals, energy_G(signal, vals, p, lam).total, it, True)
    vals = tuple(u)
    return OracleResult(vals, energy_G(signal, vals, p, lam).total, max_sweeps, False)
