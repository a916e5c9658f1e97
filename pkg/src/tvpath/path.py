"""Continuation in lambda for p > 1.

For large lambda the minimizer sits next to f with the same ordering
between neighbours.  As lambda decreases, adjacent group values move
monotonically towards each other and fuse at critical values; once fused
they stay fused.  Between two events each group ``g`` has a fixed
neighbour-order configuration and its value solves

    a_g + p * lam * sum_{j in g} L_j * sign(u - f_j) |u - f_j|^(p-1) = 0,

with ``a_g = s_left - s_right`` the TV contribution.  For p = 2 this is
``u = M_g + c_g / lam``.  The path is the sequence of partitions together
with the event values of lambda at which they change.
"""

from __future__ import annotations

import bisect
import functools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.optimize import brentq

from .energy import check_optimality, signed_power
from .signal_core import Signal, SolutionVector, SolverParams, make_signal

log = logging.getLogger(__name__)

_MAX_DOUBLINGS = 2000
_RTOL = 4 * 2.0 ** -52


class PathSolverError(RuntimeError):
    """A numerical failure or a violated optimality certificate."""


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class Group:
    """A run of segments ``lo..hi`` (0-based, inclusive) sharing one value.

    ``s_left = sign(u_g - u_{g-1})`` and ``s_right = sign(u_{g+1} - u_g)``,
    0 at the ends of the domain.
    """

    lo: int
    hi: int
    lengths: tuple[float, ...]
    values: tuple[float, ...]
    s_left: int
    s_right: int

    @property
    def a(self) -> int:
        return self.s_left - self.s_right

    @property
    def W(self) -> float:
        return math.fsum(self.lengths)

    @property
    def M(self) -> float:
        if len(self.values) == 1:
            return self.values[0]
        return math.fsum(L * f for L, f in zip(self.lengths, self.values)) / self.W

    @property
    def c(self) -> float:
        """p = 2 slope: ``u(lam) = M + c / lam``."""
        return (self.s_right - self.s_left) / (2.0 * self.W)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def with_signs(self, s_left: int, s_right: int) -> "Group":
        return Group(self.lo, self.hi, self.lengths, self.values, s_left, s_right)


def make_group(signal: Signal, lo: int, hi: int, s_left: int, s_right: int) -> Group:
    return Group(lo, hi, signal.lengths[lo:hi + 1], signal.values[lo:hi + 1],
                 s_left, s_right)


def group_value(group: Group, p: float, lam: float, tol: float = 1e-12) -> float:
    """Root of the group's Euler-Lagrange equation at ``lam``.

    The left-hand side is strictly increasing in u, so the root is unique.
    p = 2 and single segments have closed forms; otherwise the root is
    bracketed in ``[min f - D, max f + D]`` with
    ``D = (|a| / (p lam W))^(1/(p-1))``.
    """
    a = group.a
    if p == 2:
        return group.M + group.c / lam
    if len(group.values) == 1:
        if a == 0:
            return group.values[0]
        return group.values[0] - _sign(a) * (abs(a) / (p * lam * group.lengths[0])) ** (1.0 / (p - 1))
    Ls, fs = group.lengths, group.values
    q = p - 1.0
    plam = p * lam

    def el(u):
        return a + plam * math.fsum(L * signed_power(u - f, q) for L, f in zip(Ls, fs))

    d = (abs(a) / (plam * group.W)) ** (1.0 / q) if a else 0.0
    lo, hi = min(fs) - d, max(fs) + d
    flo, fhi = el(lo), el(hi)
    if flo >= 0:
        return lo
    if fhi <= 0:
        return hi
    return brentq(el, lo, hi, xtol=tol, rtol=_RTOL, maxiter=500)


def group_values(groups: Sequence[Group], p: float, lam: float, tol: float = 1e-12) -> list[float]:
    return [group_value(g, p, lam, tol) for g in groups]


def expand(groups: Sequence[Group], gvals: Sequence[float], k: int) -> tuple[float, ...]:
    out = [0.0] * k
    for g, val in zip(groups, gvals):
        for i in range(g.lo, g.hi + 1):
            out[i] = val
    return tuple(out)


@dataclass(frozen=True)
class PathSegment:
    """Groups valid for lambda in ``(lambda_lo, lambda_hi]``."""

    lambda_lo: float
    lambda_hi: float
    groups: tuple[Group, ...]

    def contains(self, lam: float) -> bool:
        return self.lambda_lo < lam <= self.lambda_hi

    def values(self, p: float, lam: float, k: int, tol: float = 1e-12) -> tuple[float, ...]:
        return expand(self.groups, group_values(self.groups, p, lam, tol), k)


@dataclass(frozen=True)
class EventRecord:
    """Adjacent group pairs (indices into the pre-event partition) that fuse."""

    lambda_star: float
    merges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SolutionPath:
    signal: Signal
    p: float
    segments: tuple[PathSegment, ...]  # decreasing lambda
    events: tuple[EventRecord, ...]
    terminal_value: float
    lambda_bar: float  # constant-regime bound from the closed-form estimate
    lambda_const: float  # largest lambda at which the computed path is constant
    lambda0: float
    tol_value: float = 1e-12

    def segment_at(self, lam: float) -> PathSegment:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        # first segment (in decreasing order) with lambda_lo < lam
        los = [-s.lambda_lo for s in self.segments]
        return self.segments[bisect.bisect_right(los, -lam)]

    def evaluate(self, lam: float) -> SolutionVector:
        seg = self.segment_at(lam)
        vals = seg.values(self.p, lam, self.signal.k, self.tol_value)
        return SolutionVector(vals, float(lam), self.p)

    def partition_at(self, lam: float) -> tuple[tuple[int, int], ...]:
        return tuple((g.lo, g.hi) for g in self.segment_at(lam).groups)


# -- pieces of the continuation ---------------------------------------------

def constant_solution(signal: Signal, p: float) -> tuple[float, float]:
    """Value of the constant regime and the lambda bound below which it holds.

    The value minimizes ``sum L_i |c - f_i|^p`` (weighted mean for p = 2,
    lowest weighted median for p = 1).  The bound is
    ``1 / (p (M - m)^(p-1) max L)`` for p > 1 and
    ``min |f_i - f_{i-1}| / (k max L (M - m))`` for p = 1.
    """
    if signal.k == 1:
        return signal.values[0], math.inf
    spread = signal.fmax - signal.fmin
    Lmax = max(signal.lengths)
    if p == 1:
        pairs = sorted(zip(signal.values, signal.lengths))
        half = 0.5 * signal.total_length
        acc = 0.0
        c = pairs[-1][0]
        for f, L in pairs:
            acc += L
            if acc >= half:
                c = f
                break
        jump = min(abs(b - a) for a, b in zip(signal.values, signal.values[1:]))
        return c, jump / (signal.k * Lmax * spread)
    whole = make_group(signal, 0, signal.k - 1, 0, 0)
    c = group_value(whole, p, 1.0, 1e-15)
    return c, 1.0 / (p * spread ** (p - 1) * Lmax)


def safe_lambda_floor(signal: Signal, p: float) -> float:
    """A lambda below which the minimizer is guaranteed constant.

    The lowest group of a non-constant minimizer needs
    ``p lam sum_g L_j (u - f_j)^(p-1) >= 1``, so ``lam >= 1 / (p (M-m)^(p-1) W_g)``
    with ``W_g`` less than the total length.
    """
    spread = signal.fmax - signal.fmin
    return 1.0 / (p * spread ** (p - 1) * signal.total_length)


def stage1_partition(signal: Signal) -> tuple[Group, ...]:
    k = signal.k
    f = signal.values
    out = []
    for i in range(k):
        sl = _sign(f[i] - f[i - 1]) if i > 0 else 0
        sr = _sign(f[i + 1] - f[i]) if i < k - 1 else 0
        out.append(make_group(signal, i, i, sl, sr))
    return tuple(out)


def ordering_consistent(groups: Sequence[Group], gvals: Sequence[float]) -> bool:
    return all(_sign(gvals[g + 1] - gvals[g]) == groups[g].s_right
               for g in range(len(groups) - 1))


def stage1_valid(signal: Signal, p: float, lam: float) -> bool:
    """Whether the large-lambda formulas keep the adjacent ordering of f at ``lam``."""
    groups = stage1_partition(signal)
    return ordering_consistent(groups, group_values(groups, p, lam))


def initial_partition_and_lambda(signal: Signal, p: float,
                                 params: Optional[SolverParams] = None):
    """Singleton groups signed by f, and a lambda where they are valid.

    Doubling starts from ``max(1, 1/lambda_bar)``; the first valid value is
    returned.
    """
    if not p > 1:
        raise ValueError("path solver needs p > 1")
    if signal.k < 2:
        raise ValueError("need at least two segments")
    groups = stage1_partition(signal)
    _, lam_bar = constant_solution(signal, p)
    lam = max(1.0, 1.0 / lam_bar)
    cap = params.lambda_max if params and params.lambda_max else 1e300
    for _ in range(_MAX_DOUBLINGS):
        if ordering_consistent(groups, group_values(groups, p, lam)):
            return groups, lam
        if lam >= cap:
            break
        lam = min(2.0 * lam, cap)
    raise PathSolverError("no valid large-lambda start found")


def merge_groups(groups: Sequence[Group], pairs: Sequence[tuple[int, int]]) -> tuple[Group, ...]:
    """Fuse adjacent pairs ``(g, g+1)``; chained pairs collapse into one group.

    The outer signs of each fused block are inherited from its end groups.
    """
    n = len(groups)
    join = [False] * max(n - 1, 0)
    for g, h in pairs:
        if h != g + 1 or not (0 <= g < n - 1):
            raise ValueError(f"groups {g} and {h} are not adjacent")
        join[g] = True
    out = []
    g = 0
    while g < n:
        h = g
        while h < n - 1 and join[h]:
            h += 1
        first, last = groups[g], groups[h]
        if g == h:
            out.append(first)
        else:
            lengths = sum((grp.lengths for grp in groups[g:h + 1]), ())
            values = sum((grp.values for grp in groups[g:h + 1]), ())
            out.append(Group(first.lo, last.hi, lengths, values, first.s_left, last.s_right))
        g = h + 1
    return tuple(out)


def _gaps(groups, p, lam, tol):
    vals = group_values(groups, p, lam, tol)
    return [groups[g].s_right * (vals[g + 1] - vals[g]) for g in range(len(groups) - 1)]


def _next_event_p2(groups, lam_hi, tol_lambda):
    cands = []
    for g in range(len(groups) - 1):
        left, right = groups[g], groups[g + 1]
        dM = right.M - left.M
        dc = right.c - left.c
        if dM == 0 or dc == 0:
            continue
        lam = -dc / dM
        if lam > 0:
            cands.append((min(lam, lam_hi), g))
    if not cands:
        return None
    lam_star = max(c for c, _ in cands)
    cut = lam_star * (1.0 - tol_lambda)
    merges = tuple((g, g + 1) for c, g in sorted(cands, key=lambda t: t[1]) if c >= cut)
    return EventRecord(lam_star, merges)


def _next_event_general(groups, p, start, tol_lambda, floor, tol_value):
    hi = start
    gaps_hi = _gaps(groups, p, hi, tol_value)
    if any(d <= 0 for d in gaps_hi):
        lo, gaps_lo = hi, gaps_hi
    else:
        while True:
            lo = 0.5 * hi
            if lo < floor:
                return None
            gaps_lo = _gaps(groups, p, lo, tol_value)
            if any(d <= 0 for d in gaps_lo):
                break
            hi, gaps_hi = lo, gaps_lo

    # gaps shrink monotonically as lambda decreases, so each crossing pair
    # has exactly one root in [lo, hi]
    cands = []
    for g, d in enumerate(gaps_lo):
        if d > 0:
            continue
        if gaps_hi[g] <= 0:
            cands.append((hi, g))
            continue
        left, right = groups[g], groups[g + 1]
        s = left.s_right

        def gap(lam, left=left, right=right, s=s):
            return s * (group_value(right, p, lam, tol_value) - group_value(left, p, lam, tol_value))

        root = brentq(gap, lo, hi, xtol=1e-300, rtol=max(tol_lambda, _RTOL), maxiter=500)
        cands.append((root, g))
    lam_star = max(c for c, _ in cands)
    probe = _gaps(groups, p, lam_star * (1.0 - tol_lambda), tol_value)
    hit = {g for c, g in cands if c >= lam_star * (1.0 - tol_lambda)}
    hit |= {g for g, d in enumerate(probe) if d <= 0}
    return EventRecord(lam_star, tuple((g, g + 1) for g in sorted(hit)))


def next_event(segment: PathSegment, p: float, tol_lambda: float = 1e-10,
               start: Optional[float] = None, floor: Optional[float] = None,
               tol_value: float = 1e-12) -> Optional[EventRecord]:
    """Largest lambda below the segment start where adjacent groups meet.

    Returns ``None`` when no pair meets above ``floor`` (or the segment has
    a single group).  For p = 2 every pair crossing is solved exactly; for
    other p the scan halves lambda until some gap closes and each closing
    pair is then located by bracketed root finding.  Pairs within
    ``tol_lambda`` (relative) of the first crossing fuse in the same event.
    """
    groups = segment.groups
    if len(groups) < 2:
        return None
    lam_hi = segment.lambda_hi if start is None else start
    if not math.isfinite(lam_hi):
        raise ValueError("an infinite segment needs an explicit start")
    if p == 2:
        ev = _next_event_p2(groups, lam_hi, tol_lambda)
        if ev is not None and floor is not None and ev.lambda_star < floor:
            return None
        return ev
    return _next_event_general(groups, p, lam_hi, tol_lambda, floor or 0.0, tol_value)


def _verify(signal, groups, p, lam, params):
    vals = expand(groups, group_values(groups, p, lam, params.tol_value), signal.k)
    rep = check_optimality(signal, vals, p, lam, tol=params.tol_check)
    if not rep.ok:
        raise PathSolverError(
            f"optimality check failed at lambda={lam!r}: residual {rep.worst:.3g} "
            f"at edge {rep.edge}")


def _log_sign_flips(groups, lam_lo, lam_hi):
    # lambda values where a p = 2 group value crosses one of its data values;
    # these do not change the formulas
    for g in groups:
        if g.c == 0:
            continue
        for f in g.values:
            if f != g.M:
                mu = -g.c / (g.M - f)
                if lam_lo < mu < lam_hi:
                    log.debug("group %d-%d crosses f=%r at lambda=%r", g.lo + 1, g.hi + 1, f, mu)


def compute_path(signal: Signal, p: float, params: Optional[SolverParams] = None) -> SolutionPath:
    """The full solution path from lambda = infinity down to 0."""
    if not p > 1:
        raise ValueError("path solver needs p > 1")
    params = params or SolverParams(p=p)
    c_term, lam_bar = constant_solution(signal, p)
    if signal.k == 1:
        g = make_group(signal, 0, 0, 0, 0)
        seg = PathSegment(0.0, math.inf, (g,))
        return SolutionPath(signal, p, (seg,), (), c_term, lam_bar, math.inf, math.inf,
                            params.tol_value)

    groups, lam0 = initial_partition_and_lambda(signal, p, params)
    floor = params.lambda_min or 0.5 * safe_lambda_floor(signal, p)
    segments = []
    events = []
    hi = math.inf
    start = lam0
    while len(groups) > 1:
        ev = next_event(PathSegment(0.0, hi, groups), p, params.tol_lambda,
                        start=start, floor=floor, tol_value=params.tol_value)
        if ev is None:
            raise PathSolverError(f"no merge event above lambda={floor!r} with {len(groups)} groups")
        if ev.lambda_star >= hi:
            raise PathSolverError("event does not lie below the segment start")
        # probe strictly inside (lambda_star, hi]; the first segment up to lam0
        _verify(signal, groups, p, math.sqrt(ev.lambda_star * min(hi, lam0)), params)
        segments.append(PathSegment(ev.lambda_star, hi, groups))
        if p == 2 and log.isEnabledFor(logging.DEBUG):
            _log_sign_flips(groups, ev.lambda_star, hi)
        events.append(ev)
        groups = merge_groups(groups, ev.merges)
        hi = start = ev.lambda_star
    _verify(signal, groups, p, 0.5 * hi, params)
    segments.append(PathSegment(0.0, hi, groups))
    return SolutionPath(signal, p, tuple(segments), tuple(events), c_term, lam_bar, hi, lam0,
                        params.tol_value)


@functools.lru_cache(maxsize=256)
def _cached_path(signal: Signal, p: float, params: SolverParams) -> SolutionPath:
    return compute_path(signal, p, params)


def solve_at(signal: Signal, p: float, lam: float,
             params: Optional[SolverParams] = None) -> SolutionVector:
    """Exact minimizer at one lambda, read off the (cached) solution path."""
    if not p > 1:
        raise ValueError("path solver needs p > 1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    params = params or SolverParams(p=p)
    return _cached_path(signal, float(p), params).evaluate(lam)


# -- JSON form ----------------------------------------------------------------

PATH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["p", "segments", "events", "terminal_value"],
    "properties": {
        "p": {"type": "number", "exclusiveMinimum": 1},
        "signal": {
            "type": "object",
            "required": ["lengths", "values"],
            "properties": {
                "lengths": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                            "minItems": 1},
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
        "segments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["lambda_lo", "lambda_hi", "groups"],
                "properties": {
                    "lambda_lo": {"type": "number", "minimum": 0},
                    "lambda_hi": {"type": ["number", "null"]},
                    "groups": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["range", "a"],
                            "properties": {
                                "range": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                          "minItems": 2, "maxItems": 2},
                                "a": {"type": "integer", "minimum": -2, "maximum": 2},
                                "signs": {"type": "array",
                                          "items": {"type": "integer", "minimum": -1, "maximum": 1},
                                          "minItems": 2, "maxItems": 2},
                                "M": {"type": "number"},
                                "c": {"type": "number"},
                            },
                        },
                    },
                },
            },
        },
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lambda", "merges"],
                "properties": {
                    "lambda": {"type": "number", "exclusiveMinimum": 0},
                    "merges": {"type": "array", "minItems": 1,
                               "items": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                         "minItems": 2, "maxItems": 2}},
                },
            },
        },
        "terminal_value": {"type": "number"},
        "lambda_bar": {"type": ["number", "null"]},
        "lambda0": {"type": ["number", "null"]},
    },
}


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def path_to_dict(path: SolutionPath) -> dict:
    """Serializable form; group ranges and merge indices are 1-based."""
    segs = []
    for seg in path.segments:
        gs = []
        for g in seg.groups:
            d = {"range": [g.lo + 1, g.hi + 1], "a": g.a, "signs": [g.s_left, g.s_right]}
            if path.p == 2:
                d["M"] = g.M
                d["c"] = g.c
            gs.append(d)
        segs.append({"lambda_lo": seg.lambda_lo, "lambda_hi": _finite_or_none(seg.lambda_hi),
                     "groups": gs})
    return {
        "p": path.p,
        "signal": path.signal.to_dict(),
        "segments": segs,
        "events": [{"lambda": ev.lambda_star,
                    "merges": [[g + 1, h + 1] for g, h in ev.merges]} for ev in path.events],
        "terminal_value": path.terminal_value,
        "lambda_bar": _finite_or_none(path.lambda_bar),
        "lambda0": _finite_or_none(path.lambda0),
    }


def path_from_dict(d: dict) -> SolutionPath:
    """Rebuild a path written by :func:`path_to_dict` (validates the schema)."""
    import jsonschema

    jsonschema.validate(d, PATH_SCHEMA)
    if "signal" not in d:
        raise ValueError("path JSON lacks the signal needed for evaluation")
    signal = make_signal(d["signal"]["lengths"], d["signal"]["values"])
    p = float(d["p"])
    segments = []
    for sd in d["segments"]:
        groups = []
        for gd in sd["groups"]:
            lo, hi = gd["range"][0] - 1, gd["range"][1] - 1
            if "signs" in gd:
                sl, sr = gd["signs"]
            else:
                sl, sr = _signs_from_a(gd["a"], lo == 0, hi == signal.k - 1)
            groups.append(make_group(signal, lo, hi, sl, sr))
        hi = sd["lambda_hi"]
        segments.append(PathSegment(float(sd["lambda_lo"]), math.inf if hi is None else float(hi),
                                    tuple(groups)))
    events = tuple(EventRecord(float(e["lambda"]), tuple((g - 1, h - 1) for g, h in e["merges"]))
                   for e in d["events"])
    lam_bar = d.get("lambda_bar")
    lam0 = d.get("lambda0")
    lam_const = segments[-1].lambda_hi
    return SolutionPath(signal, p, tuple(segments), events, float(d["terminal_value"]),
                        math.inf if lam_bar is None else float(lam_bar), lam_const,
                        math.inf if lam0 is None else float(lam0))


def _signs_from_a(a, first, last):
    # only a matters for the group value; pick any sign pair realizing it
    if first and last:
        return 0, 0
    if first:
        return 0, -a
    if last:
        return a, 0
    return {2: (1, -1), -2: (-1, 1)}.get(a, (1, 1))
