"""Piecewise constant signals, solution vectors and solver parameters.

A signal is stored in canonical form: adjacent segments never share a
value.  Everything else in the package assumes this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence


class SignalError(ValueError):
    """Raised for malformed signal data."""


@dataclass(frozen=True)
class Signal:
    """Step function ``f(x) = sum_i f_i * chi_(x_{i-1}, x_i)(x)``.

    Use :func:`make_signal` rather than the constructor so the data gets
    validated and canonicalized.
    """

    lengths: tuple[float, ...]
    values: tuple[float, ...]
    x0: float = 0.0

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def fmin(self) -> float:
        return min(self.values)

    @property
    def fmax(self) -> float:
        return max(self.values)

    @property
    def total_length(self) -> float:
        return math.fsum(self.lengths)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        xs = [self.x0]
        acc = self.x0
        for length in self.lengths:
            acc += length
            xs.append(acc)
        return tuple(xs)

    def is_constant(self) -> bool:
        return self.k == 1

    def to_dict(self) -> dict:
        return {"lengths": list(self.lengths), "values": list(self.values)}


@dataclass(frozen=True)
class SolutionVector:
    """A point ``(u_1, ..., u_k)`` aligned with a signal's segments."""

    values: tuple[float, ...]
    lam: float
    p: float

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SolverParams:
    """Numerical knobs shared by the solvers.

    ``tol_lambda`` is relative: two event locations closer than
    ``tol_lambda * lambda`` count as simultaneous.  ``lambda_min`` and
    ``lambda_max`` clamp the downward event scan and the upward search for
    the large-lambda starting point.
    """

    p: float = 2.0
    tol_value: float = 1e-12
    tol_lambda: float = 1e-10
    tol_check: float = 1e-7
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None

    def __post_init__(self):
        if not (self.p >= 1.0) or not math.isfinite(self.p):
            raise ValueError(f"p must be >= 1, got {self.p}")
        for name in ("tol_value", "tol_lambda", "tol_check"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.lambda_min is not None and not (self.lambda_min > 0):
            raise ValueError("lambda_min must be positive")
        if self.lambda_max is not None and not (self.lambda_max > 0):
            raise ValueError("lambda_max must be positive")


def make_signal(lengths: Sequence[float], values: Sequence[float], x0: float = 0.0) -> Signal:
    """Validate segment data and merge adjacent equal values.

    Equal values are detected with exact comparison; near-equal segments
    stay distinct.
    """
    lengths = [float(x) for x in lengths]
    values = [float(x) for x in values]
    if not lengths or not values:
        raise SignalError("signal must have at least one segment")
    if len(lengths) != len(values):
        raise SignalError(
            f"lengths and values differ in size ({len(lengths)} != {len(values)})")
    for i, (length, value) in enumerate(zip(lengths, values)):
        if not math.isfinite(length) or length <= 0:
            raise SignalError(f"nonpositive length {length!r} at segment {i}")
        if not math.isfinite(value):
            raise SignalError(f"non-finite value {value!r} at segment {i}")
    if not math.isfinite(float(x0)):
        raise SignalError("x0 must be finite")

    runs = [[lengths[0]]]
    out_val = [values[0]]
    for length, value in zip(lengths[1:], values[1:]):
        if value == out_val[-1]:
            runs[-1].append(length)
        else:
            runs.append([length])
            out_val.append(value)
    # correctly rounded run sums, so no length is lost to summation order
    return Signal(tuple(math.fsum(r) for r in runs), tuple(out_val), float(x0))


def signal_from_samples(samples: Sequence[float], dx: float, x0: float = 0.0) -> Signal:
    """Run-length encode uniformly spaced samples into a signal."""
    samples = [float(s) for s in samples]
    if not samples:
        raise SignalError("no samples")
    if not (dx > 0) or not math.isfinite(dx):
        raise SignalError(f"dx must be positive, got {dx!r}")
    runs: list[int] = []
    vals: list[float] = []
    for s in samples:
        if vals and s == vals[-1]:
            runs[-1] += 1
        else:
            runs.append(1)
            vals.append(s)
    return make_signal([dx * r for r in runs], vals, x0)


def as_solution(signal: Signal, values: Sequence[float], lam: float, p: float) -> SolutionVector:
    """Wrap ``values`` as a :class:`SolutionVector`, checking alignment."""
    values = tuple(float(v) for v in values)
    if len(values) != signal.k:
        raise SignalError(f"expected {signal.k} values, got {len(values)}")
    return SolutionVector(values, float(lam), float(p))


def staircase_points(signal: Signal, v) -> list[tuple[float, float]]:
    """Vertices of the step function ``u(x) = sum_i u_i chi_i(x)``.

    Two points per segment, left to right.  ``v`` may be a
    :class:`SolutionVector` or a plain sequence.
    """
    values = v.values if isinstance(v, SolutionVector) else tuple(v)
    if len(values) != signal.k:
        raise SignalError(f"expected {signal.k} values, got {len(values)}")
    xs = signal.breakpoints
    pts = []
    for i, u in enumerate(values):
        pts.append((xs[i], float(u)))
        pts.append((xs[i + 1], float(u)))
    return pts
