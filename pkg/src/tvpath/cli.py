"""Command-line entry point: ``tvpath {solve,path,oracle-check,k2}``.

Exit codes: 0 success, 1 solver failure or oracle mismatch, 2 malformed
input, 3 invalid parameters.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .closed_form import solve_k2, solve_k2_p1
from .energy import check_optimality, energy_G, energy_exact
from .formats import InputError, dumps, read_signal, staircase_csv
from .oracle import exhaustive_p1, solve_oracle_p1, solve_oracle_pgt1
from .path import (PathSolverError, compute_path, constant_solution, path_to_dict,
                   safe_lambda_floor, solve_at)
from .signal_core import Signal, SolverParams, staircase_points

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_PARAMS = 3

EXHAUSTIVE_MAX_K = 6


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    input: str = "-"
    format: str = "csv"
    p: float = 2.0
    lam: Optional[float] = None
    dx: Optional[float] = None
    output: str = "-"
    emit: str = "solution"
    tol: Optional[float] = None
    lambda_grid: Optional[tuple[float, float, int]] = None
    tol_value: float = 1e-12
    tol_lambda: float = 1e-10


def parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ParamError("--lambda-grid expects lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParamError("--lambda-grid expects lo:hi:n") from None
    if not (0 < lo <= hi and math.isfinite(hi)) or n < 1:
        raise ParamError("--lambda-grid needs 0 < lo <= hi and n >= 1")
    return lo, hi, n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tvpath",
                                 description="1-D TV denoising with L^p fidelity on piecewise constant data.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in ("solve", "path", "oracle-check", "k2"):
        sp = sub.add_parser(name)
        sp.add_argument("--input", default="-", help="file path or - for stdin")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--p", type=float, default=2.0)
        sp.add_argument("--dx", type=float, default=None, help="sample spacing for raw samples")
        sp.add_argument("--output", default="-")
        sp.add_argument("--emit", choices=("solution", "path", "staircase", "all"),
                        default="path" if name == "path" else "solution")
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--tol-value", type=float, default=1e-12)
        sp.add_argument("--tol-lambda", type=float, default=1e-10)
        if name in ("solve", "k2"):
            sp.add_argument("--lambda", dest="lam", type=float, required=True)
        if name == "oracle-check":
            sp.add_argument("--lambda-grid", default=None)
    return ap


def config_from_args(ns: argparse.Namespace) -> CliConfig:
    grid = parse_grid(ns.lambda_grid) if getattr(ns, "lambda_grid", None) else None
    return CliConfig(ns.subcommand, ns.input, ns.format, ns.p, getattr(ns, "lam", None), ns.dx,
                     ns.output, ns.emit, ns.tol, grid, ns.tol_value, ns.tol_lambda)


def _validate(cfg: CliConfig) -> None:
    if not (cfg.p >= 1 and math.isfinite(cfg.p)):
        raise ParamError("p must be a finite number >= 1")
    if cfg.subcommand == "path" and not cfg.p > 1:
        raise ParamError("the solution path is only available for p > 1")
    if cfg.subcommand in ("solve", "k2"):
        if cfg.lam is None or not (cfg.lam > 0 and math.isfinite(cfg.lam)):
            raise ParamError("lambda must be a finite positive number")
    if cfg.tol is not None and not cfg.tol > 0:
        raise ParamError("tol must be positive")
    if cfg.dx is not None and not (cfg.dx > 0 and math.isfinite(cfg.dx)):
        raise ParamError("dx must be positive")
    if not (cfg.tol_value > 0 and cfg.tol_lambda > 0):
        raise ParamError("tolerances must be positive")


def _params(cfg: CliConfig) -> SolverParams:
    # --tol is the certificate tolerance for solve and the deviation
    # tolerance for oracle-check
    check = cfg.tol if cfg.tol is not None and cfg.subcommand == "solve" else 1e-7
    return SolverParams(p=cfg.p, tol_value=cfg.tol_value, tol_lambda=cfg.tol_lambda,
                        tol_check=check)


def _read_input(cfg: CliConfig) -> Signal:
    if cfg.input == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(cfg.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {cfg.input}: {exc}") from None
    return read_signal(text, cfg.format, cfg.dx)


def _write(cfg: CliConfig, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- subcommands ----------------------------------------------------------------

def run_solve(cfg: CliConfig, signal: Signal) -> int:
    if cfg.p == 1:
        u = solve_oracle_p1(signal, cfg.lam).values
        optimal = True  # the DP is a global minimizer
    else:
        u = solve_at(signal, cfg.p, cfg.lam, _params(cfg)).values
        optimal = check_optimality(signal, u, cfg.p, cfg.lam, _params(cfg).tol_check).ok
    if cfg.emit == "staircase":
        _write(cfg, staircase_csv(staircase_points(signal, u)))
        return EXIT_OK
    out = {"u": list(u), "energy": energy_G(signal, u, cfg.p, cfg.lam).to_dict(),
           "optimal": optimal}
    if cfg.emit == "all":
        out["staircase"] = [list(pt) for pt in staircase_points(signal, u)]
    _write(cfg, dumps(out))
    return EXIT_OK if optimal else EXIT_FAILURE


def _snapshot(signal, path, lam):
    u = path.evaluate(lam).values
    return {"lambda": lam, "u": list(u), "staircase": [list(pt) for pt in staircase_points(signal, u)]}


def run_path(cfg: CliConfig, signal: Signal) -> int:
    path = compute_path(signal, cfg.p, _params(cfg))
    out = path_to_dict(path)
    if cfg.emit == "all":
        snaps = []
        for ev in path.events:
            eps = 1e-6 * ev.lambda_star
            snaps.append({"event": ev.lambda_star,
                          "above": _snapshot(signal, path, ev.lambda_star + eps),
                          "below": _snapshot(signal, path, ev.lambda_star - eps)})
        out["snapshots"] = snaps
    elif cfg.emit == "staircase":
        out = {"snapshots": [_snapshot(signal, path, ev.lambda_star) for ev in path.events]}
    _write(cfg, dumps(out))
    return EXIT_OK


def default_grid(signal: Signal, p: float, n: int = 12) -> list[float]:
    """Log-spaced lambdas from a tenth of the constant-regime bound to ten
    times the start of the large-lambda regime."""
    if signal.k == 1:
        return list(np.geomspace(0.1, 10.0, n))
    if p == 1:
        lo = constant_solution(signal, 1.0)[1]
        hi = p1_identity_lambda(signal)
    else:
        lo = min(constant_solution(signal, p)[1], safe_lambda_floor(signal, p))
        hi = compute_path(signal, p).lambda0
    return [float(x) for x in np.geomspace(lo / 10, 10 * hi, n)]


def p1_identity_lambda(signal: Signal) -> float:
    """A lambda above which f itself is the unique p = 1 minimizer.

    Each entry enters at most two differences, so ``TV(f) - TV(v) <= 2 sum
    |v_i - f_i|`` and ``G(v) - G(f) >= sum (lam L_i - 2) |v_i - f_i|``,
    positive for ``v != f`` once ``lam > 2 / min L``.
    """
    return 2.0 / min(signal.lengths)


def run_oracle_check(cfg: CliConfig, signal: Signal) -> int:
    tol = cfg.tol if cfg.tol is not None else 1e-6
    if cfg.lambda_grid is not None:
        lo, hi, n = cfg.lambda_grid
        grid = [float(x) for x in np.geomspace(lo, hi, n)]
    else:
        grid = default_grid(signal, cfg.p)
    rows = []
    bad = []
    if cfg.p == 1:
        if signal.k > EXHAUSTIVE_MAX_K:
            raise ParamError(f"p = 1 oracle check enumerates all vectors; needs k <= {EXHAUSTIVE_MAX_K}")
        for lam in grid:
            e_dp = energy_exact(signal, solve_oracle_p1(signal, lam).values, 1, lam)
            e_ex, _ = exhaustive_p1(signal, lam)
            dev = float(abs(e_dp - e_ex))
            rows.append(f"{lam:.17g}\t{dev:.3e}\t-")
            if e_dp != e_ex:
                bad.append(f"lambda={lam:.17g}: DP energy differs from enumeration by {dev:.3e}")
    else:
        params = _params(cfg)
        for lam in grid:
            u = solve_at(signal, cfg.p, lam, params).values
            ref = solve_oracle_pgt1(signal, cfg.p, lam)
            dev = np.abs(np.subtract(u, ref.values))
            i = int(np.argmax(dev))
            rows.append(f"{lam:.17g}\t{dev[i]:.3e}\t{i + 1}")
            if dev[i] > tol or not ref.converged:
                bad.append(f"lambda={lam:.17g}: deviation {dev[i]:.3e} at index {i + 1}")
    report = "lambda\tmax_abs_dev\tindex\n" + "\n".join(rows)
    if bad:
        report += "\nFAIL\n" + "\n".join(bad)
    else:
        report += "\nOK"
    _write(cfg, report)
    return EXIT_FAILURE if bad else EXIT_OK


def run_k2(cfg: CliConfig, signal: Signal) -> int:
    if signal.k != 2:
        raise ParamError(f"k2 needs a two-segment signal, got k={signal.k}")
    (L1, L2), (f1, f2) = signal.lengths, signal.values
    sol = solve_k2_p1(cfg.lam, L1, L2, f1, f2) if cfg.p == 1 else solve_k2(cfg.p, cfg.lam, L1, L2, f1, f2)
    _write(cfg, dumps({"u": [sol.u1, sol.u2], "merged": sol.merged, "unique": sol.unique,
                       "lambda_threshold": sol.lambda_threshold}))
    return EXIT_OK


_RUNNERS = {"solve": run_solve, "path": run_path, "oracle-check": run_oracle_check, "k2": run_k2}


def run(cfg: CliConfig) -> int:
    _validate(cfg)
    signal = _read_input(cfg)
    return _RUNNERS[cfg.subcommand](cfg, signal)


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; an unparsable number is a parameter error
        return EXIT_PARAMS if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(config_from_args(ns))
    except ParamError as exc:
        print(f"tvpath: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except InputError as exc:
        print(f"tvpath: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PathSolverError, ArithmeticError, RuntimeError) as exc:
        print(f"tvpath: solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
