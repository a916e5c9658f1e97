"""Reading signals from CSV/JSON and writing numbers with 17 significant digits."""

from __future__ import annotations

import csv
import io
import json
import math

from .signal_core import Signal, SignalError, make_signal, signal_from_samples


class InputError(ValueError):
    """Input text could not be parsed into a signal."""


def _to_float(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InputError(f"not a number: {tok!r}") from None


def parse_csv(text: str, dx: float | None = None) -> Signal:
    """``length,value`` rows, or a single column of samples when ``dx`` is given.

    A non-numeric first row is taken as a header.  Blank lines and lines
    starting with ``#`` are ignored.
    """
    rows = [r for r in csv.reader(io.StringIO(text))
            if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#")]
    rows = [[c.strip() for c in r if c.strip() != ""] for r in rows]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise InputError("no data rows")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise InputError("rows have differing numbers of columns")
    width = width.pop()
    try:
        if dx is not None:
            if width != 1:
                raise InputError("--dx expects a single column of samples")
            return signal_from_samples([_to_float(r[0]) for r in rows], dx)
        if width == 1:
            raise InputError("single-column input needs --dx")
        if width != 2:
            raise InputError(f"expected 2 columns (length,value), got {width}")
        return make_signal([_to_float(r[0]) for r in rows], [_to_float(r[1]) for r in rows])
    except SignalError as exc:
        raise InputError(str(exc)) from None


def parse_json(text: str, dx: float | None = None) -> Signal:
    """``{"lengths": [...], "values": [...]}`` or ``{"samples": [...]}`` with ``dx``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError("expected a JSON object")
    try:
        if "samples" in obj:
            step = dx if dx is not None else obj.get("dx")
            if step is None:
                raise InputError("samples need a dx")
            return signal_from_samples([float(v) for v in obj["samples"]], float(step))
        if "lengths" not in obj or "values" not in obj:
            raise InputError('expected keys "lengths" and "values"')
        return make_signal([float(v) for v in obj["lengths"]], [float(v) for v in obj["values"]])
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def read_signal(text: str, fmt: str = "csv", dx: float | None = None) -> Signal:
    if fmt == "json":
        return parse_json(text, dx)
    if fmt == "csv":
        return parse_csv(text, dx)
    raise ValueError(f"unknown format {fmt!r}")


def fmt_float(x: float) -> str:
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become ``null``.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def staircase_csv(points) -> str:
    lines = ["x,y"]
    lines += [f"{fmt_float(x)},{fmt_float(y)}" for x, y in points]
    return "\n".join(lines) + "\n"
