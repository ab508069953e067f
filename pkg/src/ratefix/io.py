"""Input parsing, problem digests and atomic report output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from ratefix.errors import DimensionMismatch, MissingCell, ParseError
from ratefix.leslie_gower import LGModel
from ratefix.rating import RatingProblem, RiskTensor


def read_rating_csv(path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Parse long-format rows ``idx_0, ..., idx_{N-1}, exposure, loss``.

    Returns axis names, losses and exposures as dense arrays whose shape is
    inferred from the largest index on each axis.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        if len(header) < 4 or [h.lower() for h in header[-2:]] != ["exposure", "loss"]:
            raise ParseError(
                f"{path}: header must be <index columns...>,exposure,loss with at least "
                f"two index columns, got {header}"
            )
        names = tuple(header[:-2])
        n = len(names)
        cells: dict[tuple[int, ...], tuple[float, float]] = {}
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n + 2:
                raise DimensionMismatch(
                    f"{path}:{lineno}: expected {n + 2} fields, got {len(row)}"
                )
            idx = []
            for col, raw in zip(names, row[:n]):
                try:
                    v = int(raw.strip())
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: column {col!r}: {raw!r} is not an integer index") from None
                if v < 0:
                    raise ParseError(f"{path}:{lineno}: column {col!r}: negative index {v}")
                idx.append(v)
            vals = []
            for col, raw in zip(("exposure", "loss"), row[n:]):
                try:
                    v = float(raw.strip())
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: column {col!r}: {raw!r} is not a number") from None
                if not math.isfinite(v) or v < 0:
                    raise ParseError(f"{path}:{lineno}: column {col!r}: {raw!r} must be finite and >= 0")
                vals.append(v)
            key = tuple(idx)
            if key in cells:
                raise ParseError(f"{path}:{lineno}: duplicate row for cell {key}")
            cells[key] = (vals[0], vals[1])
    if not cells:
        raise ParseError(f"{path}: no data rows")
    dims = tuple(max(k[t] for k in cells) + 1 for t in range(n))
    if len(cells) != math.prod(dims):
        for key in np.ndindex(*dims):
            if key not in cells:
                raise MissingCell(f"{path}: no row for cell {key} of the {dims} grid")
    exposures = np.empty(dims)
    losses = np.empty(dims)
    for key, (e, l) in cells.items():
        exposures[key] = e
        losses[key] = l
    return names, losses, exposures


def level_orders(dims: Sequence[int], base_cell: Sequence[int] | None) -> list[list[int]]:
    """Original level index at each position once ``base_cell`` is swapped to the front."""
    orders = [list(range(n)) for n in dims]
    if base_cell is None:
        return orders
    if len(base_cell) != len(dims):
        raise DimensionMismatch(f"base cell {tuple(base_cell)} has wrong arity for dims {tuple(dims)}")
    for order, b, n in zip(orders, base_cell, dims):
        if not 0 <= b < n:
            raise ValueError(f"base cell {tuple(base_cell)} lies outside dims {tuple(dims)}")
        order[0], order[b] = order[b], order[0]
    return orders


def permute_levels(arr: np.ndarray, orders: Sequence[Sequence[int]]) -> np.ndarray:
    return arr[np.ix_(*[np.asarray(o) for o in orders])]


def ingest_rating_csv(path, plr: float = 1.0, strict: bool = True,
                      base_cell: Sequence[int] | None = None) -> RatingProblem:
    names, losses, exposures = read_rating_csv(path)
    orders = level_orders(losses.shape, base_cell)
    losses = permute_levels(losses, orders)
    exposures = permute_levels(exposures, orders)
    return RatingProblem(RiskTensor(losses, names), RiskTensor(exposures, names),
                         plr=plr, strict=strict)


def load_lg_json(path) -> LGModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "b" not in data or "C" not in data:
        raise ParseError(f"{path}: expected an object with keys 'b' and 'C'")
    try:
        return LGModel(data["b"], data["C"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def problem_digest(problem: RatingProblem) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(problem.dims, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(problem.losses.values, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(problem.exposures.values, dtype="<f8").tobytes())
    return h.hexdigest()


def model_digest(model: LGModel) -> str:
    h = hashlib.sha256()
    h.update(np.asarray([model.d], dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(model.b, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(model.C, dtype="<f8").tobytes())
    return h.hexdigest()


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def write_atomic(path, text: str):
    """Write via a temporary file in the target directory, then rename over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
