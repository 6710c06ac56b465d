"""CSV/JSON emission and bit-exact round-tripping of grid data.

CSV files use '.' decimals, a mandatory header row, and shortest
round-tripping decimal formatting (repr of float64, at most 17 significant
digits), so a map written to CSV loads back bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidMapError
from .geometry import TransverseGeometry
from .grid import GridChart
from .maps import FoliatedMapField

__all__ = [
    "fmt",
    "scalar_field_to_csv",
    "map_to_csv",
    "map_from_csv",
    "trace_to_csv",
    "dump_json",
]


def fmt(x) -> str:
    """Shortest decimal representation that round-trips float64."""
    return repr(float(x))


def _node_rows(grid: GridChart):
    for idx in np.ndindex(*grid.shape):
        yield idx, grid.points[idx]


def scalar_field_to_csv(path, grid: GridChart, fields: dict[str, np.ndarray]) -> None:
    """One row per node: index coordinates, chart coordinates, field values.

    Vector-valued entries in ``fields`` get one column per component.
    """
    q = grid.dim
    header = [f"i{a}" for a in range(q)] + [f"b{a}" for a in range(q)]
    columns = []
    for name, arr in fields.items():
        arr = np.asarray(arr)
        if arr.shape == grid.shape:
            header.append(name)
            columns.append((arr, None))
        else:
            ncomp = arr.shape[-1]
            header.extend(f"{name}{c}" for c in range(ncomp))
            columns.append((arr, ncomp))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, b in _node_rows(grid):
            row = [str(i) for i in idx] + [fmt(x) for x in b]
            for arr, ncomp in columns:
                if ncomp is None:
                    row.append(fmt(arr[idx]))
                else:
                    row.extend(fmt(arr[idx + (c,)]) for c in range(ncomp))
            writer.writerow(row)


def map_to_csv(path, mapf: FoliatedMapField) -> None:
    """Serialize a map field; the winding matrix rides along in '# winding' rows."""
    grid = mapf.grid
    q, qp = grid.dim, mapf.target.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(mapf.winding):
            writer.writerow(["# winding"] + [str(int(v)) for v in row])
        writer.writerow(
            [f"i{a}" for a in range(q)]
            + [f"b{a}" for a in range(q)]
            + [f"phi{c}" for c in range(qp)]
        )
        for idx, b in _node_rows(grid):
            writer.writerow(
                [str(i) for i in idx]
                + [fmt(x) for x in b]
                + [fmt(mapf.values[idx + (c,)]) for c in range(qp)]
            )


def map_from_csv(path, grid: GridChart, target: TransverseGeometry
                 ) -> FoliatedMapField:
    winding_rows = []
    q = grid.dim
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        values = None
        for row in reader:
            if not row:
                continue
            if row[0] == "# winding":
                winding_rows.append([int(v) for v in row[1:]])
                continue
            if header is None:
                header = row
                qp = sum(1 for name in header if name.startswith("phi"))
                values = np.empty(grid.shape + (qp,))
                continue
            idx = tuple(int(row[a]) for a in range(q))
            for c in range(values.shape[-1]):
                values[idx + (c,)] = float(row[2 * q + c])
    if header is None:
        raise InvalidMapError(f"{path}: no header row found")
    winding = np.array(winding_rows, dtype=int) if winding_rows else None
    return FoliatedMapField(grid, target, values, winding)


def trace_to_csv(path, trace) -> None:
    header, body = trace.rows()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in body:
            writer.writerow([str(row[0])] + [fmt(v) for v in row[1:]])


def sanitize_json(obj):
    """Make a payload strictly JSON-serializable.

    Numpy scalars/arrays become Python numbers/lists; non-finite floats
    become the strings 'inf', '-inf', 'nan' (bare Infinity/NaN tokens are
    not valid JSON).
    """
    if isinstance(obj, dict):
        return {k: sanitize_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def dump_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(sanitize_json(payload), indent=2, sort_keys=True,
                   allow_nan=False) + "\n"
    )
