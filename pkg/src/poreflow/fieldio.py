"""Field, history and report writers (CSV, legacy VTK, JSON).

CSV field layout matches the indicator rasters: one file per component,
data rows along the second grid axis (row r holds all first-axis values at
second-axis index r).  Values are written with 17 significant digits, which
round-trips float64 exactly.  VTK output is legacy ASCII structured points
with one point-data array per component, readable by standard viewers.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import UnitCellGrid
from .report import ConvergenceReport

_FMT = "%.17g"
FIELD_HEADER = "poreflow-field v1"


def _component_views(field: np.ndarray, grid: UnitCellGrid):
    if field.shape == grid.dims:
        return [field]
    if field.shape == (field.shape[0], *grid.dims):
        return [field[c] for c in range(field.shape[0])]
    raise ValueError(f"field shape {field.shape} does not match grid {grid.dims}")


def export_field(
    field: np.ndarray,
    grid: UnitCellGrid,
    fmt: str,
    path: str | Path,
    name: str = "field",
) -> list[Path]:
    """Write a scalar or vector field; returns the paths written.

    Vector components go to separate files suffixed ``_c0``, ``_c1``, ...
    for CSV; VTK holds all components in one file.
    """
    path = Path(path)
    if fmt == "csv":
        comps = _component_views(field, grid)
        paths = []
        for c, comp in enumerate(comps):
            p = path if len(comps) == 1 else path.with_name(
                f"{path.stem}_c{c}{path.suffix}"
            )
            _write_csv_component(comp, grid, p, component=c, n_components=len(comps))
            paths.append(p)
        return paths
    if fmt == "vtk":
        _write_vtk(field, grid, path, name)
        return [path]
    raise ValueError(f"unknown field format {fmt!r} (expected 'csv' or 'vtk')")


def _write_csv_component(comp, grid, path, component, n_components):
    spacing = ",".join(_FMT % h for h in grid.spacing)
    dims = ",".join(str(n) for n in grid.dims)
    header = (
        f"{FIELD_HEADER}\n"
        f"dims: {dims}\n"
        f"spacing: {spacing}\n"
        f"component: {component}/{n_components}"
    )
    np.savetxt(path, comp.T, fmt=_FMT, delimiter=",", header=header)


def import_field_csv(path: str | Path) -> tuple[np.ndarray, UnitCellGrid]:
    """Read one CSV component back; inverse of the CSV writer."""
    path = Path(path)
    dims = None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line[1:].strip().startswith("dims:"):
                dims = tuple(int(t) for t in line.split(":")[1].split(","))
    data = np.loadtxt(path, delimiter=",", ndmin=2).T
    grid = UnitCellGrid(dims if dims is not None else data.shape)
    if data.shape != grid.dims:
        raise ValueError(f"data shape {data.shape} does not match header dims {dims}")
    return data, grid


def _write_vtk(field, grid, path, name):
    if grid.dim != 2:
        raise ValueError("VTK export is implemented for 2D grids")
    comps = _component_views(field, grid)
    n1, n2 = grid.dims
    h1, h2 = grid.spacing
    lines = [
        "# vtk DataFile Version 3.0",
        f"poreflow field {name}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n1} {n2} 1",
        f"ORIGIN {_FMT % (0.5 * h1)} {_FMT % (0.5 * h2)} 0",
        f"SPACING {_FMT % h1} {_FMT % h2} 1",
        f"POINT_DATA {grid.n_pts}",
    ]
    for c, comp in enumerate(comps):
        label = name if len(comps) == 1 else f"{name}_{c + 1}"
        lines.append(f"SCALARS {label} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK structured points run x fastest: first axis inner, second outer.
        lines.extend(_FMT % v for v in comp.T.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def write_history_csv(report: ConvergenceReport, path: str | Path) -> Path:
    """Residual history as CSV, one row per iteration."""
    path = Path(path)
    np.savetxt(
        path,
        report.history,
        fmt=_FMT,
        delimiter=",",
        header="iteration history: " + ",".join(report.columns),
    )
    return path


class _NumpyEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        return super().default(obj)


def write_report_json(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, cls=_NumpyEncoder) + "\n")
    return path
