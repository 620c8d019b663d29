"""Periodic unit-cell grids and the solid/pore indicator field.

The unit cell is the d-dimensional unit cube discretized by a structured
grid of ``dims[j]`` cells per axis.  All fields are sampled at cell centers
``y_j = (i + 1/2) * spacing[j]``: a centered obstacle then rasterizes with
its discrete reflection symmetries intact, and raster pixels map one-to-one
onto grid cells.

The indicator field marks the solid phase (1 = solid, 0 = pore).  Geometry
is immutable once built; evolving geometries are handled as a sequence of
independent fields.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_CELLS_PER_AXIS = 4


@dataclass(frozen=True)
class UnitCellGrid:
    """Structured periodic grid over the unit cube, sampled at cell centers."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(np.asarray(self.dims, dtype=int)))
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("grid needs at least one axis")
        if any(n < MIN_CELLS_PER_AXIS for n in dims):
            raise ValueError(
                f"need at least {MIN_CELLS_PER_AXIS} cells per axis, got {dims}"
            )

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(1.0 / n for n in self.dims)

    @property
    def n_pts(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        n = self.dims[axis]
        return (np.arange(n) + 0.5) / n

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, one per axis, ``indexing='ij'``."""
        axes = (self.axis_centers(a) for a in range(self.dim))
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def zeros_scalar(self) -> np.ndarray:
        return np.zeros(self.dims)

    def zeros_vector(self) -> np.ndarray:
        return np.zeros((self.dim, *self.dims))


@dataclass(frozen=True)
class IndicatorField:
    """Solid-phase indicator: exactly 1 on solid cells, 0 on pore cells."""

    grid: UnitCellGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.dims:
            raise ValueError(
                f"indicator shape {values.shape} does not match grid {self.grid.dims}"
            )
        if not np.isin(values, (0, 1)).all():
            raise ValueError("indicator values must be exactly 0 or 1")
        values = values.astype(np.uint8)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def solid_fraction(self) -> float:
        return float(self.values.mean())

    @property
    def degenerate(self) -> bool:
        """True for all-solid or all-pore cells; constructible, but the
        solvers reject the all-solid case wherever pore averages appear."""
        frac = self.solid_fraction()
        return frac == 0.0 or frac == 1.0

    def as_float(self) -> np.ndarray:
        """Indicator as a float64 field (for pointwise solver arithmetic)."""
        return self.values.astype(np.float64)


def porosity(indicator: IndicatorField) -> float:
    """Pore volume fraction: mean of (1 - indicator) over the cell."""
    return 1.0 - indicator.solid_fraction()


def make_model_geometry(
    grid: UnitCellGrid,
    radius: float = 0.25,
    center: tuple[float, ...] | None = None,
) -> IndicatorField:
    """Centered-ball benchmark obstacle (a disk in 2D).

    The indicator is 1 at cell centers inside the ball of the given radius.
    ``radius`` must lie in (0, 0.5) so the obstacle fits the unit cell.
    """
    if not 0.0 < radius < 0.5:
        raise ValueError(f"obstacle radius must be in (0, 0.5), got {radius}")
    if center is None:
        center = (0.5,) * grid.dim
    if len(center) != grid.dim:
        raise ValueError("center must have one coordinate per grid axis")
    coords = grid.meshgrid()
    r_sq = sum((y - c) ** 2 for y, c in zip(coords, center))
    return IndicatorField(grid, (r_sq <= radius**2).astype(np.uint8))


# ---------------------------------------------------------------------------
# Raster I/O.  Two interchange formats:
#   * binary 8-bit grayscale PGM (P5), width -> first axis, height -> second;
#   * CSV of integers, file row r -> second-axis index, column c -> first axis.
# Loading thresholds grayscale values (normalized to [0, 1] for PGM, raw for
# CSV); writing emits 0/255 (PGM) or 0/1 (CSV) so a write/load round trip is
# bit-exact at the default threshold.
# ---------------------------------------------------------------------------

_PGM_MAXVAL = 255


def load_indicator_raster(path: str | Path, threshold: float = 0.5) -> IndicatorField:
    """Build an indicator from a grayscale raster: solid where value >= threshold.

    The raster dimensions define the grid.  Supported formats are binary PGM
    (``.pgm``) and CSV (anything else); PGM pixel values are normalized by the
    file's maxval before thresholding, CSV values are compared as-is.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".pgm":
        pixels = _read_pgm(path) / _PGM_MAXVAL
    else:
        pixels = _read_csv_raster(path)
    if pixels.size == 0:
        raise ValueError(f"empty raster: {path}")
    # File rows run along the second grid axis.
    values = (pixels.T >= threshold).astype(np.uint8)
    return IndicatorField(UnitCellGrid(values.shape), values)


def write_indicator(indicator: IndicatorField, path: str | Path) -> Path:
    """Write an indicator as PGM (``.pgm``) or CSV; format chosen by suffix."""
    path = Path(path)
    if indicator.grid.dim != 2:
        raise ValueError("raster output is defined for 2D indicators")
    raster = indicator.values.T  # file rows = second axis
    if path.suffix.lower() == ".pgm":
        _write_pgm(path, (raster * _PGM_MAXVAL).astype(np.uint8))
    else:
        np.savetxt(path, raster, fmt="%d", delimiter=",")
    return path


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        match = re.match(rb"\s*(?:#[^\n]*\n\s*)*(\S+)", data[pos:])
        if match is None:
            raise ValueError(f"truncated PGM header: {path}")
        tokens.append(match.group(1))
        pos += match.end()
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (P5) file: {path}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval <= 0 or maxval > _PGM_MAXVAL:
        raise ValueError(f"unsupported PGM maxval {maxval}: {path}")
    pos += 1  # single whitespace byte separates header from pixel data
    if len(data) < pos + width * height:
        raise ValueError(f"PGM pixel data shorter than header promises: {path}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    if pixels.size != width * height:
        raise ValueError(f"PGM pixel data shorter than header promises: {path}")
    return pixels.reshape(height, width).astype(np.float64) * (_PGM_MAXVAL / maxval)


def _write_pgm(path: Path, raster: np.ndarray) -> None:
    height, width = raster.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{_PGM_MAXVAL}\n".encode())
        fh.write(raster.tobytes())


def _read_csv_raster(path: Path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"non-rectangular or malformed CSV raster: {path}") from exc
    return data
