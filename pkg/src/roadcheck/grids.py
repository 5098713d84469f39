"""Vehicle-centric bird's-eye-view grid geometry and binary-grid morphology.

Grid convention: row 0 is the farthest-ahead row (image "up" is forward),
column 0 is the leftmost. Cell (r, c) has its center at
``forward = forward_max - (r + 0.5) * cell_size`` and
``left = lateral_half_width - (c + 0.5) * cell_size``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

_EXTENT_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    cell_size: float
    forward_min: float
    forward_max: float
    lateral_half_width: float

    def __post_init__(self) -> None:
        if not self.cell_size > 0.0:
            raise ValueError(f"cell_size must be > 0, got {self.cell_size}")
        if not (self.forward_max > self.forward_min >= 0.0):
            raise ValueError(
                f"need forward_max > forward_min >= 0, got "
                f"[{self.forward_min}, {self.forward_max}]"
            )
        if not self.lateral_half_width > 0.0:
            raise ValueError("lateral_half_width must be > 0")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        span_f = self.forward_max - self.forward_min
        if abs(self.rows * self.cell_size - span_f) > _EXTENT_TOL:
            raise ValueError(
                f"rows * cell_size = {self.rows * self.cell_size} does not match "
                f"forward span {span_f}"
            )
        span_l = 2.0 * self.lateral_half_width
        if abs(self.cols * self.cell_size - span_l) > _EXTENT_TOL:
            raise ValueError(
                f"cols * cell_size = {self.cols * self.cell_size} does not match "
                f"lateral span {span_l}"
            )

    @classmethod
    def create(
        cls,
        cell_size: float,
        forward_min: float,
        forward_max: float,
        lateral_half_width: float,
    ) -> "GridSpec":
        """Build a spec from metric extents; they must divide evenly into cells."""
        rows = round((forward_max - forward_min) / cell_size)
        cols = round(2.0 * lateral_half_width / cell_size)
        return cls(rows, cols, cell_size, forward_min, forward_max, lateral_half_width)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        """(forward, left) of one cell center; same arithmetic as cell_centers."""
        forward = self.forward_max - (r + 0.5) * self.cell_size
        left = self.lateral_half_width - (c + 0.5) * self.cell_size
        return forward, left

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(forward, left) center coordinates as two rows x cols float64 arrays."""
        f = self.forward_max - (np.arange(self.rows, dtype=np.float64) + 0.5) * self.cell_size
        l = self.lateral_half_width - (np.arange(self.cols, dtype=np.float64) + 0.5) * self.cell_size
        return np.meshgrid(f, l, indexing="ij")


@dataclass(frozen=True)
class BinaryGrid:
    spec: GridSpec
    cells: np.ndarray  # rows x cols, bool

    def __post_init__(self) -> None:
        if self.cells.shape != self.spec.shape:
            raise ValueError(
                f"cells shape {self.cells.shape} does not match spec {self.spec.shape}"
            )
        if self.cells.dtype != np.bool_:
            raise ValueError(f"cells must be bool, got {self.cells.dtype}")

    @classmethod
    def full(cls, spec: GridSpec, value: bool) -> "BinaryGrid":
        return cls(spec, np.full(spec.shape, value, dtype=bool))

    def count(self) -> int:
        return int(self.cells.sum())

    def save_png(self, path) -> None:
        """Debug dump: 8-bit single channel, 0 = false, 255 = true."""
        Image.fromarray(np.where(self.cells, 255, 0).astype(np.uint8), mode="L").save(path)


def disk_offsets(band: float, cell_size: float) -> list[tuple[int, int]]:
    """(dr, dc) offsets whose center-to-center metric distance is <= band."""
    if band < 0.0:
        raise ValueError(f"band must be >= 0, got {band}")
    reach = int(band // cell_size) + 1
    offsets = []
    for dr in range(-reach, reach + 1):
        for dc in range(-reach, reach + 1):
            dist2 = (dr * cell_size) ** 2 + (dc * cell_size) ** 2
            if dist2 <= band * band:
                offsets.append((dr, dc))
    return offsets


def _gather(cells: np.ndarray, dr: int, dc: int, fill: bool) -> np.ndarray:
    """out[r, c] = cells[r + dr, c + dc], with out-of-grid neighbors = fill."""
    if dr == 0 and dc == 0:
        return cells
    rows, cols = cells.shape
    out = np.full(cells.shape, fill, dtype=bool)
    r0, r1 = max(0, -dr), min(rows, rows - dr)
    c0, c1 = max(0, -dc), min(cols, cols - dc)
    if r0 < r1 and c0 < c1:
        out[r0:r1, c0:c1] = cells[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    return out


def band_erode(grid: BinaryGrid, band: float) -> BinaryGrid:
    """Cell stays true iff every in-grid cell within ``band`` meters is true.

    Out-of-grid neighbors never constrain, so an all-true grid is a fixed
    point for any band. band = 0 is the identity.
    """
    out = np.ones(grid.spec.shape, dtype=bool)
    for dr, dc in disk_offsets(band, grid.spec.cell_size):
        out &= _gather(grid.cells, dr, dc, fill=True)
    return BinaryGrid(grid.spec, out)


def band_dilate(grid: BinaryGrid, band: float) -> BinaryGrid:
    """Cell becomes true iff any cell within ``band`` meters is true."""
    out = np.zeros(grid.spec.shape, dtype=bool)
    for dr, dc in disk_offsets(band, grid.spec.cell_size):
        out |= _gather(grid.cells, dr, dc, fill=False)
    return BinaryGrid(grid.spec, out)
