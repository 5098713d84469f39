"""Overlay of predicted road area and map road corridors, with verdicts.

Per-cell verdicts, in priority order: OUT_OF_FOV outside the camera
footprint, UNOBSERVED where the footprint is true but no source pixel
exists, OCCLUDED for potentially occluding classes, then FP/FN/TP/TN for
the road comparison. The FP test is run against the map corridor dilated by
the edge band and the FN test against the corridor eroded by it, so
near-boundary disagreement (coarse map geometry, unknown widths) is
forgiven in both directions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .bev import BevLabelGrid, VOID_NAME, resolve_class_ids
from .grids import BinaryGrid, GridSpec, band_dilate, band_erode

OUT_OF_FOV = 0
TP = 1
FP = 2
FN = 3
TN = 4
OCCLUDED = 5
UNOBSERVED = 6

VERDICT_NAMES = {
    OUT_OF_FOV: "OUT_OF_FOV",
    TP: "TP",
    FP: "FP",
    FN: "FN",
    TN: "TN",
    OCCLUDED: "OCCLUDED",
    UNOBSERVED: "UNOBSERVED",
}


class GridMismatchError(ValueError):
    """Inputs do not share one grid geometry."""


def _default_occluders() -> frozenset[str]:
    return frozenset(
        {
            "car",
            "truck",
            "bus",
            "person",
            "rider",
            "vegetation",
            "building",
            "wall",
            "fence",
            "pole",
            "traffic sign",
            "traffic light",
        }
    )


@dataclass(frozen=True)
class ValidationPolicy:
    road_classes: frozenset[str] = frozenset({"road"})
    occluder_classes: frozenset[str] = field(default_factory=_default_occluders)
    edge_band: float = 0.5
    min_region_cells: int = 25

    def __post_init__(self) -> None:
        overlap = set(self.road_classes) & set(self.occluder_classes)
        if overlap:
            raise ValueError(f"classes cannot be both road and occluder: {sorted(overlap)}")
        if self.edge_band < 0.0:
            raise ValueError(f"edge_band must be >= 0, got {self.edge_band}")
        if self.min_region_cells < 1:
            raise ValueError(f"min_region_cells must be >= 1, got {self.min_region_cells}")


@dataclass(frozen=True)
class ValidationGrid:
    spec: GridSpec
    verdicts: np.ndarray  # rows x cols, uint8 verdict ids

    def count(self, verdict: int) -> int:
        return int((self.verdicts == verdict).sum())

    def counts(self) -> dict[str, int]:
        return {name: self.count(v) for v, name in sorted(VERDICT_NAMES.items())}


def classify(
    bev: BevLabelGrid,
    map_road: BinaryGrid,
    fov: BinaryGrid,
    policy: ValidationPolicy,
) -> ValidationGrid:
    """Assign one verdict per cell from the segmentation/map overlay."""
    if not (bev.spec == map_road.spec == fov.spec):
        raise GridMismatchError("bev, map road and fov grids must share one GridSpec")
    road_ids = resolve_class_ids(bev.label_map, policy.road_classes, what="road")
    seg_road = np.isin(bev.labels, road_ids)
    if policy.occluder_classes:
        occluder_ids = resolve_class_ids(bev.label_map, policy.occluder_classes, what="occluder")
        occluded = np.isin(bev.labels, occluder_ids)
    else:
        occluded = np.zeros(bev.spec.shape, dtype=bool)
    dilated = band_dilate(map_road, policy.edge_band).cells
    eroded = band_erode(map_road, policy.edge_band).cells

    verdicts = np.full(bev.spec.shape, TN, dtype=np.uint8)
    evaluable = fov.cells & bev.observed & ~occluded
    verdicts[evaluable & seg_road & map_road.cells] = TP
    verdicts[evaluable & ~seg_road & eroded] = FN
    verdicts[evaluable & seg_road & ~dilated] = FP
    verdicts[fov.cells & bev.observed & occluded] = OCCLUDED
    verdicts[fov.cells & ~bev.observed] = UNOBSERVED
    verdicts[~fov.cells] = OUT_OF_FOV
    return ValidationGrid(spec=bev.spec, verdicts=verdicts)


@dataclass(frozen=True)
class Region:
    """A 4-connected component of one verdict, measured in vehicle meters."""

    verdict: int
    cell_count: int
    cells: tuple[tuple[int, int], ...]  # (row, col), sorted row-major
    centroid_forward: float
    centroid_left: float
    forward_min: float
    forward_max: float
    left_min: float
    left_max: float


def extract_regions(grid: ValidationGrid, verdict: int, policy: ValidationPolicy) -> list[Region]:
    """Connected components of ``verdict`` with at least min_region_cells cells.

    4-connectivity; deterministic order: descending cell count, ties broken
    by the (row, col) of each region's top-left cell.
    """
    mask = grid.verdicts == verdict
    rows, cols = grid.spec.shape
    seen = np.zeros((rows, cols), dtype=bool)
    spec = grid.spec
    half = spec.cell_size * 0.5
    regions: list[Region] = []
    for r0 in range(rows):
        for c0 in range(cols):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            queue = deque([(r0, c0)])
            seen[r0, c0] = True
            cells = []
            while queue:
                r, c = queue.popleft()
                cells.append((r, c))
                for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        queue.append((nr, nc))
            if len(cells) < policy.min_region_cells:
                continue
            cells.sort()
            centers = [spec.cell_center(r, c) for r, c in cells]
            fwd = [f for f, _ in centers]
            lft = [l for _, l in centers]
            regions.append(
                Region(
                    verdict=verdict,
                    cell_count=len(cells),
                    cells=tuple(cells),
                    centroid_forward=sum(fwd) / len(fwd),
                    centroid_left=sum(lft) / len(lft),
                    forward_min=min(fwd) - half,
                    forward_max=max(fwd) + half,
                    left_min=min(lft) - half,
                    left_max=max(lft) + half,
                )
            )
    regions.sort(key=lambda reg: (-reg.cell_count, reg.cells[0]))
    return regions


@dataclass(frozen=True)
class Metrics:
    counts: dict[str, int]
    evaluable_cells: int
    fp_rate: float
    fn_rate: float
    road_iou_vs_map: float
    rate_denominator_empty: bool
    iou_denominator_empty: bool


def metrics(grid: ValidationGrid) -> Metrics:
    """Aggregate verdict counts and rates over the evaluable cells.

    fp_rate and fn_rate are fractions of TP+FP+FN+TN; road IoU versus the
    map is TP / (TP+FP+FN). Empty denominators yield 0 with a flag.
    """
    counts = grid.counts()
    evaluable = counts["TP"] + counts["FP"] + counts["FN"] + counts["TN"]
    iou_denom = counts["TP"] + counts["FP"] + counts["FN"]
    return Metrics(
        counts=counts,
        evaluable_cells=evaluable,
        fp_rate=counts["FP"] / evaluable if evaluable else 0.0,
        fn_rate=counts["FN"] / evaluable if evaluable else 0.0,
        road_iou_vs_map=counts["TP"] / iou_denom if iou_denom else 0.0,
        rate_denominator_empty=evaluable == 0,
        iou_denominator_empty=iou_denom == 0,
    )


def _default_class_colors() -> dict[str, tuple[int, int, int]]:
    return {
        VOID_NAME: (0, 0, 0),
        "road": (128, 64, 128),
        "sidewalk": (244, 35, 232),
        "parking": (250, 170, 160),
        "terrain": (152, 251, 152),
        "sky": (70, 130, 180),
        "car": (0, 0, 142),
        "truck": (0, 0, 70),
        "bus": (0, 60, 100),
        "person": (220, 20, 60),
        "rider": (255, 0, 0),
        "vegetation": (107, 142, 35),
        "building": (70, 70, 70),
        "wall": (102, 102, 156),
        "fence": (190, 153, 153),
        "pole": (153, 153, 153),
        "traffic sign": (220, 220, 0),
        "traffic light": (250, 170, 30),
    }


@dataclass(frozen=True)
class Palette:
    """Bit-exact overlay colors; fp/fn defaults are orange red and pink red."""

    class_colors: dict[str, tuple[int, int, int]] = field(default_factory=_default_class_colors)
    fp: tuple[int, int, int, int] = (255, 69, 0, 255)
    fn: tuple[int, int, int, int] = (255, 20, 102, 255)
    occluded_light: tuple[int, int, int] = (128, 128, 128)
    occluded_dark: tuple[int, int, int] = (96, 96, 96)
    unknown_class: tuple[int, int, int] = (60, 60, 60)
    map_overlay_alpha: float = 0.4


def render_overlay(
    bev: BevLabelGrid,
    map_road: BinaryGrid,
    grid: ValidationGrid,
    palette: Palette,
) -> np.ndarray:
    """RGBA overlay image, one pixel per cell.

    Base layer is the class color; the map corridor is composited over it as
    black at the palette alpha (out = (1 - alpha) * base, rounded half to
    even). FP/FN cells take the palette colors exactly, OCCLUDED cells a
    hatched gray, OUT_OF_FOV cells are fully transparent.
    """
    if not (bev.spec == map_road.spec == grid.spec):
        raise GridMismatchError("overlay inputs must share one GridSpec")
    rows, cols = grid.spec.shape
    lut = np.zeros((256, 3), dtype=np.uint8)
    for label_id in range(256):
        name = bev.label_map.get(label_id, VOID_NAME)
        lut[label_id] = palette.class_colors.get(name, palette.unknown_class)
    rgba = np.zeros((rows, cols, 4), dtype=np.uint8)
    rgba[..., :3] = lut[bev.labels]
    rgba[..., 3] = 255

    keep = 1.0 - palette.map_overlay_alpha
    shaded = np.rint(keep * rgba[..., :3][map_road.cells]).astype(np.uint8)
    rgba[..., :3][map_road.cells] = shaded

    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    checker = (rr + cc) % 2 == 0
    occ = grid.verdicts == OCCLUDED
    rgba[occ & checker, :3] = palette.occluded_light
    rgba[occ & ~checker, :3] = palette.occluded_dark
    rgba[grid.verdicts == FP] = palette.fp
    rgba[grid.verdicts == FN] = palette.fn
    rgba[grid.verdicts == OUT_OF_FOV] = (0, 0, 0, 0)
    return rgba
