"""Shared test utilities: independent brute-force oracles and a pipeline driver.

The oracles re-implement the per-cell contracts with plain scalar loops so
the library's vectorized paths are checked against code that shares no
implementation with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from roadcheck.bev import BevLabelGrid, warp_to_bev
from roadcheck.config import RunConfig
from roadcheck.geodesy import apply_corrections
from roadcheck.grids import BinaryGrid, GridSpec
from roadcheck.osm import RoadSet, build_roadset, parse_osm_xml
from roadcheck.raster import fov_footprint, rasterize_roads
from roadcheck.synth import SyntheticScene
from roadcheck.validate import (
    FN,
    FP,
    Metrics,
    Region,
    ValidationGrid,
    ValidationPolicy,
    classify,
    extract_regions,
    metrics,
)


def brute_rasterize(roads: RoadSet, spec: GridSpec, heading_deg: float) -> np.ndarray:
    """Scalar per-cell point-to-segment corridor test (the rasterizer contract)."""
    sin_h = math.sin(math.radians(heading_deg))
    cos_h = math.cos(math.radians(heading_deg))
    out = np.zeros(spec.shape, dtype=bool)
    for r in range(spec.rows):
        for c in range(spec.cols):
            forward = spec.forward_max - (r + 0.5) * spec.cell_size
            left = spec.lateral_half_width - (c + 0.5) * spec.cell_size
            pe = forward * sin_h - left * cos_h
            pn = forward * cos_h + left * sin_h
            hit = False
            for road in roads.roads:
                half = road.width * 0.5
                half2 = half * half
                pts = road.points
                for a, b in zip(pts, pts[1:]):
                    ex, ey = b.east - a.east, b.north - a.north
                    seg_len2 = ex * ex + ey * ey
                    if seg_len2 == 0.0:
                        dx, dy = pe - a.east, pn - a.north
                    else:
                        t = ((pe - a.east) * ex + (pn - a.north) * ey) / seg_len2
                        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
                        dx = pe - (a.east + t * ex)
                        dy = pn - (a.north + t * ey)
                    if dx * dx + dy * dy <= half2:
                        hit = True
                        break
                if hit:
                    break
            out[r, c] = hit
    return out


def brute_disk_filter(cells: np.ndarray, band: float, cell_size: float, erode: bool) -> np.ndarray:
    """Scalar disk min/max filter over in-grid neighbors within ``band`` meters."""
    rows, cols = cells.shape
    reach = int(band // cell_size) + 1
    out = np.zeros_like(cells)
    for r in range(rows):
        for c in range(cols):
            acc = True if erode else False
            for dr in range(-reach, reach + 1):
                for dc in range(-reach, reach + 1):
                    if (dr * cell_size) ** 2 + (dc * cell_size) ** 2 > band * band:
                        continue
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < rows and 0 <= nc < cols):
                        continue
                    if erode:
                        acc = acc and bool(cells[nr, nc])
                    else:
                        acc = acc or bool(cells[nr, nc])
            out[r, c] = acc
    return out


def brute_flood_regions(mask: np.ndarray) -> list[set[tuple[int, int]]]:
    """4-connected components by scalar flood fill."""
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    regions = []
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c] or seen[r, c]:
                continue
            stack = [(r, c)]
            seen[r, c] = True
            comp = set()
            while stack:
                cr, cc = stack.pop()
                comp.add((cr, cc))
                for nr, nc in ((cr - 1, cc), (cr + 1, cc), (cr, cc - 1), (cr, cc + 1)):
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        stack.append((nr, nc))
            regions.append(comp)
    return regions


def cells_iou(cells: tuple[tuple[int, int], ...], reference: np.ndarray) -> float:
    """IoU between a region's cell set and a boolean reference grid."""
    a = set(cells)
    b = {(int(r), int(c)) for r, c in zip(*np.nonzero(reference))}
    return len(a & b) / len(a | b) if (a | b) else 1.0


@dataclass
class SceneRun:
    effective_pose: object
    roads: RoadSet
    map_road: BinaryGrid
    fov: BinaryGrid
    bev: BevLabelGrid
    verdicts: ValidationGrid
    fp_regions: list[Region]
    fn_regions: list[Region]
    stats: Metrics


def run_scene(
    scene: SyntheticScene, config: RunConfig, policy: ValidationPolicy | None = None
) -> SceneRun:
    """Drive a synthetic scene through the same stages the pipeline runs."""
    policy = policy or config.policy
    effective = apply_corrections(scene.pose)
    graph = parse_osm_xml(scene.map_xml)
    roads = build_roadset(
        graph,
        config.highway_whitelist,
        config.width_defaults,
        origin=effective,
        radius=config.map_radius_m,
    )
    map_road = rasterize_roads(roads, config.grid, effective)
    fov = fov_footprint(scene.camera, config.grid)
    bev = warp_to_bev(scene.mask, scene.camera, config.grid)
    verdicts = classify(bev, map_road, fov, policy)
    return SceneRun(
        effective_pose=effective,
        roads=roads,
        map_road=map_road,
        fov=fov,
        bev=bev,
        verdicts=verdicts,
        fp_regions=extract_regions(verdicts, FP, policy),
        fn_regions=extract_regions(verdicts, FN, policy),
        stats=metrics(verdicts),
    )
