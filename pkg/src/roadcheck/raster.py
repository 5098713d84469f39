"""Rasterization of road corridors and the camera footprint onto the grid.

A cell belongs to a road corridor iff the distance from its center to the
road's centerline polyline is at most half the road width (minimum
point-to-segment distance, so corridor ends are rounded). This per-cell
predicate is the contract: any optimization must reproduce it cell-exact.
"""

from __future__ import annotations

import numpy as np

from .bev import CameraModel, ground_visibility
from .geodesy import GeoPose, heading_sin_cos
from .grids import BinaryGrid, GridSpec
from .osm import RoadSet


def rasterize_roads(roads: RoadSet, spec: GridSpec, pose: GeoPose) -> BinaryGrid:
    """Mark every cell whose center lies inside any road corridor.

    Cell centers are rotated from the vehicle frame into the local east/north
    frame using the pose heading (corrections must already be folded in);
    roads stay in the local frame they were built in.
    """
    s, c = heading_sin_cos(pose.heading_deg)
    forward, left = spec.cell_centers()
    pe = forward * s - left * c
    pn = forward * c + left * s
    inside = np.zeros(spec.shape, dtype=bool)
    for road in roads.roads:
        half = road.width * 0.5
        half2 = half * half
        pts = road.points
        for a, b in zip(pts, pts[1:]):
            ex, ey = b.east - a.east, b.north - a.north
            seg_len2 = ex * ex + ey * ey
            if seg_len2 == 0.0:
                dx = pe - a.east
                dy = pn - a.north
            else:
                t = ((pe - a.east) * ex + (pn - a.north) * ey) / seg_len2
                np.clip(t, 0.0, 1.0, out=t)
                dx = pe - (a.east + t * ex)
                dy = pn - (a.north + t * ey)
            inside |= dx * dx + dy * dy <= half2
    return BinaryGrid(spec, inside)


def fov_footprint(camera: CameraModel, spec: GridSpec) -> BinaryGrid:
    """Ground cells whose centers the camera images.

    A cell is inside the footprint iff its center projects with positive
    depth into the image bounds; for ground-plane points that is exactly the
    region below the horizon line, so the footprint is the camera's ground
    trapezoid clipped to the grid.
    """
    _u, _v, visible = ground_visibility(camera, spec)
    return BinaryGrid(spec, visible)
