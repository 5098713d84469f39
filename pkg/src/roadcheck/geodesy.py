"""Coordinate frames shared by map and camera data.

Three frames are used throughout the package:

- WGS84: latitude/longitude in degrees, heading in degrees clockwise from
  true north, normalized to [0, 360).
- Local: east/north meters on an equirectangular tangent plane around a
  declared origin pose. Valid only within ~0.1 deg of latitude of that
  origin; farther points must re-anchor the origin.
- Vehicle: forward along the heading, left 90 deg counterclockwise from it.

All functions are pure and operate on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

METERS_PER_DEG_LAT = 111_320.0
MAX_LAT_OFFSET_DEG = 0.1


class OutOfRegimeError(ValueError):
    """Point lies too far from the origin for the tangent-plane projection."""


def normalize_heading(deg: float) -> float:
    """Fold a heading into [0, 360)."""
    h = math.fmod(deg, 360.0)
    return h + 360.0 if h < 0.0 else h


def _check_wgs84(lat: float, lon: float) -> None:
    if not (-90.0 <= lat <= 90.0):
        raise ValueError(f"latitude {lat!r} outside [-90, 90]")
    if not (-180.0 <= lon <= 180.0):
        raise ValueError(f"longitude {lon!r} outside [-180, 180]")


@dataclass(frozen=True)
class GeoPose:
    """WGS84 position plus compass heading, with optional metric corrections.

    Corrections are additive offsets (meters east/north, degrees of heading)
    used to repair localization error before the pose anchors any geometry;
    ``apply_corrections`` folds them in and zeroes them.
    """

    lat: float
    lon: float
    heading_deg: float
    correction_east_m: float = 0.0
    correction_north_m: float = 0.0
    correction_heading_deg: float = 0.0

    def __post_init__(self) -> None:
        _check_wgs84(self.lat, self.lon)
        object.__setattr__(self, "heading_deg", normalize_heading(self.heading_deg))


@dataclass(frozen=True)
class LocalPoint:
    """East/north meters relative to a declared origin GeoPose."""

    east: float
    north: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.east) and math.isfinite(self.north)):
            raise ValueError(f"non-finite local point ({self.east}, {self.north})")


@dataclass(frozen=True)
class VehiclePoint:
    """Meters forward of and to the left of the vehicle."""

    forward: float
    left: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.forward) and math.isfinite(self.left)):
            raise ValueError(f"non-finite vehicle point ({self.forward}, {self.left})")


def heading_sin_cos(heading_deg: float) -> tuple[float, float]:
    """Sine and cosine of a compass heading, shared by all rotation paths."""
    h = math.radians(heading_deg)
    return math.sin(h), math.cos(h)


def wgs84_to_local(lat: float, lon: float, origin: GeoPose) -> LocalPoint:
    """Project a WGS84 point onto the local tangent plane at ``origin``.

    north = (lat - origin.lat) * 111320; east scales by cos(origin.lat).
    Raises OutOfRegimeError beyond 0.1 deg of latitude from the origin.
    """
    _check_wgs84(lat, lon)
    if abs(lat - origin.lat) >= MAX_LAT_OFFSET_DEG:
        raise OutOfRegimeError(
            f"point latitude {lat} is {abs(lat - origin.lat):.4f} deg from origin "
            f"{origin.lat}; tangent-plane regime allows < {MAX_LAT_OFFSET_DEG} deg"
        )
    north = (lat - origin.lat) * METERS_PER_DEG_LAT
    east = (lon - origin.lon) * METERS_PER_DEG_LAT * math.cos(math.radians(origin.lat))
    return LocalPoint(east=east, north=north)


def local_to_vehicle(p: LocalPoint, pose: GeoPose) -> VehiclePoint:
    """Rotate a local east/north point into the vehicle frame of ``pose``.

    Pure rotation by the heading; corrections must already be folded in.
    """
    s, c = heading_sin_cos(pose.heading_deg)
    return VehiclePoint(
        forward=p.east * s + p.north * c,
        left=p.north * s - p.east * c,
    )


def vehicle_to_local(p: VehiclePoint, pose: GeoPose) -> LocalPoint:
    """Inverse of ``local_to_vehicle`` (rotation back into east/north)."""
    s, c = heading_sin_cos(pose.heading_deg)
    return LocalPoint(
        east=p.forward * s - p.left * c,
        north=p.forward * c + p.left * s,
    )


def apply_corrections(pose: GeoPose) -> GeoPose:
    """Fold metric corrections into lat/lon/heading and zero them.

    Inverts the tangent-plane linearization at the pose's own latitude, so a
    +111.32 m north correction at any latitude moves lat by +0.001 deg.
    Idempotent after one application.
    """
    lat = pose.lat + pose.correction_north_m / METERS_PER_DEG_LAT
    lon = pose.lon + pose.correction_east_m / (
        METERS_PER_DEG_LAT * math.cos(math.radians(pose.lat))
    )
    heading = pose.heading_deg + pose.correction_heading_deg
    return GeoPose(lat=lat, lon=lon, heading_deg=heading)


def shift_pose(pose: GeoPose, east_m: float, north_m: float, heading_deg: float = 0.0) -> GeoPose:
    """Return ``pose`` with additional correction offsets accumulated."""
    return replace(
        pose,
        correction_east_m=pose.correction_east_m + east_m,
        correction_north_m=pose.correction_north_m + north_m,
        correction_heading_deg=pose.correction_heading_deg + heading_deg,
    )
