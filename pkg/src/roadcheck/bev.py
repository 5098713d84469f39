"""Pinhole camera model and flat-ground warping between image and grid.

Coordinate conventions
======================
Vehicle frame (right-handed): forward, left, up. The ground plane is up = 0
and the camera sits ``height`` meters above the vehicle origin.

Camera frame (standard computer vision): X right, Y down, Z along the
optical axis. With zero pitch/yaw/roll the optical axis points forward,
so X = -left and Y = -up.

Extrinsic rotation is applied pitch, then yaw, then roll, each about the
current camera axis:
  - pitch: positive tips the optical axis downward toward the ground,
  - yaw: positive turns the view to the right,
  - roll: positive rolls the camera clockwise viewed from behind it.

Image frame: u right, v down, in pixels. Pixel (ix, iy) covers the unit
square [ix, ix+1) x [iy, iy+1), so a continuous coordinate is sampled with
floor(). A point is imaged when its camera-frame depth (Z) is positive and
(u, v) falls inside the image bounds; for ground-plane points that is
equivalent to lying below the horizon line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .geodesy import VehiclePoint
from .grids import BinaryGrid, GridSpec

VOID_ID = 0
VOID_NAME = "void"


class BehindCameraError(ValueError):
    """Requested projection of a point with non-positive camera depth."""


class AboveHorizonError(ValueError):
    """Pixel ray does not intersect the ground plane."""


class DimensionMismatchError(ValueError):
    """Mask dimensions do not match the camera image dimensions."""


class UnknownClassError(KeyError):
    """A configured class name is absent from the mask's label map."""


def resolve_class_ids(
    label_map: dict[int, str], names: set[str] | frozenset[str], *, what: str
) -> list[int]:
    """Resolve class names to label ids; every name must exist in the map."""
    by_name: dict[str, list[int]] = {}
    for label_id, name in label_map.items():
        by_name.setdefault(name, []).append(label_id)
    ids: list[int] = []
    for name in sorted(names):
        if name not in by_name:
            raise UnknownClassError(
                f"{what} class {name!r} is not in the label map (config/dataset mismatch)"
            )
        ids.extend(by_name[name])
    return ids


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus ground-relative extrinsics."""

    fx: float
    fy: float
    cx: float
    cy: float
    image_width: int
    image_height: int
    height: float
    pitch_deg: float
    yaw_deg: float = 0.0
    roll_deg: float = 0.0

    def __post_init__(self) -> None:
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ValueError(f"focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")
        if not self.height > 0.0:
            raise ValueError(f"camera height must be > 0, got {self.height}")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be positive")
        if not (0.0 <= self.cx < self.image_width):
            raise ValueError(f"cx={self.cx} outside [0, {self.image_width})")
        if not (0.0 <= self.cy < self.image_height):
            raise ValueError(f"cy={self.cy} outside [0, {self.image_height})")
        if not abs(self.pitch_deg) <= 90.0:
            raise ValueError(f"|pitch| must be <= 90 deg, got {self.pitch_deg}")


def _extrinsic_terms(camera: CameraModel) -> tuple[float, ...]:
    """Rotation entries and translation of the vehicle-to-camera transform.

    Returns (r00..r22, t0, t1, t2) as plain floats so that scalar and
    vectorized projections evaluate bit-identical expressions.
    """
    # base orientation: X = -left, Y = -up, Z = forward
    base = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
    p = math.radians(camera.pitch_deg)
    y = math.radians(camera.yaw_deg)
    r = math.radians(camera.roll_deg)
    cp, sp = math.cos(p), math.sin(p)
    cy_, sy = math.cos(y), math.sin(y)
    cr, sr = math.cos(r), math.sin(r)
    pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    yaw = np.array([[cy_, 0.0, -sy], [0.0, 1.0, 0.0], [sy, 0.0, cy_]])
    roll = np.array([[cr, sr, 0.0], [-sr, cr, 0.0], [0.0, 0.0, 1.0]])
    rot = roll @ yaw @ pitch @ base
    t = -(rot @ np.array([0.0, 0.0, camera.height]))
    return (*(float(v) for v in rot.ravel()), float(t[0]), float(t[1]), float(t[2]))


def ground_to_pixel(p: VehiclePoint, camera: CameraModel) -> tuple[float, float, float]:
    """Project a ground-plane point to continuous pixels and camera depth.

    Raises BehindCameraError when the camera-frame depth is <= 0.
    """
    r00, r01, _r02, r10, r11, _r12, r20, r21, _r22, t0, t1, t2 = _extrinsic_terms(camera)
    zc = r20 * p.forward + r21 * p.left + t2
    if zc <= 0.0:
        raise BehindCameraError(
            f"ground point (forward={p.forward}, left={p.left}) has depth {zc} <= 0"
        )
    xc = r00 * p.forward + r01 * p.left + t0
    yc = r10 * p.forward + r11 * p.left + t1
    u = camera.fx * (xc / zc) + camera.cx
    v = camera.fy * (yc / zc) + camera.cy
    return u, v, zc


def pixel_to_ground(u: float, v: float, camera: CameraModel) -> VehiclePoint:
    """Cast the ray through continuous pixel (u, v) onto the ground plane.

    Exact inverse of ``ground_to_pixel`` up to rounding. Raises
    AboveHorizonError when the ray points at or above the horizon.
    """
    terms = _extrinsic_terms(camera)
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = terms[:9]
    dx = (u - camera.cx) / camera.fx
    dy = (v - camera.cy) / camera.fy
    # world direction = R^T (dx, dy, 1)
    d_forward = r00 * dx + r10 * dy + r20
    d_left = r01 * dx + r11 * dy + r21
    d_up = r02 * dx + r12 * dy + r22
    if d_up >= 0.0:
        raise AboveHorizonError(f"pixel ({u}, {v}) does not hit the ground")
    t = camera.height / -d_up
    return VehiclePoint(forward=t * d_forward, left=t * d_left)


def project_ground(
    camera: CameraModel, forward: np.ndarray, left: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``ground_to_pixel`` over arrays of ground points.

    Returns (u, v, depth); entries with depth <= 0 carry no meaning and must
    be masked by the caller. Expressions mirror the scalar path exactly.
    """
    r00, r01, _r02, r10, r11, _r12, r20, r21, _r22, t0, t1, t2 = _extrinsic_terms(camera)
    zc = r20 * forward + r21 * left + t2
    xc = r00 * forward + r01 * left + t0
    yc = r10 * forward + r11 * left + t1
    with np.errstate(divide="ignore", invalid="ignore"):
        u = camera.fx * (xc / zc) + camera.cx
        v = camera.fy * (yc / zc) + camera.cy
    return u, v, zc


def ground_from_pixels(
    camera: CameraModel, u: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``pixel_to_ground``: returns (forward, left, hit_ground)."""
    terms = _extrinsic_terms(camera)
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = terms[:9]
    dx = (u - camera.cx) / camera.fx
    dy = (v - camera.cy) / camera.fy
    d_forward = r00 * dx + r10 * dy + r20
    d_left = r01 * dx + r11 * dy + r21
    d_up = r02 * dx + r12 * dy + r22
    hit = d_up < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(hit, camera.height / -d_up, 0.0)
        forward = t * d_forward
        left = t * d_left
    return forward, left, hit


def ground_visibility(
    camera: CameraModel, spec: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u, v, visible) for every cell center of ``spec``.

    ``visible`` is the single footprint predicate shared by the field-of-view
    grid and the warp's ``observed`` plane: positive depth and in-bounds.
    """
    forward, left = spec.cell_centers()
    u, v, depth = project_ground(camera, forward, left)
    visible = (
        (depth > 0.0)
        & (u >= 0.0)
        & (u < camera.image_width)
        & (v >= 0.0)
        & (v < camera.image_height)
    )
    return u, v, visible


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel class ids in camera image space, 8-bit, plus id -> name map.

    Ids absent from the map resolve to the reserved name "void"; id 0 is
    reserved for void.
    """

    labels: np.ndarray  # height x width, uint8
    label_map: dict[int, str]

    def __post_init__(self) -> None:
        if self.labels.ndim != 2 or self.labels.dtype != np.uint8:
            raise ValueError("labels must be a 2-D uint8 array")

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def class_name(self, label_id: int) -> str:
        return self.label_map.get(label_id, VOID_NAME)

    def save_png(self, path) -> None:
        Image.fromarray(self.labels, mode="L").save(path)


def load_mask(path, label_map: dict[int, str]) -> LabelMask:
    """Read an 8-bit single-channel mask image (PNG or PGM)."""
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValueError(
                f"mask {path} has mode {img.mode!r}; expected 8-bit single channel"
            )
        labels = np.asarray(img, dtype=np.uint8)
    return LabelMask(labels=labels, label_map=dict(label_map))


@dataclass(frozen=True)
class BevLabelGrid:
    """Class ids resampled onto the grid, with an observed plane.

    ``observed`` is false where no source pixel images the cell; those cells
    carry the void id, a state distinct from every class.
    """

    spec: GridSpec
    labels: np.ndarray  # rows x cols, uint8
    observed: np.ndarray  # rows x cols, bool
    label_map: dict[int, str]

    def __post_init__(self) -> None:
        if self.labels.shape != self.spec.shape or self.observed.shape != self.spec.shape:
            raise ValueError("label/observed shapes must match the grid spec")
        if np.any(self.labels[~self.observed] != VOID_ID):
            raise ValueError("unobserved cells must carry the void id")


def warp_to_bev(mask: LabelMask, camera: CameraModel, spec: GridSpec) -> BevLabelGrid:
    """Inverse-warp the mask onto the grid with nearest-neighbor sampling.

    Labels are categorical, so no interpolation: each visible cell center is
    projected into the image and copies the label of the pixel containing it.
    """
    if (mask.width, mask.height) != (camera.image_width, camera.image_height):
        raise DimensionMismatchError(
            f"mask is {mask.width}x{mask.height} but camera expects "
            f"{camera.image_width}x{camera.image_height}"
        )
    u, v, visible = ground_visibility(camera, spec)
    labels = np.full(spec.shape, VOID_ID, dtype=np.uint8)
    ix = np.floor(u[visible]).astype(np.int64)
    iy = np.floor(v[visible]).astype(np.int64)
    labels[visible] = mask.labels[iy, ix]
    return BevLabelGrid(
        spec=spec, labels=labels, observed=visible, label_map=dict(mask.label_map)
    )


def occluder_mask(bev: BevLabelGrid, occluder_classes: set[str] | frozenset[str]) -> BinaryGrid:
    """True where the cell's label belongs to a potentially occluding class."""
    if not occluder_classes:
        return BinaryGrid.full(bev.spec, False)
    ids = resolve_class_ids(bev.label_map, occluder_classes, what="occluder")
    return BinaryGrid(bev.spec, np.isin(bev.labels, ids))
