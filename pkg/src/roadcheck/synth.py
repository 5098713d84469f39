"""Synthetic scenes: masks rendered from a known map, with known defects.

A scene renders a three-class world (road / terrain / sky) from a road set
through the pinhole camera, then optionally injects a defect: a pose that is
wrong by a known offset, a road that is too wide or too narrow, or a road
that is missing from the rendered view. The written fixtures (mask image,
frame metadata, map XML) are ordinary pipeline inputs, so the whole
validation chain can be checked end to end against known ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bev import CameraModel, LabelMask, ground_from_pixels
from .config import default_label_map
from .geodesy import (
    GeoPose,
    LocalPoint,
    METERS_PER_DEG_LAT,
    heading_sin_cos,
    shift_pose,
)
from .osm import (
    DEFAULT_HIGHWAY_WHITELIST,
    MapGraph,
    RoadSet,
    Way,
    WidthDefaults,
    build_roadset,
    serialize_map_graph,
)

SYNTH_LABELS = {"void": 0, "road": 1, "terrain": 2, "sky": 3, "car": 4, "vegetation": 5}

_ROW_CHUNK = 64


class UnknownWayError(KeyError):
    """Perturbation references a way id absent from the road set."""


class UnknownScenarioError(KeyError):
    """No built-in scenario with that name."""


def default_camera(scale: float = 1.0) -> CameraModel:
    """Stand-in front camera; ``scale`` shrinks the image for faster tests."""
    return CameraModel(
        fx=1000.0 * scale,
        fy=1000.0 * scale,
        cx=960.0 * scale,
        cy=540.0 * scale,
        image_width=round(1920 * scale),
        image_height=round(1080 * scale),
        height=1.5,
        pitch_deg=10.0,
    )


def render_mask(roads: RoadSet, pose: GeoPose, camera: CameraModel) -> LabelMask:
    """Render the ground-truth mask seen by ``camera`` at ``pose``.

    Each pixel's center ray is cast onto the ground plane: no intersection
    means sky; otherwise road iff the ground point is inside any corridor
    (the same distance predicate the rasterizer uses), else terrain.
    """
    s, c = heading_sin_cos(pose.heading_deg)
    width, height = camera.image_width, camera.image_height
    labels = np.full((height, width), SYNTH_LABELS["sky"], dtype=np.uint8)
    u_row = np.arange(width, dtype=np.float64) + 0.5
    for row0 in range(0, height, _ROW_CHUNK):
        row1 = min(row0 + _ROW_CHUNK, height)
        v = (np.arange(row0, row1, dtype=np.float64) + 0.5)[:, None]
        u = np.broadcast_to(u_row, (row1 - row0, width))
        gf, gl, hit = ground_from_pixels(camera, u, v)
        pe = gf * s - gl * c
        pn = gf * c + gl * s
        on_road = np.zeros(gf.shape, dtype=bool)
        for road in roads.roads:
            half = road.width * 0.5
            half2 = half * half
            for a, b in zip(road.points, road.points[1:]):
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
                on_road |= dx * dx + dy * dy <= half2
        chunk = np.where(on_road, SYNTH_LABELS["road"], SYNTH_LABELS["terrain"])
        labels[row0:row1][hit] = chunk[hit].astype(np.uint8)
    return LabelMask(labels=labels, label_map=_label_map())


def _label_map() -> dict[int, str]:
    # full default table; the renderer only emits the SYNTH_LABELS subset,
    # but occluder stamping and default policies may reference the rest
    return default_label_map()


def stamp_rectangle(mask: LabelMask, label_id: int, top: int, left: int, bottom: int, right: int) -> LabelMask:
    """Copy of the mask with a rectangle of ``label_id`` painted over it."""
    labels = mask.labels.copy()
    labels[top:bottom, left:right] = label_id
    return LabelMask(labels=labels, label_map=dict(mask.label_map))


@dataclass(frozen=True)
class Perturbation:
    """A controlled defect injected into a scene.

    Kinds: none, gps_offset (east_m/north_m), heading_offset (heading_deg),
    widen_road / shrink_road (way_id, delta_m), drop_way (way_id).
    """

    kind: str
    way_id: int | None = None
    east_m: float = 0.0
    north_m: float = 0.0
    heading_deg: float = 0.0
    delta_m: float = 0.0

    _KINDS = ("none", "gps_offset", "heading_offset", "widen_road", "shrink_road", "drop_way")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind in ("widen_road", "shrink_road"):
            if self.way_id is None:
                raise ValueError(f"{self.kind} requires a way id")
            if not self.delta_m > 0.0:
                raise ValueError(f"{self.kind} delta must be > 0, got {self.delta_m}")
        if self.kind == "drop_way" and self.way_id is None:
            raise ValueError("drop_way requires a way id")

    @classmethod
    def none(cls) -> "Perturbation":
        return cls(kind="none")

    @classmethod
    def gps_offset(cls, east_m: float, north_m: float) -> "Perturbation":
        return cls(kind="gps_offset", east_m=east_m, north_m=north_m)

    @classmethod
    def heading_offset(cls, heading_deg: float) -> "Perturbation":
        return cls(kind="heading_offset", heading_deg=heading_deg)

    @classmethod
    def widen_road(cls, way_id: int, extra_m: float) -> "Perturbation":
        return cls(kind="widen_road", way_id=way_id, delta_m=extra_m)

    @classmethod
    def shrink_road(cls, way_id: int, less_m: float) -> "Perturbation":
        return cls(kind="shrink_road", way_id=way_id, delta_m=less_m)

    @classmethod
    def drop_way(cls, way_id: int) -> "Perturbation":
        return cls(kind="drop_way", way_id=way_id)


def _replace_road(roads: RoadSet, way_id: int, fn) -> RoadSet:
    if not any(r.way_id == way_id for r in roads.roads):
        raise UnknownWayError(f"way {way_id} not present in road set")
    out = []
    for road in roads.roads:
        if road.way_id == way_id:
            road = fn(road)
            if road is None:
                continue
        out.append(road)
    return RoadSet(roads=tuple(out))


def apply_perturbation(
    roads: RoadSet, pose: GeoPose, p: Perturbation
) -> tuple[RoadSet, GeoPose]:
    """Apply one perturbation, returning the perturbed road set and pose.

    gps/heading offsets poison the pose's correction fields so that the
    reported pose is wrong by exactly the given amount; geometry kinds edit
    one road. ``none`` is the identity.
    """
    if p.kind == "none":
        return roads, pose
    if p.kind == "gps_offset":
        return roads, shift_pose(pose, p.east_m, p.north_m)
    if p.kind == "heading_offset":
        return roads, shift_pose(pose, 0.0, 0.0, p.heading_deg)
    if p.kind == "widen_road":
        return _replace_road(roads, p.way_id, lambda r: replace(r, width=r.width + p.delta_m)), pose
    if p.kind == "shrink_road":
        def shrink(r):
            if r.width - p.delta_m <= 0.0:
                raise ValueError(
                    f"shrinking way {p.way_id} by {p.delta_m} leaves non-positive width"
                )
            return replace(r, width=r.width - p.delta_m)

        return _replace_road(roads, p.way_id, shrink), pose
    if p.kind == "drop_way":
        return _replace_road(roads, p.way_id, lambda r: None), pose
    raise AssertionError(f"unhandled kind {p.kind}")


@dataclass(frozen=True)
class SyntheticScene:
    """A rendered scene plus everything needed to validate or persist it.

    ``pose`` is the pose written to frame metadata (it carries any injected
    localization error); ``true_pose`` is the pose the mask was rendered at.
    The mask always comes from ``perturbed_roadset``; the map XML always
    serializes the truth.
    """

    scenario: str
    mask: LabelMask
    pose: GeoPose
    camera: CameraModel
    truth_roadset: RoadSet
    perturbed_roadset: RoadSet
    true_pose: GeoPose
    map_xml: bytes

    def __post_init__(self) -> None:
        if (self.mask.width, self.mask.height) != (
            self.camera.image_width,
            self.camera.image_height,
        ):
            raise ValueError("mask dimensions must equal camera image dimensions")


_BASE_LAT = 49.0
_BASE_LON = 8.4


@dataclass(frozen=True)
class _ScenarioDef:
    heading_deg: float
    # way id -> (polyline of local (east, north) meters, tags)
    ways: tuple[tuple[int, tuple[tuple[float, float], ...], dict[str, str]], ...]
    perturbation: Perturbation


def _road_tags(width: float | None = None) -> dict[str, str]:
    tags = {"highway": "residential"}
    if width is not None:
        tags["width"] = str(width)
    return tags


SCENARIOS: dict[str, _ScenarioDef] = {
    # plain straight road ahead
    "straight": _ScenarioDef(
        heading_deg=0.0,
        ways=((100, ((0.0, -30.0), (0.0, 80.0)), _road_tags(6.0)),),
        perturbation=Perturbation.none(),
    ),
    # gentle bend to the right starting ~15 m ahead
    "curve": _ScenarioDef(
        heading_deg=0.0,
        ways=(
            (110, ((0.0, -30.0), (0.0, 15.0), (3.0, 35.0), (10.0, 55.0)), _road_tags(6.0)),
        ),
        perturbation=Perturbation.none(),
    ),
    # vehicle heading east with a perpendicular crossing 30 m ahead
    "intersection": _ScenarioDef(
        heading_deg=90.0,
        ways=(
            (100, ((-30.0, 0.0), (80.0, 0.0)), _road_tags(6.0)),
            (120, ((30.0, -50.0), (30.0, 50.0)), _road_tags(6.0)),
        ),
        perturbation=Perturbation.none(),
    ),
    # dead-end road ahead whose rendered width is 2 m too large
    "widen": _ScenarioDef(
        heading_deg=0.0,
        ways=((130, ((0.0, -30.0), (0.0, 35.0)), _road_tags(6.0)),),
        perturbation=Perturbation.widen_road(130, 2.0),
    ),
    # side road to the right that the rendered view is missing
    "drop_branch": _ScenarioDef(
        heading_deg=0.0,
        ways=(
            (100, ((0.0, -30.0), (0.0, 80.0)), _road_tags(6.0)),
            (140, ((4.0, 30.0), (60.0, 30.0)), _road_tags(6.0)),
        ),
        perturbation=Perturbation.drop_way(140),
    ),
    # straight road with the reported position 5 m east of the true one
    "gps_offset": _ScenarioDef(
        heading_deg=0.0,
        ways=((100, ((0.0, -30.0), (0.0, 80.0)), _road_tags(6.0)),),
        perturbation=Perturbation.gps_offset(east_m=5.0, north_m=0.0),
    ),
}


def _scenario_graph(defn: _ScenarioDef) -> MapGraph:
    cos_lat = math.cos(math.radians(_BASE_LAT))
    nodes: dict[int, tuple[float, float]] = {}
    ways = []
    next_node = 1
    for way_id, points, tags in defn.ways:
        refs = []
        for east, north in points:
            lat = _BASE_LAT + north / METERS_PER_DEG_LAT
            lon = _BASE_LON + east / (METERS_PER_DEG_LAT * cos_lat)
            nodes[next_node] = (lat, lon)
            refs.append(next_node)
            next_node += 1
        ways.append(Way(id=way_id, node_refs=tuple(refs), tags=dict(tags)))
    return MapGraph(nodes=nodes, ways=tuple(ways))


def build_scene(
    name: str,
    camera: CameraModel | None = None,
    map_radius: float = 150.0,
    width_defaults: WidthDefaults | None = None,
) -> SyntheticScene:
    """Assemble a built-in scenario deterministically."""
    if name not in SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}"
        )
    defn = SCENARIOS[name]
    camera = camera or default_camera()
    graph = _scenario_graph(defn)
    true_pose = GeoPose(lat=_BASE_LAT, lon=_BASE_LON, heading_deg=defn.heading_deg)
    truth = build_roadset(
        graph,
        DEFAULT_HIGHWAY_WHITELIST,
        width_defaults or WidthDefaults(),
        origin=true_pose,
        radius=map_radius,
    )
    perturbed, meta_pose = apply_perturbation(truth, true_pose, defn.perturbation)
    mask = render_mask(perturbed, true_pose, camera)
    return SyntheticScene(
        scenario=name,
        mask=mask,
        pose=meta_pose,
        camera=camera,
        truth_roadset=truth,
        perturbed_roadset=perturbed,
        true_pose=true_pose,
        map_xml=serialize_map_graph(graph),
    )


def camera_to_dict(camera: CameraModel) -> dict:
    return {
        "fx": camera.fx,
        "fy": camera.fy,
        "cx": camera.cx,
        "cy": camera.cy,
        "width": camera.image_width,
        "height": camera.image_height,
        "height_m": camera.height,
        "pitch_deg": camera.pitch_deg,
        "yaw_deg": camera.yaw_deg,
        "roll_deg": camera.roll_deg,
    }


def write_scenario(name: str, out_dir, camera: CameraModel | None = None) -> dict[str, Path]:
    """Write mask image, frame metadata and map XML for a scenario."""
    scene = build_scene(name, camera=camera)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mask_path = out / f"{name}.mask.png"
    map_path = out / f"{name}.map.osm"
    meta_path = out / f"{name}.meta.json"
    scene.mask.save_png(mask_path)
    map_path.write_bytes(scene.map_xml)
    meta = {
        "frame_id": name,
        "lat": scene.pose.lat,
        "lon": scene.pose.lon,
        "heading_deg": scene.pose.heading_deg,
        "correction_east_m": scene.pose.correction_east_m,
        "correction_north_m": scene.pose.correction_north_m,
        "correction_heading_deg": scene.pose.correction_heading_deg,
        "camera": camera_to_dict(scene.camera),
        "mask_path": mask_path.name,
        "map_path": map_path.name,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"mask": mask_path, "map": map_path, "meta": meta_path}
