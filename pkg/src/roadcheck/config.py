"""Run configuration and frame metadata: JSON wire formats and defaults.

Every report embeds the full effective configuration so results are
self-describing; serialization is deterministic (sorted keys, sets as
sorted lists).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .bev import CameraModel
from .geodesy import GeoPose
from .grids import GridSpec
from .osm import DEFAULT_HIGHWAY_WHITELIST, WidthDefaults
from .validate import Palette, ValidationPolicy

SCHEMA_VERSION = "1"


def default_grid() -> GridSpec:
    return GridSpec.create(
        cell_size=0.2, forward_min=10.0, forward_max=60.0, lateral_half_width=20.0
    )


def default_label_map() -> dict[int, str]:
    return {
        0: "void",
        1: "road",
        2: "terrain",
        3: "sky",
        4: "car",
        5: "vegetation",
        6: "truck",
        7: "bus",
        8: "person",
        9: "rider",
        10: "building",
        11: "wall",
        12: "fence",
        13: "pole",
        14: "traffic sign",
        15: "traffic light",
        16: "sidewalk",
        17: "parking",
    }


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = field(default_factory=default_grid)
    policy: ValidationPolicy = field(default_factory=ValidationPolicy)
    highway_whitelist: frozenset[str] = DEFAULT_HIGHWAY_WHITELIST
    width_defaults: WidthDefaults = field(default_factory=WidthDefaults)
    palette: Palette = field(default_factory=Palette)
    label_map: dict[int, str] = field(default_factory=default_label_map)
    map_radius_m: float = 150.0
    parallelism: int = 1

    def to_dict(self) -> dict:
        """Full effective configuration, deterministic and JSON-ready."""
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": {
                "cell_size_m": self.grid.cell_size,
                "forward_min_m": self.grid.forward_min,
                "forward_max_m": self.grid.forward_max,
                "lateral_half_width_m": self.grid.lateral_half_width,
                "rows": self.grid.rows,
                "cols": self.grid.cols,
            },
            "policy": {
                "road_classes": sorted(self.policy.road_classes),
                "occluder_classes": sorted(self.policy.occluder_classes),
                "edge_band_m": self.policy.edge_band,
                "min_region_cells": self.policy.min_region_cells,
            },
            "highway_whitelist": sorted(self.highway_whitelist),
            "width_defaults": {
                "by_class": dict(sorted(self.width_defaults.by_class.items())),
                "fallback_m": self.width_defaults.fallback,
                "lane_width_m": self.width_defaults.lane_width,
            },
            "palette": {
                "class_colors": {
                    name: list(rgb)
                    for name, rgb in sorted(self.palette.class_colors.items())
                },
                "fp": list(self.palette.fp),
                "fn": list(self.palette.fn),
                "occluded_light": list(self.palette.occluded_light),
                "occluded_dark": list(self.palette.occluded_dark),
                "unknown_class": list(self.palette.unknown_class),
                "map_overlay_alpha": self.palette.map_overlay_alpha,
            },
            "label_map": {str(k): v for k, v in sorted(self.label_map.items())},
            "map_radius_m": self.map_radius_m,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a config from a (possibly partial) JSON document."""
        kwargs: dict = {}
        if "grid" in data:
            g = data["grid"]
            kwargs["grid"] = GridSpec.create(
                cell_size=g["cell_size_m"],
                forward_min=g["forward_min_m"],
                forward_max=g["forward_max_m"],
                lateral_half_width=g["lateral_half_width_m"],
            )
        if "policy" in data:
            p = data["policy"]
            defaults = ValidationPolicy()
            kwargs["policy"] = ValidationPolicy(
                road_classes=frozenset(p.get("road_classes", defaults.road_classes)),
                occluder_classes=frozenset(
                    p.get("occluder_classes", defaults.occluder_classes)
                ),
                edge_band=p.get("edge_band_m", defaults.edge_band),
                min_region_cells=p.get("min_region_cells", defaults.min_region_cells),
            )
        if "highway_whitelist" in data:
            kwargs["highway_whitelist"] = frozenset(data["highway_whitelist"])
        if "width_defaults" in data:
            w = data["width_defaults"]
            base = WidthDefaults()
            kwargs["width_defaults"] = WidthDefaults(
                by_class=dict(w.get("by_class", base.by_class)),
                fallback=w.get("fallback_m", base.fallback),
                lane_width=w.get("lane_width_m", base.lane_width),
            )
        if "palette" in data:
            pal = data["palette"]
            base_pal = Palette()
            kwargs["palette"] = Palette(
                class_colors={
                    name: tuple(rgb)
                    for name, rgb in pal.get(
                        "class_colors", base_pal.class_colors
                    ).items()
                },
                fp=tuple(pal.get("fp", base_pal.fp)),
                fn=tuple(pal.get("fn", base_pal.fn)),
                occluded_light=tuple(pal.get("occluded_light", base_pal.occluded_light)),
                occluded_dark=tuple(pal.get("occluded_dark", base_pal.occluded_dark)),
                unknown_class=tuple(pal.get("unknown_class", base_pal.unknown_class)),
                map_overlay_alpha=pal.get("map_overlay_alpha", base_pal.map_overlay_alpha),
            )
        if "label_map" in data:
            kwargs["label_map"] = {int(k): v for k, v in data["label_map"].items()}
        if "map_radius_m" in data:
            kwargs["map_radius_m"] = float(data["map_radius_m"])
        if "parallelism" in data:
            kwargs["parallelism"] = int(data["parallelism"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class FrameMeta:
    """One frame's pose, camera and input file references."""

    frame_id: str
    pose: GeoPose
    camera: CameraModel
    mask_path: Path
    map_path: Path | None = None

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "FrameMeta":
        base = base_dir or Path(".")
        cam = data["camera"]
        map_path = data.get("map_path")
        return cls(
            frame_id=str(data["frame_id"]),
            pose=GeoPose(
                lat=float(data["lat"]),
                lon=float(data["lon"]),
                heading_deg=float(data["heading_deg"]),
                correction_east_m=float(data.get("correction_east_m", 0.0)),
                correction_north_m=float(data.get("correction_north_m", 0.0)),
                correction_heading_deg=float(data.get("correction_heading_deg", 0.0)),
            ),
            camera=CameraModel(
                fx=float(cam["fx"]),
                fy=float(cam["fy"]),
                cx=float(cam["cx"]),
                cy=float(cam["cy"]),
                image_width=int(cam["width"]),
                image_height=int(cam["height"]),
                height=float(cam["height_m"]),
                pitch_deg=float(cam["pitch_deg"]),
                yaw_deg=float(cam.get("yaw_deg", 0.0)),
                roll_deg=float(cam.get("roll_deg", 0.0)),
            ),
            mask_path=base / data["mask_path"],
            map_path=base / map_path if map_path is not None else None,
        )

    @classmethod
    def from_file(cls, path) -> "FrameMeta":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(data, base_dir=path.parent)

    def pose_dict(self) -> dict:
        return {
            "lat": self.pose.lat,
            "lon": self.pose.lon,
            "heading_deg": self.pose.heading_deg,
            "correction_east_m": self.pose.correction_east_m,
            "correction_north_m": self.pose.correction_north_m,
            "correction_heading_deg": self.pose.correction_heading_deg,
        }
