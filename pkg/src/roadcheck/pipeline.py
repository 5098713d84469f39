"""Frame pipeline: ingest, align, rasterize, warp, classify, report.

Per-frame outputs are ``<frame_id>.report.json``, ``<frame_id>.overlay.png``
and ``<frame_id>.verdicts.png`` (verdict ids: OUT_OF_FOV=0, TP=1, FP=2,
FN=3, TN=4, OCCLUDED=5, UNOBSERVED=6). Outputs are byte-deterministic for
identical inputs and configuration, regardless of batch parallelism.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from .bev import load_mask, warp_to_bev
from .config import FrameMeta, RunConfig, SCHEMA_VERSION
from .geodesy import GeoPose, apply_corrections
from .osm import MapGraph, RoadSet, build_roadset, parse_osm_xml
from .raster import fov_footprint, rasterize_roads
from .validate import (
    FN,
    FP,
    Region,
    classify,
    extract_regions,
    metrics,
    render_overlay,
)

# cache keys quantize the effective origin to 1e-7 deg (~1 cm), so frames
# sharing a GPS fix reuse one road set without placement error
_ORIGIN_QUANT_DIGITS = 7


class StageError(RuntimeError):
    """A pipeline stage failed for one frame."""

    def __init__(self, stage: str, frame_id: str, cause: BaseException):
        self.stage = stage
        self.frame_id = frame_id
        self.cause = cause
        super().__init__(f"frame {frame_id!r} failed at stage {stage!r}: {cause}")


@contextmanager
def _stage(name: str, frame_id: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, frame_id, exc) from exc


class PipelineCache:
    """Thread-safe caches for parsed maps and per-origin road sets.

    Values are pure functions of their keys, so results do not depend on
    which worker populates an entry first.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._graphs: dict[Path, MapGraph] = {}
        self._roadsets: dict[tuple, RoadSet] = {}

    def map_graph(self, path: Path) -> MapGraph:
        key = Path(path).resolve()
        with self._lock:
            cached = self._graphs.get(key)
        if cached is not None:
            return cached
        graph = parse_osm_xml(key.read_bytes())
        with self._lock:
            return self._graphs.setdefault(key, graph)

    def roadset(self, path: Path, effective: GeoPose, config: RunConfig) -> RoadSet:
        qlat = round(effective.lat, _ORIGIN_QUANT_DIGITS)
        qlon = round(effective.lon, _ORIGIN_QUANT_DIGITS)
        key = (
            Path(path).resolve(),
            qlat,
            qlon,
            config.map_radius_m,
            tuple(sorted(config.highway_whitelist)),
            tuple(sorted(config.width_defaults.by_class.items())),
            config.width_defaults.fallback,
            config.width_defaults.lane_width,
        )
        with self._lock:
            cached = self._roadsets.get(key)
        if cached is not None:
            return cached
        origin = GeoPose(lat=qlat, lon=qlon, heading_deg=0.0)
        roads = build_roadset(
            self.map_graph(path),
            config.highway_whitelist,
            config.width_defaults,
            origin=origin,
            radius=config.map_radius_m,
        )
        with self._lock:
            return self._roadsets.setdefault(key, roads)


def load_frame_meta(path) -> FrameMeta:
    """Read frame metadata, reporting failures as ingest-stage errors."""
    fid = Path(path).stem
    if fid.endswith(".meta"):
        fid = fid[: -len(".meta")]
    with _stage("ingest", fid):
        return FrameMeta.from_file(path)


@dataclass(frozen=True)
class FrameOutcome:
    frame_id: str
    findings: bool
    fp_cells: int
    fn_cells: int
    fp_region_count: int
    fn_region_count: int
    report_path: Path | None = None
    error: str | None = None
    error_stage: str | None = None


def _region_dict(region: Region) -> dict:
    return {
        "cell_count": region.cell_count,
        "centroid_forward_m": region.centroid_forward,
        "centroid_left_m": region.centroid_left,
        "bbox": {
            "forward_min_m": region.forward_min,
            "forward_max_m": region.forward_max,
            "left_min_m": region.left_min,
            "left_max_m": region.left_max,
        },
    }


def run_frame(
    meta: FrameMeta,
    config: RunConfig,
    out_dir,
    cache: PipelineCache | None = None,
    default_map_path: Path | None = None,
) -> FrameOutcome:
    """Validate one frame and write its artifacts. Raises StageError on failure.

    ``default_map_path`` stands in for frames whose metadata omits map_path
    (one shared map extract for a whole batch).
    """
    cache = cache or PipelineCache()
    out = Path(out_dir)
    fid = meta.frame_id

    with _stage("ingest", fid):
        map_path = meta.map_path if meta.map_path is not None else default_map_path
        if map_path is None:
            raise ValueError("frame has no map_path and no global map was given")
        if not Path(meta.mask_path).is_file():
            raise FileNotFoundError(f"mask file not found: {meta.mask_path}")
        if not Path(map_path).is_file():
            raise FileNotFoundError(f"map file not found: {map_path}")
        mask = load_mask(meta.mask_path, config.label_map)
        cache.map_graph(map_path)  # parse now so map defects fail at ingest

    with _stage("geodesy", fid):
        effective = apply_corrections(meta.pose)

    with _stage("map", fid):
        roads = cache.roadset(map_path, effective, config)
        map_road = rasterize_roads(roads, config.grid, effective)
        fov = fov_footprint(meta.camera, config.grid)

    with _stage("bev", fid):
        bev_grid = warp_to_bev(mask, meta.camera, config.grid)

    with _stage("validate", fid):
        verdicts = classify(bev_grid, map_road, fov, config.policy)
        fp_regions = extract_regions(verdicts, FP, config.policy)
        fn_regions = extract_regions(verdicts, FN, config.policy)
        stats = metrics(verdicts)
        overlay = render_overlay(bev_grid, map_road, verdicts, config.palette)

    with _stage("write", fid):
        out.mkdir(parents=True, exist_ok=True)
        report = {
            "schema_version": SCHEMA_VERSION,
            "frame_id": fid,
            "pose": {
                **meta.pose_dict(),
                "effective_lat": effective.lat,
                "effective_lon": effective.lon,
                "effective_heading_deg": effective.heading_deg,
            },
            "config": config.to_dict(),
            "counts": stats.counts,
            "metrics": {
                "evaluable_cells": stats.evaluable_cells,
                "fp_rate": stats.fp_rate,
                "fn_rate": stats.fn_rate,
                "road_iou_vs_map": stats.road_iou_vs_map,
                "rate_denominator_empty": stats.rate_denominator_empty,
                "iou_denominator_empty": stats.iou_denominator_empty,
            },
            "fp_regions": [_region_dict(r) for r in fp_regions],
            "fn_regions": [_region_dict(r) for r in fn_regions],
        }
        report_path = out / f"{fid}.report.json"
        report_path.write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        Image.fromarray(overlay, mode="RGBA").save(out / f"{fid}.overlay.png")
        Image.fromarray(verdicts.verdicts, mode="L").save(out / f"{fid}.verdicts.png")

    return FrameOutcome(
        frame_id=fid,
        findings=bool(fp_regions or fn_regions),
        fp_cells=stats.counts["FP"],
        fn_cells=stats.counts["FN"],
        fp_region_count=len(fp_regions),
        fn_region_count=len(fn_regions),
        report_path=report_path,
    )


def _frame_row(outcome: FrameOutcome) -> dict:
    row = {
        "frame_id": outcome.frame_id,
        "status": "error"
        if outcome.error
        else ("findings" if outcome.findings else "clean"),
        "fp_cells": outcome.fp_cells,
        "fn_cells": outcome.fn_cells,
        "fp_regions": outcome.fp_region_count,
        "fn_regions": outcome.fn_region_count,
    }
    if outcome.error:
        row["error"] = outcome.error
        row["error_stage"] = outcome.error_stage
    return row


def _summarize(outcomes: list[FrameOutcome]) -> dict:
    ordered = sorted(outcomes, key=lambda o: (-(o.fp_cells + o.fn_cells), o.frame_id))
    return {
        "schema_version": SCHEMA_VERSION,
        "totals": {
            "frames": len(outcomes),
            "frames_with_findings": sum(1 for o in outcomes if o.findings),
            "frames_failed": sum(1 for o in outcomes if o.error),
            "fp_cells": sum(o.fp_cells for o in outcomes),
            "fn_cells": sum(o.fn_cells for o in outcomes),
        },
        "frames": [_frame_row(o) for o in ordered],
    }


def write_summary(summary: dict, out_dir) -> Path:
    path = Path(out_dir) / "summary.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run_batch(
    frame_paths: list[Path],
    config: RunConfig,
    out_dir,
    parallelism: int | None = None,
    default_map_path: Path | None = None,
) -> tuple[dict, int]:
    """Validate many frames with bounded parallelism.

    Per-frame failures are recorded and the batch continues. Exit code is 1
    only when every frame fails, 2 when any frame has surviving FP/FN
    regions, 0 otherwise.
    """
    workers = max(1, parallelism if parallelism is not None else config.parallelism)
    cache = PipelineCache()

    def run_one(path: Path) -> FrameOutcome:
        try:
            meta = load_frame_meta(path)
            return run_frame(
                meta, config, out_dir, cache=cache, default_map_path=default_map_path
            )
        except StageError as exc:
            return FrameOutcome(
                frame_id=exc.frame_id,
                findings=False,
                fp_cells=0,
                fn_cells=0,
                fp_region_count=0,
                fn_region_count=0,
                error=str(exc.cause),
                error_stage=exc.stage,
            )

    if not frame_paths:
        outcomes: list[FrameOutcome] = []
    elif workers == 1:
        outcomes = [run_one(p) for p in frame_paths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, frame_paths))

    summary = _summarize(outcomes)
    write_summary(summary, out_dir)
    if outcomes and all(o.error for o in outcomes):
        code = 1
    elif any(o.findings for o in outcomes):
        code = 2
    else:
        code = 0
    return summary, code


def rebuild_summary(out_dir) -> tuple[dict, int]:
    """Regenerate summary.json from the per-frame reports in a directory."""
    outcomes = []
    for report_path in sorted(Path(out_dir).glob("*.report.json")):
        data = json.loads(report_path.read_text(encoding="utf-8"))
        outcomes.append(
            FrameOutcome(
                frame_id=data["frame_id"],
                findings=bool(data["fp_regions"] or data["fn_regions"]),
                fp_cells=data["counts"]["FP"],
                fn_cells=data["counts"]["FN"],
                fp_region_count=len(data["fp_regions"]),
                fn_region_count=len(data["fn_regions"]),
                report_path=report_path,
            )
        )
    summary = _summarize(outcomes)
    write_summary(summary, out_dir)
    return summary, 2 if any(o.findings for o in outcomes) else 0
