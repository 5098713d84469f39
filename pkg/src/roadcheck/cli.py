"""Command-line entry point.

Exit codes: 0 = validation ran and found nothing, 2 = validation ran and
FP/FN regions survived filtering, 1 = error (shell scripts can triage large
batches on the code alone).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import RunConfig
from .pipeline import StageError, load_frame_meta, rebuild_summary, run_batch, run_frame
from .synth import SCENARIOS, UnknownScenarioError, write_scenario


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_file(path)


@click.group()
def main() -> None:
    """Validate drivable-area segmentation masks against street-map roads."""


@main.command()
@click.option("--frame", "frame_path", required=True, type=click.Path(), help="Frame metadata JSON.")
@click.option("--config", "config_path", type=click.Path(), help="Run configuration JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--map", "map_path", type=click.Path(), help="Map XML used when frame metadata has no map_path.")
def validate(frame_path: str, config_path: str | None, out_dir: str, map_path: str | None) -> None:
    """Validate a single frame and write report + overlay artifacts."""
    try:
        config = _load_config(config_path)
        meta = load_frame_meta(frame_path)
        outcome = run_frame(
            meta, config, out_dir,
            default_map_path=Path(map_path) if map_path else None,
        )
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(
        f"{outcome.frame_id}: FP regions {outcome.fp_region_count}, "
        f"FN regions {outcome.fn_region_count} "
        f"(FP cells {outcome.fp_cells}, FN cells {outcome.fn_cells})"
    )
    sys.exit(2 if outcome.findings else 0)


@main.command()
@click.option("--frames", "frames_path", required=True, type=click.Path(), help="JSON array of frame metadata paths.")
@click.option("--config", "config_path", type=click.Path(), help="Run configuration JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--parallelism", type=int, default=None, help="Worker count (default: config).")
@click.option("--map", "map_path", type=click.Path(), help="Map XML used when frame metadata has no map_path.")
def batch(
    frames_path: str,
    config_path: str | None,
    out_dir: str,
    parallelism: int | None,
    map_path: str | None,
) -> None:
    """Validate a list of frames; per-frame failures do not stop the batch."""
    try:
        config = _load_config(config_path)
        frames_file = Path(frames_path)
        entries = json.loads(frames_file.read_text(encoding="utf-8"))
        if not isinstance(entries, list):
            raise ValueError("frames file must hold a JSON array of metadata paths")
        frame_paths = [frames_file.parent / entry for entry in entries]
        summary, code = run_batch(
            frame_paths, config, out_dir, parallelism=parallelism,
            default_map_path=Path(map_path) if map_path else None,
        )
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    totals = summary["totals"]
    click.echo(
        f"{totals['frames']} frame(s): {totals['frames_with_findings']} with findings, "
        f"{totals['frames_failed']} failed"
    )
    sys.exit(code)


@main.command()
@click.option("--scenario", required=True, help=f"One of {sorted(SCENARIOS)}.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
def synth(scenario: str, out_dir: str) -> None:
    """Write synthetic fixture files (mask, metadata, map) for a scenario."""
    try:
        paths = write_scenario(scenario, out_dir)
    except UnknownScenarioError as exc:
        click.echo(f"error: {exc.args[0]}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for kind, path in paths.items():
        click.echo(f"{kind}: {path}")
    sys.exit(0)


@main.command()
@click.option("--summary", "summary_dir", required=True, type=click.Path(), help="Directory holding per-frame reports.")
def report(summary_dir: str) -> None:
    """Regenerate summary.json from the per-frame report JSONs in a directory."""
    try:
        summary, code = rebuild_summary(summary_dir)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    totals = summary["totals"]
    click.echo(f"{totals['frames']} frame(s), {totals['frames_with_findings']} with findings")
    sys.exit(code)


if __name__ == "__main__":
    main()
