# routers/run.py
"""`run` command: config -> scenario -> files on disk."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Optional

from schemas import ScenarioConfig
from services.emitters import emit_svg, write_csv, write_metadata
from services.scenarios import ScenarioResult, run_scenario

logger = logging.getLogger(__name__)


def write_artifacts(config: ScenarioConfig, result: ScenarioResult, out_dir: Path, svg: bool) -> Dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.scenario
    artifacts: Dict[str, str] = {}
    if result.tables:
        for name, frame in result.tables.items():
            artifacts[name] = str(write_csv(frame, out_dir / f"{stem}_{name}.csv"))
    else:
        artifacts["series"] = str(write_csv(result.series, out_dir / f"{stem}_series.csv"))
        artifacts["final"] = str(write_csv(result.final, out_dir / f"{stem}_final.csv"))
    if svg and result.plots:
        artifacts["svg"] = str(emit_svg(result.plots, out_dir / f"{stem}.svg", title=stem))
    metadata_path = out_dir / f"{stem}_metadata.json"
    artifacts["metadata"] = str(metadata_path)
    result.metadata.artifacts = dict(artifacts)
    write_metadata(result.metadata, metadata_path)
    return artifacts


def run_command(config: ScenarioConfig, out_dir: Optional[Path] = None, svg: bool = False) -> ScenarioResult:
    """Run one scenario and write its CSV, metadata and (optionally) SVG files."""
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    result = run_scenario(config)
    write_artifacts(config, result, target, svg or config.svg)
    logger.info("[Run] %s: outputs in %s", config.scenario, target)
    return result
