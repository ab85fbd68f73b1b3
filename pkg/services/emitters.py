# services/emitters.py
"""CSV, SVG and metadata writers. Same input, same bytes."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from schemas import RunMetadata  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Series = Dict[str, Dict[str, Tuple[np.ndarray, np.ndarray]]]

FLOAT_FORMAT = "%.17g"
SVG_HASH_SALT = "shallow-water"
PANEL_SIZE = (4.0, 3.0)


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("[Emit] wrote %s (%d rows)", path, len(frame))
    return path


def write_metadata(metadata: RunMetadata, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(metadata.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("[Emit] wrote %s", path)
    return path


def emit_svg(series: Series, path: PathLike, title: str = "") -> Path:
    """One panel per key of `series`, one polyline per label inside it."""
    panels = {name: lines for name, lines in series.items() if lines}
    if not panels:
        raise ValueError("empty series")
    path = Path(path)

    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        n = len(panels)
        fig, axes = plt.subplots(1, n, figsize=(PANEL_SIZE[0] * n, PANEL_SIZE[1]), squeeze=False)
        try:
            for ax, (name, lines) in zip(axes[0], panels.items()):
                for label, (x, y) in lines.items():
                    ax.plot(np.asarray(x, dtype=float), np.asarray(y, dtype=float), label=label, linewidth=1.0)
                ax.set_title(name)
                ax.grid(True, linewidth=0.3)
                if len(lines) > 1:
                    ax.legend(fontsize="small")
            if title:
                fig.suptitle(title)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info("[Emit] wrote %s (%d panels)", path, n)
    return path
