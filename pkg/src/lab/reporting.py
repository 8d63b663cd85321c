"""
Report and artifact writers: versioned CSV, JSON run reports and SVG contour snapshots.
"""

import logging
import math
from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from core.interfaces import ConfigurationError  # noqa: E402
from core.schemas import E_INV, RunReport  # noqa: E402
from geometry.regions import g_values  # noqa: E402

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
SVG_SALT = "half-plane-lab"


def write_csv(frame: pd.DataFrame, path: Path, description: str = "") -> Path:
    """
    Write a DataFrame with the schema header comment and lossless float formatting.

    The first line is '# schema=1', the second lists the columns and an
    optional description.
    """
    path = Path(path)
    header = [f"# schema={CSV_SCHEMA_VERSION}", f"# columns: {', '.join(map(str, frame.columns))}"]
    if description:
        header.append(f"# {description}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write("\n".join(header) + "\n")
            frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ConfigurationError(f"Failed to write {path}: {e}")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a CSV written by write_csv."""
    try:
        return pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError) as e:
        raise ConfigurationError(f"Failed to read {path}: {e}")
    except pd.errors.EmptyDataError:
        return pd.DataFrame()


def write_report(report: RunReport, path: Path) -> Path:
    path = Path(path)
    try:
        path.write_text(report.model_dump_json(indent=2) + "\n")
    except OSError as e:
        raise ConfigurationError(f"Failed to write report {path}: {e}")
    return path


def region_outline(eps: float, alpha: float, n: int = 200) -> Optional[np.ndarray]:
    """Closed outline of alpha * Omega_eps, or None when the region is empty."""
    if not (0.0 < eps < E_INV) or not alpha > 0.0:
        return None
    s = np.geomspace(eps, E_INV, n)[::-1]
    graph = np.column_stack([s, g_values(s)])
    outline = np.vstack([[[eps, 0.0], [E_INV, 0.0]], graph, [[eps, 0.0]]])
    return alpha * outline


def write_contour_svg(path: Path, snapshot: Dict[str, object], window: float,
                      title: str = "") -> Path:
    """
    Draw a contour snapshot, the barrier outline and the origin window as plain SVG.

    Axes use a symmetric-log scale so the region near the origin stays visible.
    """
    path = Path(path)
    nodes = np.asarray(snapshot["nodes"], dtype=float)
    closed = np.vstack([nodes, nodes[:1]])

    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.plot(closed[:, 0], closed[:, 1], color="tab:blue", linewidth=0.8, label="patch contour")
        outline = None if snapshot.get("collapsed") else region_outline(float(snapshot["eps"]), float(snapshot["alpha"]))
        if outline is not None:
            ax.plot(outline[:, 0], outline[:, 1], color="tab:red", linewidth=0.8, linestyle="--",
                    label="barrier region")
        theta = np.linspace(0.0, 0.5 * math.pi, 91)
        ax.plot(window * np.cos(theta), window * np.sin(theta), color="0.5", linewidth=0.6,
                label="proxy window")
        linthresh = max(float(np.min(nodes[nodes[:, 0] > 0.0, 0])) if np.any(nodes[:, 0] > 0.0) else 1e-3, 1e-12)
        ax.set_xscale("symlog", linthresh=linthresh)
        ax.set_yscale("symlog", linthresh=linthresh)
        ax.set_xlim(0.0, max(1.05 * float(np.max(nodes[:, 0])), window))
        ax.set_ylim(0.0, max(1.05 * float(np.max(nodes[:, 1])), window))
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_title(title or f"t = {float(snapshot['t']):.4g}")
        ax.legend(loc="upper right", fontsize="small")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise ConfigurationError(f"Failed to write {path}: {e}")
        finally:
            plt.close(fig)
    return path


def summary_lines(report: RunReport) -> Sequence[str]:
    """One line per check for console output."""
    lines = []
    for check in report.checks:
        parts = [f"{check.status:>18}  {check.name}"]
        if check.value is not None:
            parts.append(f"value={check.value:.6g}")
        if check.bound is not None:
            parts.append(f"bound={check.bound:.6g}")
        if check.detail:
            parts.append(check.detail)
        lines.append("  ".join(parts))
    return lines
