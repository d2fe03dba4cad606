"""Static figures of velocity, risk and occluded-area traces from metrics CSVs."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulation import MetricsLog  # noqa: E402

# fixed ids and no timestamp keep the SVG a pure function of the data
_RC = {"svg.hashsalt": "occplan", "svg.fonttype": "none", "path.simplify": False}


def plot_runs(logs: Mapping[str, MetricsLog], path, title: str = "") -> Path:
    """Three stacked panels: v(s), max risk(s), occluded area(t); one line per run label."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(3, 1, figsize=(7.0, 8.0))
        ax_v, ax_r, ax_a = axes
        for label, log in logs.items():
            s = log.column("s_ego")
            ax_v.plot(s, log.column("v_ego"), label=label, lw=1.4)
            ax_r.plot(s, log.column("max_risk"), label=label, lw=1.2)
            ax_a.plot(log.column("t"), log.column("area_A_o"), label=label, lw=1.2)
            flagged = log.column("exceedance_flag") > 0
            if flagged.any():
                ax_r.plot(s[flagged], log.column("max_risk")[flagged], "x", ms=3, color="k")
        ax_v.set(xlabel="s [m]", ylabel="v [m/s]")
        ax_r.set(xlabel="s [m]", ylabel="max risk")
        ax_a.set(xlabel="t [s]", ylabel="occluded area [m²]")
        for ax in axes:
            ax.grid(alpha=0.3)
        ax_v.legend(fontsize=8, loc="best")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata=_metadata(path))
        plt.close(fig)
    return path


def _metadata(path: Path):
    if path.suffix.lower() == ".svg":
        return {"Date": None, "Creator": None}
    return None


def plot_csvs(csv_paths: Mapping[str, Path], path, title: str = "") -> Path:
    return plot_runs({k: MetricsLog.read_csv(p) for k, p in csv_paths.items()}, path, title)
