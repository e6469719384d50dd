import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from pydantic import BaseModel, Field  # noqa: E402

from src.errors import ReportIOError  # noqa: E402

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Stable element ids and no creation date keep the SVG output reproducible
plt.rcParams["svg.hashsalt"] = "vbt-tem"
plt.rcParams["svg.fonttype"] = "none"
SVG_METADATA = {"Date": None, "Creator": None}

SAMPLE_COUNT_CONVENTION = "#S counts firing instants excluding the instant pinned at the window start"


class Series(BaseModel):
    label: str
    x: List[float]
    y: List[float]
    style: Literal["line", "stem", "step", "marker"] = "line"


class PlotData(BaseModel):
    """Raw data of one figure; rendered to SVG and written to CSV by emit_report."""
    name: str
    title: str
    xlabel: str = "t [s]"
    ylabel: str = "amplitude"
    series: List[Series] = Field(default_factory=list)
    matrix: Optional[List[List[float]]] = None
    xticks: Optional[List[float]] = None
    yticks: Optional[List[float]] = None
    logy: bool = False


class MethodRecord(BaseModel):
    """Outcome of one sampling method in one experiment."""
    method: str
    samples: int
    nmse_db: Optional[float] = None
    iterations: int = 0
    runtime_s: float = 0.0
    details: Dict[str, Any] = Field(default_factory=dict)


class TrialStats(BaseModel):
    """Mean and standard deviation of a method over seeded trials."""
    method: str
    trials: int
    samples_mean: float
    samples_std: float
    nmse_mean: Optional[float] = None
    nmse_std: Optional[float] = None
    failures: int = 0


class ExperimentReport(BaseModel):
    preset: str
    seed: int
    config: Dict[str, Any] = Field(default_factory=dict)
    records: List[MethodRecord] = Field(default_factory=list)
    trials: List[TrialStats] = Field(default_factory=list)
    checks: Dict[str, Any] = Field(default_factory=dict)
    matrices: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    manifest: List[str] = Field(default_factory=list)
    plots: List[PlotData] = Field(default_factory=list, exclude=True)

    def record(self, method: str) -> MethodRecord:
        for rec in self.records:
            if rec.method == method:
                return rec
        raise KeyError(method)

    def to_payload(self) -> Dict[str, Any]:
        """Deterministic content of report.json; runtimes go to timing.json instead."""
        payload = self.model_dump(mode="python", exclude={"plots"})
        for rec in payload["records"]:
            rec.pop("runtime_s", None)
        payload["sample_count_convention"] = SAMPLE_COUNT_CONVENTION
        return payload


def _sanitize(value: Any) -> Any:
    """Replace non-finite floats with string markers and numpy scalars with Python ones."""
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def canonical_json(payload: Any) -> str:
    """Sorted keys, two-space indent and shortest round-trip float repr."""
    return json.dumps(_sanitize(payload), sort_keys=True, indent=2, ensure_ascii=True, allow_nan=False) + "\n"


def _plot_frame(plot: PlotData) -> pd.DataFrame:
    if plot.matrix is not None:
        rows = []
        for i, y in enumerate(plot.yticks or range(len(plot.matrix))):
            for j, x in enumerate(plot.xticks or range(len(plot.matrix[i]))):
                rows.append({"y": y, "x": x, "value": plot.matrix[i][j]})
        return pd.DataFrame(rows, columns=["y", "x", "value"])
    frames = [pd.DataFrame({"series": s.label, "x": s.x, "y": s.y}) for s in plot.series]
    if not frames:
        return pd.DataFrame(columns=["series", "x", "y"])
    return pd.concat(frames, ignore_index=True)


def render_svg(plot: PlotData, path: Path) -> None:
    """Render one PlotData with matplotlib into an SVG file."""
    fig, ax = plt.subplots(figsize=(8, 4))
    try:
        if plot.matrix is not None:
            matrix = np.asarray(plot.matrix, dtype=float)
            mesh = ax.imshow(matrix, aspect="auto", origin="lower", cmap="viridis")
            fig.colorbar(mesh, ax=ax)
            if plot.xticks is not None:
                ax.set_xticks(range(len(plot.xticks)), [f"{v:g}" for v in plot.xticks])
            if plot.yticks is not None:
                ax.set_yticks(range(len(plot.yticks)), [f"{v:g}" for v in plot.yticks])
        for s in plot.series:
            if s.style == "stem":
                ax.vlines(s.x, 0.0, s.y, linewidth=0.6, color="tab:red", alpha=0.7)
                ax.plot(s.x, s.y, "o", markersize=2, color="tab:red", label=s.label)
            elif s.style == "step":
                ax.step(s.x, s.y, where="mid", label=s.label)
            elif s.style == "marker":
                ax.plot(s.x, s.y, ".", markersize=3, label=s.label)
            else:
                ax.plot(s.x, s.y, linewidth=1.0, label=s.label)
        if plot.logy:
            ax.set_yscale("log")
        ax.set_title(plot.title)
        ax.set_xlabel(plot.xlabel)
        ax.set_ylabel(plot.ylabel)
        if plot.series:
            ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    finally:
        plt.close(fig)


def emit_report(report: ExperimentReport, outdir: Union[str, Path], json_only: bool = False) -> List[str]:
    """
    Write report.json, timing.json and, unless json_only, one CSV and one SVG per plot.

    Args:
        report: Experiment report (its manifest is filled in here)
        outdir: Output directory, created when missing
        json_only: Skip plot emission

    Returns:
        Manifest of emitted file names relative to outdir
    """
    outdir = Path(outdir)
    manifest: List[str] = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        if not json_only:
            for plot in report.plots:
                csv_name, svg_name = f"{plot.name}.csv", f"{plot.name}.svg"
                _plot_frame(plot).to_csv(outdir / csv_name, index=False, float_format="%.17g")
                render_svg(plot, outdir / svg_name)
                manifest.extend([csv_name, svg_name])
        manifest.extend(["report.json", "timing.json"])
        report.manifest = manifest

        timing = {rec.method: rec.runtime_s for rec in report.records}
        (outdir / "timing.json").write_text(canonical_json(timing), encoding="utf-8")
        (outdir / "report.json").write_text(canonical_json(report.to_payload()), encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to write report to {outdir}: {str(e)}")
        raise ReportIOError(outdir, e) from e

    logger.info(f"Wrote {len(manifest)} files for preset '{report.preset}' to {outdir}")
    return manifest
