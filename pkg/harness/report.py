"""
Result files of a scenario run: raw.csv, summary.csv, outside_thr.csv, SVG line
charts and the optional configurations.jsonl dump.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from harness.runner import (  # noqa: E402
    OUTSIDE_COLUMNS,
    OUTSIDE_METRIC_COLUMNS,
    RAW_COLUMNS,
    SUMMARY_COLUMNS,
    ReplicationAggregate,
    aggregate,
)
from harness.scenarios import SCENARIOS  # noqa: E402
from utils.errors import OutputWriteError  # noqa: E402

logger = logging.getLogger(__name__)

# metric column -> (file name stem, axis label)
CHART_METRICS = {
    "adr_bps": ("adr", "Aggregate data rate [bit/s]"),
    "avg_thr_bps": ("avg_thr", "Average throughput [bit/s]"),
    "delivery_time_s": ("delivery_time", "Delivery time [s]"),
    "used_d2d_rb_pct": ("used_d2d_rb", "UL RBs used by D2D [%]"),
}

OUTSIDE_CHART_METRICS = {
    "avg_thr_outside_bps": ("avg_thr_outside", "Average throughput outside the MBSFN Area [bit/s]"),
}

_SWEEP_AXIS = {
    "users": "Users per cell",
    "cells": "Number of cells",
    "bw": "Bandwidth [MHz]",
}

# Fixed hash salt and no date metadata keep the SVG bytes reproducible.
plt.rcParams["svg.hashsalt"] = "mbsfn-area-formation"


def _write_csv(frame: pd.DataFrame, path: Path):
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise OutputWriteError(path, str(e))


def _write_jsonl(records: Iterable[dict], path: Path):
    try:
        with open(path, 'w', encoding='utf-8') as f:
            for record in records:
                f.write(json.dumps(record, sort_keys=True) + "\n")
    except OSError as e:
        raise OutputWriteError(path, str(e))


def _save_figure(fig, path: Path):
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OutputWriteError(path, str(e))
    finally:
        plt.close(fig)


def _series(summary: pd.DataFrame):
    for (tdd, algo), group in summary.groupby(["tdd", "algo"], sort=True):
        yield f"TDD {tdd} {algo}", group.sort_values("sweep_value")


def _metric_chart(summary: pd.DataFrame, metric: str, ylabel: str, label: str, path: Path):
    fig, ax = plt.subplots(figsize=(8, 5))
    for name, group in _series(summary):
        ax.errorbar(group["sweep_value"], group[f"{metric}_mean"], yerr=group[f"{metric}_ci95"],
                    fmt="-o", capsize=3, lw=1.2, ms=3, label=name)
    ax.set_xlabel(_SWEEP_AXIS[label])
    ax.set_ylabel(ylabel)
    ax.grid(True, linestyle="--", alpha=0.6)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save_figure(fig, path)


def _contribution_chart(summary: pd.DataFrame, label: str, path: Path):
    """MBSFN versus non-multicast (unicast plus D2D) ADR per algorithm."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for name, group in _series(summary):
        x = group["sweep_value"]
        ax.plot(x, group["adr_b_bps_mean"], "-o", ms=3, lw=1.2, label=f"{name} MBSFN")
        ax.plot(x, group["adr_u_bps_mean"] + group["adr_d2d_bps_mean"], "--s", ms=3, lw=1.2,
                label=f"{name} unicast+D2D")
    ax.set_xlabel(_SWEEP_AXIS[label])
    ax.set_ylabel("ADR contribution [bit/s]")
    ax.set_yscale("symlog")
    ax.grid(True, linestyle="--", alpha=0.6)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    _save_figure(fig, path)


def emit_results(agg: ReplicationAggregate, raw: pd.DataFrame, out_dir: Path,
                 configurations: Iterable[dict] = (), outside: Optional[pd.DataFrame] = None) -> List[Path]:
    """
    Write the result files of a run.

    Args:
        agg: Aggregated metrics
        raw: Per-replication records
        out_dir: Output directory, created if missing
        configurations: Configuration dumps; configurations.jsonl is written when nonempty
        outside: Per-replication throughput of the users outside the MBSFN Areas; written to
            outside_thr.csv and charted as avg_thr_outside_vs_<sweep>.svg when given

    Returns:
        Paths written, CSVs first

    Raises:
        OutputWriteError: If a file or the directory cannot be written
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputWriteError(out_dir, str(e))

    written: List[Path] = []
    raw_path = out_dir / "raw.csv"
    _write_csv(raw.reindex(columns=RAW_COLUMNS), raw_path)
    written.append(raw_path)

    summary = agg.summary()
    summary_path = out_dir / "summary.csv"
    _write_csv(summary.reindex(columns=SUMMARY_COLUMNS), summary_path)
    written.append(summary_path)

    outside_summary = None
    if outside is not None:
        outside_path = out_dir / "outside_thr.csv"
        _write_csv(outside.reindex(columns=OUTSIDE_COLUMNS), outside_path)
        written.append(outside_path)
        outside_summary = aggregate(outside, OUTSIDE_METRIC_COLUMNS).summary()

    configurations = list(configurations)
    if configurations:
        dump_path = out_dir / "configurations.jsonl"
        _write_jsonl(configurations, dump_path)
        written.append(dump_path)

    for scenario, scenario_rows in summary.groupby("scenario", sort=True):
        label = SCENARIOS[int(scenario)][1]
        for metric, (stem, ylabel) in CHART_METRICS.items():
            path = out_dir / f"{stem}_vs_{label}.svg"
            _metric_chart(scenario_rows, metric, ylabel, label, path)
            written.append(path)
        path = out_dir / f"adr_contribution_vs_{label}.svg"
        _contribution_chart(scenario_rows, label, path)
        written.append(path)
        if outside_summary is not None:
            rows = outside_summary[outside_summary["scenario"] == scenario]
            for metric, (stem, ylabel) in OUTSIDE_CHART_METRICS.items():
                path = out_dir / f"{stem}_vs_{label}.svg"
                _metric_chart(rows, metric, ylabel, label, path)
                written.append(path)

    logger.info(f"Wrote {len(written)} result files to {out_dir}")
    return written
