"""
Monte-Carlo replication of a scenario.

Each replication draws one deployment (topology plus user drop, seeded with
base_seed + replication index) and runs every algorithm under every TDD
configuration on it, so algorithms are always compared on the same users.
Replications are independent work items and can run on a process pool.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from harness.scenarios import ScenarioSpec
from network.frame import carrier_grid, tdd_config
from network.topology import build_hex_grid, place_users
from services.formation import run_formation
from services.validation import validate
from simulation.delivery import simulate_delivery
from utils.errors import ValidationFailedError

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["scenario", "sweep_value", "tdd", "algo"]
METRIC_COLUMNS = [
    "adr_bps", "adr_b_bps", "adr_u_bps", "adr_d2d_bps", "avg_thr_bps", "delivery_time_s", "used_d2d_rb_pct",
    "n_areas", "n_mbsfn_users", "n_unicast_users", "n_d2d_users", "n_relays",
]
RAW_COLUMNS = KEY_COLUMNS + ["rep", "seed"] + METRIC_COLUMNS
SUMMARY_COLUMNS = KEY_COLUMNS + [f"{m}_{s}" for m in METRIC_COLUMNS for s in ("mean", "ci95")]

# Kept out of raw.csv so its column layout stays fixed
OUTSIDE_METRIC_COLUMNS = ["avg_thr_outside_bps"]
OUTSIDE_COLUMNS = KEY_COLUMNS + ["rep", "seed"] + OUTSIDE_METRIC_COLUMNS
OUTSIDE_SUMMARY_COLUMNS = KEY_COLUMNS + [f"{m}_{s}" for m in OUTSIDE_METRIC_COLUMNS for s in ("mean", "ci95")]

# Non-multicast ADR ratio (D2D-MAF over SCF) expected at least this large
CONTRIBUTION_RATIO_FLOOR = 10.0


@dataclass(frozen=True)
class ReplicationAggregate:
    """Mean, sample standard deviation and 95% CI half-width per grid point."""

    mean: pd.DataFrame
    std: pd.DataFrame
    ci95: pd.DataFrame
    count: pd.Series
    metrics: Tuple[str, ...] = tuple(METRIC_COLUMNS)

    @property
    def empty(self) -> bool:
        return self.mean.empty

    def summary(self) -> pd.DataFrame:
        """Flat table with the summary.csv column layout."""
        columns = KEY_COLUMNS + [f"{m}_{s}" for m in self.metrics for s in ("mean", "ci95")]
        if self.empty:
            return pd.DataFrame(columns=columns)
        table = pd.DataFrame(index=self.mean.index)
        for metric in self.metrics:
            table[f"{metric}_mean"] = self.mean[metric]
            table[f"{metric}_ci95"] = self.ci95[metric]
        return table.reset_index()[columns]


@dataclass(frozen=True)
class ScenarioOutcome:
    spec: ScenarioSpec
    raw: pd.DataFrame
    aggregate: ReplicationAggregate
    # Per-replication throughput of the users outside the MBSFN Areas, OUTSIDE_COLUMNS
    outside: Optional[pd.DataFrame] = None
    # Only filled when spec.dump_configurations is set
    configurations: Tuple[dict, ...] = ()


def run_replication(spec: ScenarioSpec, sweep_value: int, rep: int) -> List[dict]:
    """
    Run every (TDD, algorithm) pair on one deployment.

    Returns:
        One record per pair: the RAW_COLUMNS, then the OUTSIDE_METRIC_COLUMNS

    Raises:
        ValidationFailedError: If some returned configuration breaks a constraint
    """
    users_per_cell, n_cells, bandwidth_mhz = spec.point(sweep_value)
    seed = spec.base_seed + rep
    area = build_hex_grid(n_cells, isd=spec.isd_m)
    users = place_users(area, users_per_cell, seed)
    grid = carrier_grid(bandwidth_mhz)

    records = []
    for tdd_index in spec.tdd:
        tdd = tdd_config(tdd_index)
        for algorithm in spec.algorithms:
            result = run_formation(area, users, tdd, grid, spec.radio, spec.policy, algorithm=algorithm)
            cfg = result.configuration
            violations = validate(cfg, area, grid)
            if violations:
                raise ValidationFailedError(
                    violations, f"scenario {spec.scenario}, {spec.sweep_name}={sweep_value}, "
                                f"tdd {tdd_index}, {algorithm}, rep {rep}"
                )
            report = simulate_delivery(cfg, tdd, grid, spec.radio, spec.content_bytes)
            records.append({
                "scenario": spec.scenario,
                "sweep_value": int(sweep_value),
                "tdd": tdd_index,
                "algo": algorithm,
                "rep": rep,
                "seed": seed,
                "adr_bps": report.adr,
                "adr_b_bps": report.adr_b,
                "adr_u_bps": report.adr_u,
                "adr_d2d_bps": report.adr_d2d,
                "avg_thr_bps": report.avg_throughput,
                "delivery_time_s": report.delivery_time,
                "used_d2d_rb_pct": report.used_d2d_rb_pct,
                "n_areas": len(cfg.areas),
                "n_mbsfn_users": len(cfg.mbsfn_users),
                "n_unicast_users": len(cfg.unicast_users),
                "n_d2d_users": len(cfg.d2d_users),
                "n_relays": len(cfg.relays),
                "avg_thr_outside_bps": report.avg_throughput_outside,
            })
            if spec.dump_configurations:
                records[-1]["configuration"] = cfg.to_record()
    logger.debug(f"Scenario {spec.scenario} {spec.sweep_label}={sweep_value} rep {rep} done")
    return records


def _run_item(item: Tuple[ScenarioSpec, int, int]) -> List[dict]:
    return run_replication(*item)


def aggregate(raw: pd.DataFrame, metrics: Sequence[str] = tuple(METRIC_COLUMNS)) -> ReplicationAggregate:
    """
    Student-t 95% confidence intervals of every metric per grid point.

    The half-width is t(0.975, n-1) * s / sqrt(n); it is 0 for a single replication.
    """
    metrics = tuple(metrics)
    if raw.empty:
        empty = pd.DataFrame(columns=list(metrics))
        return ReplicationAggregate(mean=empty, std=empty, ci95=empty, count=pd.Series(dtype=int), metrics=metrics)

    grouped = raw.groupby(KEY_COLUMNS, sort=True)[list(metrics)]
    mean = grouped.mean()
    count = grouped.size()
    std = grouped.std(ddof=1).fillna(0.0)

    n = count.to_numpy()
    t = np.where(n > 1, stats.t.ppf(0.975, np.maximum(n - 1, 1)), 0.0)
    half = std.to_numpy() * (t / np.sqrt(n))[:, None]
    ci95 = pd.DataFrame(half, index=std.index, columns=std.columns)
    return ReplicationAggregate(mean=mean, std=std, ci95=ci95, count=count, metrics=metrics)


def contribution_ratios(agg: ReplicationAggregate) -> Dict[Tuple[int, int, int], float]:
    """
    Non-multicast ADR of D2D-MAF (D2D plus unicast) over SCF's unicast ADR, per
    (scenario, sweep value, TDD). Logged and flagged below CONTRIBUTION_RATIO_FLOOR.
    """
    ratios: Dict[Tuple[int, int, int], float] = {}
    if agg.empty:
        return ratios
    mean = agg.mean.reset_index()
    maf = mean[mean["algo"] == "d2d-maf"].set_index(["scenario", "sweep_value", "tdd"])
    scf = mean[mean["algo"] == "scf"].set_index(["scenario", "sweep_value", "tdd"])
    for key in maf.index.intersection(scf.index):
        maf_bps = maf.at[key, "adr_u_bps"] + maf.at[key, "adr_d2d_bps"]
        scf_bps = scf.at[key, "adr_u_bps"]
        ratio = float("inf") if scf_bps <= 0 else maf_bps / scf_bps
        ratios[tuple(int(k) for k in key)] = ratio
        scenario, sweep_value, tdd = key
        if ratio < CONTRIBUTION_RATIO_FLOOR:
            logger.warning(f"Scenario {scenario} point {sweep_value} tdd {tdd}: D2D-MAF non-multicast ADR is only "
                           f"{ratio:.2f}x the SCF unicast ADR")
        else:
            logger.info(f"Scenario {scenario} point {sweep_value} tdd {tdd}: non-multicast ADR ratio {ratio:.2f}")
    return ratios


def run_scenario(spec: ScenarioSpec, workers: int = 1) -> ScenarioOutcome:
    """
    Run all replications of a scenario and aggregate them.

    Args:
        spec: Scenario to run
        workers: Size of the process pool (1 runs inline)

    Returns:
        ScenarioOutcome with raw records (sorted, deterministic) and the aggregate

    Raises:
        ValidationFailedError: If any replication produced an invalid configuration
    """
    items = [(spec, value, rep) for value in spec.sweep_values for rep in range(spec.replications)]
    logger.info(f"Scenario {spec.scenario}: {len(spec.sweep_values)} {spec.sweep_label} values x "
                f"{spec.replications} replications, tdd {list(spec.tdd)}, algorithms {list(spec.algorithms)}")

    records: List[dict] = []
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, batch in enumerate(pool.map(_run_item, items), start=1):
                records.extend(batch)
                _log_progress(done, len(items))
    else:
        for done, item in enumerate(items, start=1):
            records.extend(_run_item(item))
            _log_progress(done, len(items))

    raw = _sorted_frame(records, RAW_COLUMNS)
    outside = _sorted_frame(records, OUTSIDE_COLUMNS)
    agg = aggregate(raw)
    contribution_ratios(agg)

    configurations = sorted(
        ({**{k: r[k] for k in RAW_COLUMNS[:6]}, **r["configuration"]} for r in records if "configuration" in r),
        key=lambda c: (c["scenario"], c["sweep_value"], c["tdd"], c["algo"], c["rep"]),
    )
    logger.info(f"Scenario {spec.scenario} finished: {len(raw)} records")
    return ScenarioOutcome(spec=spec, raw=raw, aggregate=agg, outside=outside, configurations=tuple(configurations))


def _sorted_frame(records: List[dict], columns: List[str]) -> pd.DataFrame:
    frame = pd.DataFrame(records, columns=columns)
    if frame.empty:
        return frame
    frame = frame.sort_values(["scenario", "sweep_value", "tdd", "algo", "rep"], kind="mergesort")
    return frame.reset_index(drop=True)


def _log_progress(done: int, total: int, every: Optional[int] = None):
    every = every or max(1, total // 10)
    if done % every == 0 or done == total:
        logger.info(f"Replications done: {done}/{total}")
