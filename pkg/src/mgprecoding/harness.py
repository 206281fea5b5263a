"""Seeded Monte Carlo runner.

Each drop draws users and rain from its own counter-based streams keyed by
``(seed, drop, purpose)``, so a drop's result does not depend on which other
drops run, in which order, or in how many processes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelMatrix, assemble_channel, build_coverage
from .config import ExperimentConfig, resolve_scenario
from .cooperation import OverheadCount, overhead_count, scheme_precoder
from .impairments import QuantizerSpec, apply_feeder, feed_subset_limit, feeder_matrix, quantize_csi
from .metrics import (SMSE_PREFACTOR_NOTE, SmsePair, modcod_efficiency, smse,
                      spectral_efficiency_summary, sinr, to_db)
from .precoder import PrecodingError

__all__ = [
    "DropResult", "ExperimentResult", "drop_rng", "drop_channel", "run_drop",
    "run_experiment", "sweep_power", "sweep_interferers", "results_csv",
    "summary_document", "curves_csv", "write_outputs", "RESULT_COLUMNS", "CURVE_COLUMNS",
]

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["drop", "seed", "scenario", "user", "beam", "cluster", "sinr_db", "efficiency_bps"]
CURVE_COLUMNS = ["sweep", "scenario", "flavor", "x", "mean_efficiency_bps", "median_efficiency_bps",
                 "p5_efficiency_bps", "p95_efficiency_bps", "mean_sum_efficiency_bps",
                 "drops", "excluded"]

_PURPOSES = {"users": 0, "rain": 1}


def drop_rng(seed: int, drop: int, purpose: str) -> np.random.Generator:
    """Independent Philox stream for one purpose within one drop."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(drop, _PURPOSES[purpose]))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class DropResult:
    drop: int
    seed: int
    scenario: str
    sinr: Optional[np.ndarray] = None
    efficiency: Optional[np.ndarray] = None
    smse: Optional[SmsePair] = None
    overhead: Optional[OverheadCount] = None
    leakage: Optional[np.ndarray] = None
    excluded: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.excluded is None

    @property
    def sinr_db(self) -> np.ndarray:
        return to_db(self.sinr)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    drops: list = field(default_factory=list)

    @property
    def included(self) -> list:
        return [d for d in self.drops if d.ok]

    @property
    def excluded(self) -> list:
        return [d for d in self.drops if not d.ok]

    def mean_efficiency(self) -> float:
        return spectral_efficiency_summary([d.efficiency for d in self.included])["per_user"]["mean"]


def drop_channel(config: ExperimentConfig, drop: int) -> ChannelMatrix:
    """User-link channel of one drop (before feeder coupling)."""
    return assemble_channel(config.geometry, None, config.rain,
                            drop_rng(config.seed, drop, "users"),
                            rain_rng=drop_rng(config.seed, drop, "rain"))


def _leakage(H: np.ndarray, T: np.ndarray, layout) -> np.ndarray:
    """Per-cluster ratio of power leaked to other clusters over power kept in-cluster."""
    HT = H @ T
    out = np.empty(layout.num_gateways)
    for g in range(layout.num_gateways):
        cols = HT[:, layout.beam_index(g)]
        mask = np.zeros(layout.num_beams, dtype=bool)
        mask[layout.beam_index(g)] = True
        out[g] = np.linalg.norm(cols[~mask]) / np.linalg.norm(cols[mask])
    return out


def run_drop(config: ExperimentConfig, drop: int) -> DropResult:
    """Full pipeline for one drop: channel, impairments, precoder, metrics.

    A precoder that cannot be formed excludes the drop; the reason is kept.
    """
    scheme = config.scheme
    result = DropResult(drop, config.seed, scheme.name)
    channel = drop_channel(config, drop)
    layout = channel.layout
    P = config.power_w
    H_u = channel.entries
    H_f = None if config.feeder.is_ideal else feeder_matrix(config.feeder, layout)
    H_true = apply_feeder(H_u, H_f)

    H_csi = H_true if config.feeder_known else H_u
    if config.csi_quantized:
        H_csi = quantize_csi(H_csi, QuantizerSpec())
    if config.csi_max_feeds is not None:
        H_csi = feed_subset_limit(H_csi, config.csi_max_feeds)

    result.overhead = overhead_count(scheme, layout)
    result.smse = smse(H_u, H_f, layout.num_gateways, P)
    try:
        with np.errstate(divide="raise", invalid="raise"):
            T = scheme_precoder(scheme, channel.with_entries(H_csi), P, config.flavor,
                                config.mmse_reg).total
    except (PrecodingError, np.linalg.LinAlgError, FloatingPointError) as exc:
        result.excluded = f"{type(exc).__name__}: {exc}"
        log.warning("drop %d excluded: %s", drop, result.excluded)
        return result
    result.sinr = sinr(H_true, T)
    result.efficiency = np.asarray(modcod_efficiency(to_db(result.sinr)), dtype=float)
    result.leakage = _leakage(H_true, T, layout)
    return result


def _run_one(args):
    config, drop = args
    return run_drop(config, drop)


def run_experiment(config: ExperimentConfig, drops: Optional[Sequence[int]] = None) -> ExperimentResult:
    """Run ``config.drops`` drops (or the given drop indices) in index order.

    With ``config.workers > 1`` drops run in worker processes; results are
    collected in drop order, so the output does not depend on the worker count.
    """
    indices = list(range(config.drops)) if drops is None else list(drops)
    jobs = [(config, d) for d in indices]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        results = [_run_one(j) for j in jobs]
    return ExperimentResult(config, results)


def _curve_row(sweep: str, result: ExperimentResult, x) -> dict:
    cfg = result.config
    row = {"sweep": sweep, "scenario": cfg.scheme.name, "flavor": cfg.flavor, "x": x,
           "drops": len(result.drops), "excluded": len(result.excluded)}
    if result.included:
        s = spectral_efficiency_summary([d.efficiency for d in result.included])
        row.update(mean_efficiency_bps=s["per_user"]["mean"], median_efficiency_bps=s["per_user"]["median"],
                   p5_efficiency_bps=s["per_user"]["p5"], p95_efficiency_bps=s["per_user"]["p95"],
                   mean_sum_efficiency_bps=s["sum"]["mean"])
    else:
        row.update({k: math.nan for k in CURVE_COLUMNS if k.endswith("_bps")})
    return row


def sweep_power(config: ExperimentConfig, powers_dbw: Optional[Sequence[float]] = None,
                scenarios: Optional[Sequence] = None):
    """Efficiency versus transmit power, one curve per scenario.

    The same drops are reused at every power, so points are paired.
    Returns ``(rows, results)`` where ``results[(scenario, P)]`` is the
    :class:`ExperimentResult`.
    """
    powers = list(config.powers_dbw if powers_dbw is None else powers_dbw)
    if not powers:
        raise ValueError("empty power list")
    if any(b < a for a, b in zip(powers, powers[1:])):
        raise ValueError("power list must be ascending")
    names = [config.scheme.name] if scenarios is None else [resolve_scenario(s).name for s in scenarios]
    rows, results = [], {}
    for name in names:
        for p in powers:
            res = run_experiment(config.replace(cooperation=name, power_dbw=float(p)))
            results[(name, float(p))] = res
            rows.append(_curve_row("power_dbw", res, float(p)))
    return rows, results


def sweep_interferers(config: ExperimentConfig, counts: Optional[Sequence[int]] = None,
                      scenarios: Optional[Sequence] = None):
    """Efficiency versus the number of interfering feeder links ``m``.

    ``rho`` comes from ``config.feeder``; ``m`` runs over ``0..G-1`` unless
    ``counts`` is given. Returns ``(rows, results)`` as :func:`sweep_power`.
    """
    G = build_coverage(config.geometry).layout.num_gateways
    ms = list(range(G)) if counts is None else [int(m) for m in counts]
    names = [config.scheme.name] if scenarios is None else [resolve_scenario(s).name for s in scenarios]
    rows, results = [], {}
    for name in names:
        for m in ms:
            feeder = type(config.feeder)(config.feeder.rho, m)
            res = run_experiment(config.replace(cooperation=name, feeder=feeder))
            results[(name, m)] = res
            rows.append(_curve_row("num_interferers", res, m))
    return rows, results


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def results_csv(result: ExperimentResult) -> str:
    """Per-user rows of every included drop, in drop then user order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    layout = build_coverage(result.config.geometry).layout
    cluster = layout.cluster_of_beam()
    for d in result.included:
        for k, (s_db, eff) in enumerate(zip(d.sinr_db, d.efficiency)):
            # one scheduled user per beam, so user k sits in beam k
            w.writerow([d.drop, d.seed, d.scenario, k, k, int(cluster[k]), _fmt(s_db), _fmt(eff)])
    return buf.getvalue()


def curves_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CURVE_COLUMNS])
    return buf.getvalue()


def summary_document(result: ExperimentResult) -> dict:
    cfg = result.config
    included = result.included
    doc = {
        "config": cfg.to_mapping(),
        "scenario": cfg.scheme.name,
        "drops_requested": len(result.drops),
        "drops_included": len(included),
        "drops_excluded": len(result.excluded),
        "excluded": [{"drop": d.drop, "reason": d.excluded} for d in result.excluded],
        "overhead": None,
        "smse": None,
        "smse_note": SMSE_PREFACTOR_NOTE,
        "efficiency": None,
        "mean_leakage": None,
    }
    if result.drops:
        oh = result.drops[0].overhead
        doc["overhead"] = {"total": oh.total, "per_gateway": list(oh.per_gateway)}
        doc["smse"] = {
            "mean_no_interference": math.fsum(sorted(d.smse.smse_no_interference for d in result.drops)) / len(result.drops),
            "mean_interference": math.fsum(sorted(d.smse.smse_interference for d in result.drops)) / len(result.drops),
        }
    if included:
        doc["efficiency"] = spectral_efficiency_summary([d.efficiency for d in included])
        doc["mean_leakage"] = math.fsum(sorted(float(np.mean(d.leakage)) for d in included)) / len(included)
    return doc


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write ``results.csv`` and ``summary.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "summary": out / "summary.json"}
    paths["results"].write_text(results_csv(result))
    paths["summary"].write_text(json.dumps(summary_document(result), indent=2, sort_keys=True) + "\n")
    return paths
