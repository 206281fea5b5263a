import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mgprecoding.harness as harness
from mgprecoding.config import ExperimentConfig
from mgprecoding.channel import GeometryConfig
from mgprecoding.harness import (CURVE_COLUMNS, RESULT_COLUMNS, curves_csv, drop_channel, drop_rng,
                                 results_csv, run_drop, run_experiment, summary_document, sweep_interferers,
                                 sweep_power, write_outputs)
from mgprecoding.impairments import FeederLinkModel
from mgprecoding.precoder import PrecodingError, icm_precoder
from mgprecoding.metrics import sinr


def test_streams_are_independent_and_reproducible():
    a = drop_rng(1, 2, "users").random(4)
    assert_allclose(a, drop_rng(1, 2, "users").random(4), rtol=0)
    assert not np.allclose(a, drop_rng(1, 2, "rain").random(4))
    assert not np.allclose(a, drop_rng(1, 3, "users").random(4))
    assert not np.allclose(a, drop_rng(2, 2, "users").random(4))


def test_run_is_deterministic():
    cfg = ExperimentConfig(drops=4, seed=8)
    assert results_csv(run_experiment(cfg)) == results_csv(run_experiment(cfg))


def test_drop_results_do_not_depend_on_other_drops():
    cfg = ExperimentConfig(drops=6, seed=8)
    full = run_experiment(cfg)
    part = run_experiment(cfg, drops=[4, 1])
    for d in part.drops:
        assert d.sinr.tobytes() == full.drops[d.drop].sinr.tobytes()


def test_worker_count_does_not_change_output():
    cfg = ExperimentConfig(drops=6, seed=2)
    one = results_csv(run_experiment(cfg))
    two = results_csv(run_experiment(cfg.replace(workers=2)))
    assert one == two


def test_single_cluster_reference_is_whole_channel_mmse():
    cfg = ExperimentConfig(drops=1, seed=1, cooperation="ref",
                           geometry=GeometryConfig(num_beams=7, cluster_size=7))
    ch = drop_channel(cfg, 0)
    assert ch.layout.num_gateways == 1
    T = icm_precoder(ch.entries, cfg.power_w, 1, "mmse")
    assert_allclose(run_drop(cfg, 0).sinr, sinr(ch.entries, T), rtol=1e-12)


def test_cooperation_beats_isolation():
    cfg = ExperimentConfig(drops=100, seed=21)
    icm = run_experiment(cfg.replace(cooperation="icm")).mean_efficiency()
    gcm = run_experiment(cfg).mean_efficiency()
    assert icm < gcm


def test_power_sweep_rows_and_reference_trend():
    cfg = ExperimentConfig(drops=15, seed=4)
    rows, results = sweep_power(cfg, [10, 20, 30], ["ref", "icm"])
    assert len(rows) == 6 and len(results) == 6
    ref = [r["mean_efficiency_bps"] for r in rows if r["scenario"] == "ref"]
    assert ref[0] <= ref[1] <= ref[2]
    with pytest.raises(ValueError):
        sweep_power(cfg, [30, 20])
    with pytest.raises(ValueError):
        sweep_power(cfg, [])


def test_interferer_sweep_degrades():
    cfg = ExperimentConfig(drops=40, seed=6, feeder=FeederLinkModel(1.0, 0))
    rows, results = sweep_interferers(cfg)
    assert [r["x"] for r in rows] == [0, 1, 2]
    assert results[("gcm", 0)].mean_efficiency() == run_experiment(cfg.replace(
        feeder=FeederLinkModel())).mean_efficiency()
    m = [r["mean_efficiency_bps"] for r in rows]
    assert m[1] < m[0]
    # m=1 and m=2 differ by a common-mode term only; allow two standard errors
    d = np.array([a.efficiency.mean() - b.efficiency.mean() for a, b in
                  zip(results[("gcm", 2)].included, results[("gcm", 1)].included)])
    assert d.mean() <= 2 * d.std(ddof=1) / math.sqrt(d.size)


def test_unknown_feeder_coupling_is_worse():
    cfg = ExperimentConfig(drops=20, seed=6, feeder=FeederLinkModel(0.5, 1))
    known = run_experiment(cfg).mean_efficiency()
    unknown = run_experiment(cfg.replace(feeder_known=False)).mean_efficiency()
    assert unknown < known


def test_failed_precoder_excludes_drop(monkeypatch, tmp_path):
    real = harness.scheme_precoder

    def flaky(scheme, channel, *args, **kw):
        if np.isclose(channel.entries[0, 0], drop_channel(cfg, 1).entries[0, 0]):
            raise PrecodingError("singular")
        return real(scheme, channel, *args, **kw)

    cfg = ExperimentConfig(drops=3, seed=5)
    monkeypatch.setattr(harness, "scheme_precoder", flaky)
    res = run_experiment(cfg)
    assert [d.drop for d in res.excluded] == [1]
    assert "singular" in res.excluded[0].excluded
    doc = summary_document(res)
    assert doc["drops_excluded"] == 1 and doc["drops_included"] == 2
    assert doc["excluded"][0]["drop"] == 1
    rows = results_csv(res).splitlines()
    assert len(rows) == 1 + 2 * 21
    assert all(not r.startswith("1,") for r in rows[1:])


def test_outputs(tmp_path):
    cfg = ExperimentConfig(drops=2, seed=5)
    res = run_experiment(cfg)
    paths = write_outputs(res, tmp_path / "out")
    lines = paths["results"].read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + 2 * 21
    first = lines[1].split(",")
    assert first[:6] == ["0", "5", "gcm", "0", "0", "0"]
    doc = json.loads(paths["summary"].read_text())
    assert doc["config"]["run.seed"] == 5
    assert doc["overhead"]["total"] == res.drops[0].overhead.total
    assert doc["smse"]["mean_interference"] == doc["smse"]["mean_no_interference"]
    assert 0 < doc["mean_leakage"] < 1
    assert "prefactor" in doc["smse_note"]


def test_curve_csv():
    cfg = ExperimentConfig(drops=2, seed=5)
    rows, _ = sweep_power(cfg, [20, 30])
    lines = curves_csv(rows).splitlines()
    assert lines[0] == ",".join(CURVE_COLUMNS)
    assert lines[1].startswith("power_dbw,gcm,mmse,20.0,")
