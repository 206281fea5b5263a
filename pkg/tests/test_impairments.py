import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from mgprecoding.channel import ClusterLayout
from mgprecoding.config import ExperimentConfig
from mgprecoding.harness import run_experiment
from mgprecoding.impairments import (FeederLinkModel, QuantizerSpec, apply_feeder, feed_subset_limit,
                                     feeder_matrix, quantize_csi, round_half_away)

from conftest import crandn


# --- feeder coupling ------------------------------------------------------

def test_feeder_identity_cases():
    L = ClusterLayout.uniform(3, 7, 11)
    assert_array_equal(feeder_matrix(FeederLinkModel(0.0, 2), L), np.eye(33))
    assert_array_equal(feeder_matrix(FeederLinkModel(0.8, 0), L), np.eye(33))
    assert FeederLinkModel(0.0, 2).is_ideal and not FeederLinkModel(0.5, 1).is_ideal


def test_feeder_blocks_full_coupling():
    L = ClusterLayout.uniform(3, 1, 2)
    H = feeder_matrix(FeederLinkModel(1.0, 2), L)
    expected = np.block([[np.eye(2), np.ones((2, 2)), np.ones((2, 2))],
                         [np.ones((2, 2)), np.eye(2), np.ones((2, 2))],
                         [np.ones((2, 2)), np.ones((2, 2)), np.eye(2)]])
    assert_array_equal(H, expected)


def test_feeder_geometric_decay_and_reach():
    L = ClusterLayout.uniform(4, 1, 2)
    H = feeder_matrix(FeederLinkModel(0.5, 2), L)
    assert_array_equal(H[L.feed_slice(0), L.feed_slice(1)], 0.5)
    assert_array_equal(H[L.feed_slice(0), L.feed_slice(2)], 0.25)
    assert_array_equal(H[L.feed_slice(0), L.feed_slice(3)], 0.0)
    assert_array_equal(H, H.T)


@pytest.mark.parametrize("rho, m", [(-0.1, 1), (1.1, 1), (0.5, -1)])
def test_feeder_rejects_bad_parameters(rho, m):
    with pytest.raises(ValueError):
        FeederLinkModel(rho, m)


def test_feeder_coupling_grows_with_rho():
    L = ClusterLayout.uniform(3, 7, 11)
    norms = [np.linalg.norm(feeder_matrix(FeederLinkModel(r, 2), L) - np.eye(33)) for r in (0.1, 0.4, 0.9)]
    assert norms[0] < norms[1] < norms[2]


def test_apply_feeder(rng):
    H = crandn(rng, 4, 6)
    assert_array_equal(apply_feeder(H, None), H)
    F = rng.standard_normal((6, 6))
    assert_allclose(apply_feeder(H, F), H @ F)


def test_feeder_cannot_raise_rank(rng):
    L = ClusterLayout.uniform(3, 2, 2)
    H = crandn(rng, 6, 6)
    H[:, 0] = 0
    F = feeder_matrix(FeederLinkModel(1.0, 2), L)
    assert np.linalg.matrix_rank(H @ F) <= min(np.linalg.matrix_rank(H), np.linalg.matrix_rank(F))


# --- quantizer ------------------------------------------------------------

def test_round_half_away():
    assert_array_equal(round_half_away(np.array([0.12345, -0.12345, 2.5, -2.5]), 4),
                       [0.1235, -0.1235, 2.5, -2.5])
    assert_array_equal(round_half_away(np.array([2.5, -2.5, 0.4]), 0), [3.0, -3.0, 0.0])


def test_quantize_examples():
    q = quantize_csi(np.array([[0.12345 + 0j]]))
    assert_allclose(abs(q[0, 0]), 0.1235, rtol=1e-15)
    assert_allclose(np.angle(q[0, 0]), 0.0, atol=1e-15)
    q = quantize_csi(np.array([[1j]]))
    assert_allclose(np.degrees(np.angle(q[0, 0])), 90.0, rtol=1e-15)


def test_quantize_phase_wraps_to_zero():
    # -1e-6 degrees wraps to 359.999999, which rounds to 360 and folds back to 0
    z = np.exp(1j * np.radians(-1e-6))
    q = quantize_csi(np.array([[z]]))
    assert_allclose(q[0, 0], 1.0, rtol=0, atol=1e-15)


def test_quantize_clamps_magnitude():
    q = quantize_csi(np.array([[5000.0 + 0j, -2000.0 + 0j]]))
    assert_allclose(np.abs(q), 999.9999, rtol=1e-15)
    assert_allclose(np.degrees(np.angle(q[0, 1])) % 360, 180.0, rtol=1e-12)


def test_quantize_rejects_non_finite():
    with pytest.raises(ValueError):
        quantize_csi(np.array([[np.nan + 0j]]))


def test_quantizer_error_bound_bulk():
    rng = np.random.default_rng(11)
    H = crandn(rng, 100_000, 1) * 3
    Q = quantize_csi(H)
    step = QuantizerSpec().step
    assert np.max(np.abs(np.abs(Q) - np.abs(H))) <= step / 2 + 1e-12
    dphi = np.angle(Q * H.conj())
    assert np.max(np.abs(np.degrees(dphi))) <= step / 2 + 1e-9
    # a magnitude error of step/2 and a phase error of step/2 degrees
    bound = step / 2 + np.abs(H) * np.radians(step / 2)
    assert np.all(np.abs(Q - H) <= bound + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 999, allow_nan=False), st.floats(-720, 720, allow_nan=False))
def test_quantizer_idempotent(mag, deg):
    H = np.array([[mag * np.exp(1j * np.radians(deg))]])
    q1 = quantize_csi(H)
    assert_array_equal(quantize_csi(q1), q1)


def test_quantizer_idempotent_bulk():
    rng = np.random.default_rng(12)
    q1 = quantize_csi(crandn(rng, 100_000, 1) * 10)
    assert_array_equal(quantize_csi(q1), q1)


# --- feed subset ----------------------------------------------------------

def test_subset_small_row_unchanged(rng):
    H = crandn(rng, 3, 20)
    out = feed_subset_limit(H, 31)
    assert_array_equal(out, H)
    assert out is not H


def test_subset_keeps_strongest(rng):
    H = crandn(rng, 5, 40)
    out = feed_subset_limit(H, 31)
    for k in range(5):
        kept = np.flatnonzero(out[k])
        assert kept.size == 31
        assert np.min(np.abs(H[k, kept])) >= np.max(np.abs(np.delete(H[k], kept)))
        assert_array_equal(out[k, kept], H[k, kept])


def test_subset_single_nonzero():
    H = np.zeros((1, 40), dtype=complex)
    H[0, 17] = 2 - 1j
    out = feed_subset_limit(H, 31)
    assert out[0, 17] == 2 - 1j
    assert np.count_nonzero(out) == 1


def test_subset_ties_keep_lowest_index():
    H = np.ones((2, 40), dtype=complex)
    out = feed_subset_limit(H, 31)
    assert_array_equal(np.flatnonzero(out[0]), np.arange(31))


def test_subset_rejects_zero():
    with pytest.raises(ValueError):
        feed_subset_limit(np.ones((1, 4)), 0)


# --- effect on the link ---------------------------------------------------

def test_single_coupled_pair_lowers_efficiency():
    base = ExperimentConfig(drops=20, seed=5)
    clean = run_experiment(base).mean_efficiency()
    coupled = run_experiment(base.replace(feeder=FeederLinkModel(1.0, 1))).mean_efficiency()
    assert coupled < clean
