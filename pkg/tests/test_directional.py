import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from canyon_sounder.bundle import AngleGrid
from canyon_sounder.directional import (Aps, Ddaps, angular_spread, circular_mean, compute_ddaps, elevation_sum,
                                        marginal_aps, select_max_dir, synth_omni)
from canyon_sounder.pdp import PL_OPTIONS, NoSignalError, PdpSet, delay_axis

GRID = AngleGrid()
N_DELAY = 16

# Brute-force values from integrating the Gaussian pattern over the grid
# (independent script: per-pointing gains, then sums by hand).
SINGLE_PATH_CELL_SHARE = 0.5162085242019633
TWO_CLUSTER_CELL_SHARES = (0.30972515008602675, 0.2064834333906845)
GRID_SPREAD_SINGLE_PATH = 0.09338412227202808
CONTINUOUS_SPREAD_BOUND = 0.09622347216570161


def make_set(power):
    shape = power.shape[:4]
    return PdpSet(GRID, delay_axis(power.shape[-1], 1e-6, 1), power, np.full(shape, -np.inf),
                  np.full(shape, -np.inf), PL_OPTIONS)


def empty_power():
    return np.zeros((*GRID.shape, N_DELAY))


def test_max_dir_single_pointing():
    p = empty_power()
    p[0, 3, 1, 7, 2] = 1e-9
    pointing, pdp = select_max_dir(make_set(p))
    assert pointing == (0, 3, 1, 7)
    assert pdp.total_power == 1e-9


def test_max_dir_tie_breaks_lexicographically():
    p = empty_power()
    p[1, 5, 0, 0, 0] = 1.0
    p[0, 9, 2, 30, 4] = 1.0
    assert select_max_dir(make_set(p))[0] == (0, 9, 2, 30)


def test_max_dir_on_all_zero_set():
    with pytest.raises(NoSignalError, match="no signal above threshold"):
        select_max_dir(make_set(empty_power()))


def test_max_dir_of_boresight_path(canonical_results):
    # single LoS path at Tx az 0, Rx az 0, both elevations 0
    assert canonical_results["a_single_los"].max_dir_pointing == (1, 6, 1, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-6, 1e6))
def test_max_dir_scale_invariant(seed, scale):
    p = np.random.default_rng(seed).random((*GRID.shape, 4))
    assert select_max_dir(make_set(p))[0] == select_max_dir(make_set(p * scale))[0]


def test_omni_single_azimuth_pair_is_elevation_sum():
    p = empty_power()
    rng = np.random.default_rng(0)
    p[:, 4, :, 11, :] = rng.random((3, 3, N_DELAY))
    omni = synth_omni(make_set(p))
    assert np.allclose(omni.power_lin, p[:, 4, :, 11, :].sum(axis=(0, 1)), rtol=1e-15)


def test_omni_disjoint_delay_support():
    p = empty_power()
    p[1, 2, 1, 3, 2] = 1.0
    p[1, 8, 1, 20, 9] = 0.25
    omni = synth_omni(make_set(p))
    assert omni.power_lin[2] == 1.0 and omni.power_lin[9] == 0.25
    assert omni.total_power == 1.25


def test_omni_whole_pdp_variant():
    p = empty_power()
    p[1, 2, 1, 3, 2] = 1.0
    p[1, 8, 1, 20, 9] = 0.25
    omni = synth_omni(make_set(p), per_bin=False)
    assert omni.total_power == 1.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_omni_bounded_by_max_and_sum_of_pairs(seed):
    p = np.random.default_rng(seed).random((*GRID.shape, 4)) ** 4
    s = make_set(p)
    pair_totals = elevation_sum(s).sum(axis=-1)
    total = synth_omni(s).total_power
    assert pair_totals.max() <= total * (1 + 1e-12)
    assert total <= pair_totals.sum() * (1 + 1e-12)


def test_ddaps_single_delta():
    p = empty_power()
    p[2, 1, 0, 5, 3] = 3e-7
    d = compute_ddaps(make_set(p))
    assert d.power_lin.shape == (13, 36)
    assert d.power_lin[1, 5] == 3e-7 and np.count_nonzero(d.power_lin) == 1


def test_ddaps_total_is_additive():
    p = np.random.default_rng(5).random((*GRID.shape, 4))
    assert compute_ddaps(make_set(p)).total == pytest.approx(p.sum(), rel=1e-12)


def test_marginals():
    d = Ddaps(np.asarray(GRID.tx_az_deg, float), np.asarray(GRID.rx_az_deg, float), np.zeros((13, 36)))
    d.power_lin[9, 12] = 2.0  # Tx 30 deg, Rx 120 deg
    tx, rx = marginal_aps(d, "Tx"), marginal_aps(d, "Rx")
    assert tx.az_deg[np.argmax(tx.power_lin)] == 30.0 and tx.power_lin.sum() == 2.0
    assert rx.az_deg[np.argmax(rx.power_lin)] == 120.0 and rx.power_lin.sum() == 2.0


def test_marginal_consistency_and_uniformity():
    rng = np.random.default_rng(8)
    d = Ddaps(np.asarray(GRID.tx_az_deg, float), np.asarray(GRID.rx_az_deg, float), rng.random((13, 36)))
    assert marginal_aps(d, "Tx").power_lin.sum() == pytest.approx(d.total, rel=1e-12)
    assert marginal_aps(d, "Rx").power_lin.sum() == pytest.approx(d.total, rel=1e-12)
    u = Ddaps(d.tx_az_deg, d.rx_az_deg, np.ones((13, 36)))
    assert np.all(marginal_aps(u, "Tx").power_lin == 36.0)
    assert np.all(marginal_aps(u, "Rx").power_lin == 13.0)
    with pytest.raises(ValueError):
        marginal_aps(u, "Up")


def aps(az, p):
    return Aps("Rx", np.asarray(az, float), np.asarray(p, float))


def test_circular_mean_examples():
    assert circular_mean(aps([0.0, 90.0], [1.0, 0.0])) == pytest.approx(1 + 0j)
    assert abs(circular_mean(aps([0.0, 180.0], [1.0, 1.0]))) < 1e-15
    assert circular_mean(aps([0.0, 90.0], [1.0, 1.0])) == pytest.approx((1 + 1j) / 2, abs=1e-15)
    with pytest.raises(ValueError, match="zero-power"):
        circular_mean(aps([0.0], [0.0]))


def test_spread_examples():
    assert angular_spread(aps([10.0, 20.0], [0.0, 4.0])) == pytest.approx(0.0, abs=1e-7)
    az = np.arange(0.0, 360.0, 10.0)
    assert angular_spread(aps(az, np.ones(36))) == pytest.approx(1.0, rel=1e-12)
    assert angular_spread(aps([0.0, 90.0], [1.0, 1.0])) == pytest.approx(math.sqrt(0.5), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 36, elements=st.floats(0.0, 1.0)), st.floats(1e-6, 1e6), st.integers(-35, 35))
def test_spread_properties(p, scale, shift):
    if p.sum() <= 0:
        p = p + 1.0
    az = np.arange(0.0, 360.0, 10.0)
    s = angular_spread(aps(az, p))
    assert 0.0 <= s <= math.sqrt(2.0)
    assert angular_spread(aps(az, p * scale)) == pytest.approx(s, rel=1e-9, abs=1e-9)
    assert angular_spread(aps(az + 10.0 * shift, p)) == pytest.approx(s, rel=1e-9, abs=1e-9)


def test_single_path_ddaps_share(canonical_results):
    d = canonical_results["a_single_los"].ddaps
    assert d.power_lin.max() / d.total == pytest.approx(SINGLE_PATH_CELL_SHARE, rel=1e-4)


def test_single_path_spread_within_pattern_bound(canonical_results):
    r = canonical_results["a_single_los"].omni
    for s in (r.as_tx, r.as_rx):
        assert 0.0 < s <= CONTINUOUS_SPREAD_BOUND
        assert s == pytest.approx(GRID_SPREAD_SINGLE_PATH, rel=1e-6)


def test_two_cluster_ddaps_cells(canonical_results):
    d = canonical_results["d_two_cluster"].ddaps
    shares = np.sort(d.power_lin.ravel())[::-1][:2] / d.total
    assert shares == pytest.approx(TWO_CLUSTER_CELL_SHARES, rel=1e-3)
    i, j = np.unravel_index(np.argmax(d.power_lin), d.power_lin.shape)
    assert (d.tx_az_deg[i], d.rx_az_deg[j]) == (30.0, 40.0)
