import json
import math
import warnings

import numpy as np
import pytest

from canyon_sounder.statmodel import (AS_MAX, ChannelModel, default_model, ecdf, load_model, mean_ds_db,
                                      mean_k1_db, mean_pl, model_keys, sample_links)
from canyon_sounder.synth import friis_pl_db

# Reference linear-model summary: (quantity, condition, view) -> (alpha, beta).
LINEAR_SUMMARY = {
    ("pl", "LoS", "omni"): (72.88, 1.93), ("pl", "LoS", "max_dir"): (77.33, 1.88),
    ("pl_ols", "LoS", "omni"): (75.02, 1.8), ("pl_ols", "LoS", "max_dir"): (77.06, 1.89),
    ("ds", "LoS", "omni"): (-108.22, 17.82), ("ds", "LoS", "max_dir"): (-94.11, 4.99),
    ("k1", "LoS", "omni"): (25.59, -8.87), ("k1", "LoS", "max_dir"): (1.32, 8.13),
    ("pl", "NLoS", "omni"): (91.28, 1.76), ("pl", "NLoS", "max_dir"): (84.54, 2.57),
    ("pl_ols", "NLoS", "omni"): (86.81, 2.03), ("pl_ols", "NLoS", "max_dir"): (82.91, 2.68),
    ("ds", "NLoS", "omni"): (-96.16, 11.91), ("ds", "NLoS", "max_dir"): (-96.71, 7.14),
    ("k1", "NLoS", "omni"): (38.54, -23.29), ("k1", "NLoS", "max_dir"): (28.95, -11.35),
}

# Reference statistical summary: (quantity, condition, view) -> (mu, sigma).
STAT_SUMMARY = {
    ("shadow", "LoS", "omni"): (0.09, 0.72), ("shadow", "LoS", "max_dir"): (-0.01, 0.8),
    ("shadow_ols", "LoS", "omni"): (0, 0.69), ("shadow_ols", "LoS", "max_dir"): (0, 0.8),
    ("as_tx", "LoS", None): (-0.72, 0.08), ("as_rx", "LoS", None): (-0.51, 0.18),
    ("ds", "LoS", "omni"): (-78.11, 4.25), ("ds", "LoS", "max_dir"): (-85.8, 1.95),
    ("k1", "LoS", "omni"): (11.01, 4.92), ("k1", "LoS", "max_dir"): (14.72, 4.72),
    ("shadow", "NLoS", "omni"): (0.04, 6.24), ("shadow", "NLoS", "max_dir"): (0.18, 6.21),
    ("shadow_ols", "NLoS", "omni"): (0, 6.21), ("shadow_ols", "NLoS", "max_dir"): (0, 7.89),
    ("as_tx", "NLoS", None): (-0.49, 0.18), ("as_rx", "NLoS", None): (-0.33, 0.19),
    ("ds", "NLoS", "omni"): (-76.38, 4.66), ("ds", "NLoS", "max_dir"): (-84.96, 4.33),
    ("k1", "NLoS", "omni"): (0, 8.5), ("k1", "NLoS", "max_dir"): (10.57, 7.37),
}


def linear_entry(model, q, cond, view):
    if q in ("pl", "pl_ols"):
        return getattr(model, q)[cond][view]
    return getattr(model, q)[cond][view].linear


def stat_entry(model, q, cond, view):
    if q == "shadow":
        return model.pl[cond][view].shadow
    if q == "shadow_ols":
        return model.pl_ols[cond][view].shadow
    if q in ("as_tx", "as_rx"):
        return getattr(model, q)[cond]
    return getattr(model, q)[cond][view].static


def summary_sigma(p):
    return p.sigma_summary if p.sigma_summary is not None else p.sigma


def test_linear_summary_verbatim():
    m = default_model()
    for (q, cond, view), (a, b) in LINEAR_SUMMARY.items():
        p = linear_entry(m, q, cond, view)
        assert (p.alpha, p.beta) == (a, b), (q, cond, view)


def test_stat_summary_verbatim():
    m = default_model()
    for (q, cond, view), (mu, sigma) in STAT_SUMMARY.items():
        p = stat_entry(m, q, cond, view)
        assert (p.mu, summary_sigma(p)) == (mu, sigma), (q, cond, view)


def test_conflicting_sigmas_keep_both_values():
    m = default_model()
    k = m.k1["NLoS"]["max_dir"].static
    assert (k.sigma, k.sigma_summary) == (7.3, 7.37) and k.note
    s = m.pl["NLoS"]["max_dir"].shadow
    assert (s.sigma, s.sigma_summary) == (7.89, 6.21) and s.note
    assert m.pl["NLoS"]["max_dir"].sigma_shadow == 7.89


def test_documented_examples():
    m = default_model()
    assert m.pl["LoS"]["omni"].alpha == 72.88
    assert m.as_rx["NLoS"].mu == -0.33
    assert (m.k1["NLoS"]["omni"].static.mu, m.k1["NLoS"]["omni"].static.sigma) == (0, 8.5)
    assert m.valid_range_m == (20.0, 85.0)
    assert m.pl["LoS"]["omni"].ci95["alpha_min"] < 72.88 < m.pl["LoS"]["omni"].ci95["alpha_max"]


def test_mean_pl():
    m = default_model()
    with pytest.warns(UserWarning, match="outside"):
        assert mean_pl(m, 10.0, "LoS", "omni") == pytest.approx(92.18, abs=1e-9)
    assert mean_pl(m, 50.0, "LoS", "omni") == pytest.approx(72.88 + 19.3 * math.log10(50), abs=1e-12)
    assert mean_pl(m, 50.0, "LoS", "omni") == pytest.approx(105.67, abs=0.01)
    with pytest.warns(UserWarning):
        assert mean_pl(m, 1.0, "NLoS", "max_dir") == 84.54
    with pytest.raises(ValueError, match="d_m"):
        mean_pl(m, 0.0, "LoS", "omni")
    with pytest.raises(ValueError, match="condition"):
        mean_pl(m, 50.0, "LOS", "omni")


def test_mean_ds_and_k1():
    m = default_model()
    assert mean_ds_db(m, 50.0, "LoS", "omni") == pytest.approx(-77.94, abs=0.01)
    assert 10 ** (mean_ds_db(m, 50.0, "LoS", "omni") / 10) == pytest.approx(16.07e-9, rel=2e-3)
    assert mean_ds_db(m, 50.0, "NLoS", "max_dir") == pytest.approx(-84.58, abs=0.01)
    with pytest.warns(UserWarning):
        assert mean_ds_db(m, 1.0, "LoS", "max_dir") == -94.11
    assert mean_k1_db(m, 50.0, "LoS", "max_dir") == pytest.approx(1.32 + 8.13 * math.log10(50))


def test_mean_pl_increasing_and_below_free_space():
    m = default_model()
    d = np.linspace(20, 85, 400)
    for cond in ("LoS", "NLoS"):
        for view in ("omni", "max_dir"):
            pl = [mean_pl(m, x, cond, view) for x in d]
            assert np.all(np.diff(pl) > 0)
    assert 20 * math.log10(4 * math.pi * 145.5e9 / 299_792_458.0) == pytest.approx(75.70, abs=0.01)
    for x in d:
        assert mean_pl(m, x, "LoS", "omni") < friis_pl_db(x, 145.5e9)


def test_round_trip_and_keys(tmp_path):
    m = default_model()
    p = tmp_path / "m.json"
    p.write_text(json.dumps(m.to_dict()))
    back = load_model(p)
    assert back == m
    assert model_keys(back.to_dict()) == model_keys(m.to_dict())


def test_bad_models_rejected():
    d = default_model().to_dict()
    d["schema_version"] = "9.0"
    with pytest.raises(ValueError, match="schema_version"):
        ChannelModel.from_dict(d)
    d = default_model().to_dict()
    d["conditions"]["LoS"]["as_tx"]["sigma"] = -1
    with pytest.raises(ValueError, match="negative sigma"):
        ChannelModel.from_dict(d)
    d = default_model().to_dict()
    d["valid_range_m"] = [85, 20]
    with pytest.raises(ValueError, match="valid_range_m"):
        ChannelModel.from_dict(d)


def test_zero_shadow_gives_mean():
    d = default_model().to_dict()
    d["conditions"]["LoS"]["views"]["omni"]["pl"]["shadow"]["sigma"] = 0.0
    m = ChannelModel.from_dict(d)
    for lk in sample_links(m, [20.0, 50.0, 85.0] * 10, "LoS", "omni", seed=1):
        assert lk.pl_db == mean_pl(m, lk.d_m, "LoS", "omni")
        assert lk.shadow_db == 0.0


def test_sampling_is_deterministic_and_order_free():
    m = default_model()
    a = sample_links(m, [20.0, 50.0, 85.0], "NLoS", "max_dir", seed=7, stream=2)
    b = sample_links(m, [20.0, 50.0, 85.0], "NLoS", "max_dir", seed=7, stream=2)
    assert a.links == b.links
    c = sample_links(m, [20.0, 50.0, 85.0], "NLoS", "max_dir", seed=8, stream=2)
    assert a.links != c.links
    assert a[1].seed_record == (7, 2, 1)


def test_realization_invariants():
    m = default_model()
    s = sample_links(m, np.linspace(20, 85, 2000), "NLoS", "omni", mode="distance_trend", seed=3)
    for lk in s:
        assert lk.ds_s > 0 and 0 < lk.as_tx < AS_MAX and 0 < lk.as_rx < AS_MAX
        assert lk.pl_db == pytest.approx(mean_pl(m, lk.d_m, "NLoS", "omni") + lk.shadow_db, abs=1e-9)


def test_trend_mode_centres_on_distance_trend():
    m = default_model()
    s = sample_links(m, [30.0] * 20000, "LoS", "max_dir", mode="distance_trend", seed=4)
    ds_db = np.array([10 * math.log10(lk.ds_s) for lk in s])
    assert ds_db.mean() == pytest.approx(mean_ds_db(m, 30.0, "LoS", "max_dir"), abs=0.05)


@pytest.mark.slow
def test_sampler_statistics_and_clamp_rate():
    m = default_model()
    s = sample_links(m, [50.0] * 100_000, "LoS", "omni", seed=2024)
    pl = np.array([lk.pl_db for lk in s])
    sh = np.array([lk.shadow_db for lk in s])
    ds = np.array([10 * math.log10(lk.ds_s) for lk in s])
    assert pl.mean() == pytest.approx(105.67, abs=0.05)
    assert sh.std(ddof=1) == pytest.approx(0.72, rel=0.02)
    assert ds.std(ddof=1) == pytest.approx(4.25, rel=0.02)
    assert s.n_clamped < 0.01 * 2 * len(s)


def test_clamp_is_counted():
    d = default_model().to_dict()
    d["conditions"]["LoS"]["as_tx"].update(mu=0.5, sigma=0.01)
    s = sample_links(ChannelModel.from_dict(d), [50.0] * 10, "LoS", "omni")
    assert s.n_clamped == 10
    assert all(lk.as_tx < AS_MAX for lk in s)


def test_sample_argument_errors():
    m = default_model()
    with pytest.raises(ValueError, match="mode"):
        sample_links(m, [50.0], "LoS", "omni", mode="trend")
    with pytest.raises(ValueError, match="view"):
        sample_links(m, [50.0], "LoS", "omnidirectional")


def test_ecdf():
    assert ecdf([1, 2, 3]) == [(1.0, 1 / 3), (2.0, 2 / 3), (3.0, 1.0)]
    assert ecdf([2, 1, 2, 2]) == [(1.0, 0.25), (2.0, 1.0)]
    v = np.random.default_rng(0).standard_normal(10_000)
    cdf = dict(ecdf(v))
    below = max((x for x in cdf if x <= 0), default=None)
    assert cdf[below] == pytest.approx(0.5, abs=0.02)
    with pytest.raises(ValueError, match="empty"):
        ecdf([])
