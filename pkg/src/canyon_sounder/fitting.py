"""Distance-dependence regressions and distribution fits with 95% intervals.

Regressions are on ``x = log10(d)`` with the model ``y = alpha + s*beta*x``,
where the slope scale ``s`` is 10 for path loss and 1 for dB-valued
quantities such as delay spread and kappa1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

SLOPE_SCALES = {"x10": 10.0, "x1": 1.0}
DEFAULT_N_BINS = 5


@dataclass(frozen=True)
class Sample2D:
    d_m: float
    y: float
    location_id: str = ""

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d_m) and self.d_m > 0):
            raise ValueError(f"d_m: must be positive and finite, got {self.d_m}")
        if not math.isfinite(self.y):
            raise ValueError(f"y: must be finite, got {self.y}")


@dataclass
class LinearFit:
    alpha: float
    beta: float
    slope_scale: str
    sigma_resid: float
    ci95: dict
    method: str
    n: int

    def predict(self, d_m) -> np.ndarray | float:
        y = self.alpha + SLOPE_SCALES[self.slope_scale] * self.beta * np.log10(d_m)
        return float(y) if np.ndim(y) == 0 else y

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "slope_scale": self.slope_scale,
                "sigma_resid": self.sigma_resid, "ci95": dict(self.ci95), "method": self.method, "n": self.n}


@dataclass
class StatFit:
    mu: float
    sigma: float
    ci95: dict
    n: int
    n_excluded: int = 0

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "ci95": dict(self.ci95), "n": self.n,
                "n_excluded": self.n_excluded}


def _design(samples, slope_scale: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if slope_scale not in SLOPE_SCALES:
        raise ValueError(f"slope_scale: expected one of {tuple(SLOPE_SCALES)}, got {slope_scale!r}")
    if len(samples) < 2:
        raise ValueError(f"need at least 2 samples, got {len(samples)}")
    d = np.array([s.d_m for s in samples], dtype=float)
    y = np.array([s.y for s in samples], dtype=float)
    x = np.log10(d)
    if np.ptp(x) == 0:
        raise ValueError("degenerate design: all distances equal")
    return x, SLOPE_SCALES[slope_scale] * x, y


def _wls(x_scaled: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Weighted least squares for y = a + b*x via centred normal equations."""
    sw = w.sum()
    xm = np.dot(w, x_scaled) / sw
    ym = np.dot(w, y) / sw
    dx = x_scaled - xm
    sxx = np.dot(w, dx * dx)
    b = np.dot(w, dx * (y - ym)) / sxx
    a = ym - b * xm
    return float(a), float(b), y - (a + b * x_scaled)


def _linear_fit(samples, slope_scale: str, w: np.ndarray, method: str) -> LinearFit:
    x, xs, y = _design(samples, slope_scale)
    n = y.size
    a, b, resid = _wls(xs, y, w)
    dof = n - 2
    if dof > 0:
        s2 = float(np.dot(w, resid * resid)) / dof
        sw = w.sum()
        xm = np.dot(w, xs) / sw
        sxx = float(np.dot(w, (xs - xm) ** 2))
        se_b = math.sqrt(s2 / sxx)
        se_a = math.sqrt(s2 * (1.0 / sw + xm * xm / sxx))
        t = float(stats.t.ppf(0.975, dof))
        sigma = math.sqrt(s2)
    else:
        # two points: exact interpolation, intervals undefined
        se_a = se_b = t = math.nan
        sigma = 0.0
    ci = {"alpha_min": a - t * se_a, "alpha_max": a + t * se_a,
          "beta_min": b - t * se_b, "beta_max": b + t * se_b}
    return LinearFit(a, b, slope_scale, sigma, ci, method, n)


def ols_fit(samples, slope_scale: str = "x10") -> LinearFit:
    """Ordinary least squares; intervals from Student-t with n-2 dof."""
    return _linear_fit(samples, slope_scale, np.ones(len(samples)), "OLS")


def bin_weights(d_m, n_bins: int = DEFAULT_N_BINS) -> np.ndarray:
    """Weights giving every log10-distance bin equal total weight; normalized to sum to n.

    Bins split [min, max] of log10(d) into ``n_bins`` equal intervals,
    left-closed except the last, which is closed on both ends.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins: must be >= 1, got {n_bins}")
    x = np.log10(np.asarray(d_m, dtype=float))
    lo, hi = x.min(), x.max()
    if hi == lo:
        idx = np.zeros(x.size, dtype=int)
    else:
        idx = np.minimum(((x - lo) / (hi - lo) * n_bins).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    w = 1.0 / counts[idx]
    return w * (x.size / w.sum())


def weighted_fit(samples, n_bins: int = DEFAULT_N_BINS, slope_scale: str = "x10") -> LinearFit:
    w = bin_weights([s.d_m for s in samples], n_bins)
    return _linear_fit(samples, slope_scale, w, f"Weighted({n_bins})")


def shadowing_residuals(samples, fit: LinearFit) -> list[float]:
    return [s.y - fit.predict(s.d_m) for s in samples]


def fit_normal(values) -> StatFit:
    v = np.asarray(list(values), dtype=float)
    n = v.size
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mu = float(v.mean())
    sigma = float(v.std(ddof=1))
    t = float(stats.t.ppf(0.975, n - 1))
    half = t * sigma / math.sqrt(n)
    chi_hi = float(stats.chi2.ppf(0.975, n - 1))
    chi_lo = float(stats.chi2.ppf(0.025, n - 1))
    ci = {"mu_min": mu - half, "mu_max": mu + half,
          "sigma_min": sigma * math.sqrt((n - 1) / chi_hi), "sigma_max": sigma * math.sqrt((n - 1) / chi_lo)}
    return StatFit(mu, sigma, ci, n)


DB_RULES = {
    "power10": lambda v: 10.0 * np.log10(v),
    "amplitude20": lambda v: 20.0 * np.log10(v),
    "log10": np.log10,
}


def fit_lognormal_db(samples_linear, db_rule: str = "power10") -> StatFit:
    """Normal fit in the log domain. +inf entries (kappa1 single-peak) are excluded and counted."""
    if db_rule not in DB_RULES:
        raise ValueError(f"db_rule: expected one of {tuple(DB_RULES)}, got {db_rule!r}")
    v = np.asarray(list(samples_linear), dtype=float)
    excluded = np.isposinf(v)
    v = v[~excluded]
    if np.any(~(v > 0)):
        raise ValueError("nonpositive sample in lognormal fit")
    fit = fit_normal(DB_RULES[db_rule](v))
    fit.n_excluded = int(excluded.sum())
    return fit
