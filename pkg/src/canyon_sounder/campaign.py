"""Campaign-level glue: condensed-parameter tables, model fitting, report data."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .condensed import CondensedParams
from .fitting import (DEFAULT_N_BINS, LinearFit, Sample2D, StatFit, fit_lognormal_db, fit_normal, ols_fit,
                      shadowing_residuals, weighted_fit)
from .statmodel import CONDITIONS, SCHEMA_VERSION, VIEWS, ChannelModel, ecdf

PARAMS_COLUMNS = ["location_id", "d_m", "los", "view", "pl_db", "rmsds_ns", "as_tx", "as_rx", "k1_db"]
LINKS_COLUMNS = ["d_m", "condition", "view", "pl_db", "shadow_db", "ds_ns", "as_tx", "as_rx", "k1_db", "seed"]


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isinf(v) or math.isnan(v) else repr(v)
    return str(v)


def params_rows(params: list[CondensedParams]) -> list[list]:
    return [[p.location_id, float(p.distance_m), p.los_flag, p.view, float(p.pl_db), p.rmsds_s * 1e9,
             float(p.as_tx), float(p.as_rx), float(p.kappa1_db)] for p in params]


def write_params_csv(path, params: list[CondensedParams]) -> None:
    atomic_write_text(path, csv_text(PARAMS_COLUMNS, params_rows(params)))


def read_params_csv(path) -> list[CondensedParams]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(PARAMS_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"params csv: missing columns {sorted(missing)}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                k1 = row["k1_db"].strip()
                out.append(CondensedParams(
                    row["location_id"], float(row["d_m"]), row["los"], row["view"], float(row["pl_db"]),
                    float(row["rmsds_ns"]) * 1e-9, float(row["as_tx"]), float(row["as_rx"]),
                    math.inf if k1 == "" else float(k1)))
            except ValueError as exc:
                raise ValueError(f"params csv line {line}: {exc}") from exc
            if row["los"] not in CONDITIONS or row["view"] not in VIEWS:
                raise ValueError(f"params csv line {line}: bad los/view field {row['los']!r}/{row['view']!r}")
    return out


def _lin(fit: LinearFit | None) -> dict:
    if fit is None:
        return {"alpha": None, "beta": None, "ci95": None}
    return {"alpha": fit.alpha, "beta": fit.beta, "ci95": _clean(fit.ci95),
            "method": fit.method, "n": fit.n, "sigma_resid": fit.sigma_resid}


def _stat(fit: StatFit | None) -> dict:
    if fit is None:
        return {"mu": None, "sigma": None, "ci95": None}
    return {"mu": fit.mu, "sigma": fit.sigma, "ci95": _clean(fit.ci95), "n": fit.n, "n_excluded": fit.n_excluded}


def _clean(ci: dict) -> dict:
    return {k: (None if math.isnan(v) else v) for k, v in ci.items()}


def _try(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError:
        return None


def regression_samples(params: list[CondensedParams], quantity: str) -> list[Sample2D]:
    """(d, y) pairs for one quantity; kappa1 single-peak entries are dropped."""
    out = []
    for p in params:
        if quantity == "pl":
            y = p.pl_db
        elif quantity == "ds":
            y = 10.0 * math.log10(p.rmsds_s) if p.rmsds_s > 0 else math.nan
        elif quantity == "k1":
            y = p.kappa1_db
        else:
            raise ValueError(f"quantity: unknown {quantity!r}")
        if math.isfinite(y):
            out.append(Sample2D(p.distance_m, y, p.location_id))
    return out


def fit_model(params: list[CondensedParams], n_bins: int = DEFAULT_N_BINS, method: str = "weighted",
              provenance: str = "") -> dict:
    """Fit every model entry from condensed parameters; returns a model dict."""
    if method not in ("weighted", "ols"):
        raise ValueError(f"method: expected 'weighted' or 'ols', got {method!r}")

    def line(samples, scale):
        if len(samples) < 3:
            return None
        if method == "weighted":
            return _try(weighted_fit, samples, n_bins, scale)
        return _try(ols_fit, samples, scale)

    def pl_entry(samples, fit):
        entry = _lin(fit)
        entry["shadow"] = _stat(_try(fit_normal, shadowing_residuals(samples, fit)) if fit else None)
        return entry

    conditions = {}
    for cond in CONDITIONS:
        rows = [p for p in params if p.los_flag == cond]
        omni = [p for p in rows if p.view == "omni"]
        views = {}
        for view in VIEWS:
            sub = [p for p in rows if p.view == view]
            pl_s = regression_samples(sub, "pl")
            ols = _try(ols_fit, pl_s, "x10") if len(pl_s) >= 3 else None
            views[view] = {
                "pl": pl_entry(pl_s, line(pl_s, "x10")),
                "pl_ols": pl_entry(pl_s, ols),
                "ds": {"static": _stat(_try(fit_lognormal_db, [p.rmsds_s for p in sub], "power10")),
                       "linear": _lin(line(regression_samples(sub, "ds"), "x1"))},
                "k1": {"static": _stat(_try(fit_lognormal_db, [10.0 ** (p.kappa1_db / 10.0) for p in sub],
                                            "power10")),
                       "linear": _lin(line(regression_samples(sub, "k1"), "x1"))},
            }
        conditions[cond] = {
            "as_tx": _stat(_try(fit_lognormal_db, [p.as_tx for p in omni], "log10")),
            "as_rx": _stat(_try(fit_lognormal_db, [p.as_rx for p in omni], "log10")),
            "views": views,
        }
    ds = [p.distance_m for p in params]
    lo, hi = (min(ds), max(ds)) if ds else (20.0, 85.0)
    if not lo < hi:
        lo, hi = 20.0, 85.0
    return {"schema_version": SCHEMA_VERSION, "provenance": provenance, "valid_range_m": [lo, hi],
            "conditions": conditions}


def write_report(params: list[CondensedParams], model: ChannelModel, out_dir, n_line: int = 50) -> list[Path]:
    """ECDF and regression CSVs for plotting; returns the files written."""
    out_dir = Path(out_dir)
    written = []

    def emit(name, header, rows):
        path = out_dir / name
        atomic_write_text(path, csv_text(header, rows))
        written.append(path)

    lo, hi = model.valid_range_m
    d_line = np.logspace(math.log10(lo), math.log10(hi), n_line)
    for cond in CONDITIONS:
        omni = [p for p in params if p.los_flag == cond and p.view == "omni"]
        for end, vals in (("tx", [p.as_tx for p in omni]), ("rx", [p.as_rx for p in omni])):
            if vals:
                emit(f"ecdf_as_{end}_{cond}.csv", ["value", "probability"], ecdf(np.log10(vals)))
        for view in VIEWS:
            sub = [p for p in params if p.los_flag == cond and p.view == view]
            lines = {"pl": (model.pl[cond][view], 10.0), "ds": (model.ds[cond][view].linear, 1.0),
                     "k1": (model.k1[cond][view].linear, 1.0)}
            for q, (lp, scale) in lines.items():
                samples = regression_samples(sub, q)
                if not samples:
                    continue
                fit_y = [lp.alpha + scale * lp.beta * math.log10(s.d_m) for s in samples]
                emit(f"regression_{q}_{cond}_{view}.csv", ["location_id", "d_m", "y", "fit_y"],
                     [[s.location_id, s.d_m, s.y, f] for s, f in zip(samples, fit_y)])
                emit(f"line_{q}_{cond}_{view}.csv", ["d_m", "y"],
                     [[float(d), lp.alpha + scale * lp.beta * math.log10(d)] for d in d_line])
                emit(f"ecdf_{q}_{cond}_{view}.csv", ["value", "probability"], ecdf([s.y for s in samples]))
            pl_fit = model.pl[cond][view]
            pl_s = regression_samples(sub, "pl")
            if pl_s:
                shadow = [s.y - (pl_fit.alpha + 10.0 * pl_fit.beta * math.log10(s.d_m)) for s in pl_s]
                emit(f"ecdf_shadow_{cond}_{view}.csv", ["value", "probability"], ecdf(shadow))
    return written


def read_regression_csv(path) -> list[Sample2D]:
    with open(path, newline="") as fh:
        return [Sample2D(float(r["d_m"]), float(r["y"]), r["location_id"]) for r in csv.DictReader(fh)]
