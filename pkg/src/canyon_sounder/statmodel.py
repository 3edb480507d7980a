"""Machine-readable channel model: evaluation and Monte-Carlo link sampling."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

CONDITIONS = ("LoS", "NLoS")
VIEWS = ("omni", "max_dir")
MODES = ("static", "distance_trend")
AS_MAX = math.sqrt(2.0)
SCHEMA_VERSION = "1.0"


@dataclass
class NormalParams:
    mu: float
    sigma: float
    ci95: dict | None = None
    sigma_summary: float | None = None
    note: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "NormalParams":
        return cls(_num(d["mu"]), _num(d["sigma"]), d.get("ci95"), d.get("sigma_summary"), d.get("note"))

    def to_dict(self) -> dict:
        out = {"mu": self.mu, "sigma": self.sigma, "ci95": self.ci95}
        if self.sigma_summary is not None:
            out["sigma_summary"] = self.sigma_summary
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class LinearParams:
    alpha: float
    beta: float
    ci95: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "LinearParams":
        return cls(_num(d["alpha"]), _num(d["beta"]), d.get("ci95"))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "ci95": self.ci95}


@dataclass
class PathLossParams(LinearParams):
    shadow: NormalParams = field(default_factory=lambda: NormalParams(0.0, 0.0))

    @property
    def sigma_shadow(self) -> float:
        return self.shadow.sigma

    @classmethod
    def from_dict(cls, d: dict) -> "PathLossParams":
        return cls(_num(d["alpha"]), _num(d["beta"]), d.get("ci95"), NormalParams.from_dict(d["shadow"]))

    def to_dict(self) -> dict:
        return {**super().to_dict(), "shadow": self.shadow.to_dict()}


@dataclass
class SpreadParams:
    static: NormalParams
    linear: LinearParams

    @classmethod
    def from_dict(cls, d: dict) -> "SpreadParams":
        return cls(NormalParams.from_dict(d["static"]), LinearParams.from_dict(d["linear"]))

    def to_dict(self) -> dict:
        return {"static": self.static.to_dict(), "linear": self.linear.to_dict()}


def _num(v) -> float:
    return math.nan if v is None else float(v)


@dataclass
class ChannelModel:
    """Indexed as ``model.pl[condition][view]``, ``model.as_tx[condition]`` and so on."""

    pl: dict
    pl_ols: dict
    ds: dict
    k1: dict
    as_tx: dict
    as_rx: dict
    provenance: str = ""
    valid_range_m: tuple[float, float] = (20.0, 85.0)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelModel":
        version = str(d.get("schema_version", ""))
        if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            raise ValueError(f"schema_version: unsupported model version {version!r}")
        tables = {k: {} for k in ("pl", "pl_ols", "ds", "k1", "as_tx", "as_rx")}
        for cond in CONDITIONS:
            c = d["conditions"][cond]
            tables["as_tx"][cond] = NormalParams.from_dict(c["as_tx"])
            tables["as_rx"][cond] = NormalParams.from_dict(c["as_rx"])
            for key in ("pl", "pl_ols", "ds", "k1"):
                tables[key][cond] = {}
            for view in VIEWS:
                v = c["views"][view]
                tables["pl"][cond][view] = PathLossParams.from_dict(v["pl"])
                tables["pl_ols"][cond][view] = PathLossParams.from_dict(v["pl_ols"])
                tables["ds"][cond][view] = SpreadParams.from_dict(v["ds"])
                tables["k1"][cond][view] = SpreadParams.from_dict(v["k1"])
        lo, hi = d.get("valid_range_m", (20.0, 85.0))
        model = cls(**tables, provenance=str(d.get("provenance", "")), valid_range_m=(float(lo), float(hi)))
        model.check()
        return model

    def to_dict(self) -> dict:
        conditions = {}
        for cond in CONDITIONS:
            conditions[cond] = {
                "as_tx": self.as_tx[cond].to_dict(),
                "as_rx": self.as_rx[cond].to_dict(),
                "views": {view: {
                    "pl": self.pl[cond][view].to_dict(),
                    "pl_ols": self.pl_ols[cond][view].to_dict(),
                    "ds": self.ds[cond][view].to_dict(),
                    "k1": self.k1[cond][view].to_dict(),
                } for view in VIEWS},
            }
        return {"schema_version": SCHEMA_VERSION, "provenance": self.provenance,
                "valid_range_m": list(self.valid_range_m), "conditions": conditions}

    def check(self) -> None:
        lo, hi = self.valid_range_m
        if not 0 < lo < hi:
            raise ValueError(f"valid_range_m: must be positive and ordered, got {self.valid_range_m}")
        sigmas = [p.sigma for p in (*self.as_tx.values(), *self.as_rx.values())]
        for cond in CONDITIONS:
            for view in VIEWS:
                sigmas += [self.pl[cond][view].shadow.sigma, self.pl_ols[cond][view].shadow.sigma,
                           self.ds[cond][view].static.sigma, self.k1[cond][view].static.sigma]
        if any(s < 0 for s in sigmas if not math.isnan(s)):
            raise ValueError("model contains a negative sigma")


def default_model() -> ChannelModel:
    text = resources.files("canyon_sounder").joinpath("data/default_model.json").read_text()
    return ChannelModel.from_dict(json.loads(text))


def load_model(path: str | Path) -> ChannelModel:
    return ChannelModel.from_dict(json.loads(Path(path).read_text()))


def model_keys(d: dict, prefix: str = "") -> set[str]:
    """Key paths of a model dict, ignoring optional annotations; used for structural comparison."""
    out = set()
    for k, v in d.items():
        if k in ("sigma_summary", "note", "provenance", "n", "n_excluded", "method", "sigma_resid"):
            continue
        p = f"{prefix}/{k}"
        out.add(p)
        if isinstance(v, dict):
            out |= model_keys(v, p)
    return out


def _check(condition: str, view: str | None = None) -> None:
    if condition not in CONDITIONS:
        raise ValueError(f"condition: expected one of {CONDITIONS}, got {condition!r}")
    if view is not None and view not in VIEWS:
        raise ValueError(f"view: expected one of {VIEWS}, got {view!r}")


def _log_distance(model: ChannelModel, d_m: float) -> float:
    if not d_m > 0:
        raise ValueError(f"d_m: must be positive, got {d_m}")
    lo, hi = model.valid_range_m
    if not lo <= d_m <= hi:
        warnings.warn(f"distance {d_m} m outside the model's valid range {model.valid_range_m}", stacklevel=3)
    return math.log10(d_m)


def mean_pl(model: ChannelModel, d_m: float, condition: str, view: str) -> float:
    _check(condition, view)
    p = model.pl[condition][view]
    return p.alpha + 10.0 * p.beta * _log_distance(model, d_m)


def mean_ds_db(model: ChannelModel, d_m: float, condition: str, view: str) -> float:
    """Distance-trend delay spread, dB re 1 s."""
    _check(condition, view)
    p = model.ds[condition][view].linear
    return p.alpha + p.beta * _log_distance(model, d_m)


def mean_k1_db(model: ChannelModel, d_m: float, condition: str, view: str) -> float:
    _check(condition, view)
    p = model.k1[condition][view].linear
    return p.alpha + p.beta * _log_distance(model, d_m)


@dataclass(frozen=True)
class LinkRealization:
    d_m: float
    condition: str
    view: str
    pl_db: float
    shadow_db: float
    ds_s: float
    as_tx: float
    as_rx: float
    k1_db: float
    seed_record: tuple[int, int, int]  # (seed, stream, link index)


@dataclass
class LinkSample:
    links: list
    n_clamped: int

    def __iter__(self):
        return iter(self.links)

    def __len__(self) -> int:
        return len(self.links)

    def __getitem__(self, i):
        return self.links[i]


_AS_CEIL = np.nextafter(AS_MAX, 0.0)


def sample_links(model: ChannelModel, distances, condition: str, view: str, mode: str = "static",
                 seed: int = 0, stream: int = 0) -> LinkSample:
    """Draw one independent realization per entry of ``distances``.

    Link ``i`` uses its own generator keyed by ``(seed, stream, i)``, so output
    does not depend on batching or evaluation order.  Angular spreads above
    sqrt(2) are clamped just below it and counted in ``n_clamped``.
    """
    _check(condition, view)
    if mode not in MODES:
        raise ValueError(f"mode: expected one of {MODES}, got {mode!r}")
    pl = model.pl[condition][view]
    ds = model.ds[condition][view]
    k1 = model.k1[condition][view]
    a_tx = model.as_tx[condition]
    a_rx = model.as_rx[condition]
    links = []
    clamped = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        means = {d: (mean_pl(model, d, condition, view), mean_ds_db(model, d, condition, view),
                     mean_k1_db(model, d, condition, view)) for d in set(map(float, distances))}
    for i, d in enumerate(distances):
        d = float(d)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream), i])))
        z = rng.standard_normal(5)
        m_pl, m_ds, m_k1 = means[d]
        shadow = pl.shadow.sigma * z[0]
        ds_db = (m_ds if mode == "distance_trend" else ds.static.mu) + ds.static.sigma * z[1]
        k1_db = (m_k1 if mode == "distance_trend" else k1.static.mu) + k1.static.sigma * z[4]
        spreads = []
        for p, zz in ((a_tx, z[2]), (a_rx, z[3])):
            s = 10.0 ** (p.mu + p.sigma * zz)
            if s >= AS_MAX:
                s = float(_AS_CEIL)
                clamped += 1
            spreads.append(s)
        links.append(LinkRealization(d, condition, view, m_pl + shadow, shadow, 10.0 ** (ds_db / 10.0),
                                     spreads[0], spreads[1], k1_db, (int(seed), int(stream), i)))
    return LinkSample(links, clamped)


def ecdf(samples) -> list[tuple[float, float]]:
    v = np.asarray(list(samples), dtype=float)
    if v.size == 0:
        raise ValueError("ecdf of empty input")
    values, counts = np.unique(v, return_counts=True)
    probs = np.cumsum(counts) / v.size
    return [(float(x), float(p)) for x, p in zip(values, probs)]
