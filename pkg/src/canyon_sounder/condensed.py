"""Per-location condensed parameters: path loss, RMS delay spread, kappa1, angular spreads."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bundle import MeasurementBundle, validate_bundle
from .directional import angular_spread, compute_ddaps, marginal_aps, synth_omni
from .pdp import (PL_OPTIONS, SHAPE_OPTIONS, NoSignalError, Pdp, PdpOptions, PdpSet, apply_ota,
                  build_pdp_set)

KAPPA1_SINGLE_PEAK = math.inf


@dataclass
class CondensedParams:
    location_id: str
    distance_m: float
    los_flag: str
    view: str
    pl_db: float
    rmsds_s: float
    as_tx: float
    as_rx: float
    kappa1_db: float  # +inf when the PDP has a single local maximum

    def to_dict(self) -> dict:
        return asdict(self)


def _total(pdp: Pdp) -> float:
    total = float(np.sum(pdp.power_lin))
    if not total > 0:
        raise ValueError("zero total power")
    return total


def path_loss(pdp: Pdp) -> float:
    return -10.0 * math.log10(_total(pdp))


def rmsds(pdp: Pdp) -> float:
    total = _total(pdp)
    p = pdp.power_lin
    tau = pdp.delay_axis_s
    mean = float(np.sum(p * tau)) / total
    # central form avoids cancellation between two large raw moments
    var = float(np.sum(p * (tau - mean) ** 2)) / total
    return math.sqrt(max(var, 0.0))


def find_local_maxima(pdp: Pdp | np.ndarray) -> list[tuple[int, float]]:
    """Strict interior local maxima, plateaus reported at their leftmost bin.

    Sorted by power (descending), ties by earlier delay.
    """
    p = np.asarray(pdp.power_lin if isinstance(pdp, Pdp) else pdp, dtype=float)
    n = p.size
    peaks = []
    i = 1
    while i < n - 1:
        if p[i] > p[i - 1]:
            j = i
            while j + 1 < n and p[j + 1] == p[i]:
                j += 1
            if j + 1 < n and p[j + 1] < p[i]:
                peaks.append((i, float(p[i])))
            i = j + 1
        else:
            i += 1
    peaks.sort(key=lambda t: (-t[1], t[0]))
    return peaks


def kappa1(pdp: Pdp | np.ndarray) -> float:
    """Strongest local maximum over the sum of all others, in dB; +inf for a single peak."""
    peaks = find_local_maxima(pdp)
    if not peaks:
        raise ValueError("no local maxima")
    rest = sum(pk for _, pk in peaks[1:])
    if rest == 0:
        return KAPPA1_SINGLE_PEAK
    return 10.0 * math.log10(peaks[0][1] / rest)


@dataclass(frozen=True)
class CondenseOptions:
    pl: PdpOptions = PL_OPTIONS
    shape: PdpOptions = SHAPE_OPTIONS
    omni_per_bin: bool = True
    # A scan whose strongest gated bin sits less than this far above its own
    # noise floor is treated as noise only.
    detection_margin_db: float = 20.0
    keep_sets: bool = False


@dataclass
class LocationResult:
    omni: CondensedParams
    max_dir: CondensedParams
    max_dir_pointing: tuple[int, int, int, int]
    ddaps: object
    pdps: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)


def _check_detection(pdps: PdpSet, margin_db: float) -> None:
    peak = pdps.power.max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        peak_db = 10.0 * np.log10(peak)
        excess = peak_db - pdps.noise_floor_db
    # noise-free pointings have a -inf floor: any power is a detection
    excess = np.where(np.isneginf(pdps.noise_floor_db) & (peak > 0), np.inf, excess)
    if not np.any(excess >= margin_db):
        raise NoSignalError("no signal above threshold")


def condense_location(bundle: MeasurementBundle, opts: CondenseOptions | None = None,
                      location_id: str | None = None) -> LocationResult:
    """Run the full per-location pipeline on one bundle.

    The max-dir beam pair is chosen on the path-loss profile and the same
    pair is used for the windowed profile, so both views of one location
    refer to one beam pair.  DDAPS and hence the angular spreads come from
    the path-loss profile and are shared by both views.
    """
    opts = opts or CondenseOptions()
    report = validate_bundle(bundle)
    if report:
        raise ValueError("; ".join(report.violations))
    h = apply_ota(bundle)
    tau_max = bundle.freq.tau_max
    pl_set = build_pdp_set(h, bundle.grid, tau_max, opts.pl)
    _check_detection(pl_set, opts.detection_margin_db)
    totals = pl_set.power.sum(axis=-1)
    if not np.any(totals > 0):
        raise NoSignalError("no signal above threshold")
    pointing = tuple(int(i) for i in np.unravel_index(int(np.argmax(totals)), totals.shape))

    ddaps = compute_ddaps(pl_set)
    as_tx = angular_spread(marginal_aps(ddaps, "Tx"))
    as_rx = angular_spread(marginal_aps(ddaps, "Rx"))
    pl_omni = synth_omni(pl_set, per_bin=opts.omni_per_bin)
    pl_max = pl_set[pointing]
    sets = {"pl": pl_set} if opts.keep_sets else {}
    if not opts.keep_sets:
        del pl_set

    shape_set = build_pdp_set(h, bundle.grid, tau_max, opts.shape)
    sh_omni = synth_omni(shape_set, per_bin=opts.omni_per_bin)
    sh_max = shape_set[pointing]
    if opts.keep_sets:
        sets["shape"] = shape_set
    del shape_set

    loc = location_id or bundle.label
    d = bundle.geometry.distance_m
    flag = bundle.geometry.los_flag

    def view(name: str, pl_pdp: Pdp, sh_pdp: Pdp) -> CondensedParams:
        if not np.any(sh_pdp.power_lin > 0):
            raise NoSignalError(f"no signal above threshold in windowed {name} PDP")
        try:
            k1 = kappa1(sh_pdp)
        except ValueError:
            k1 = KAPPA1_SINGLE_PEAK
        return CondensedParams(loc, d, flag, name, path_loss(pl_pdp), rmsds(sh_pdp), as_tx, as_rx, k1)

    return LocationResult(
        omni=view("omni", pl_omni, sh_omni),
        max_dir=view("max_dir", pl_max, sh_max),
        max_dir_pointing=pointing,
        ddaps=ddaps,
        pdps={"pl_omni": pl_omni, "pl_max_dir": pl_max, "shape_omni": sh_omni, "shape_max_dir": sh_max},
        sets=sets,
    )
