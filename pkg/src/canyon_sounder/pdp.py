"""Calibration and delay-domain power profiles.

Directional transfer functions are windowed, zero-padded and inverse
transformed into power delay profiles, which are then noise-thresholded and
delay-gated.  Array-level helpers operate on whole tensors (last axis =
frequency or delay) so an entire scan can be processed at once; the
single-PDP functions are thin views over them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bundle import MeasurementBundle, validate_bundle

TAU_GATE_S = 933.33e-9
NOISE_MARGIN_DB = 6.0
ALLOWED_OSF = (1, 2, 4, 8, 16)
_WINDOWS = ("rectangular", "hann")


@dataclass(frozen=True)
class PdpOptions:
    window: str = "rectangular"
    oversample_factor: int = 1
    tau_gate_s: float = TAU_GATE_S
    noise_margin_db: float = NOISE_MARGIN_DB
    # Optional cap below the peak (the scan-wide peak for a PdpSet); None keeps
    # the pure noise-floor threshold.
    dynamic_range_db: float | None = None
    # Noise window override as (start, stop) delays in seconds.
    noise_window_s: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        w = self.window.lower()
        if w not in _WINDOWS:
            raise ValueError(f"window: expected one of {_WINDOWS}, got {self.window!r}")
        object.__setattr__(self, "window", w)
        if self.oversample_factor not in ALLOWED_OSF:
            raise ValueError(f"oversample_factor: expected one of {ALLOWED_OSF}, got {self.oversample_factor}")
        if not self.tau_gate_s > 0:
            raise ValueError(f"tau_gate_s: must be positive, got {self.tau_gate_s}")


# Option profiles used by the pipeline: path loss on the raw profile,
# delay spread and kappa1 on the windowed, oversampled one.
PL_OPTIONS = PdpOptions(window="rectangular", oversample_factor=1)
SHAPE_OPTIONS = PdpOptions(window="hann", oversample_factor=8)


@dataclass
class Pdp:
    delay_axis_s: np.ndarray
    power_lin: np.ndarray
    noise_floor_db: float | None = None
    threshold_db: float | None = None
    gated: bool = False
    options: PdpOptions = field(default_factory=PdpOptions)

    @property
    def delta_tau(self) -> float:
        return float(self.delay_axis_s[1] - self.delay_axis_s[0])

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power_lin))


class NoSignalError(ValueError):
    """No delay bin survives thresholding anywhere in the scan."""


def apply_ota(bundle: MeasurementBundle) -> np.ndarray:
    """Divide the measured tensor by the OTA response, per frequency."""
    ota = np.asarray(bundle.ota, dtype=np.complex128)
    if np.any(ota == 0) or not np.all(np.isfinite(ota)):
        raise ValueError("invalid OTA: zero or non-finite entries")
    return np.asarray(bundle.h_meas, dtype=np.complex128) / ota


def make_window(name: str, n: int) -> np.ndarray:
    """Window scaled to unit mean-square, so a flat unit spectrum keeps unit power."""
    if name == "rectangular":
        return np.ones(n)
    w = np.hanning(n)
    return w / math.sqrt(np.mean(w * w))


def delay_axis(n_freq: int, tau_max: float, osf: int) -> np.ndarray:
    m = n_freq * osf
    return np.arange(m) * (tau_max / m)


def pdp_power(h: np.ndarray, opts: PdpOptions, chunk: int = 256) -> np.ndarray:
    """|IDFT|^2 along the last axis of ``h`` for every leading index.

    The IDFT uses the 1/N convention on the unpadded length N; the power is
    divided by the oversampling factor so total power does not depend on it.
    """
    h = np.asarray(h)
    n = h.shape[-1]
    osf = opts.oversample_factor
    m = n * osf
    win = make_window(opts.window, n)
    lead = h.shape[:-1]
    flat = h.reshape(-1, n)
    out = np.empty((flat.shape[0], m))
    scale = m / n  # numpy's ifft divides by m; undo to 1/n
    for start in range(0, flat.shape[0], chunk):
        block = flat[start:start + chunk].astype(np.complex128) * win
        x = np.fft.ifft(block, n=m, axis=-1) * scale
        out[start:start + chunk] = (x.real ** 2 + x.imag ** 2) / osf
    return out.reshape(*lead, m)


def directional_pdp(calibrated: np.ndarray, pointing: tuple[int, int, int, int], opts: PdpOptions,
                    tau_max: float) -> Pdp:
    """Ungated PDP of one beam pair of a calibrated ``[el_tx, az_tx, el_rx, az_rx, f]`` tensor."""
    shape = calibrated.shape[:4]
    if len(pointing) != 4 or any(not 0 <= int(i) < s for i, s in zip(pointing, shape)):
        raise IndexError(f"pointing {tuple(pointing)} out of range for grid {shape}")
    h = calibrated[tuple(int(i) for i in pointing)]
    power = pdp_power(h[np.newaxis], opts)[0]
    return Pdp(delay_axis(h.shape[-1], tau_max, opts.oversample_factor), power, options=opts)


def _noise_mask(delays: np.ndarray, tau_gate: float, window: tuple[float, float] | None) -> np.ndarray:
    if window is not None:
        mask = (delays > window[0]) & (delays <= window[1])
    else:
        mask = delays > tau_gate
    if not mask.any():
        # fall back to the last delay decile
        mask = np.zeros(delays.size, dtype=bool)
        mask[-max(1, delays.size // 10):] = True
    return mask


def noise_floor_array(power: np.ndarray, delays: np.ndarray, opts: PdpOptions) -> np.ndarray:
    """Noise floor in dB for each PDP along the last axis; -inf where the window is empty of power."""
    mask = _noise_mask(delays, opts.tau_gate_s, opts.noise_window_s)
    mean = power[..., mask].mean(axis=-1)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(mean)


def estimate_noise_floor(pdp: Pdp) -> float:
    """Mean power, in dB, of the delay region beyond the gate."""
    if not np.any(pdp.power_lin > 0):
        raise ValueError("all-zero PDP: noise floor undefined")
    return float(noise_floor_array(pdp.power_lin, pdp.delay_axis_s, pdp.options))


def threshold_array(power: np.ndarray, noise_floor_db: np.ndarray, opts: PdpOptions,
                    scan_wide: bool = False) -> np.ndarray:
    """Noise floor plus margin, raised to peak minus ``dynamic_range_db`` when set.

    With ``scan_wide`` the peak is the maximum over every PDP in ``power``
    rather than each PDP's own maximum.
    """
    thr = np.asarray(noise_floor_db, dtype=float) + opts.noise_margin_db
    if opts.dynamic_range_db is not None:
        peak = power.max() if scan_wide else power.max(axis=-1)
        with np.errstate(divide="ignore"):
            peak_db = 10.0 * np.log10(peak)
        thr = np.maximum(thr, peak_db - opts.dynamic_range_db)
    return thr


def gate_array(power: np.ndarray, delays: np.ndarray, threshold_db: np.ndarray, tau_gate: float) -> np.ndarray:
    """Zero bins beyond the gate or below the per-PDP threshold (kept when >= threshold)."""
    thr_lin = 10.0 ** (np.asarray(threshold_db, dtype=float)[..., np.newaxis] / 10.0)
    keep = (power >= thr_lin) & (delays <= tau_gate)
    return np.where(keep, power, 0.0)


def threshold_gate(pdp: Pdp, opts: PdpOptions | None = None) -> Pdp:
    opts = opts or pdp.options
    floor = pdp.noise_floor_db
    if floor is None:
        floor = estimate_noise_floor(replace(pdp, options=opts))
    thr = pdp.threshold_db if pdp.gated and pdp.threshold_db is not None else float(
        threshold_array(pdp.power_lin, np.float64(floor), opts))
    power = gate_array(pdp.power_lin, pdp.delay_axis_s, np.float64(thr), opts.tau_gate_s)
    return Pdp(pdp.delay_axis_s, power, noise_floor_db=floor, threshold_db=thr, gated=True, options=opts)


@dataclass
class PdpSet:
    """Gated PDPs of every beam pair, stored as one ``[el_tx, az_tx, el_rx, az_rx, delay]`` array."""

    grid: object
    delay_axis_s: np.ndarray
    power: np.ndarray
    noise_floor_db: np.ndarray
    threshold_db: np.ndarray
    options: PdpOptions

    def __getitem__(self, pointing: tuple[int, int, int, int]) -> Pdp:
        idx = tuple(int(i) for i in pointing)
        return Pdp(self.delay_axis_s, self.power[idx], float(self.noise_floor_db[idx]),
                   float(self.threshold_db[idx]), gated=True, options=self.options)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.power.shape[:4]


def build_pdp_set(calibrated: np.ndarray, grid, tau_max: float, opts: PdpOptions) -> PdpSet:
    """Compute, noise-estimate and gate the PDP of every pointing."""
    power = pdp_power(calibrated, opts)
    delays = delay_axis(calibrated.shape[-1], tau_max, opts.oversample_factor)
    floor = noise_floor_array(power, delays, opts)
    thr = threshold_array(power, floor, opts, scan_wide=True)
    gated = gate_array(power, delays, thr, opts.tau_gate_s)
    return PdpSet(grid, delays, gated, floor, thr, opts)


def pdp_set_from_bundle(bundle: MeasurementBundle, opts: PdpOptions) -> PdpSet:
    report = validate_bundle(bundle)
    if report:
        raise ValueError("; ".join(report.violations))
    return build_pdp_set(apply_ota(bundle), bundle.grid, bundle.freq.tau_max, opts)
