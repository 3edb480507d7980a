"""Beam-pair reductions: max-dir and omni PDPs, angular power spectra, spreads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pdp import NoSignalError, Pdp, PdpSet


@dataclass
class Ddaps:
    tx_az_deg: np.ndarray
    rx_az_deg: np.ndarray
    power_lin: np.ndarray  # [n_az_tx, n_az_rx]

    @property
    def total(self) -> float:
        return float(self.power_lin.sum())


@dataclass
class Aps:
    end: str
    az_deg: np.ndarray
    power_lin: np.ndarray

    def __post_init__(self) -> None:
        if self.end not in ("Tx", "Rx"):
            raise ValueError(f"end: expected 'Tx' or 'Rx', got {self.end!r}")
        self.az_deg = np.asarray(self.az_deg, dtype=float)
        self.power_lin = np.asarray(self.power_lin, dtype=float)
        if self.az_deg.shape != self.power_lin.shape:
            raise ValueError("az_deg and power_lin lengths differ")
        self._phasors = np.exp(1j * np.deg2rad(self.az_deg))


def select_max_dir(pdps: PdpSet) -> tuple[tuple[int, int, int, int], Pdp]:
    """Beam pair with the largest total gated power.

    ``np.argmax`` on the C-ordered totals returns the first maximum, which is
    the lexicographically smallest ``(el_tx, az_tx, el_rx, az_rx)``.
    """
    totals = pdps.power.sum(axis=-1)
    if not np.any(totals > 0):
        raise NoSignalError("no signal above threshold")
    flat = int(np.argmax(totals))
    pointing = tuple(int(i) for i in np.unravel_index(flat, totals.shape))
    return pointing, pdps[pointing]


def elevation_sum(pdps: PdpSet) -> np.ndarray:
    """Sum over both elevation axes: ``[az_tx, az_rx, delay]``."""
    return pdps.power.sum(axis=(0, 2))


def synth_omni(pdps: PdpSet, per_bin: bool = True) -> Pdp:
    """Omni PDP: elevation-summed, then the strongest azimuth pair.

    With ``per_bin`` (default) the maximum over azimuth pairs is taken
    independently in every delay bin; otherwise the single pair with the
    largest elevation-summed total is returned whole.
    """
    s = elevation_sum(pdps)
    flat = s.reshape(-1, s.shape[-1])
    if per_bin:
        power = flat.max(axis=0)
    else:
        power = flat[int(np.argmax(flat.sum(axis=-1)))]
    return Pdp(pdps.delay_axis_s, power, gated=True, options=pdps.options)


def compute_ddaps(pdps: PdpSet) -> Ddaps:
    full = pdps.power.sum(axis=-1)  # [el_tx, az_tx, el_rx, az_rx]
    grid = pdps.grid
    return Ddaps(np.asarray(grid.tx_az_deg, float), np.asarray(grid.rx_az_deg, float), full.sum(axis=(0, 2)))


def marginal_aps(ddaps: Ddaps, end: str) -> Aps:
    if end == "Tx":
        return Aps("Tx", ddaps.tx_az_deg, ddaps.power_lin.sum(axis=1))
    if end == "Rx":
        return Aps("Rx", ddaps.rx_az_deg, ddaps.power_lin.sum(axis=0))
    raise ValueError(f"end: expected 'Tx' or 'Rx', got {end!r}")


def circular_mean(aps: Aps) -> complex:
    total = aps.power_lin.sum()
    if not total > 0:
        raise ValueError("zero-power APS")
    return complex(np.sum(aps._phasors * aps.power_lin) / total)


def angular_spread(aps: Aps) -> float:
    """Circular angular spread sqrt(sum |e^{j phi} - mu|^2 P / sum P); dimensionless, within [0, sqrt(2)]."""
    mu = circular_mean(aps)
    total = aps.power_lin.sum()
    dev = np.abs(aps._phasors - mu) ** 2
    return float(np.sqrt(np.sum(dev * aps.power_lin) / total))
