"""Measurement-bundle container: types, validation and the on-disk format.

A bundle is a directory holding ``meta.json`` plus two raw payloads:

``h.bin``
    The measured transfer-function tensor, complex64 little-endian
    (interleaved re/im float32), row-major in the order
    ``[el_tx][az_tx][el_rx][az_rx][freq]``.
``ota.bin``
    The over-the-air calibration response, same encoding, ``[freq]``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
PAYLOAD_DTYPE = np.dtype("<c8")
SPEED_OF_LIGHT = 299_792_458.0


class BundleError(ValueError):
    """Raised for malformed or inconsistent bundles."""


def _default_tx_az() -> list[float]:
    return [float(a) for a in range(-60, 61, 10)]


def _default_rx_az() -> list[float]:
    return [float(a) for a in range(0, 360, 10)]


def _default_el() -> list[float]:
    return [-13.0, 0.0, 13.0]


@dataclass(frozen=True)
class AngleGrid:
    """Pointing grid in degrees. Defaults reproduce the campaign scan."""

    tx_az_deg: list[float] = field(default_factory=_default_tx_az)
    tx_el_deg: list[float] = field(default_factory=_default_el)
    rx_az_deg: list[float] = field(default_factory=_default_rx_az)
    rx_el_deg: list[float] = field(default_factory=_default_el)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (len(self.tx_el_deg), len(self.tx_az_deg), len(self.rx_el_deg), len(self.rx_az_deg))

    def violations(self) -> list[str]:
        out = []
        for name in ("tx_az_deg", "tx_el_deg", "rx_az_deg", "rx_el_deg"):
            vals = np.asarray(getattr(self, name), dtype=float)
            if vals.size == 0:
                out.append(f"grid.{name}: empty")
            elif not np.all(np.isfinite(vals)):
                out.append(f"grid.{name}: non-finite angle")
            elif np.any(np.diff(vals) <= 0):
                out.append(f"grid.{name}: not strictly increasing")
        return out

    def to_dict(self) -> dict:
        return {k: list(map(float, getattr(self, k))) for k in ("tx_az_deg", "tx_el_deg", "rx_az_deg", "rx_el_deg")}

    @classmethod
    def from_dict(cls, d: dict) -> "AngleGrid":
        return cls(**{k: [float(v) for v in d[k]] for k in ("tx_az_deg", "tx_el_deg", "rx_az_deg", "rx_el_deg")})


@dataclass(frozen=True)
class FrequencyAxis:
    f_start_hz: float = 145e9
    f_stop_hz: float = 146e9
    n_points: int = 1001

    @property
    def delta_f(self) -> float:
        return (self.f_stop_hz - self.f_start_hz) / (self.n_points - 1)

    @property
    def tau_max(self) -> float:
        """Alias-free excess delay, 1/Δf."""
        return 1.0 / self.delta_f

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_start_hz, self.f_stop_hz, self.n_points)

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.f_start_hz + self.f_stop_hz)

    def violations(self) -> list[str]:
        out = []
        if int(self.n_points) != self.n_points or self.n_points < 2:
            out.append(f"freq.n_points: must be an integer >= 2, got {self.n_points}")
        if not (math.isfinite(self.f_start_hz) and math.isfinite(self.f_stop_hz)):
            out.append("freq: non-finite frequency bound")
        elif self.f_stop_hz <= self.f_start_hz:
            out.append(f"freq.f_stop_hz: {self.f_stop_hz} <= f_start_hz {self.f_start_hz}")
        return out

    def to_dict(self) -> dict:
        return {"f_start_hz": float(self.f_start_hz), "f_stop_hz": float(self.f_stop_hz), "n_points": int(self.n_points)}

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyAxis":
        return cls(float(d["f_start_hz"]), float(d["f_stop_hz"]), int(d["n_points"]))


@dataclass(frozen=True)
class LinkGeometry:
    distance_m: float
    los: bool = True
    tx_height_m: float = 11.5
    rx_height_m: float = 1.7
    tx_pos_m: tuple[float, float, float] | None = None
    rx_pos_m: tuple[float, float, float] | None = None

    @property
    def los_flag(self) -> str:
        return "LoS" if self.los else "NLoS"

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.distance_m) and self.distance_m > 0):
            out.append(f"geometry.distance_m: must be > 0, got {self.distance_m}")
        if self.tx_pos_m is not None and self.rx_pos_m is not None:
            sep = float(np.linalg.norm(np.subtract(self.tx_pos_m, self.rx_pos_m)))
            if abs(sep - self.distance_m) > 0.1:
                out.append(f"geometry.distance_m: {self.distance_m} disagrees with |tx-rx| = {sep:.3f}")
        return out

    def to_dict(self) -> dict:
        return {
            "distance_m": float(self.distance_m),
            "los_flag": self.los_flag,
            "tx_height_m": float(self.tx_height_m),
            "rx_height_m": float(self.rx_height_m),
            "tx_pos_m": None if self.tx_pos_m is None else [float(v) for v in self.tx_pos_m],
            "rx_pos_m": None if self.rx_pos_m is None else [float(v) for v in self.rx_pos_m],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkGeometry":
        flag = d.get("los_flag", "LoS")
        if flag not in ("LoS", "NLoS"):
            raise BundleError(f"geometry.los_flag: expected LoS or NLoS, got {flag!r}")
        tx = d.get("tx_pos_m")
        rx = d.get("rx_pos_m")
        return cls(
            distance_m=float(d["distance_m"]),
            los=flag == "LoS",
            tx_height_m=float(d.get("tx_height_m", 11.5)),
            rx_height_m=float(d.get("rx_height_m", 1.7)),
            tx_pos_m=None if tx is None else tuple(float(v) for v in tx),
            rx_pos_m=None if rx is None else tuple(float(v) for v in rx),
        )


@dataclass
class MeasurementBundle:
    grid: AngleGrid
    freq: FrequencyAxis
    geometry: LinkGeometry
    h_meas: np.ndarray
    ota: np.ndarray
    label: str = ""

    @property
    def expected_shape(self) -> tuple[int, ...]:
        return (*self.grid.shape, self.freq.n_points)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def validate_bundle(bundle: MeasurementBundle) -> ValidationReport:
    """List every violated bundle invariant. An empty report means valid."""
    v = bundle.grid.violations() + bundle.freq.violations() + bundle.geometry.violations()
    h = np.asarray(bundle.h_meas)
    ota = np.asarray(bundle.ota)
    if h.shape != bundle.expected_shape:
        v.append(f"h_meas: shape {h.shape} does not match grid/freq {bundle.expected_shape}")
    if not np.all(np.isfinite(h)):
        v.append("h_meas: non-finite entries")
    if ota.shape != (bundle.freq.n_points,):
        v.append(f"ota: shape {ota.shape} does not match n_freq {bundle.freq.n_points}")
    if not np.all(np.isfinite(ota)):
        v.append("ota: non-finite entries")
    if np.any(ota == 0):
        v.append("invalid OTA: zero entries")
    return ValidationReport(v)


def element_offset(index: tuple[int, int, int, int, int], shape: tuple[int, ...]) -> int:
    """Byte offset of element ``(e_t, a_t, e_r, a_r, k)`` inside ``h.bin``."""
    e_t, a_t, e_r, a_r, k = index
    _, A_t, E_r, A_r, F = shape
    return ((((e_t * A_t + a_t) * E_r + e_r) * A_r + a_r) * F + k) * PAYLOAD_DTYPE.itemsize


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(bundle: MeasurementBundle, path: str | os.PathLike) -> None:
    report = validate_bundle(bundle)
    if report:
        raise BundleError("; ".join(report.violations))
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BundleError(f"cannot create bundle directory {path}: {exc}") from exc
    meta = {
        "schema_version": SCHEMA_VERSION,
        "label": bundle.label,
        "grid": bundle.grid.to_dict(),
        "freq": bundle.freq.to_dict(),
        "geometry": bundle.geometry.to_dict(),
        "payload": {
            "dtype": "complex64-le",
            "h_shape": list(bundle.expected_shape),
            "dimension_order": ["el_tx", "az_tx", "el_rx", "az_rx", "freq"],
        },
    }
    _atomic_write_bytes(path / "h.bin", np.ascontiguousarray(bundle.h_meas, dtype=PAYLOAD_DTYPE).tobytes())
    _atomic_write_bytes(path / "ota.bin", np.ascontiguousarray(bundle.ota, dtype=PAYLOAD_DTYPE).tobytes())
    _atomic_write_bytes(path / "meta.json", json.dumps(meta, indent=2).encode())


def _read_payload(path: Path, shape: tuple[int, ...]) -> np.ndarray:
    if not path.is_file():
        raise BundleError(f"missing payload file {path.name}")
    expected = int(np.prod(shape)) * PAYLOAD_DTYPE.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise BundleError(f"payload size mismatch in {path.name}: expected {expected} bytes, found {actual}")
    return np.fromfile(path, dtype=PAYLOAD_DTYPE).reshape(shape)


def load_bundle(path: str | os.PathLike) -> MeasurementBundle:
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise BundleError(f"missing meta.json in {path}")
    meta = json.loads(meta_path.read_text())
    version = str(meta.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise BundleError(f"schema_version: unsupported version {version!r}")
    grid = AngleGrid.from_dict(meta["grid"])
    freq = FrequencyAxis.from_dict(meta["freq"])
    geometry = LinkGeometry.from_dict(meta["geometry"])
    problems = grid.violations() + freq.violations()
    if problems:
        raise BundleError("; ".join(problems))
    shape = (*grid.shape, freq.n_points)
    h = _read_payload(path / "h.bin", shape)
    ota = _read_payload(path / "ota.bin", (freq.n_points,))
    bundle = MeasurementBundle(grid, freq, geometry, h, ota, label=str(meta.get("label", "")))
    report = validate_bundle(bundle)
    if report:
        raise BundleError("; ".join(report.violations))
    return bundle
