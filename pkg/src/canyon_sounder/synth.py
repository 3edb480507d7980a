"""Ground-truth scene synthesizer.

Renders a list of propagation paths into a measurement bundle on the same
grid and in the same format as a real scan, so the whole processing chain
can be checked against known answers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle import SPEED_OF_LIGHT, AngleGrid, FrequencyAxis, LinkGeometry, MeasurementBundle

BEAMWIDTH_DEG = 13.0


def antenna_gain(offset_deg, beamwidth_deg: float = BEAMWIDTH_DEG):
    """Gaussian main-lobe power gain, 0.5 at half the 3 dB beamwidth."""
    off = np.asarray(offset_deg, dtype=float)
    g = np.exp(-math.log(2.0) * (2.0 * off / beamwidth_deg) ** 2)
    return float(g) if g.ndim == 0 else g


def great_circle_deg(az1, el1, az2, el2):
    """Angle between two directions given as azimuth/elevation in degrees."""
    az1, el1, az2, el2 = (np.deg2rad(np.asarray(a, dtype=float)) for a in (az1, el1, az2, el2))
    c = np.sin(el1) * np.sin(el2) + np.cos(el1) * np.cos(el2) * np.cos(az1 - az2)
    return np.rad2deg(np.arccos(np.clip(c, -1.0, 1.0)))


def friis_pl_db(distance_m: float, freq_hz: float) -> float:
    lam = SPEED_OF_LIGHT / freq_hz
    return 20.0 * math.log10(4.0 * math.pi * distance_m / lam)


@dataclass(frozen=True)
class PathSpec:
    """One propagation path.

    ``gain`` is ``{"type": "friis", "distance_m": d, "extra_loss_db": x}`` or
    ``{"type": "explicit", "amplitude": a, "phase_rad": p}``.  Exactly one of
    ``delay_s`` / ``runlength_m`` is given; a Friis distance defaults to the
    runlength.
    """

    aod_az_deg: float = 0.0
    aod_el_deg: float = 0.0
    aoa_az_deg: float = 0.0
    aoa_el_deg: float = 0.0
    delay_s: float | None = None
    runlength_m: float | None = None
    gain: dict = field(default_factory=lambda: {"type": "friis"})

    @property
    def delay(self) -> float:
        if self.delay_s is not None:
            return float(self.delay_s)
        if self.runlength_m is not None:
            return float(self.runlength_m) / SPEED_OF_LIGHT
        raise ValueError("path needs delay_s or runlength_m")

    def amplitude(self, freqs: np.ndarray) -> np.ndarray:
        kind = self.gain.get("type", "friis")
        phase = float(self.gain.get("phase_rad", 0.0))
        if kind == "explicit":
            return np.full(freqs.shape, float(self.gain["amplitude"]) * np.exp(1j * phase))
        if kind == "friis":
            d = self.gain.get("distance_m", self.runlength_m)
            if d is None:
                d = self.delay * SPEED_OF_LIGHT
            extra = 10.0 ** (-float(self.gain.get("extra_loss_db", 0.0)) / 20.0)
            lam = SPEED_OF_LIGHT / freqs
            return extra * lam / (4.0 * math.pi * float(d)) * np.exp(1j * phase)
        raise ValueError(f"gain.type: unknown {kind!r}")

    def to_dict(self) -> dict:
        d = {
            "aod_az_deg": self.aod_az_deg, "aod_el_deg": self.aod_el_deg,
            "aoa_az_deg": self.aoa_az_deg, "aoa_el_deg": self.aoa_el_deg,
            "gain": dict(self.gain),
        }
        if self.delay_s is not None:
            d["delay_s"] = self.delay_s
        if self.runlength_m is not None:
            d["runlength_m"] = self.runlength_m
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PathSpec":
        return cls(
            aod_az_deg=float(d.get("aod_az_deg", 0.0)), aod_el_deg=float(d.get("aod_el_deg", 0.0)),
            aoa_az_deg=float(d.get("aoa_az_deg", 0.0)), aoa_el_deg=float(d.get("aoa_el_deg", 0.0)),
            delay_s=None if d.get("delay_s") is None else float(d["delay_s"]),
            runlength_m=None if d.get("runlength_m") is None else float(d["runlength_m"]),
            gain=dict(d.get("gain", {"type": "friis"})),
        )


@dataclass(frozen=True)
class SceneSpec:
    """A scene to render.

    ``snr_db`` is the per-frequency-sample SNR of a free-space path over
    ``geometry.distance_m`` seen at boresight; ``None`` disables noise.
    """

    paths: tuple[PathSpec, ...]
    geometry: LinkGeometry
    snr_db: float | None = None
    seed: int = 0
    grid: AngleGrid = field(default_factory=AngleGrid)
    freq: FrequencyAxis = field(default_factory=FrequencyAxis)
    label: str = ""

    def noise_variance(self) -> float:
        ref = (SPEED_OF_LIGHT / self.freq.center_hz / (4.0 * math.pi * self.geometry.distance_m)) ** 2
        return ref / 10.0 ** (self.snr_db / 10.0)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "seed": int(self.seed),
            "snr_db": self.snr_db,
            "geometry": self.geometry.to_dict(),
            "grid": self.grid.to_dict(),
            "freq": self.freq.to_dict(),
            "paths": [p.to_dict() for p in self.paths],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        snr = d.get("snr_db")
        return cls(
            paths=tuple(PathSpec.from_dict(p) for p in d.get("paths", [])),
            geometry=LinkGeometry.from_dict(d["geometry"]),
            snr_db=None if snr is None else float(snr),
            seed=int(d.get("seed", 0)),
            grid=AngleGrid.from_dict(d["grid"]) if "grid" in d else AngleGrid(),
            freq=FrequencyAxis.from_dict(d["freq"]) if "freq" in d else FrequencyAxis(),
            label=str(d.get("label", "")),
        )


def load_scene(path: str | Path) -> SceneSpec:
    return SceneSpec.from_dict(json.loads(Path(path).read_text()))


def save_scene(scene: SceneSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2))


def _pointing_gains(path: PathSpec, grid: AngleGrid) -> np.ndarray:
    """Amplitude pattern factor for every pointing, ``[el_tx, az_tx, el_rx, az_rx]``."""
    tx_el, tx_az = np.meshgrid(grid.tx_el_deg, grid.tx_az_deg, indexing="ij")
    rx_el, rx_az = np.meshgrid(grid.rx_el_deg, grid.rx_az_deg, indexing="ij")
    g_tx = antenna_gain(great_circle_deg(tx_az, tx_el, path.aod_az_deg, path.aod_el_deg))
    g_rx = antenna_gain(great_circle_deg(rx_az, rx_el, path.aoa_az_deg, path.aoa_el_deg))
    return np.sqrt(g_tx)[:, :, None, None] * np.sqrt(g_rx)[None, None, :, :]


def synthesize_bundle(scene: SceneSpec, dtype=np.complex64) -> MeasurementBundle:
    """Render ``scene``; the OTA response is all ones."""
    grid, freq = scene.grid, scene.freq
    f = freq.frequencies
    f_rel = f - freq.f_start_hz
    shape = (*grid.shape, freq.n_points)
    h = np.zeros(shape, dtype=np.complex128)
    for p in scene.paths:
        tau = p.delay
        if not 0.0 <= tau < freq.tau_max:
            raise ValueError(f"path delay {tau:.6g} s outside [0, tau_max={freq.tau_max:.6g}) would alias")
        # absolute-frequency phase, evaluated as start phase times relative ramp for accuracy
        spectrum = p.amplitude(f) * np.exp(-2j * math.pi * freq.f_start_hz * tau) * np.exp(-2j * math.pi * f_rel * tau)
        h += _pointing_gains(p, grid)[..., None] * spectrum
    if scene.snr_db is not None:
        sigma = math.sqrt(scene.noise_variance() / 2.0)
        flat = h.reshape(-1, freq.n_points)
        for i in range(flat.shape[0]):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(scene.seed), i])))
            flat[i] += sigma * (rng.standard_normal(freq.n_points) + 1j * rng.standard_normal(freq.n_points))
    return MeasurementBundle(grid, freq, scene.geometry, h.astype(dtype),
                             np.ones(freq.n_points, dtype=dtype), label=scene.label)


def _los_path(distance_m: float) -> PathSpec:
    return PathSpec(runlength_m=distance_m, gain={"type": "friis", "distance_m": distance_m})


def scene_single_los(distance_m: float = 100.0, snr_db: float | None = None, seed: int = 0,
                     label: str = "a_single_los") -> SceneSpec:
    return SceneSpec((_los_path(distance_m),), LinkGeometry(distance_m, los=True), snr_db, seed, label=label)


def scene_los_reflection(distance_m: float = 60.0, snr_db: float | None = None, seed: int = 0,
                         label: str = "b_los_reflection") -> SceneSpec:
    """LoS plus a reflection cluster roughly 30 dB weaker off a side wall."""
    paths = [_los_path(distance_m)]
    for k, (excess, az_tx, az_rx, loss) in enumerate([(25.0, 30.0, 40.0, 28.0), (32.0, 30.0, 50.0, 31.0),
                                                       (48.0, -20.0, 180.0, 32.0)]):
        paths.append(PathSpec(aod_az_deg=az_tx, aoa_az_deg=az_rx, runlength_m=distance_m + excess,
                              gain={"type": "friis", "extra_loss_db": loss, "phase_rad": 0.7 * k}))
    return SceneSpec(tuple(paths), LinkGeometry(distance_m, los=True), snr_db, seed, label=label)


def scene_nlos_canyon(distance_m: float = 45.0, snr_db: float | None = None, seed: int = 0,
                      label: str = "c_nlos_canyon") -> SceneSpec:
    """No LoS; the strongest path is guided down a street and arrives late."""
    paths = [
        PathSpec(aod_az_deg=-20.0, aoa_az_deg=330.0, runlength_m=distance_m + 12.0,
                 gain={"type": "friis", "extra_loss_db": 6.0}),
        PathSpec(aod_az_deg=-20.0, aoa_az_deg=320.0, runlength_m=distance_m + 21.0,
                 gain={"type": "friis", "extra_loss_db": 12.0, "phase_rad": 1.1}),
        PathSpec(aod_az_deg=-10.0, aoa_az_deg=50.0, runlength_m=distance_m + 40.0,
                 gain={"type": "friis", "extra_loss_db": 16.0, "phase_rad": 2.3}),
    ]
    return SceneSpec(tuple(paths), LinkGeometry(distance_m, los=False), snr_db, seed, label=label)


def scene_two_cluster(distance_m: float = 80.0, snr_db: float | None = None, seed: int = 0,
                      label: str = "d_two_cluster", powers: tuple[float, float] = (0.6, 0.4)) -> SceneSpec:
    """Two clusters at distinct on-grid azimuth pairs; powers relative to free space at ``distance_m``."""
    base = SPEED_OF_LIGHT / FrequencyAxis().center_hz / (4.0 * math.pi * distance_m)
    paths = [
        PathSpec(aod_az_deg=30.0, aoa_az_deg=40.0, runlength_m=distance_m + 15.0,
                 gain={"type": "explicit", "amplitude": base * math.sqrt(powers[0])}),
        PathSpec(aod_az_deg=-40.0, aoa_az_deg=300.0, runlength_m=distance_m + 60.0,
                 gain={"type": "explicit", "amplitude": base * math.sqrt(powers[1]), "phase_rad": 0.4}),
    ]
    return SceneSpec(tuple(paths), LinkGeometry(distance_m, los=False), snr_db, seed, label=label)


def build_canonical_scenes() -> dict[str, SceneSpec]:
    return {
        "a_single_los": scene_single_los(),
        "b_los_reflection": scene_los_reflection(),
        "c_nlos_canyon": scene_nlos_canyon(),
        "d_two_cluster": scene_two_cluster(),
    }


# Direct Tx-Rx distances of the campaign's 13 LoS and 13 NLoS links.
CAMPAIGN_LOS_M = (82.5, 64.5, 40.8, 72.3, 49.8, 32.1, 20.4, 33.9, 45.9, 54.3, 36.3, 57.9, 65.7)
CAMPAIGN_NLOS_M = (83.2, 73.6, 46.4, 62.6, 53.4, 40.7, 35.0, 58.5, 66.8, 45.5, 20.8, 30.0, 20.0)


def campaign_scenes(snr_db: float | None = 30.0, seed: int = 2022) -> list[SceneSpec]:
    """26 scenes at the campaign distances: LoS-with-reflections and alternating NLoS families."""
    scenes = []
    for i, d in enumerate(CAMPAIGN_LOS_M):
        scenes.append(scene_los_reflection(d, snr_db, seed + i, label=f"LoS{i + 1:02d}"))
    for i, d in enumerate(CAMPAIGN_NLOS_M):
        make = scene_nlos_canyon if i % 2 == 0 else scene_two_cluster
        scenes.append(make(d, snr_db, seed + 100 + i, label=f"NLoS{i + 1:02d}"))
    return scenes
