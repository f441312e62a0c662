"""
Channel synthesis for the radar stealth/spoofing model.

Every channel bakes in the radar's conjugate-beamforming amplitude gain M. Echo convention:
    e_k = g_k + sum_n theta_n * h_{k,n},   theta_n = beta_n * exp(j * phi_n)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from error_handling import (
    DimensionError, GeometryError, IndexOutOfRangeError, ValidationError, require_positive,
)
from schemas import ReflectionMode, Scenario, SurfaceMode, dbm_to_watts

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
PASSIVITY_TOLERANCE = 1e-12


def fspl_amplitude(d, wavelength: float):
    """Free-space amplitude lambda / (4 pi d); accepts scalars or arrays"""
    require_positive(wavelength, "wavelength")
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0.0) or not np.all(np.isfinite(d_arr)):
        raise GeometryError("propagation distance must be positive and finite",
                            details={'min_distance': float(np.min(d_arr)) if d_arr.size else None})
    value = wavelength / (4.0 * np.pi * d_arr)
    return float(value) if np.ndim(value) == 0 else value


def wrap_phase(phases) -> np.ndarray:
    """Map phases into [0, 2pi)"""
    wrapped = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


@dataclass(frozen=True, eq=False)
class ReflectionPattern:
    """IRS control word: per-element amplitude in [0, 1] and phase in [0, 2pi)"""
    amplitudes: np.ndarray
    phases: np.ndarray
    mode: ReflectionMode = ReflectionMode.UNIT_MODULUS
    bits: Optional[int] = None

    def __post_init__(self):
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=float)).copy()
        phases = wrap_phase(np.atleast_1d(self.phases))
        if amplitudes.shape != phases.shape or amplitudes.ndim != 1:
            raise DimensionError("amplitudes and phases must be vectors of equal length",
                                 expected=list(phases.shape), got=list(amplitudes.shape))
        if np.any(amplitudes < -PASSIVITY_TOLERANCE) or np.any(amplitudes > 1.0 + PASSIVITY_TOLERANCE):
            raise ValidationError("reflection amplitudes must lie in [0, 1]", field="amplitudes")
        amplitudes = np.clip(amplitudes, 0.0, 1.0)
        if self.mode == ReflectionMode.UNIT_MODULUS and not np.allclose(amplitudes, 1.0, atol=1e-12):
            raise ValidationError("unit-modulus patterns need every amplitude equal to 1",
                                  field="amplitudes")
        if self.mode == ReflectionMode.UNIT_MODULUS:
            amplitudes = np.ones_like(amplitudes)
        amplitudes.setflags(write=False)
        phases.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amplitudes)
        object.__setattr__(self, 'phases', phases)

    @property
    def size(self) -> int:
        return int(self.phases.shape[0])

    def coefficients(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @classmethod
    def off(cls, n_elements: int) -> 'ReflectionPattern':
        """All-zero amplitudes, the 'target without IRS' baseline"""
        return cls(np.zeros(n_elements), np.zeros(n_elements), ReflectionMode.AMPLITUDE)

    def to_dict(self):
        data = {
            'mode': self.mode.value,
            'amplitudes': [float(b) for b in self.amplitudes],
            'phases_rad': [float(p) for p in self.phases],
        }
        if self.bits is not None:
            data['bits'] = self.bits
        return data


def pattern_from_coefficients(theta: Sequence[complex], mode: ReflectionMode,
                              bits: Optional[int] = None) -> ReflectionPattern:
    """Build a pattern from complex coefficients; unit-modulus mode keeps only the phases"""
    theta = np.asarray(theta, dtype=complex)
    phases = np.angle(theta)
    if mode == ReflectionMode.UNIT_MODULUS:
        amplitudes = np.ones(theta.shape[0])
    else:
        amplitudes = np.minimum(np.abs(theta), 1.0)
    return ReflectionPattern(amplitudes, phases, mode, bits)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """All channel quantities of one scenario realization"""
    g: np.ndarray                 # (K,)
    H: np.ndarray                 # (N, K)
    T: np.ndarray                 # (N, K, S)
    wavelength: float
    tx_power_dbm: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_elements(self) -> int:
        return int(self.H.shape[0])

    @property
    def n_radars(self) -> int:
        return int(self.g.shape[0])

    @property
    def n_scatterers(self) -> int:
        return int(self.T.shape[2])

    def h(self, radar_index: int) -> np.ndarray:
        return self.H[:, radar_index]


@dataclass(frozen=True)
class EchoPower:
    echo: complex
    power_dbm: float


def _radar(scenario: Scenario, radar_index: int):
    if not 0 <= radar_index < scenario.n_radars:
        raise IndexOutOfRangeError(f"radar index {radar_index} out of range for "
                                   f"{scenario.n_radars} radar(s)", index=radar_index)
    return scenario.radars[radar_index]


def _distances(origin: Sequence[float], points: np.ndarray, what: str) -> np.ndarray:
    d = np.linalg.norm(points - np.asarray(origin, dtype=float), axis=-1)
    if np.any(d <= 0.0):
        raise GeometryError(f"{what} coincides with a transmitter or receiver")
    return d


def surface_phases(scenario: Scenario) -> np.ndarray:
    """Per-element scattering phases psi_s of the absorbing surface"""
    surface = scenario.target.surface
    if scenario.target.surface_mode == SurfaceMode.SPECULAR:
        return np.zeros(surface.size)
    rng = np.random.default_rng(scenario.target.surface_seed)
    return rng.uniform(0.0, TWO_PI, size=surface.size)


def synth_surface_echo(scenario: Scenario, radar_index: int) -> complex:
    """Direct echo g_k of the EWAM-coated surface seen by radar k"""
    radar = _radar(scenario, radar_index)
    wavelength = scenario.wavelength
    positions = scenario.target.surface.element_positions(wavelength)
    d = _distances(radar.position, positions, "surface element")
    rho = fspl_amplitude(d, wavelength)
    amplitude = math.sqrt(1.0 - scenario.target.absorb_eff)
    if amplitude == 0.0:
        return 0j
    terms = amplitude * rho**2 * np.exp(-2j * TWO_PI * d / wavelength + 1j * surface_phases(scenario))
    return complex(radar.gain * np.sum(terms))


def synth_cascaded_channels(scenario: Scenario, radar_index: int) -> np.ndarray:
    """Radar -> IRS element -> radar channels h_{k,n}"""
    radar = _radar(scenario, radar_index)
    wavelength = scenario.wavelength
    positions = scenario.irs.array.element_positions(wavelength)
    d = _distances(radar.position, positions, "IRS element")
    rho = fspl_amplitude(d, wavelength)
    return radar.gain * scenario.irs.element_amp_gain * rho**2 * np.exp(-2j * TWO_PI * d / wavelength)


def synth_decoy_channels(scenario: Scenario, radar_index: int, scatterer_index: int) -> np.ndarray:
    """Radar -> IRS element -> scatterer -> radar cascades t_{k,n,s}"""
    radar = _radar(scenario, radar_index)
    if not 0 <= scatterer_index < len(scenario.scatterers):
        raise IndexOutOfRangeError(f"scatterer index {scatterer_index} out of range for "
                                   f"{len(scenario.scatterers)} scatterer(s)", index=scatterer_index)
    scatterer = scenario.scatterers[scatterer_index]
    wavelength = scenario.wavelength
    positions = scenario.irs.array.element_positions(wavelength)

    d_kn = _distances(radar.position, positions, "IRS element")
    d_ns = _distances(scatterer.position, positions, "IRS element")
    d_sk = float(np.linalg.norm(np.asarray(scatterer.position) - np.asarray(radar.position)))
    if d_sk <= 0.0:
        raise GeometryError(f"scatterer {scatterer_index} coincides with radar {radar_index}")

    legs = d_kn + d_ns + d_sk
    gain = radar.gain * scenario.irs.element_amp_gain * scatterer.reflectivity
    return (gain * fspl_amplitude(d_kn, wavelength) * fspl_amplitude(d_ns, wavelength)
            * fspl_amplitude(d_sk, wavelength) * np.exp(-1j * TWO_PI * legs / wavelength))


def synth_channel_set(scenario: Scenario) -> ChannelSet:
    """Every g, h and t of a validated scenario"""
    n_radars = scenario.n_radars
    n_elements = scenario.irs.n_elements
    n_scatterers = len(scenario.scatterers)

    g = np.array([synth_surface_echo(scenario, k) for k in range(n_radars)], dtype=complex)
    H = np.zeros((n_elements, n_radars), dtype=complex)
    T = np.zeros((n_elements, n_radars, n_scatterers), dtype=complex)
    for k in range(n_radars):
        H[:, k] = synth_cascaded_channels(scenario, k)
        for s in range(n_scatterers):
            T[:, k, s] = synth_decoy_channels(scenario, k, s)

    tx = np.array([radar.tx_power_dbm for radar in scenario.radars], dtype=float)
    logger.debug(f"Synthesized channels: K={n_radars}, N={n_elements}, S={n_scatterers}")
    return ChannelSet(g=g, H=H, T=T, wavelength=scenario.wavelength, tx_power_dbm=tx)


def echo_and_power(channels: ChannelSet, pattern: ReflectionPattern, radar_index: int,
                   tx_power_dbm: Optional[float] = None) -> EchoPower:
    """Echo e_k under a pattern and its received power; a zero echo reports -inf dBm"""
    if pattern.size != channels.n_elements:
        raise DimensionError("pattern length does not match the IRS size",
                             expected=channels.n_elements, got=pattern.size)
    if not 0 <= radar_index < channels.n_radars:
        raise IndexOutOfRangeError(f"radar index {radar_index} out of range", index=radar_index)
    if tx_power_dbm is None:
        tx_power_dbm = float(channels.tx_power_dbm[radar_index]) if channels.tx_power_dbm.size else 0.0

    echo = complex(channels.g[radar_index] + np.dot(pattern.coefficients(), channels.H[:, radar_index]))
    power_w = dbm_to_watts(tx_power_dbm) * abs(echo) ** 2
    power_dbm = 10.0 * math.log10(power_w) + 30.0 if power_w > 0.0 else float('-inf')
    return EchoPower(echo=echo, power_dbm=power_dbm)
