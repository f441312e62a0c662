"""
Sensing mode: sensor-array snapshots of radar probing signals, grid MUSIC for the angles of
arrival and least squares for the complex path gains.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.signal import find_peaks

from error_handling import (
    ConditioningError, DegenerateSpectrumError, DimensionError, SubspaceError, ValidationError,
    require_positive,
)
from propagation import fspl_amplitude
from scene_model import angles_from_direction, steering_matrix, steering_vector
from schemas import SPEED_OF_LIGHT, AngleSpec, PlanarArray, Scenario
from seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / 6e9
MAX_CONDITION_NUMBER = 1e10


@dataclass(frozen=True)
class Source:
    angle: AngleSpec
    gain: complex = 1.0 + 0.0j


@dataclass(frozen=True, eq=False)
class SnapshotBlock:
    """Sensor outputs (sensors x snapshots)

    `signals` keeps the synthesized source matrix, one row per entry of `source_angles`.
    """
    data: np.ndarray
    sensor_array: PlanarArray
    noise_power: float
    wavelength: float = DEFAULT_WAVELENGTH
    signals: Optional[np.ndarray] = None
    source_angles: Optional[List[AngleSpec]] = None

    @property
    def n_sensors(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_snapshots(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True, eq=False)
class AoAEstimate:
    angles: List[AngleSpec]
    gains: List[complex]
    residual: float
    grid_deg: np.ndarray
    spectrum: np.ndarray


@dataclass(frozen=True, eq=False)
class SensingReport:
    """Truth next to the estimates for every radar a target-mounted array hears"""
    true_angles: List[AngleSpec]
    true_gains: List[complex]
    estimate: AoAEstimate
    angle_errors_deg: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_records(self) -> List[dict]:
        records = []
        for i, (truth, gain) in enumerate(zip(self.true_angles, self.true_gains)):
            est_angle = self.estimate.angles[i]
            est_gain = self.estimate.gains[i]
            records.append({
                'source': i,
                'true_azimuth_deg': truth.azimuth,
                'est_azimuth_deg': est_angle.azimuth,
                'true_gain_re': gain.real,
                'true_gain_im': gain.imag,
                'est_gain_re': est_gain.real,
                'est_gain_im': est_gain.imag,
            })
        return records


def _circular_normal(rng: np.random.Generator, shape, power: float = 1.0) -> np.ndarray:
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synth_snapshots(sensor_array: PlanarArray, sources: Sequence[Source], noise_power: float,
                    n_snapshots: int, seed: int,
                    wavelength: float = DEFAULT_WAVELENGTH) -> SnapshotBlock:
    """x(t) = sum_i gain_i s_i(t) a(angle_i) + w(t) with unit-power circular sources"""
    if int(n_snapshots) != n_snapshots or n_snapshots < 1:
        raise ValidationError("snapshot count must be an integer >= 1", field="snapshots")
    noise_power = require_positive(noise_power, "noise_power", allow_zero=True)

    rng = np.random.default_rng(derive_seed(seed, "snapshots"))
    n_sensors = sensor_array.size
    signals = _circular_normal(rng, (len(sources), n_snapshots))
    data = np.zeros((n_sensors, n_snapshots), dtype=complex)
    for i, source in enumerate(sources):
        a = steering_vector(sensor_array, source.angle, wavelength)
        data += complex(source.gain) * np.outer(a, signals[i])
    noise = _circular_normal(rng, (n_sensors, n_snapshots), noise_power)
    if noise_power > 0.0:
        data += noise
    return SnapshotBlock(data=data, sensor_array=sensor_array, noise_power=noise_power,
                         wavelength=wavelength, signals=signals,
                         source_angles=[source.angle for source in sources])


def default_grid(step_deg: float = 0.1, low: float = -90.0, high: float = 90.0) -> np.ndarray:
    require_positive(step_deg, "grid_step")
    count = int(round((high - low) / step_deg)) + 1
    return np.round(np.linspace(low, high, count), 10)


def music_spectrum(block: SnapshotBlock, n_sources: int, grid_deg: np.ndarray) -> np.ndarray:
    """Pseudo-spectrum 1 / ||E_n^H a(theta)||^2 over an azimuth grid"""
    n_sensors = block.n_sensors
    if n_sources < 0:
        raise ValidationError("source count must be non-negative", field="n_sources")
    if n_sources >= n_sensors:
        raise SubspaceError(f"{n_sources} sources leave no noise subspace with {n_sensors} sensors",
                            details={'n_sources': n_sources, 'n_sensors': n_sensors})

    covariance = block.data @ block.data.conj().T / block.n_snapshots
    # eigh sorts eigenvalues ascending; the noise subspace is the first M - D columns
    _, eigenvectors = scipy.linalg.eigh(covariance)
    noise_subspace = eigenvectors[:, :n_sensors - n_sources]

    A = steering_matrix(block.sensor_array, grid_deg, block.wavelength)
    projection = np.sum(np.abs(noise_subspace.conj().T @ A) ** 2, axis=0)
    tiny = np.finfo(float).tiny
    return 1.0 / np.maximum(projection, tiny)


def _peak_indices(spectrum: np.ndarray) -> np.ndarray:
    # zero padding lets the grid end points count as peaks
    padded = np.concatenate([np.zeros(1), spectrum, np.zeros(1)])
    peaks, _ = find_peaks(padded)
    return peaks - 1


def estimate_aoa(block: SnapshotBlock, n_sources: int,
                 grid_deg: Optional[Sequence[float]] = None) -> AoAEstimate:
    """Grid MUSIC: the n_sources largest local maxima, ties broken toward the lower angle"""
    grid = default_grid() if grid_deg is None else np.asarray(grid_deg, dtype=float)
    if grid.size == 0:
        raise ValidationError("angle grid must be nonempty", field="grid")
    if block.n_snapshots < n_sources:
        raise ValidationError(f"need at least {n_sources} snapshots, got {block.n_snapshots}",
                              field="snapshots")

    spectrum = music_spectrum(block, n_sources, grid)
    peaks = _peak_indices(spectrum)
    order = sorted(peaks, key=lambda i: (-spectrum[i], grid[i]))
    found = [float(grid[i]) for i in order]
    if len(found) < n_sources:
        raise DegenerateSpectrumError(
            f"pseudo-spectrum has {len(found)} peak(s), {n_sources} requested", peaks=found)

    angles = [AngleSpec(azimuth=az) for az in sorted(found[:n_sources])]
    if angles:
        gains, residual = _fit_gains(block, angles)
    else:
        gains, residual = [], float(np.mean(np.abs(block.data) ** 2))
    logger.debug(f"MUSIC peaks: {[a.azimuth for a in angles]}")
    return AoAEstimate(angles=angles, gains=gains, residual=residual, grid_deg=grid, spectrum=spectrum)


def _signals_for(block: SnapshotBlock, angles: Sequence[AngleSpec]) -> np.ndarray:
    """Source rows reordered to follow `angles`, each matched to the nearest true source angle"""
    signals = block.signals
    if block.source_angles is None:
        if signals.shape != (len(angles), block.n_snapshots):
            raise DimensionError("source matrix does not match the requested angles",
                                 expected=[len(angles), block.n_snapshots], got=list(signals.shape))
        return signals
    if len(angles) > signals.shape[0]:
        raise DimensionError("more angles requested than sources in the block",
                             expected=f"<={signals.shape[0]}", got=len(angles))
    cost = np.array([[math.hypot(a.azimuth - s.azimuth, a.elevation - s.elevation)
                      for s in block.source_angles] for a in angles])
    _, rows = linear_sum_assignment(cost)
    return signals[rows]


def _fit_gains(block: SnapshotBlock, angles: Sequence[AngleSpec]):
    if not angles:
        raise DimensionError("at least one angle is required", expected=">=1", got=0)
    A = np.column_stack([steering_vector(block.sensor_array, a, block.wavelength) for a in angles])
    condition = np.linalg.cond(A)
    if not np.isfinite(condition) or condition > MAX_CONDITION_NUMBER:
        raise ConditioningError("steering matrix is rank deficient (duplicate or unresolvable angles)",
                                condition_number=float(condition) if np.isfinite(condition) else None)

    if block.signals is not None:
        signals = _signals_for(block, angles)
    else:
        signals = np.ones((len(angles), block.n_snapshots), dtype=complex)

    # column i of the design is vec(a_i s_i^T)
    design = (A[:, None, :] * signals.T[None, :, :]).reshape(-1, len(angles))
    target = block.data.reshape(-1)
    gains, _, rank, _ = scipy.linalg.lstsq(design, target)
    if rank < len(angles):
        raise ConditioningError("path-gain design matrix is rank deficient")
    residual = float(np.mean(np.abs(target - design @ gains) ** 2))
    return [complex(x) for x in gains], residual


def estimate_path_gains(block: SnapshotBlock, angles: Sequence[AngleSpec]) -> List[complex]:
    """Least-squares complex amplitudes for sources at known angles"""
    gains, _ = _fit_gains(block, angles)
    return gains


def default_sensing_array(scenario: Scenario, n_sensors: int = 8) -> PlanarArray:
    """Half-wavelength ULA embedded on the IRS, sharing its frame"""
    irs = scenario.irs.array
    return PlanarArray(rows=1, cols=n_sensors, spacing=0.5, center=irs.center,
                       normal=irs.normal, axis=irs.axis)


def sense_scenario(scenario: Scenario, sensing_array: Optional[PlanarArray] = None,
                   noise_power: float = 0.01, n_snapshots: int = 64, seed: int = 0,
                   grid_step_deg: float = 0.1) -> SensingReport:
    """Reconnaissance pass: every radar is a source at its true angle of arrival"""
    array = sensing_array or default_sensing_array(scenario)
    wavelength = scenario.wavelength
    center = np.asarray(array.center, dtype=float)

    distances = np.array([np.linalg.norm(np.asarray(r.position) - center) for r in scenario.radars])
    amplitudes = fspl_amplitude(distances, wavelength)
    amplitudes = np.atleast_1d(amplitudes) / np.max(amplitudes)
    true_angles, true_gains = [], []
    for radar, amplitude, d in zip(scenario.radars, amplitudes, distances):
        angle = angles_from_direction(array, np.asarray(radar.position) - center)
        true_angles.append(AngleSpec(azimuth=angle.azimuth))
        true_gains.append(complex(amplitude * np.exp(-2j * np.pi * d / wavelength)))

    order = np.argsort([a.azimuth for a in true_angles], kind='stable')
    true_angles = [true_angles[i] for i in order]
    true_gains = [true_gains[i] for i in order]

    sources = [Source(angle, gain) for angle, gain in zip(true_angles, true_gains)]
    block = synth_snapshots(array, sources, noise_power, n_snapshots, seed, wavelength)
    estimate = estimate_aoa(block, len(sources), default_grid(grid_step_deg))
    errors = np.array([e.azimuth - t.azimuth for e, t in zip(estimate.angles, true_angles)])
    logger.info(f"Sensed {len(sources)} radar(s), max AoA error {np.max(np.abs(errors)):.3f} deg")
    return SensingReport(true_angles=true_angles, true_gains=true_gains, estimate=estimate,
                         angle_errors_deg=errors)
