"""
Scene geometry: planar arrays, angle conventions, steering vectors, scenario validation.

Angles are measured in an array's own frame: azimuth from broadside (the normal) toward the
in-plane column axis, elevation toward the row axis. 0 deg azimuth is normal incidence.
"""
import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from error_handling import GeometryError, ValidationError, require_positive, require_range
from schemas import (
    AngleSpec, IrsSpec, PlanarArray, PlacementRule, RadarSpec, Scenario, TargetSpec,
    Vector3, as_vector3, default_irs_array,
)

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12
COINCIDENCE_TOLERANCE_M = 1e-9
DEFAULT_RADAR_ROWS = 8
DEFAULT_RADAR_COLS = 8


def _unit(vector: Sequence[float], what: str) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm == 0.0:
        raise GeometryError(f"{what} must be a nonzero finite vector, got {tuple(v)}")
    return v / norm


def default_axis(normal: Sequence[float]) -> np.ndarray:
    """In-plane axis: world x (or y when the normal is close to x) projected onto the plane"""
    n = _unit(normal, "normal")
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = ref - np.dot(ref, n) * n
    return u / np.linalg.norm(u)


def build_planar_array(rows: int, cols: int, spacing: float = 0.5,
                       center: Sequence[float] = (0.0, 0.0, 0.0),
                       normal: Sequence[float] = (0.0, 0.0, 1.0),
                       axis: Optional[Sequence[float]] = None) -> PlanarArray:
    """Regular grid centered on `center`, spacing in wavelengths"""
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise ValidationError(f"rows and cols must be integers >= 1, got {rows}x{cols}", field="rows")
    require_positive(spacing, "spacing")
    n = _unit(normal, "normal")
    u = default_axis(n) if axis is None else _orthonormal_axis(n, axis)
    return PlanarArray(rows=int(rows), cols=int(cols), spacing=float(spacing),
                       center=as_vector3(center), normal=as_vector3(n), axis=as_vector3(u))


def _orthonormal_axis(n: np.ndarray, axis: Sequence[float]) -> np.ndarray:
    u = np.asarray(axis, dtype=float)
    if not np.all(np.isfinite(u)) or np.linalg.norm(u) == 0.0:
        return default_axis(n)
    dot = float(np.dot(u, n))
    if abs(dot) > UNIT_TOLERANCE:
        u = u - dot * n
        if np.linalg.norm(u) < 1e-9:
            logger.warning("In-plane axis parallel to the normal, using the default axis")
            return default_axis(n)
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        u = u / norm
    return u


def normalize_array(array: PlanarArray) -> PlanarArray:
    """Re-normalize the frame of an array; values already unit within 1e-12 are left untouched"""
    if int(array.rows) != array.rows or int(array.cols) != array.cols or array.rows < 1 or array.cols < 1:
        raise ValidationError(f"rows and cols must be integers >= 1, got {array.rows}x{array.cols}",
                              field="rows")
    require_positive(array.spacing, "spacing")
    if not np.all(np.isfinite(array.center)):
        raise GeometryError(f"array center must be finite, got {array.center}")

    n = np.asarray(array.normal, dtype=float)
    norm = float(np.linalg.norm(n))
    if not np.isfinite(norm) or norm == 0.0:
        raise GeometryError(f"normal must be a nonzero finite vector, got {array.normal}")
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        n = n / norm
    u = _orthonormal_axis(n, array.axis)
    return replace(array, rows=int(array.rows), cols=int(array.cols), spacing=float(array.spacing),
                   normal=as_vector3(n), axis=as_vector3(u))


def direction_from_angles(array: PlanarArray, direction: AngleSpec) -> np.ndarray:
    """Unit propagation direction in world coordinates"""
    require_range(direction.azimuth, -90.0, 90.0, "azimuth")
    require_range(direction.elevation, -90.0, 90.0, "elevation")
    n, u, v = array.frame()
    az = math.radians(direction.azimuth)
    el = math.radians(direction.elevation)
    return math.cos(el) * (math.cos(az) * n + math.sin(az) * u) + math.sin(el) * v


def angles_from_direction(array: PlanarArray, vector: Sequence[float]) -> AngleSpec:
    """Inverse of direction_from_angles for directions in front of the array"""
    d = _unit(vector, "direction")
    n, u, v = array.frame()
    along_n, along_u, along_v = float(d @ n), float(d @ u), float(d @ v)
    if along_n < -1e-12:
        raise GeometryError("direction lies behind the array plane")
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, along_v))))
    azimuth = math.degrees(math.atan2(along_u, max(along_n, 0.0)))
    return AngleSpec(azimuth=azimuth, elevation=elevation)


def steering_vector_from_direction(array: PlanarArray, unit_direction: Sequence[float],
                                   wavelength: float) -> np.ndarray:
    require_positive(wavelength, "wavelength")
    positions = array.element_positions(wavelength) - np.asarray(array.center, dtype=float)
    k = 2.0 * np.pi / wavelength
    return np.exp(1j * k * (positions @ np.asarray(unit_direction, dtype=float)))


def steering_vector(array: PlanarArray, direction: AngleSpec, wavelength: float) -> np.ndarray:
    """exp(j 2pi/lambda <p_m - center, u(direction)>) for every element"""
    return steering_vector_from_direction(array, direction_from_angles(array, direction), wavelength)


def steering_matrix(array: PlanarArray, azimuths_deg: Sequence[float], wavelength: float,
                    elevation_deg: float = 0.0) -> np.ndarray:
    """(elements, len(azimuths)) steering vectors for an azimuth grid at fixed elevation"""
    require_positive(wavelength, "wavelength")
    n, u, v = array.frame()
    az = np.radians(np.asarray(azimuths_deg, dtype=float))
    el = math.radians(elevation_deg)
    dirs = (math.cos(el) * (np.outer(np.cos(az), n) + np.outer(np.sin(az), u))
            + math.sin(el) * v)
    positions = array.element_positions(wavelength) - np.asarray(array.center, dtype=float)
    return np.exp(1j * (2.0 * np.pi / wavelength) * (positions @ dirs.T))


def place_radar(target_position: Sequence[float], surface: PlanarArray, bearing_deg: float,
                range_m: float) -> Vector3:
    """Radar position at a bearing in the surface's (normal, axis) plane"""
    require_positive(range_m, "range_m")
    direction = direction_from_angles(surface, AngleSpec(azimuth=bearing_deg))
    return as_vector3(np.asarray(target_position, dtype=float) + range_m * direction)


# Binary refinement of [-60, 60]; the first K entries give the nested placement, so K+1
# radars extend the K-radar layout.
NESTED_BEARINGS_DEG = (0.0, -60.0, 60.0, -30.0, 30.0, -15.0, 15.0, -45.0, 45.0,
                       -7.5, 7.5, -22.5, 22.5, -37.5, 37.5, -52.5, 52.5)


def radar_bearings(n_radars: int, rule: PlacementRule = PlacementRule.SPREAD,
                   span_deg: Tuple[float, float] = (-60.0, 60.0)) -> List[float]:
    """Bearings for K radars at equal range"""
    if n_radars < 1:
        raise ValidationError("at least one radar is required", field="radars")
    if rule == PlacementRule.SPREAD:
        if n_radars == 1:
            return [0.5 * (span_deg[0] + span_deg[1])]
        return [float(b) for b in np.linspace(span_deg[0], span_deg[1], n_radars)]
    if n_radars > len(NESTED_BEARINGS_DEG):
        raise ValidationError(f"nested placement supports up to {len(NESTED_BEARINGS_DEG)} radars",
                              field="radars")
    return list(NESTED_BEARINGS_DEG[:n_radars])


def _default_radar_array(position: Sequence[float], target_position: Sequence[float]) -> PlanarArray:
    facing = np.asarray(target_position, dtype=float) - np.asarray(position, dtype=float)
    return build_planar_array(DEFAULT_RADAR_ROWS, DEFAULT_RADAR_COLS, 0.5, position, facing)


def validate_scenario(raw: Scenario) -> Scenario:
    """Validate and normalize a scenario; idempotent"""
    carrier = require_positive(raw.carrier_hz, "carrier_hz")

    if not raw.radars:
        raise ValidationError("scenario needs at least one radar", field="radars")

    target = raw.target
    absorb = require_range(target.absorb_eff, 0.0, 1.0, "absorb_eff")
    target_pos = np.asarray(target.position, dtype=float)
    if not np.all(np.isfinite(target_pos)):
        raise GeometryError(f"target position must be finite, got {target.position}")

    radars = []
    for k, radar in enumerate(raw.radars):
        pos = np.asarray(radar.position, dtype=float)
        if not np.all(np.isfinite(pos)):
            raise GeometryError(f"radar {k} position must be finite")
        if np.linalg.norm(pos - target_pos) < COINCIDENCE_TOLERANCE_M:
            raise GeometryError(f"radar {k} coincides with the target position",
                                details={'radar_index': k})
        if not math.isfinite(float(radar.tx_power_dbm)):
            raise ValidationError(f"radar {k} tx_power_dbm must be finite", field="tx_power_dbm")
        array = radar.array if radar.array is not None else _default_radar_array(pos, target_pos)
        radars.append(replace(radar, array=normalize_array(array),
                              tx_power_dbm=float(radar.tx_power_dbm)))

    for s, scatterer in enumerate(raw.scatterers):
        if np.linalg.norm(np.asarray(scatterer.position, dtype=float) - target_pos) < COINCIDENCE_TOLERANCE_M:
            raise GeometryError(f"scatterer {s} coincides with the target position",
                                details={'scatterer_index': s})

    require_positive(raw.irs.element_amp_gain, "element_amp_gain")

    normalized = replace(
        raw,
        carrier_hz=carrier,
        radars=tuple(radars),
        target=replace(target, absorb_eff=absorb, surface=normalize_array(target.surface),
                       surface_seed=int(target.surface_seed)),
        irs=replace(raw.irs, array=normalize_array(raw.irs.array),
                    element_amp_gain=float(raw.irs.element_amp_gain)),
        scatterers=tuple(raw.scatterers),
        seed=int(raw.seed),
    )
    logger.debug(f"Validated scenario: K={normalized.n_radars}, N={normalized.irs.n_elements}, "
                 f"S={len(normalized.scatterers)}")
    return normalized


def default_scenario(n_irs: int = 8, n_radars: int = 1, range_m: float = 1000.0,
                     placement: PlacementRule = PlacementRule.SPREAD,
                     surface_seed: int = 42, irs_rows: int = 1) -> Scenario:
    """Case-study world: 6 GHz, 15 dBm, M=64, 200-element surface with eta=0.8"""
    target = TargetSpec(surface_seed=surface_seed)
    cols = n_irs // irs_rows
    if cols * irs_rows != n_irs:
        raise ValidationError(f"{n_irs} IRS elements do not fill {irs_rows} rows", field="irs")
    base = default_irs_array(cols)
    irs = IrsSpec(array=replace(base, rows=irs_rows, cols=cols))
    radars = tuple(
        RadarSpec(position=place_radar(target.position, target.surface, bearing, range_m))
        for bearing in radar_bearings(n_radars, placement)
    )
    return validate_scenario(Scenario(radars=radars, target=target, irs=irs))
