"""
Data schemas for em-shield.
Defines the world description (arrays, radars, target, IRS, scatterers, covert link nodes)
shared by every module. Vectors are stored as float tuples so schema values compare exactly.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Optional, Tuple
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

Vector3 = Tuple[float, float, float]


class SurfaceMode(Enum):
    ROUGH = "rough"
    SPECULAR = "specular"


class ReflectionMode(Enum):
    UNIT_MODULUS = "unit-modulus"
    AMPLITUDE = "amplitude-adjustable"


class FadingMode(Enum):
    LOS = "los"
    RAYLEIGH = "rayleigh"


class Command(Enum):
    DESIGN = "design"
    SWEEP_ANGLE = "sweep-angle"
    SWEEP_RADARS = "sweep-radars"
    RECON = "recon"
    COVERT = "covert"
    DETECT = "detect"
    CASE_STUDY = "case-study"


class Algorithm(Enum):
    REVERSE_ALIGNMENT = "reverse-alignment"
    MMSE = "mmse"
    NULL_ZONE = "null-zone"
    SPOOF = "spoof"
    RANDOM = "random"
    BRUTE_FORCE = "brute-force"
    COVERT = "covert"


class OutputFormat(Enum):
    CSV = "csv"
    JSON = "json"


class PlacementRule(Enum):
    NESTED = "nested"
    SPREAD = "spread"


def as_vector3(values: Any) -> Vector3:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got {values!r}")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class PlanarArray:
    """Regular rows x cols grid; spacing in carrier wavelengths"""
    rows: int
    cols: int
    spacing: float = 0.5
    center: Vector3 = (0.0, 0.0, 0.0)
    normal: Vector3 = (0.0, 0.0, 1.0)
    axis: Vector3 = (1.0, 0.0, 0.0)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def frame(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(normal, column axis, row axis) as numpy vectors"""
        n = np.asarray(self.normal, dtype=float)
        u = np.asarray(self.axis, dtype=float)
        v = np.cross(n, u)
        return n, u, v

    def element_positions(self, wavelength: float) -> np.ndarray:
        """(rows*cols, 3) positions in meters, element m = r*cols + c"""
        _, u, v = self.frame()
        r = np.arange(self.rows) - (self.rows - 1) / 2.0
        c = np.arange(self.cols) - (self.cols - 1) / 2.0
        rr, cc = np.meshgrid(r, c, indexing='ij')
        step = self.spacing * wavelength
        offsets = (rr.reshape(-1, 1) * v + cc.reshape(-1, 1) * u) * step
        return np.asarray(self.center, dtype=float) + offsets

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ('center', 'normal', 'axis'):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PlanarArray':
        data = dict(data)
        for key in ('center', 'normal', 'axis'):
            if key in data:
                data[key] = as_vector3(data[key])
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class AngleSpec:
    """Azimuth from broadside in the (normal, axis) plane; elevation toward the row axis"""
    azimuth: float = 0.0
    elevation: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RadarSpec:
    position: Vector3
    array: Optional[PlanarArray] = None
    tx_power_dbm: float = 15.0

    @property
    def gain(self) -> float:
        """Conjugate-beamforming amplitude gain M baked into the echoes"""
        return float(self.array.size) if self.array is not None else 64.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'position': list(self.position),
            'array': self.array.to_dict() if self.array is not None else None,
            'tx_power_dbm': self.tx_power_dbm,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RadarSpec':
        array = data.get('array')
        return cls(
            position=as_vector3(data['position']),
            array=PlanarArray.from_dict(array) if isinstance(array, dict) else array,
            tx_power_dbm=float(data.get('tx_power_dbm', 15.0)),
        )


def default_surface() -> PlanarArray:
    return PlanarArray(rows=10, cols=20, spacing=0.5, center=(0.0, 0.0, 1000.0),
                       normal=(0.0, 0.0, -1.0), axis=(1.0, 0.0, 0.0))


def default_irs_array(n_elements: int = 8) -> PlanarArray:
    return PlanarArray(rows=1, cols=n_elements, spacing=0.5, center=(0.0, 0.25, 1000.0),
                       normal=(0.0, 0.0, -1.0), axis=(1.0, 0.0, 0.0))


@dataclass(frozen=True)
class TargetSpec:
    position: Vector3 = (0.0, 0.0, 1000.0)
    surface: PlanarArray = field(default_factory=default_surface)
    absorb_eff: float = 0.8
    surface_mode: SurfaceMode = SurfaceMode.ROUGH
    surface_seed: int = 42

    def to_dict(self) -> Dict[str, Any]:
        return {
            'position': list(self.position),
            'surface': self.surface.to_dict(),
            'absorb_eff': self.absorb_eff,
            'surface_mode': self.surface_mode.value,
            'surface_seed': self.surface_seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TargetSpec':
        data = dict(data)
        if 'position' in data:
            data['position'] = as_vector3(data['position'])
        if isinstance(data.get('surface'), dict):
            data['surface'] = PlanarArray.from_dict(data['surface'])
        if isinstance(data.get('surface_mode'), str):
            data['surface_mode'] = SurfaceMode(data['surface_mode'])
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class IrsSpec:
    array: PlanarArray = field(default_factory=default_irs_array)
    element_amp_gain: float = 1.0

    @property
    def n_elements(self) -> int:
        return self.array.size

    def to_dict(self) -> Dict[str, Any]:
        return {'array': self.array.to_dict(), 'element_amp_gain': self.element_amp_gain}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'IrsSpec':
        data = dict(data)
        if isinstance(data.get('array'), dict):
            data['array'] = PlanarArray.from_dict(data['array'])
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class Scatterer:
    position: Vector3
    reflectivity: complex = 1.0 + 0.0j

    def to_dict(self) -> Dict[str, Any]:
        return {'position': list(self.position),
                'reflectivity': [self.reflectivity.real, self.reflectivity.imag]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scatterer':
        return cls(position=as_vector3(data['position']),
                   reflectivity=parse_complex(data.get('reflectivity', 1.0)))


def parse_complex(value: Any) -> complex:
    """Accept a number, a complex, or a [re, im] pair"""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def default_radars() -> Tuple[RadarSpec, ...]:
    return (RadarSpec(position=(0.0, 0.0, 0.0)),)


@dataclass(frozen=True)
class Scenario:
    """Full world description"""
    carrier_hz: float = 6e9
    radars: Tuple[RadarSpec, ...] = field(default_factory=default_radars)
    target: TargetSpec = field(default_factory=TargetSpec)
    irs: IrsSpec = field(default_factory=IrsSpec)
    scatterers: Tuple[Scatterer, ...] = ()
    seed: int = 0

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def n_radars(self) -> int:
        return len(self.radars)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'carrier_hz': self.carrier_hz,
            'radars': [radar.to_dict() for radar in self.radars],
            'target': self.target.to_dict(),
            'irs': self.irs.to_dict(),
            'scatterers': [s.to_dict() for s in self.scatterers],
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scenario':
        return cls(
            carrier_hz=float(data.get('carrier_hz', 6e9)),
            radars=tuple(RadarSpec.from_dict(r) for r in data.get('radars', [])),
            target=TargetSpec.from_dict(data.get('target', {})),
            irs=IrsSpec.from_dict(data.get('irs', {})),
            scatterers=tuple(Scatterer.from_dict(s) for s in data.get('scatterers', [])),
            seed=int(data.get('seed', 0)),
        )


def default_covert_irs() -> PlanarArray:
    return PlanarArray(rows=8, cols=8, spacing=0.5, center=(50.0, 10.0, 0.0),
                       normal=(0.0, -1.0, 0.0), axis=(1.0, 0.0, 0.0))


@dataclass(frozen=True)
class CovertGeometry:
    """Alice/Bob/Willie node positions, the assisting IRS, and the link budget"""
    alice: Vector3 = (0.0, 0.0, 0.0)
    bob: Vector3 = (100.0, 0.0, 0.0)
    willie: Vector3 = (60.0, -30.0, 0.0)
    irs: PlanarArray = field(default_factory=default_covert_irs)
    element_amp_gain: float = 3.0
    carrier_hz: float = 6e9
    fading: FadingMode = FadingMode.LOS
    # Obstruction losses on the direct Alice links
    bob_direct_loss_db: float = 0.0
    willie_direct_loss_db: float = 40.0
    tx_power_dbm: float = 20.0
    noise_dbm_bob: float = -100.0
    noise_dbm_willie: float = -100.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alice': list(self.alice),
            'bob': list(self.bob),
            'willie': list(self.willie),
            'irs': self.irs.to_dict(),
            'element_amp_gain': self.element_amp_gain,
            'carrier_hz': self.carrier_hz,
            'bob_direct_loss_db': self.bob_direct_loss_db,
            'willie_direct_loss_db': self.willie_direct_loss_db,
            'fading': self.fading.value,
            'tx_power_dbm': self.tx_power_dbm,
            'noise_dbm_bob': self.noise_dbm_bob,
            'noise_dbm_willie': self.noise_dbm_willie,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CovertGeometry':
        data = dict(data)
        for key in ('alice', 'bob', 'willie'):
            if key in data:
                data[key] = as_vector3(data[key])
        if isinstance(data.get('irs'), dict):
            data['irs'] = PlanarArray.from_dict(data['irs'])
        if isinstance(data.get('fading'), str):
            data['fading'] = FadingMode(data['fading'])
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float, floor_dbm: float = -400.0) -> float:
    """Power in dBm; zero (or anything under the floor) maps to the floor sentinel"""
    if not watts > 0:
        return floor_dbm
    return float(max(10.0 * np.log10(watts) + 30.0, floor_dbm))
