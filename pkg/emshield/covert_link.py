"""
IRS-assisted covert link: Alice transmits to Bob while Willie runs a radiometer.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import stats
from scipy.optimize import minimize_scalar

from config import DEFAULT_SOLVER, MonteCarloConfig, SolverConfig
from error_handling import GeometryError, InfeasibleError, ValidationError, require_positive
from propagation import ReflectionPattern, fspl_amplitude
from reflection_designer import DesignResult, design_constrained
from schemas import SPEED_OF_LIGHT, CovertGeometry, FadingMode, ReflectionMode, dbm_to_watts
from seeding import derive_seed, rng_for, spawn_chunk_seeds

logger = logging.getLogger(__name__)

COINCIDENCE_TOLERANCE_M = 1e-9


@dataclass(frozen=True, eq=False)
class CovertChannels:
    d_b: complex
    d_w: complex
    r_b: np.ndarray
    r_w: np.ndarray
    noise_b: float
    noise_w: float
    tx_power: float

    @property
    def n_elements(self) -> int:
        return int(self.r_b.shape[0])

    def bob_amplitude(self, pattern: ReflectionPattern) -> complex:
        return complex(self.d_b + np.dot(pattern.coefficients(), self.r_b))

    def willie_power(self, pattern: ReflectionPattern) -> float:
        """Received signal power at Willie in watts"""
        return self.tx_power * abs(self.d_w + np.dot(pattern.coefficients(), self.r_w)) ** 2


@dataclass(frozen=True)
class DetectionReport:
    p_fa: float
    p_md: float
    xi: float
    threshold: float
    trials: int
    samples: int
    signal_power: float
    xi_gaussian: float
    xi_exact: float

    def to_dict(self):
        return {
            'p_fa': self.p_fa,
            'p_md': self.p_md,
            'xi': self.xi,
            'threshold': self.threshold,
            'trials': self.trials,
            'samples': self.samples,
            'signal_power_w': self.signal_power,
            'xi_gaussian': self.xi_gaussian,
            'xi_exact': self.xi_exact,
        }


def _check_distinct(geometry: CovertGeometry, element_positions: np.ndarray):
    nodes = {'alice': geometry.alice, 'bob': geometry.bob, 'willie': geometry.willie,
             'irs': geometry.irs.center}
    names = list(nodes)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if np.linalg.norm(np.subtract(nodes[a], nodes[b])) < COINCIDENCE_TOLERANCE_M:
                raise GeometryError(f"{a} and {b} are at the same position", details={'nodes': [a, b]})
    for name in ('alice', 'bob', 'willie'):
        gaps = np.linalg.norm(element_positions - np.asarray(nodes[name]), axis=1)
        if np.any(gaps < COINCIDENCE_TOLERANCE_M):
            raise GeometryError(f"{name} coincides with an IRS element", details={'node': name})


def synth_covert_channels(geometry: CovertGeometry, fading: Optional[FadingMode] = None,
                          seed: int = 0) -> CovertChannels:
    """Direct and IRS-cascaded Alice links to Bob and Willie"""
    require_positive(geometry.carrier_hz, "carrier_hz")
    require_positive(geometry.element_amp_gain, "element_amp_gain")
    fading = fading or geometry.fading
    wavelength = SPEED_OF_LIGHT / geometry.carrier_hz
    elements = geometry.irs.element_positions(wavelength)
    _check_distinct(geometry, elements)

    alice = np.asarray(geometry.alice, dtype=float)

    def direct(node, loss_db: float) -> complex:
        d = float(np.linalg.norm(np.asarray(node) - alice))
        return complex(fspl_amplitude(d, wavelength) * 10.0 ** (-loss_db / 20.0)
                       * np.exp(-2j * np.pi * d / wavelength))

    def cascade(node) -> np.ndarray:
        d_in = np.linalg.norm(elements - alice, axis=1)
        d_out = np.linalg.norm(elements - np.asarray(node), axis=1)
        return (geometry.element_amp_gain * fspl_amplitude(d_in, wavelength)
                * fspl_amplitude(d_out, wavelength) * np.exp(-2j * np.pi * (d_in + d_out) / wavelength))

    d_b = direct(geometry.bob, geometry.bob_direct_loss_db)
    d_w = direct(geometry.willie, geometry.willie_direct_loss_db)
    r_b = cascade(geometry.bob)
    r_w = cascade(geometry.willie)

    if fading == FadingMode.RAYLEIGH:
        rng = rng_for(seed, "covert-fading")
        n = elements.shape[0]
        factors = (rng.standard_normal(2 * n + 2) + 1j * rng.standard_normal(2 * n + 2)) / math.sqrt(2.0)
        d_b *= factors[0]
        d_w *= factors[1]
        r_b = r_b * factors[2:2 + n]
        r_w = r_w * factors[2 + n:]

    return CovertChannels(d_b=d_b, d_w=d_w, r_b=r_b, r_w=r_w,
                          noise_b=dbm_to_watts(geometry.noise_dbm_bob),
                          noise_w=dbm_to_watts(geometry.noise_dbm_willie),
                          tx_power=dbm_to_watts(geometry.tx_power_dbm))


def design_covert(ch: CovertChannels, epsilon: float,
                  mode: ReflectionMode = ReflectionMode.UNIT_MODULUS, max_iters: Optional[int] = None,
                  seed: int = 0, config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Maximise Bob's received power while Willie's stays within epsilon watts"""
    epsilon = require_positive(epsilon, "epsilon", allow_zero=True)
    if max_iters is not None:
        config = replace(config, max_sweeps=int(max_iters))
    try:
        result = design_constrained(ch.d_b, ch.r_b, ch.d_w, ch.r_w, epsilon / ch.tx_power, mode,
                                    seed, config)
    except InfeasibleError as e:
        bound_w = e.bound * ch.tx_power
        raise InfeasibleError(f"Willie budget {epsilon:.6e} W is below the minimum reachable "
                              f"{bound_w:.6e} W", bound=bound_w) from e

    logger.info(f"Covert design: Bob {ch.tx_power * result.objective:.3e} W, "
                f"Willie {ch.tx_power * result.constraint_value:.3e} W (budget {epsilon:.3e} W)")
    return replace(result, objective=ch.tx_power * result.objective,
                   constraint_value=ch.tx_power * result.constraint_value,
                   details={**result.details, 'epsilon_w': epsilon})


def gaussian_min_error_prob(signal_power: float, noise_power: float, samples: int) -> float:
    """Minimum p_fa + p_md with both radiometer statistics approximated as Gaussians"""
    if signal_power <= 0.0:
        return 1.0
    s0 = noise_power
    s1 = noise_power + signal_power
    if s1 <= s0:
        return 1.0
    root = math.sqrt(samples)

    def total_error(tau: float) -> float:
        return float(stats.norm.sf((tau - s0) * root / s0) + stats.norm.cdf((tau - s1) * root / s1))

    found = minimize_scalar(total_error, bounds=(s0, s1), method='bounded',
                            options={'xatol': 1e-12 * s1})
    return min(1.0, float(found.fun))


def exact_min_error_prob(signal_power: float, noise_power: float, samples: int) -> float:
    """Closed-form optimum of the radiometer: both statistics are scaled Gamma(L, 1/L)"""
    if signal_power <= 0.0:
        return 1.0
    ratio = (noise_power + signal_power) / noise_power
    if ratio <= 1.0:
        return 1.0
    tau = noise_power * ratio * math.log(ratio) / (ratio - 1.0)
    h0 = stats.gamma(samples, scale=noise_power / samples)
    h1 = stats.gamma(samples, scale=(noise_power + signal_power) / samples)
    return min(1.0, float(h0.sf(tau) + h1.cdf(tau)))


def _radiometer_chunk(seed_sequence: np.random.SeedSequence, size: int, samples: int) -> np.ndarray:
    rng = np.random.default_rng(seed_sequence)
    return rng.gamma(samples, 1.0 / samples, size)


def willie_min_error_prob(ch: CovertChannels, pattern: ReflectionPattern, samples: int, trials: int,
                          seed: int, monte_carlo: Optional[MonteCarloConfig] = None) -> DetectionReport:
    """Monte Carlo radiometer at Willie with an empirical threshold sweep"""
    monte_carlo = monte_carlo or MonteCarloConfig()
    if int(samples) != samples or samples < 1:
        raise ValidationError("samples per decision must be an integer >= 1", field="samples")
    if int(trials) != trials or trials < 1:
        raise ValidationError("trials must be an integer >= 1", field="trials")
    samples, trials = int(samples), int(trials)
    noise = ch.noise_w
    signal = ch.willie_power(pattern)

    chunk = max(1, int(monte_carlo.chunk_size))
    sizes = [min(chunk, trials - lo) for lo in range(0, trials, chunk)]
    seeds = spawn_chunk_seeds(derive_seed(seed, "radiometer"), len(sizes))
    parts = Parallel(n_jobs=monte_carlo.n_jobs)(
        delayed(_radiometer_chunk)(s, size, samples) for s, size in zip(seeds, sizes)
    )
    # one set of normalized energies serves both hypotheses (common random numbers)
    base = np.sort(np.concatenate(parts))
    h0 = noise * base
    h1 = (noise + signal) * base

    thresholds = np.unique(np.concatenate([h0, h1]))
    p_fa = 1.0 - np.searchsorted(h0, thresholds, side='right') / trials
    p_md = np.searchsorted(h1, thresholds, side='right') / trials
    total = p_fa + p_md
    best = int(np.argmin(total))
    if total[best] < 1.0:
        report_fa, report_md = float(p_fa[best]), float(p_md[best])
        xi, tau = float(total[best]), float(thresholds[best])
    else:
        report_fa, report_md, xi, tau = 1.0, 0.0, 1.0, -math.inf

    report = DetectionReport(
        p_fa=report_fa, p_md=report_md, xi=xi, threshold=tau, trials=trials, samples=samples,
        signal_power=signal,
        xi_gaussian=gaussian_min_error_prob(signal, noise, samples),
        xi_exact=exact_min_error_prob(signal, noise, samples),
    )
    logger.info(f"Radiometer: xi={report.xi:.4f} (gaussian {report.xi_gaussian:.4f}, "
                f"exact {report.xi_exact:.4f}) with L={samples}, trials={trials}")
    return report


def bob_rate(ch: CovertChannels, pattern: ReflectionPattern) -> float:
    """Achievable rate log2(1 + SNR) at Bob in bits/s/Hz"""
    noise = require_positive(ch.noise_b, "noise_b")
    snr = ch.tx_power * abs(ch.bob_amplitude(pattern)) ** 2 / noise
    return float(math.log2(1.0 + snr))
