"""
IRS reflection design.

Stealth designs minimise the residual echo |g + sum_n theta_n h_n|^2; spoofing and covert designs
maximise a second link's power under a budget on that residual. All solvers work on inputs
scaled to unit magnitude and report objectives recomputed from the returned pattern.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed

from config import DEFAULT_SOLVER, SolverConfig
from error_handling import (
    DimensionError, EnumerationSizeError, InfeasibleError, ValidationError,
)
from propagation import ReflectionPattern, TWO_PI, pattern_from_coefficients
from schemas import ReflectionMode
from seeding import rng_for

logger = logging.getLogger(__name__)

FEASIBILITY_RTOL = 1e-9
BRUTE_FORCE_CHUNK = 1 << 16
WHITENING_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class DesignResult:
    pattern: ReflectionPattern
    objective: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)
    constraint_value: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)


def _vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector", got=list(arr.shape))
    return arr


def _coefficients(pattern) -> np.ndarray:
    if isinstance(pattern, ReflectionPattern):
        return pattern.coefficients()
    return np.asarray(pattern, dtype=complex)


def stealth_objective(g, H, pattern) -> float:
    """Sum over radars of |g_k + sum_n theta_n H[n, k]|^2"""
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[:, None]
    theta = _coefficients(pattern)
    if H.shape != (theta.shape[0], g.shape[0]):
        raise DimensionError("channel matrix does not match pattern and echo sizes",
                             expected=[theta.shape[0], g.shape[0]], got=list(H.shape))
    residual = g + H.T @ theta
    return float(np.real(np.vdot(residual, residual)))


def decoy_power(t, pattern, direct: complex = 0j) -> float:
    """|direct + sum_n theta_n t_n|^2"""
    t = _vector(t, "t")
    theta = _coefficients(pattern)
    if t.shape != theta.shape:
        raise DimensionError("decoy channel does not match the pattern", expected=theta.shape[0],
                             got=t.shape[0])
    return float(abs(complex(direct) + np.dot(theta, t)) ** 2)


def optimal_residual_bound(g: complex, h: Sequence[complex]) -> float:
    """Exact min over phases of |g + sum_n e^{j phi_n} h_n|"""
    mags = np.abs(_vector(h, "h")) if np.size(h) else np.zeros(0)
    g_abs = abs(complex(g))
    if mags.size == 0:
        return g_abs
    total = float(np.sum(mags))
    inner = max(0.0, 2.0 * float(np.max(mags)) - total)
    if g_abs > total:
        return g_abs - total
    if g_abs < inner:
        return inner - g_abs
    return 0.0


def amplitude_residual_bound(g: complex, h: Sequence[complex]) -> float:
    """Exact min of the residual when amplitudes may shrink to zero"""
    return max(0.0, abs(complex(g)) - float(np.sum(np.abs(_vector(h, "h")))))


def stealth_bound(g: complex, h: Sequence[complex], mode: ReflectionMode) -> float:
    if mode == ReflectionMode.AMPLITUDE:
        return amplitude_residual_bound(g, h)
    return optimal_residual_bound(g, h)


def _polygon_closure(g: complex, h: np.ndarray) -> np.ndarray:
    """Unit-modulus coefficients whose contributions sum to the closest reachable point to -g"""
    mags = np.abs(h)
    n_elements = h.shape[0]
    theta = np.ones(n_elements, dtype=complex)
    g_abs = abs(g)
    direction = g / g_abs if g_abs > 0 else 1.0 + 0j
    total = float(np.sum(mags))
    inner = max(0.0, 2.0 * float(np.max(mags)) - total)
    if g_abs > total:
        remaining = -direction * total
    elif g_abs < inner:
        remaining = -direction * inner
    else:
        remaining = -complex(g)

    order = np.argsort(-mags, kind='stable')
    sorted_mags = mags[order]
    # reachable magnitudes of the elements after position i form [rest_low, rest_high]
    rest_high = np.concatenate([np.cumsum(sorted_mags[::-1])[::-1][1:], [0.0]])
    rest_max = np.concatenate([np.maximum.accumulate(sorted_mags[::-1])[::-1][1:], [0.0]])
    rest_low = np.maximum(0.0, 2.0 * rest_max - rest_high)

    for pos, n in enumerate(order):
        a = sorted_mags[pos]
        if a == 0.0:
            continue
        T = abs(remaining)
        low = max(rest_low[pos], abs(T - a))
        high = min(rest_high[pos], T + a)
        d = 0.5 * (low + high)
        if T == 0.0:
            v = complex(a)
        else:
            cos_alpha = (T * T + a * a - d * d) / (2.0 * a * T)
            alpha = math.acos(max(-1.0, min(1.0, cos_alpha)))
            v = a * np.exp(1j * (np.angle(remaining) + alpha))
        theta[n] = np.exp(1j * (np.angle(v) - np.angle(h[n])))
        remaining -= v
    return theta


def _project(theta: np.ndarray, mode: ReflectionMode) -> np.ndarray:
    mags = np.abs(theta)
    if mode == ReflectionMode.AMPLITUDE:
        return np.where(mags > 1.0, theta / np.where(mags > 0, mags, 1.0), theta)
    return np.where(mags > 0, theta / np.where(mags > 0, mags, 1.0), 1.0 + 0j)


def _residual_power(g: np.ndarray, A: np.ndarray, theta: np.ndarray) -> float:
    e = g + A @ theta
    return float(np.real(np.vdot(e, e)))


def _coordinate_descent(g: np.ndarray, A: np.ndarray, theta: np.ndarray, mode: ReflectionMode,
                        tolerance: float, max_sweeps: int) -> Tuple[np.ndarray, List[float], int, bool]:
    """Exact per-element minimisation of ||g + A theta||^2; A is (K, N)"""
    theta = theta.copy()
    col_norms = np.sum(np.abs(A) ** 2, axis=0)
    history = [_residual_power(g, A, theta)]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        e = g + A @ theta
        for n in range(theta.shape[0]):
            if col_norms[n] == 0.0:
                continue
            a_n = A[:, n]
            r = e - theta[n] * a_n
            x = -np.vdot(a_n, r) / col_norms[n]
            if mode == ReflectionMode.AMPLITUDE:
                if abs(x) > 1.0:
                    x = x / abs(x)
            else:
                if x == 0:
                    continue
                x = x / abs(x)
            theta[n] = x
            e = r + x * a_n
        history.append(_residual_power(g, A, theta))
        if history[-2] - history[-1] < tolerance:
            converged = True
            break
    if history[-1] > history[0] * (1.0 + 1e-12) + 1e-30:
        logger.warning("Coordinate descent ended above its starting objective")
    return theta, history, sweeps, converged


def _phase_polish(g: np.ndarray, A: np.ndarray, theta: np.ndarray,
                  iterations: int = 25) -> np.ndarray:
    """Gauss-Newton on the phases only (amplitudes fixed), with backtracking"""
    amps = np.abs(theta)
    phases = np.angle(theta)
    coeffs = amps * np.exp(1j * phases)
    e = g + A @ coeffs
    f = float(np.real(np.vdot(e, e)))
    for _ in range(iterations):
        if f == 0.0:
            break
        J = A * (1j * coeffs)[None, :]
        J_real = np.vstack([J.real, J.imag])
        r_real = np.concatenate([e.real, e.imag])
        step = scipy.linalg.lstsq(J_real, -r_real)[0]
        accepted = False
        scale = 1.0
        for _ in range(12):
            trial = phases + scale * step
            trial_coeffs = amps * np.exp(1j * trial)
            trial_e = g + A @ trial_coeffs
            trial_f = float(np.real(np.vdot(trial_e, trial_e)))
            if trial_f < f:
                phases, coeffs, e, f = trial, trial_coeffs, trial_e, trial_f
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
    return coeffs


def _whiten(g: np.ndarray, A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map rows of A onto orthonormal directions, carrying g along; zero residuals map to zero"""
    U, s, _ = scipy.linalg.svd(A, full_matrices=False)
    keep = s > s[0] * WHITENING_RCOND
    W = (U[:, keep] / s[keep]).conj().T
    return W @ g, W @ A


def _trivial_result(n_elements: int, mode: ReflectionMode, objective: float) -> DesignResult:
    pattern = ReflectionPattern(np.ones(n_elements), np.zeros(n_elements), mode)
    return DesignResult(pattern=pattern, objective=objective, iterations=0, converged=True,
                        history=[objective])


def design_reverse_alignment(g: complex, h: Sequence[complex],
                             mode: ReflectionMode = ReflectionMode.UNIT_MODULUS,
                             config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Single-radar cancellation: every IRS contribution anti-phase to the residual echo"""
    h = _vector(h, "h")
    if h.size == 0:
        raise DimensionError("cascaded channel vector is empty", expected=">=1", got=0)
    g = complex(g)

    if mode == ReflectionMode.AMPLITUDE:
        total = float(np.sum(np.abs(h)))
        common = min(1.0, abs(g) / total) if total > 0 else 0.0
        phases = np.pi + np.angle(g) - np.angle(h)
        pattern = ReflectionPattern(np.full(h.size, common), phases, mode)
        objective = stealth_objective(g, h, pattern)
        return DesignResult(pattern=pattern, objective=objective, iterations=1, converged=True,
                            history=[abs(g) ** 2, objective])

    scale = max(abs(g), float(np.max(np.abs(h))))
    if scale == 0.0:
        return _trivial_result(h.size, mode, 0.0)
    gn = np.array([g / scale])
    A = (h / scale)[None, :]
    start = _polygon_closure(gn[0], A[0])
    theta, history, sweeps, converged = _coordinate_descent(
        gn, A, start, mode, config.tolerance, config.max_sweeps)
    pattern = pattern_from_coefficients(theta, mode)
    objective = stealth_objective(g, h, pattern)
    return DesignResult(pattern=pattern, objective=objective, iterations=sweeps, converged=converged,
                        history=[v * scale ** 2 for v in history])


def _as_channel_matrix(g, H) -> Tuple[np.ndarray, np.ndarray]:
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1 and g.size == 1:
        H = H[:, None]
    if H.ndim != 2 or H.shape[1] != g.size:
        raise DimensionError("H must be (N, K) with K matching g", expected=["N", int(g.size)],
                             got=list(H.shape))
    if g.size < 1 or H.shape[0] < 1:
        raise DimensionError("need at least one radar and one IRS element", got=list(H.shape))
    return g, H


def least_squares_bound(g, H) -> float:
    """Unconstrained minimum of sum_k |g_k + h_k^T theta|^2, a lower bound for every design"""
    g, H = _as_channel_matrix(g, H)
    A = H.T
    theta = scipy.linalg.lstsq(A, -g)[0]
    return _residual_power(g, A, theta)


def design_mmse_multi(g, H, mode: ReflectionMode = ReflectionMode.UNIT_MODULUS,
                      max_iters: Optional[int] = None,
                      config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Least squares, projection onto the feasible set, then exact coordinate updates"""
    g, H = _as_channel_matrix(g, H)
    n_elements, n_radars = H.shape
    max_iters = config.max_sweeps if max_iters is None else int(max_iters)

    scale = max(float(np.max(np.abs(g))), float(np.max(np.abs(H))))
    if scale == 0.0:
        return _trivial_result(n_elements, mode, 0.0)
    gn = g / scale
    A = H.T / scale

    reg = config.regularization
    if n_elements >= n_radars:
        gram = A @ A.conj().T + reg * np.eye(n_radars)
        theta_ls = -A.conj().T @ np.linalg.solve(gram, gn)
    else:
        gram = A.conj().T @ A + reg * np.eye(n_elements)
        theta_ls = -np.linalg.solve(gram, A.conj().T @ gn)
    lower_bound = least_squares_bound(gn, A.T)

    start = _project(theta_ls, mode)
    if n_radars == 1:
        if mode == ReflectionMode.AMPLITUDE:
            aligned = design_reverse_alignment(gn[0], A[0], mode, config).pattern.coefficients()
        else:
            aligned = _polygon_closure(gn[0], A[0])
        if _residual_power(gn, A, aligned) < _residual_power(gn, A, start):
            start = aligned

    theta, history, sweeps, converged = _coordinate_descent(
        gn, A, start, mode, config.tolerance, max_iters)
    polished = _phase_polish(gn, A, theta)
    if _residual_power(gn, A, polished) < history[-1]:
        theta = polished
        history.append(_residual_power(gn, A, theta))

    # Nearly parallel channel rows (e.g. radars on mirrored grating lobes) stall both passes
    # above; the same zero-residual set is well conditioned after whitening the rows.
    if 1 < n_radars <= n_elements and np.any(A):
        gw, Aw = _whiten(gn, A)
        theta_w, _, sweeps_w, converged_w = _coordinate_descent(
            gw, Aw, theta, mode, config.tolerance, max_iters)
        theta_w = _phase_polish(gw, Aw, theta_w, iterations=50)
        sweeps += sweeps_w
        if _residual_power(gn, A, theta_w) < history[-1]:
            theta, converged = theta_w, converged_w
            history.append(_residual_power(gn, A, theta))

    pattern = pattern_from_coefficients(theta, mode)
    objective = stealth_objective(g, H, pattern)
    logger.debug(f"MMSE design K={n_radars} N={n_elements}: {sweeps} sweeps, objective {objective:.3e}")
    return DesignResult(pattern=pattern, objective=objective, iterations=sweeps, converged=converged,
                        history=[v * scale ** 2 for v in history],
                        details={'least_squares_bound': lower_bound * scale ** 2})


def zone_grid(zone: Tuple[float, float], grid_step: float) -> np.ndarray:
    low, high = float(zone[0]), float(zone[1])
    if high < low:
        raise ValidationError(f"zone [{low}, {high}] is empty", field="zone")
    if not grid_step > 0:
        raise ValidationError("grid_step must be positive", field="grid_step")
    count = int(math.floor((high - low) / grid_step + 1e-9)) + 1
    return low + grid_step * np.arange(count)


def design_null_zone(channel_fn: Callable[[float], Tuple[complex, Sequence[complex]]],
                     zone: Tuple[float, float], grid_step: float,
                     mode: ReflectionMode = ReflectionMode.UNIT_MODULUS,
                     config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Minimise the worst per-angle echo power over an angular zone by reweighted MMSE"""
    angles = zone_grid(zone, grid_step)
    samples = [channel_fn(float(angle)) for angle in angles]
    g = np.array([complex(s[0]) for s in samples])
    H = np.column_stack([_vector(s[1], "h") for s in samples])

    weights = np.ones(angles.size)
    best_theta, best_worst = None, math.inf
    history = []
    for iteration in range(config.irls_iterations):
        root = np.sqrt(weights)
        result = design_mmse_multi(g * root, H * root[None, :], mode, config=config)
        theta = result.pattern.coefficients()
        powers = np.abs(g + H.T @ theta) ** 2
        worst = float(np.max(powers))
        history.append(worst)
        if worst < best_worst:
            best_theta, best_worst = theta, worst
        if worst == 0.0:
            break
        # Lawson-style update: the next weights grow with the current per-angle power
        weights = weights * powers / worst
        weights = np.maximum(weights / np.max(weights), 1e-12)

    pattern = pattern_from_coefficients(best_theta, mode)
    powers = np.abs(g + H.T @ pattern.coefficients()) ** 2
    worst_index = int(np.argmax(powers))
    return DesignResult(pattern=pattern, objective=float(powers[worst_index]),
                        iterations=len(history), converged=True, history=history,
                        details={'worst_angle_deg': float(angles[worst_index]),
                                 'grid_deg': [float(a) for a in angles]})


def _circle_intersections(center: complex, radius: float) -> List[complex]:
    """Points shared by the unit circle and the circle |x - center| = radius"""
    d = abs(center)
    if d == 0.0 or d > 1.0 + radius or d < abs(1.0 - radius):
        return []
    along = (1.0 - radius ** 2 + d ** 2) / (2.0 * d)
    across = math.sqrt(max(0.0, 1.0 - along ** 2))
    unit = center / d
    base = along * unit
    return [base + across * 1j * unit, base - across * 1j * unit]


def _element_candidates(u0: complex, a: complex, w0: complex, b: complex, mu: float,
                        budget: float, mode: ReflectionMode, current: complex) -> List[complex]:
    candidates = [current]
    aligned = u0 * np.conj(a)
    if abs(aligned) > 0:
        candidates.append(aligned / abs(aligned))
    combined = u0 * np.conj(a) - mu * w0 * np.conj(b)
    if abs(combined) > 0:
        candidates.append(combined / abs(combined))
    if b != 0:
        center = -w0 / b
        radius = math.sqrt(max(budget, 0.0)) / abs(b)
        candidates.extend(_circle_intersections(center, radius))
        if mode == ReflectionMode.AMPLITUDE:
            if a != 0:
                away = center + u0 / a
                candidates.append(center + radius * (away / abs(away) if abs(away) > 0 else 1.0))
            else:
                candidates.append(center)
    if mode == ReflectionMode.AMPLITUDE:
        curvature = abs(a) ** 2 - mu * abs(b) ** 2
        if curvature < 0:
            candidates.append(-combined / curvature)
        candidates.append(0j)
        return [x for x in candidates if abs(x) <= 1.0 + 1e-12]
    return [x / abs(x) for x in candidates if abs(x) > 0]


def _penalized_sweeps(u_direct: complex, u_vec: np.ndarray, w_direct: complex, w_vec: np.ndarray,
                      budget: float, mu: float, theta: np.ndarray, mode: ReflectionMode,
                      tolerance: float, max_sweeps: int) -> Tuple[np.ndarray, int]:
    def penalized(u: complex, w: complex) -> float:
        return abs(u) ** 2 - mu * max(0.0, abs(w) ** 2 - budget)

    theta = theta.copy()
    u = u_direct + np.dot(u_vec, theta)
    w = w_direct + np.dot(w_vec, theta)
    value = penalized(u, w)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start_value = value
        for n in range(theta.shape[0]):
            u0 = u - u_vec[n] * theta[n]
            w0 = w - w_vec[n] * theta[n]
            best_x, best_value = theta[n], penalized(u, w)
            for x in _element_candidates(u0, u_vec[n], w0, w_vec[n], mu, budget, mode, theta[n]):
                candidate = penalized(u0 + u_vec[n] * x, w0 + w_vec[n] * x)
                if candidate > best_value:
                    best_x, best_value = x, candidate
            if mode == ReflectionMode.AMPLITUDE and abs(best_x) > 1.0:
                best_x = best_x / abs(best_x)
            theta[n] = best_x
            u = u0 + u_vec[n] * best_x
            w = w0 + w_vec[n] * best_x
        u = u_direct + np.dot(u_vec, theta)
        w = w_direct + np.dot(w_vec, theta)
        value = penalized(u, w)
        if value - start_value < tolerance:
            break
    return theta, sweeps


def _constrained_ascent(u_direct: complex, u_vec: np.ndarray, w_direct: complex, w_vec: np.ndarray,
                        budget: float, mode: ReflectionMode, stealth_theta: np.ndarray, seed: int,
                        config: SolverConfig) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Maximise |u_direct + u_vec.theta|^2 s.t. |w_direct + w_vec.theta|^2 <= budget (normalized)"""
    n_elements = u_vec.shape[0]
    slack = FEASIBILITY_RTOL * max(budget, 1e-18)

    def feasible(theta: np.ndarray) -> bool:
        return abs(w_direct + np.dot(w_vec, theta)) ** 2 <= budget + slack

    def gain(theta: np.ndarray) -> float:
        return abs(u_direct + np.dot(u_vec, theta)) ** 2

    reference = np.angle(u_direct) if abs(u_direct) > 0 else 0.0
    aligned = np.exp(1j * (reference - np.angle(u_vec)))
    starts = [stealth_theta, aligned]
    rng = rng_for(seed, "ascent-starts")
    for _ in range(config.restarts):
        starts.append(np.exp(1j * rng.uniform(0.0, TWO_PI, n_elements)))

    best_theta = stealth_theta
    best_gain = gain(stealth_theta) if feasible(stealth_theta) else -math.inf
    total_sweeps, feasible_starts = 0, 0
    for start in starts:
        theta = start.copy()
        mu = 1.0
        for _ in range(config.penalty_escalations + 1):
            theta, sweeps = _penalized_sweeps(u_direct, u_vec, w_direct, w_vec, budget, mu, theta,
                                              mode, config.tolerance, config.max_sweeps)
            total_sweeps += sweeps
            if feasible(theta):
                break
            mu *= 2.0
        if feasible(theta):
            feasible_starts += 1
            value = gain(theta)
            if value > best_gain:
                best_theta, best_gain = theta, value

    if best_gain == -math.inf:
        logger.warning("No ascent start ended feasible, keeping the stealth optimum")
    return best_theta, {'sweeps': total_sweeps, 'starts': len(starts), 'feasible_starts': feasible_starts}


def design_constrained(objective_direct: complex, objective_vec, constraint_direct: complex,
                       constraint_vec, budget: float,
                       mode: ReflectionMode = ReflectionMode.UNIT_MODULUS, seed: int = 0,
                       config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Maximise |objective_direct + t.theta|^2 subject to |constraint_direct + h.theta|^2 <= budget"""
    t = _vector(objective_vec, "objective channel")
    h = _vector(constraint_vec, "constraint channel")
    if t.shape != h.shape or t.size == 0:
        raise DimensionError("objective and constraint channels must have equal nonzero length",
                             expected=int(h.size), got=int(t.size))
    if budget < 0:
        raise ValidationError("power budget must be non-negative", field="budget")

    bound = stealth_bound(constraint_direct, h, mode) ** 2
    con_scale = max(abs(complex(constraint_direct)), float(np.max(np.abs(h))))
    if budget < bound - 1e-12 * con_scale ** 2:
        raise InfeasibleError(f"power budget {budget:.6e} is below the best achievable residual "
                              f"{bound:.6e}", bound=bound)

    stealth = design_reverse_alignment(constraint_direct, h, mode, config)
    obj_scale = max(abs(complex(objective_direct)), float(np.max(np.abs(t))))
    if obj_scale == 0.0:
        theta = stealth.pattern.coefficients()
        details = {'sweeps': 0, 'starts': 1, 'feasible_starts': 1}
    else:
        con_scale = con_scale if con_scale > 0 else 1.0
        theta, details = _constrained_ascent(
            complex(objective_direct) / obj_scale, t / obj_scale,
            complex(constraint_direct) / con_scale, h / con_scale,
            budget / con_scale ** 2, mode, stealth.pattern.coefficients(), seed, config)

    pattern = pattern_from_coefficients(theta, mode)
    return DesignResult(pattern=pattern, objective=decoy_power(t, pattern, objective_direct),
                        iterations=int(details['sweeps']), converged=details['feasible_starts'] > 0,
                        constraint_value=stealth_objective(constraint_direct, h, pattern),
                        details={**details, 'budget': budget, 'stealth_bound': bound})


def design_spoof(g: complex, h, t, budget: float,
                 mode: ReflectionMode = ReflectionMode.UNIT_MODULUS, seed: int = 0,
                 config: SolverConfig = DEFAULT_SOLVER) -> DesignResult:
    """Decoy creation: maximise |t.theta|^2 while the true echo stays within `budget`"""
    return design_constrained(0j, t, g, h, budget, mode, seed, config)


def random_pattern(n_elements: int, seed: int,
                   mode: ReflectionMode = ReflectionMode.UNIT_MODULUS) -> ReflectionPattern:
    if int(n_elements) != n_elements or n_elements < 1:
        raise ValidationError("pattern needs at least one element", field="n_elements")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, TWO_PI, int(n_elements))
    return ReflectionPattern(np.ones(int(n_elements)), phases, mode)


def quantize_pattern(pattern: ReflectionPattern, bits: int) -> ReflectionPattern:
    """Snap phases to the 2^bits uniform levels; exact ties go to the smaller phase"""
    if int(bits) != bits or bits < 1:
        raise ValidationError(f"bits must be an integer >= 1, got {bits}", field="bits")
    levels = 2 ** int(bits)
    step = TWO_PI / levels
    ratio = pattern.phases / step
    index = np.floor(ratio)
    index = np.where(ratio - index > 0.5, index + 1, index).astype(np.int64) % levels
    return ReflectionPattern(pattern.amplitudes, index * step, pattern.mode, int(bits))


def _enumerate_chunk(start: int, stop: int, g: complex, h: np.ndarray, levels: int,
                     decoy: Optional[np.ndarray], budget: Optional[float], decoy_direct: complex):
    n_elements = h.shape[0]
    phasors = np.exp(1j * TWO_PI * np.arange(levels) / levels)
    index = np.arange(start, stop, dtype=np.int64)
    digits = (index[:, None] // (levels ** np.arange(n_elements, dtype=np.int64))[None, :]) % levels
    theta = phasors[digits]
    residual = np.abs(g + theta @ h) ** 2
    best_residual = float(residual.min())
    if decoy is None:
        i = int(np.argmin(residual))
        return start + i, float(residual[i]), best_residual
    allowed = residual <= budget * (1.0 + FEASIBILITY_RTOL)
    if not np.any(allowed):
        return None, -math.inf, best_residual
    power = np.abs(decoy_direct + theta @ decoy) ** 2
    power[~allowed] = -math.inf
    i = int(np.argmax(power))
    return start + i, float(power[i]), best_residual


def brute_force_best(g: complex, h, bits: int, decoy=None, budget: Optional[float] = None,
                     decoy_direct: complex = 0j, config: SolverConfig = DEFAULT_SOLVER,
                     n_jobs: int = 1) -> DesignResult:
    """Exhaustive search over all discrete unit-modulus patterns"""
    h = _vector(h, "h")
    if int(bits) != bits or bits < 1:
        raise ValidationError(f"bits must be an integer >= 1, got {bits}", field="bits")
    size_bits = h.size * int(bits)
    if size_bits > config.enumeration_limit_bits:
        raise EnumerationSizeError(f"exhaustive search over 2^{size_bits} patterns exceeds 2^"
                                   f"{config.enumeration_limit_bits}",
                                   size_bits=size_bits, limit_bits=config.enumeration_limit_bits)
    if (decoy is None) != (budget is None):
        raise ValidationError("decoy channel and budget must be given together", field="budget")
    if decoy is not None:
        decoy = _vector(decoy, "decoy")
        if decoy.shape != h.shape:
            raise DimensionError("decoy channel does not match h", expected=h.size, got=decoy.size)

    levels = 2 ** int(bits)
    total = levels ** h.size
    chunks = [(lo, min(lo + BRUTE_FORCE_CHUNK, total)) for lo in range(0, total, BRUTE_FORCE_CHUNK)]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_enumerate_chunk)(lo, hi, complex(g), h, levels, decoy, budget, complex(decoy_direct))
        for lo, hi in chunks
    )

    best_index, best_value = None, (math.inf if decoy is None else -math.inf)
    min_residual = min(r[2] for r in results)
    for index, value, _ in results:
        if index is None:
            continue
        better = value < best_value if decoy is None else value > best_value
        if better:
            best_index, best_value = index, value
    if best_index is None:
        raise InfeasibleError(f"no {bits}-bit pattern meets the budget {budget:.6e}", bound=min_residual)

    digits = (best_index // levels ** np.arange(h.size)) % levels
    pattern = ReflectionPattern(np.ones(h.size), digits * (TWO_PI / levels),
                                ReflectionMode.UNIT_MODULUS, int(bits))
    residual = stealth_objective(g, h, pattern)
    if decoy is None:
        return DesignResult(pattern=pattern, objective=residual, iterations=total, converged=True,
                            details={'patterns_enumerated': total})
    return DesignResult(pattern=pattern, objective=decoy_power(decoy, pattern, decoy_direct),
                        iterations=total, converged=True, constraint_value=residual,
                        details={'patterns_enumerated': total, 'min_residual': min_residual})
