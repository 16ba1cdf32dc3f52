"""Geometric ergodicity and moment conditions: Lyapunov MC, the l = 1 gate, Kronecker moments."""

import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np

from core.bekk_model import draw_multipliers
from core.errors import InapplicableError, SizeLimitError
from core.models import GateResult, ModelSpec, MomentResult, StationarityReport
from core.numerics import kron, kron_power, spectral_radius
from core.worker import replicate_rng

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
# E[log|m|] for m ~ N(0, 1)
E_LOG_ABS_NORMAL = -(EULER_GAMMA + math.log(2.0)) / 2.0

DEFAULT_N_STEPS = 100_000
DEFAULT_N_REPS = 20
DEFAULT_MC_SAMPLES = 20_000
WARMUP_STEPS = 100
MAX_KRON_SIDE = 4096
# side^2 * mc_samples above this is skipped by stationarity_report
MC_WORK_BUDGET = 10 ** 10
CHUNK = 1024


def threshold_constant() -> float:
    """exp((gamma + log 2) / 2) = 1.88736..., the critical spectral radius for l = 1."""
    return math.exp((EULER_GAMMA + math.log(2.0)) / 2.0)


def lyapunov_mc(spec: ModelSpec, n_steps: int = DEFAULT_N_STEPS, n_reps: int = DEFAULT_N_REPS,
                seed: int = 0) -> Tuple[float, float]:
    """
    Monte-Carlo top Lyapunov exponent of the products Mtilde_n ... Mtilde_1.

    Each replicate iterates a random unit vector, renormalizing every step, and
    averages the log growth over n_steps after a 100-step alignment transient.
    Replicates use independent (seed, index) streams and are advanced together.
    Returns (mean over replicates, std over replicates / sqrt(n_reps)).
    """
    if n_steps < 100:
        raise ValueError(f"n_steps must be at least 100, got {n_steps}")
    if n_reps < 1:
        raise ValueError(f"n_reps must be at least 1, got {n_reps}")

    rngs = [replicate_rng(seed, r) for r in range(n_reps)]
    v = np.stack([rng.standard_normal(spec.d) for rng in rngs])
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    growth = np.zeros(n_reps)
    dead = np.zeros(n_reps, dtype=bool)
    total = WARMUP_STEPS + n_steps
    step = 0

    with np.errstate(divide="ignore", invalid="ignore"):
        while step < total:
            n = min(CHUNK, total - step)
            mult = np.stack([draw_multipliers(spec, rng, n) for rng in rngs])  # (reps, n, d, d)
            for k in range(n):
                w = np.einsum("rij,rj->ri", mult[:, k], v)
                norms = np.sqrt(np.einsum("ri,ri->r", w, w))
                zero = norms == 0.0
                if zero.any():
                    dead |= zero
                    w[zero] = 1.0
                    norms[zero] = math.sqrt(spec.d)
                if step + k >= WARMUP_STEPS:
                    growth += np.log(norms)
                v = w / norms[:, None]
            step += n

    per_rep = growth / n_steps
    per_rep[dead] = -np.inf
    if dead.any():
        logger.info(f"{int(dead.sum())} replicate(s) hit the zero vector: exponent is -inf")
        return float("-inf"), 0.0
    estimate = float(per_rep.mean())
    if n_reps < 2:
        logger.warning("Single replicate: standard error reported as 0")
        return estimate, 0.0
    return estimate, float(per_rep.std(ddof=1) / math.sqrt(n_reps))


def lyapunov_closed_form(spec: ModelSpec) -> Optional[float]:
    """log rho(A) + E log|m| for l = 1 without A0; None otherwise."""
    if spec.l != 1 or spec.A0 is not None:
        return None
    rho = spectral_radius(spec.A[0])
    return math.log(rho) + E_LOG_ABS_NORMAL if rho > 0 else float("-inf")


def gate_l1(spec: ModelSpec) -> GateResult:
    """Closed-form ergodicity gate for l = 1: rho(A_1) < threshold_constant()."""
    if spec.l != 1 or spec.A0 is not None:
        raise InapplicableError("The closed-form gate needs l = 1 and no autoregressive term")
    rho = spectral_radius(spec.A[0])
    threshold = threshold_constant()
    return GateResult(rho=rho, threshold=threshold, passed=rho < threshold)


def expected_second_kron(spec: ModelSpec) -> np.ndarray:
    """E[Mtilde ⊗ Mtilde] = A0⊗A0 + sum_i A_i⊗A_i (cross terms vanish)."""
    result = sum(kron(a, a) for a in spec.A)
    if spec.A0 is not None:
        result = result + kron(spec.A0, spec.A0)
    return result


def _check_kron_size(spec: ModelSpec, n: int):
    if n < 1:
        raise ValueError(f"Moment order n must be at least 1, got {n}")
    side = spec.d ** (2 * n)
    if side > MAX_KRON_SIDE:
        raise SizeLimitError(f"E[Mtilde^(x){2 * n}] would be {side}x{side}; limit is {MAX_KRON_SIDE}")


def expected_kron_power_mc(spec: ModelSpec, n: int, mc_samples: int = DEFAULT_MC_SAMPLES,
                           seed: int = 0) -> np.ndarray:
    """Monte-Carlo average of Mtilde^(x)2n over mc_samples draws."""
    _check_kron_size(spec, n)
    rng = np.random.default_rng(seed)
    side = spec.d ** (2 * n)
    acc = np.zeros((side, side))
    done = 0
    while done < mc_samples:
        batch = min(CHUNK, mc_samples - done)
        for m in draw_multipliers(spec, rng, batch):
            acc += kron_power(m, 2 * n)
        done += batch
    return acc / mc_samples


def gaussian_even_moment(n: int) -> int:
    """E[m^{2n}] = (2n - 1)!! for m ~ N(0, 1)."""
    return math.prod(range(1, 2 * n, 2))


def moment_condition(spec: ModelSpec, n: int = 1, mc_samples: int = DEFAULT_MC_SAMPLES,
                     seed: int = 0, work_budget: Optional[float] = None) -> MomentResult:
    """
    rho(E[Mtilde^(x)2n]) < 1 implies E||X_t||^{2n} < inf.

    Exact for n = 1 and for l = 1 without A0, where E[Mtilde^(x)2n] = (2n-1)!! A^(x)2n
    and so rho = (2n-1)!! rho(A)^{2n}. Monte-Carlo otherwise; a work_budget caps
    side^2 * mc_samples and raises SizeLimitError when exceeded.
    """
    _check_kron_size(spec, n)
    if n == 1:
        rho = spectral_radius(expected_second_kron(spec))
        exact = True
    elif spec.l == 1 and spec.A0 is None:
        rho = gaussian_even_moment(n) * spectral_radius(spec.A[0]) ** (2 * n)
        exact = True
    else:
        work = float(spec.d ** (4 * n)) * mc_samples
        if work_budget is not None and work > work_budget:
            raise SizeLimitError(f"Monte-Carlo E[Mtilde^(x){2 * n}] needs {work:.3g} accumulated entries; "
                                 f"budget is {work_budget:.3g}")
        rho = spectral_radius(expected_kron_power_mc(spec, n, mc_samples, seed))
        exact = False
    return MomentResult(rho=rho, passed=rho < 1.0, exact=exact)


def stationary_covariance(spec: ModelSpec) -> np.ndarray:
    """Solves Gamma = C + E[Mtilde Gamma Mtilde'] when rho(E[Mtilde⊗Mtilde]) < 1."""
    e2 = expected_second_kron(spec)
    rho = spectral_radius(e2)
    if rho >= 1.0:
        raise InapplicableError(f"No finite second moment: rho(E[Mtilde⊗Mtilde]) = {rho:.6g} >= 1")
    d = spec.d
    vec_gamma = np.linalg.solve(np.eye(d * d) - e2, np.asarray(spec.C, dtype=float).reshape(-1))
    gamma = vec_gamma.reshape(d, d)
    return 0.5 * (gamma + gamma.T)


def stationarity_report(spec: ModelSpec, n_steps: int = DEFAULT_N_STEPS, n_reps: int = DEFAULT_N_REPS,
                        seed: int = 0, moment_orders: Iterable[int] = (1, 2),
                        mc_samples: int = DEFAULT_MC_SAMPLES,
                        work_budget: Optional[float] = MC_WORK_BUDGET) -> StationarityReport:
    estimate, stderr = lyapunov_mc(spec, n_steps, n_reps, seed)
    report = StationarityReport(
        lyapunov_estimate=estimate,
        lyapunov_stderr=stderr,
        n_steps=n_steps,
        n_reps=n_reps,
        lyapunov_closed_form=lyapunov_closed_form(spec),
    )
    if spec.l == 1 and spec.A0 is None:
        report.gate_l1 = gate_l1(spec)

    for n in moment_orders:
        try:
            report.moment_orders[n] = moment_condition(spec, n, mc_samples, seed, work_budget)
        except SizeLimitError as e:
            logger.warning(f"Skipping moment order {n}: {e}")
    logger.info(f"Lyapunov estimate {estimate:.6f} ± {stderr:.6f}")
    return report
