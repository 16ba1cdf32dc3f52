"""Sample covariance and heavy-tail diagnostics on cross products X_i X_j."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from core.errors import EstimationError, InapplicableError, RegressionError
from core.models import CovReport, CrossTailCheck, FluctuationFit, ModelSpec, PathSample, TailProfile
from core.simulate import DEFAULT_BURNIN, simulate_sre
from core.stationarity import stationary_covariance
from core.tails import alpha_cross, hill_estimate
from core.worker import ReplicateWorker

logger = logging.getLogger(__name__)

CROSS_BAND = 0.6
MIN_SCAN_N = 1000
MIN_SCAN_REPS = 50


def sample_cov(path: PathSample) -> np.ndarray:
    """Uncentered (1/T) sum X_t X_t'."""
    if path.T < 1:
        raise ValueError("Empty path")
    x = path.data
    gamma = x.T @ x / path.T
    return 0.5 * (gamma + gamma.T)


def predicted_cross_matrix(profile: TailProfile) -> np.ndarray:
    d = len(profile.alpha)
    pred = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            pred[i, j] = pred[j, i] = alpha_cross(profile.alpha[i], profile.alpha[j])
    return pred


def cross_tail_check(path: PathSample, profile: TailProfile, k: int, band: float = CROSS_BAND) -> CovReport:
    """Hill on |X_i X_j| for every i <= j against alpha_i alpha_j / (alpha_i + alpha_j)."""
    d = path.d
    if len(profile.alpha) != d:
        raise ValueError(f"Profile has {len(profile.alpha)} indices for d = {d}")
    pred = predicted_cross_matrix(profile)
    emp = np.empty((d, d))
    checks: List[CrossTailCheck] = []
    for i in range(d):
        for j in range(i, d):
            value = hill_estimate(np.abs(path.data[:, i] * path.data[:, j]), k)
            emp[i, j] = emp[j, i] = value
            checks.append(CrossTailCheck(i, j, float(pred[i, j]), value, k, bool(abs(value - pred[i, j]) <= band)))
    return CovReport(gamma=sample_cov(path), alpha_cross_pred=pred, alpha_cross_emp=emp, k=k, band=band,
                     checks=checks)


def predicted_slope(alpha_ij: float) -> float:
    """Spread of Gamma_n entries scales like n^{max(1/alpha_ij - 1, -1/2)}."""
    if math.isinf(alpha_ij):
        return -0.5
    return max(1.0 / alpha_ij - 1.0, -0.5)


def fluctuation_scan(spec: ModelSpec, profile: TailProfile, n_grid: Sequence[int], reps: int = 100,
                     seed: int = 0, burnin: int = DEFAULT_BURNIN) -> List[FluctuationFit]:
    """
    Regresses log IQR of (Gamma_n)_ij across replicates on log n.

    IQR rather than variance: for alpha_ij < 2 the variance of Gamma_n entries
    is infinite.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 2:
        raise RegressionError("fluctuation_scan needs at least two sample sizes")
    if min(n_grid) < MIN_SCAN_N:
        raise ValueError(f"Every n must be at least {MIN_SCAN_N}")
    if reps < MIN_SCAN_REPS:
        raise ValueError(f"reps must be at least {MIN_SCAN_REPS}")

    def job(index: int, rng: np.random.Generator) -> np.ndarray:
        n = n_grid[index // reps]
        path = simulate_sre(spec, n, burnin, int(rng.integers(0, 2 ** 62)))
        if path.diverged:
            raise EstimationError(f"Replicate {index} diverged; no fluctuation scale exists")
        return sample_cov(path)

    logger.info(f"Fluctuation scan: {len(n_grid)} sample sizes x {reps} replicates")
    gammas = np.asarray(ReplicateWorker(seed).map(job, len(n_grid) * reps)).reshape(len(n_grid), reps, spec.d, spec.d)

    log_n = np.log(n_grid)
    fits: List[FluctuationFit] = []
    for i in range(spec.d):
        for j in range(i, spec.d):
            q75, q25 = np.percentile(gammas[:, :, i, j], [75, 25], axis=1)
            spreads = q75 - q25
            if np.any(spreads <= 0.0):
                raise RegressionError(f"Degenerate spread for entry ({i}, {j})")
            fit = stats.linregress(log_n, np.log(spreads))
            a_ij = alpha_cross(profile.alpha[i], profile.alpha[j])
            fits.append(FluctuationFit(
                i=i, j=j, alpha_cross=a_ij,
                slope=float(fit.slope),
                slope_stderr=float(fit.stderr) if np.isfinite(fit.stderr) else 0.0,
                predicted_slope=predicted_slope(a_ij),
                points=[(n, float(s)) for n, s in zip(n_grid, spreads)],
            ))
    return fits


def covariance_report(path: PathSample, spec: Optional[ModelSpec] = None, profile: Optional[TailProfile] = None,
                      k: Optional[int] = None, band: float = CROSS_BAND) -> CovReport:
    """Sample covariance, the stationary covariance when finite, and cross-product tail checks."""
    if profile is not None and k is not None:
        report = cross_tail_check(path, profile, k, band)
    else:
        report = CovReport(gamma=sample_cov(path))
    if spec is not None:
        try:
            report.gamma_stationary = stationary_covariance(spec)
        except InapplicableError as e:
            logger.info(f"Stationary covariance not reported: {e}")
    return report
