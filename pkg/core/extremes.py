"""Extremal dependence: the VSRV pseudo-norm, rank-based spectral measure, extremal indices, clusters."""

import logging
import math
from collections import Counter
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from core.bekk_model import classify
from core.errors import InapplicableError, NoRootError, ZeroExceedanceError
from core.models import (
    ExtremalEstimate, ExtremalReport, ModelSpec, ParamLabel, PathSample, SpectralEstimate, VsrvScale,
)
from core.stationarity import E_LOG_ABS_NORMAL, threshold_constant
from core.worker import ReplicateWorker

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 100
DRIFT_HORIZON = 50.0
MC_CHUNK_ENTRIES = 2_000_000


def vsrv_norm(x: np.ndarray, scale: VsrvScale) -> Union[float, np.ndarray]:
    """max_i c_i^{-1} |x_i|^{alpha_i}; accepts one vector or rows of vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != scale.alpha.size:
        raise ValueError(f"Vector length {x.shape[-1]} does not match scale length {scale.alpha.size}")
    values = np.max(np.abs(x) ** scale.alpha / scale.c, axis=-1)
    return float(values) if x.ndim == 1 else values


def descending_ranks(column: np.ndarray) -> np.ndarray:
    """R_t = #{i : X_i >= X_t}; rank 1 is the largest, exact ties ordered by time index."""
    order = np.argsort(-np.asarray(column, dtype=float), kind="stable")
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = np.arange(1, order.size + 1)
    return ranks


def spectral_measure(path: PathSample, k: Union[int, Sequence[int]],
                     theta_grid: Optional[Sequence[float]] = None) -> SpectralEstimate:
    """
    Rank-based spectral measure estimate for bivariate data.

    Phi(theta) = (1/k) #{t : R1 v R2 >= T+1-k, arctan((T+1-R2)/(T+1-R1)) <= theta}.
    With descending ranks the selected points are the joint lower extremes;
    the BEKK-ARCH law is sign-symmetric, so they carry the same angular measure.
    """
    if path.d != 2:
        raise InapplicableError(f"The spectral-measure estimator is bivariate, got d = {path.d}")
    T = path.T
    k_values = [int(k)] if np.isscalar(k) else [int(v) for v in k]
    for kk in k_values:
        if not 1 <= kk < T:
            raise ValueError(f"k must satisfy 1 <= k < T = {T}, got {kk}")
    grid = (np.linspace(0.0, 0.5 * math.pi, DEFAULT_GRID_POINTS) if theta_grid is None
            else np.asarray(theta_grid, dtype=float))
    if np.any(np.diff(grid) < 0):
        raise ValueError("theta_grid must be ascending")

    r1 = descending_ranks(path.data[:, 0])
    r2 = descending_ranks(path.data[:, 1])
    top = np.maximum(r1, r2)
    phi: Dict[int, np.ndarray] = {}
    counts: Dict[int, int] = {}
    for kk in k_values:
        sel = top >= T + 1 - kk
        angles = np.sort(np.arctan2((T + 1 - r2[sel]).astype(float), (T + 1 - r1[sel]).astype(float)))
        phi[kk] = np.searchsorted(angles, grid, side="right") / kk
        counts[kk] = int(sel.sum())
    return SpectralEstimate(theta_grid=grid, phi=phi, T=T, k_values=k_values, exceedances=counts)


def _diagonal_coefficient(spec: ModelSpec, i: int) -> float:
    if spec.A0 is not None:
        raise InapplicableError("Extremal indices are not defined with an autoregressive term")
    if not classify(spec).has(ParamLabel.DIAGONAL):
        raise InapplicableError("The extremal-index formula needs a Diagonal spec")
    if not 0 <= i < spec.d:
        raise ValueError(f"Marginal index {i} out of range for d = {spec.d}")
    return float(spec.A[0][i, i])


def _check_stationary_coefficient(a: float):
    if not 0.0 < abs(a) < threshold_constant():
        raise NoRootError(f"|A_ii| = {abs(a):.6g} is outside the stationarity region (0, {threshold_constant():.5f})")


def default_truncation(a: float) -> int:
    """ceil(50 / |E log|a m||): steps for the log random walk to drift far below zero."""
    _check_stationary_coefficient(a)
    drift = math.log(abs(a)) + E_LOG_ABS_NORMAL
    return max(1, int(math.ceil(DRIFT_HORIZON / abs(drift))))


def extremal_index_mc(spec: ModelSpec, i: int, alpha_i: float, K: Optional[int] = None,
                      reps: int = 100_000, seed: int = 0) -> Tuple[float, float]:
    """
    theta_i = E[max_{k>=0}(P_k)_+^a - max_{k>=1}(P_k)_+^a], P_k = A_ii^k m_1 ... m_k, P_0 = 1.

    Since P_0 = 1 the integrand is max(0, 1 - max_{1<=k<=K}(P_k)_+^a). Products
    are carried in log scale; replicate chunks run on independent streams.
    """
    a = _diagonal_coefficient(spec, i)
    if not alpha_i > 0:
        raise ValueError("alpha_i must be positive")
    if reps < 2:
        raise ValueError("extremal_index_mc needs at least 2 replicates")
    if a == 0.0:
        return 1.0, 0.0
    _check_stationary_coefficient(a)
    if K is None:
        K = default_truncation(a)
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")

    log_a = math.log(abs(a))
    negative_a = a < 0
    rows = max(1, MC_CHUNK_ENTRIES // K)
    sizes = [min(rows, reps - start) for start in range(0, reps, rows)]

    def chunk(index: int, rng: np.random.Generator):
        m = rng.standard_normal((sizes[index], K))
        log_p = np.cumsum(np.log(np.abs(m)), axis=1) + log_a * np.arange(1, K + 1)
        negatives = np.cumsum(m < 0, axis=1)
        if negative_a:
            negatives = negatives + np.arange(1, K + 1)
        positive = negatives % 2 == 0
        with np.errstate(over="ignore"):
            powered = np.where(positive, np.exp(alpha_i * log_p), 0.0)
        terms = np.maximum(0.0, 1.0 - powered.max(axis=1))
        return terms.sum(), np.square(terms).sum()

    parts = np.asarray(ReplicateWorker(seed).map(chunk, len(sizes)))
    total, total_sq = parts[:, 0].sum(), parts[:, 1].sum()
    mean = total / reps
    var = max(0.0, (total_sq - reps * mean * mean) / (reps - 1))
    return float(mean), float(math.sqrt(var / reps))


def blocks_estimate(series: np.ndarray, quantile: float, block_len: int) -> float:
    """
    Blocks estimator of the extremal index, clipped to (0, 1].

    With K blocks (of n_b) holding an exceedance and N exceedances in n = n_b * b
    observations, theta = log(1 - K/n_b) / (b log(1 - N/n)). This is K/N to
    first order and stays unbiased for i.i.d. data when b (1 - q) is not small.
    Falls back to K/N when every block holds an exceedance.
    """
    if not 0.9 < quantile < 1.0:
        raise ValueError(f"quantile must lie in (0.9, 1), got {quantile}")
    if block_len < 2:
        raise ValueError(f"block_len must be at least 2, got {block_len}")
    series = np.asarray(series, dtype=float)
    n_blocks = series.size // block_len
    if n_blocks == 0:
        raise ValueError(f"Series of length {series.size} is shorter than one block")
    threshold = np.quantile(series, quantile)
    exceed = series[:n_blocks * block_len].reshape(n_blocks, block_len) > threshold
    n_exceed = int(exceed.sum())
    if n_exceed == 0:
        raise ZeroExceedanceError(f"No exceedance of the {quantile} quantile")
    hit_blocks = int(exceed.any(axis=1).sum())
    if hit_blocks == n_blocks or n_exceed == exceed.size:
        return min(1.0, hit_blocks / n_exceed)
    estimate = math.log1p(-hit_blocks / n_blocks) / (block_len * math.log1p(-n_exceed / exceed.size))
    return min(1.0, estimate)


def extremal_index_blocks(path: PathSample, i: int, quantile: float = 0.99, block_len: int = 100) -> float:
    if not 0 <= i < path.d:
        raise ValueError(f"Marginal index {i} out of range for d = {path.d}")
    return blocks_estimate(path.data[:, i], quantile, block_len)


def cluster_size_histogram(series: np.ndarray, quantile: float, gap: int) -> Dict[int, int]:
    """Exceedances of the quantile grouped into clusters split by >= gap non-exceedances."""
    if not 0.9 < quantile < 1.0:
        raise ValueError(f"quantile must lie in (0.9, 1), got {quantile}")
    if gap < 1:
        raise ValueError(f"gap must be at least 1, got {gap}")
    series = np.asarray(series, dtype=float)
    idx = np.flatnonzero(series > np.quantile(series, quantile))
    if idx.size == 0:
        raise ZeroExceedanceError(f"No exceedance of the {quantile} quantile")
    # a new cluster starts after `gap` or more non-exceedances
    breaks = np.flatnonzero(np.diff(idx) - 1 >= gap)
    sizes = np.diff(np.concatenate(([0], breaks + 1, [idx.size])))
    return dict(sorted(Counter(int(s) for s in sizes).items()))


def cluster_sizes(path: PathSample, scale: VsrvScale, quantile: float = 0.99, gap: int = 1) -> Dict[int, int]:
    return cluster_size_histogram(vsrv_norm(path.data, scale), quantile, gap)


def mean_cluster_size(hist: Dict[int, int]) -> float:
    clusters = sum(hist.values())
    return sum(size * n for size, n in hist.items()) / clusters


def extremal_report(spec: Optional[ModelSpec], path: Optional[PathSample], alphas: Sequence[float],
                    marginals: Optional[Iterable[int]] = None, reps: int = 100_000, K: Optional[int] = None,
                    seed: int = 0, quantile: float = 0.99, block_len: int = 100,
                    scale: Optional[VsrvScale] = None, gap: int = 1) -> ExtremalReport:
    """Both extremal-index estimators where their inputs are available, plus cluster sizes."""
    d = spec.d if spec is not None else path.d
    marginals = list(range(d)) if marginals is None else list(marginals)
    report = ExtremalReport()

    if spec is not None:
        param_class = classify(spec)
        report.conjecture_conditional = not param_class.has(ParamLabel.SCALAR)
        for i in marginals:
            if math.isinf(alphas[i]):
                continue
            estimate, stderr = extremal_index_mc(spec, i, alphas[i], K=K, reps=reps, seed=seed + i)
            report.estimates.append(ExtremalEstimate(i, estimate, stderr, "mc-formula"))
        if report.conjecture_conditional:
            logger.warning("Diagonal spec with distinct coefficients: extremal outputs are conjecture-conditional")

    if path is not None:
        for i in marginals:
            estimate = extremal_index_blocks(path, i, quantile, block_len)
            report.estimates.append(ExtremalEstimate(i, estimate, None, "blocks"))
        if scale is not None:
            report.cluster_size_hist = cluster_sizes(path, scale, quantile, gap)
    return report
