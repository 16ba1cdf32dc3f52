"""Tail indices: Gaussian absolute moments, the marginal moment equation, Goldie constants, Hill."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from core.bekk_model import classify, similarity_scale
from core.errors import DegenerateSampleError, InapplicableError, NoRootError
from core.models import (
    GoldieEstimate, HillPlateau, ModelSpec, ParamClass, ParamLabel, PathSample, TailProfile,
)
from core.simulate import DEFAULT_BURNIN
from core.stationarity import threshold_constant
from core.worker import ReplicateWorker

logger = logging.getLogger(__name__)

ROOT_BRACKET = (1e-6, 64.0)
ROOT_BRACKET_MAX = 4096.0
BISECTION_STEPS = 200
GOLDIE_MIN_COEFF = 0.05
PLATEAU_GRID_POINTS = 40


def log_gaussian_abs_moment(alpha: float) -> float:
    """log E|m|^alpha for m ~ N(0, 1)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 0.5 * alpha * math.log(2.0) + special.gammaln(0.5 * (alpha + 1.0)) - 0.5 * math.log(math.pi)


def gaussian_abs_moment(alpha: float) -> float:
    """E|m|^alpha = 2^{alpha/2} Gamma((alpha+1)/2) / sqrt(pi)."""
    return math.exp(log_gaussian_abs_moment(alpha))


def gaussian_abs_moment_quad(alpha: float) -> float:
    """Same quantity by adaptive quadrature of 2 * int_0^inf m^alpha phi(m) dm."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    mode = math.sqrt(alpha)
    f = lambda m: m ** alpha * math.exp(-0.5 * m * m) / math.sqrt(2.0 * math.pi)
    left, _ = integrate.quad(f, 0.0, mode, epsabs=0.0, epsrel=1e-13, limit=200)
    right, _ = integrate.quad(f, mode, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * (left + right)


def _moment_gap(alpha: float, log_a: float) -> float:
    return log_gaussian_abs_moment(alpha) + alpha * log_a


def _moment_gap_prime(alpha: float, log_a: float) -> float:
    return 0.5 * math.log(2.0) + 0.5 * special.digamma(0.5 * (alpha + 1.0)) + log_a


def solve_alpha(a: float) -> float:
    """
    Unique alpha > 0 with E|m|^alpha = |a|^{-alpha}.

    h(alpha) = log E|m|^alpha + alpha log|a| is convex with h(0) = 0, and
    h'(0) < 0 exactly when |a| is below threshold_constant(). The root is
    bracketed, bisected and polished with Newton steps.
    """
    abs_a = abs(a)
    if abs_a == 0.0 or abs_a >= threshold_constant():
        raise NoRootError(f"|a| = {abs_a:.6g} is outside the stationarity region (0, {threshold_constant():.5f})")
    log_a = math.log(abs_a)

    lo, hi = ROOT_BRACKET
    if _moment_gap(lo, log_a) >= 0.0:
        raise NoRootError(f"|a| = {abs_a:.12g} is too close to the stationarity boundary to bracket a root")
    while _moment_gap(hi, log_a) <= 0.0:
        hi *= 2.0
        if hi > ROOT_BRACKET_MAX:
            raise NoRootError(f"No root below {ROOT_BRACKET_MAX:g} for |a| = {abs_a:.6g}")

    root = optimize.bisect(_moment_gap, lo, hi, args=(log_a,), xtol=1e-14, rtol=4 * np.finfo(float).eps,
                           maxiter=BISECTION_STEPS)
    try:
        polished = optimize.newton(_moment_gap, root, fprime=_moment_gap_prime, args=(log_a,),
                                   tol=1e-15, maxiter=20)
        if lo <= polished <= hi and abs(polished - root) < 1e-6:
            root = polished
    except RuntimeError:
        logger.debug(f"Newton polish did not converge for |a| = {abs_a}, keeping bisection root")
    return float(root)


def solve_coeff(alpha: float) -> float:
    """Inverse of solve_alpha: a = (E|m|^alpha)^{-1/alpha}."""
    return math.exp(-log_gaussian_abs_moment(alpha) / alpha)


def alpha_cross(alpha_i: float, alpha_j: float) -> float:
    """Tail index candidate of the cross product X_i X_j: alpha_i alpha_j / (alpha_i + alpha_j)."""
    if not (alpha_i > 0 and alpha_j > 0):
        raise ValueError("Tail indices must be positive")
    if math.isinf(alpha_i):
        return alpha_j
    if math.isinf(alpha_j):
        return alpha_i
    return alpha_i * alpha_j / (alpha_i + alpha_j)


def diagonal_spec_from_alphas(alphas: Sequence[float], C: Optional[np.ndarray] = None,
                              c: Optional[float] = None) -> ModelSpec:
    """
    Diagonal spec whose marginal i has tail index alphas[i].

    With d = 2 and `c` given, C = 1e-5 * [[1, c], [c, 1]]; otherwise C defaults to I.
    """
    d = len(alphas)
    if C is None:
        if c is not None:
            if d != 2:
                raise ValueError("The correlation shortcut c is defined for d = 2")
            C = 1e-5 * np.array([[1.0, c], [c, 1.0]])
        else:
            C = np.eye(d)
    A = np.diag([solve_coeff(float(alpha)) for alpha in alphas])
    return ModelSpec(d=d, l=1, A=[A], C=np.asarray(C, dtype=float))


def _require_diagonal(spec: ModelSpec, what: str) -> ParamClass:
    if spec.A0 is not None:
        raise InapplicableError(f"{what} is not defined with an autoregressive term")
    param_class = classify(spec)
    if not param_class.has(ParamLabel.DIAGONAL):
        raise InapplicableError(f"{what} needs a Diagonal spec, got {sorted(l.value for l in param_class.labels)}")
    return param_class


def goldie_denominator(a: float, alpha: float) -> float:
    """E[|a m|^alpha log|a m|] by quadrature."""
    abs_a = abs(a)
    f = lambda m: (abs_a * m) ** alpha * math.log(abs_a * m) * math.exp(-0.5 * m * m) / math.sqrt(2.0 * math.pi)
    # log singularity at 0 is integrable
    head, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(f, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2.0 * (head + tail)


def goldie_constant_mc(spec: ModelSpec, i: int, alpha_i: float, T: int = 200_000, reps: int = 20,
                       seed: int = 0, burnin: int = DEFAULT_BURNIN) -> GoldieEstimate:
    """
    c_i = E[|X_1,i|^a_i - |A_ii m_1 X_0,i|^a_i] / (2 a_i E[|A_ii m|^a_i log|A_ii m|]).

    The numerator is averaged over stationary pairs of the marginal recursion
    X_t,i = A_ii m_t X_{t-1},i + Q_t,i (replicate means, delta-method stderr);
    the denominator is a 1-D quadrature.
    """
    _require_diagonal(spec, "The Goldie constant")
    if not 0 <= i < spec.d:
        raise ValueError(f"Marginal index {i} out of range for d = {spec.d}")
    a = float(spec.A[0][i, i])
    if abs(a) < GOLDIE_MIN_COEFF:
        raise InapplicableError(f"|A_ii| = {abs(a):.3g} < {GOLDIE_MIN_COEFF}: outside the valid Monte-Carlo regime")
    if reps < 2:
        raise ValueError("goldie_constant_mc needs at least 2 replicates")
    sd = math.sqrt(float(spec.C[i, i]))
    total = burnin + T
    half = T // 2

    def replicate(index: int, rng: np.random.Generator):
        normals = rng.standard_normal((total, 2))
        m = normals[:, 0]
        q = (sd * normals[:, 1]).tolist()
        coeff = (a * m).tolist()
        xs = [0.0] * (total + 1)
        x = 0.0
        for t in range(total):
            x = coeff[t] * x + q[t]
            xs[t + 1] = x
        xs = np.asarray(xs)
        prev, nxt = xs[burnin:total], xs[burnin + 1:total + 1]
        terms = np.abs(nxt) ** alpha_i - np.abs(a * m[burnin:total] * prev) ** alpha_i
        return terms.mean(), terms[:half].mean(), terms[half:].mean()

    rows = np.asarray(ReplicateWorker(seed).map(replicate, reps))
    numerator = float(rows[:, 0].mean())
    num_se = float(rows[:, 0].std(ddof=1) / math.sqrt(reps))
    denominator = goldie_denominator(a, alpha_i)
    scale = 2.0 * alpha_i * denominator

    first_se = rows[:, 1].std(ddof=1) / math.sqrt(reps)
    second_se = rows[:, 2].std(ddof=1) / math.sqrt(reps)
    gap = abs(rows[:, 1].mean() - rows[:, 2].mean())
    sensitive = bool(gap > 3.0 * math.hypot(first_se, second_se))
    if sensitive:
        logger.warning(f"Goldie numerator for marginal {i} differs between path halves: burn-in may be too short")

    return GoldieEstimate(
        estimate=numerator / scale,
        stderr=num_se / abs(scale),
        numerator=numerator,
        denominator=denominator,
        burnin_sensitive=sensitive,
    )


def hill_estimate(values: np.ndarray, k: int) -> float:
    """Hill estimator of the tail index from the k largest |values|."""
    x = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
    if not 1 <= k < x.size:
        raise ValueError(f"k must satisfy 1 <= k < {x.size}, got {k}")
    if x[k] <= 0.0:
        raise DegenerateSampleError(f"Order statistic |X|_(k+1) is zero for k = {k}")
    mean_log = float(np.mean(np.log(x[:k] / x[k])))
    if mean_log <= 0.0:
        raise DegenerateSampleError(f"Top {k + 1} order statistics are all equal")
    return 1.0 / mean_log


def hill(path: PathSample, i: int, k: int) -> float:
    if not 0 <= i < path.d:
        raise ValueError(f"Marginal index {i} out of range for d = {path.d}")
    return hill_estimate(path.data[:, i], k)


def default_k_grid(T: int) -> List[int]:
    """k from sqrt(T)/2 to 4 sqrt(T), clipped below T."""
    root = math.sqrt(T)
    lo = max(2, int(math.ceil(root / 2.0)))
    hi = min(T - 1, int(4.0 * root))
    if hi <= lo:
        return [lo] if lo < T else [max(1, T - 1)]
    return sorted({int(k) for k in np.linspace(lo, hi, PLATEAU_GRID_POINTS)})


def hill_plateau(values: np.ndarray, k_grid: Optional[Sequence[int]] = None) -> HillPlateau:
    """Hill over a k grid; the plateau is the window of consecutive k with the smallest spread."""
    x = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
    k_values = list(k_grid) if k_grid is not None else default_k_grid(x.size)
    if not k_values or min(k_values) < 1 or max(k_values) >= x.size:
        raise ValueError(f"k grid must lie in [1, {x.size - 1}]")
    if np.any(x[np.asarray(k_values)] <= 0.0):
        raise DegenerateSampleError("A threshold order statistic is zero")

    logs = np.log(x[:max(k_values) + 1])
    csum = np.cumsum(logs)
    estimates = []
    for k in k_values:
        mean_log = csum[k - 1] / k - logs[k]
        if mean_log <= 0.0:
            raise DegenerateSampleError(f"Top {k + 1} order statistics are all equal")
        estimates.append(float(1.0 / mean_log))

    width = max(1, min(len(estimates), max(3, len(estimates) // 4)))
    est = np.asarray(estimates)
    spreads = [est[s:s + width].std() for s in range(len(est) - width + 1)]
    start = int(np.argmin(spreads))
    return HillPlateau(
        k_values=[int(k) for k in k_values],
        estimates=estimates,
        plateau_k=(int(k_values[start]), int(k_values[start + width - 1])),
        alpha=float(est[start:start + width].mean()),
    )


def tail_profile(spec: ModelSpec) -> TailProfile:
    """
    Analytic per-marginal tail indices.

    Diagonal: alpha_i solves E|m|^alpha = |A_ii|^{-alpha} per marginal (an
    exactly zero A_ii leaves a Gaussian marginal, reported as inf).
    Similarity A = aO: every marginal shares alpha = solve_alpha(a).
    """
    if spec.A0 is not None:
        raise InapplicableError("Tail analysis is not defined with an autoregressive term")
    param_class = classify(spec)

    if param_class.has(ParamLabel.DIAGONAL):
        coeffs = np.abs(np.diag(spec.A[0]))
        alphas = [math.inf if a == 0.0 else solve_alpha(float(a)) for a in coeffs]
        return TailProfile(
            alpha=alphas,
            param_class=param_class,
            dominant=int(np.argmax(coeffs)),
            conjecture_conditional=not param_class.has(ParamLabel.SCALAR),
        )
    if param_class.has(ParamLabel.SIMILARITY):
        alpha = solve_alpha(similarity_scale(spec.A[0]))
        return TailProfile(alpha=[alpha] * spec.d, param_class=param_class)
    raise InapplicableError(
        f"No computable tail index for class {sorted(l.value for l in param_class.labels)}"
    )


def tail_profile_from_path(path: PathSample, k_grid: Optional[Sequence[int]] = None) -> TailProfile:
    """Hill-plateau route when only data is available."""
    plateaus = {i: hill_plateau(path.data[:, i], k_grid) for i in range(path.d)}
    param_class = ParamClass(
        labels={ParamLabel.GENERAL},
        details={ParamLabel.GENERAL.value: "estimated from a path, no spec supplied"},
    )
    alphas = [plateaus[i].alpha for i in range(path.d)]
    return TailProfile(
        alpha=alphas,
        param_class=param_class,
        source="hill",
        dominant=int(np.argmin(alphas)),
        hill=plateaus,
    )
