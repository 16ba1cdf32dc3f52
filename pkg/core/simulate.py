"""Path simulation in the SRE and conditional-covariance forms, and the forward tail chain."""

import logging
from typing import Optional

import numpy as np

from core.bekk_model import draw_coefficients, draw_multipliers, spec_digest
from core.errors import InapplicableError
from core.models import ModelSpec, PathSample, TailChainSample
from core.numerics import cholesky

logger = logging.getLogger(__name__)

DEFAULT_BURNIN = 10_000
DIVERGENCE_THRESHOLD = 1e300
CHUNK = 4096


def _check_counts(T: int, burnin: int):
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    if burnin < 0:
        raise ValueError(f"burnin must be non-negative, got {burnin}")


def _first_divergent_row(block: np.ndarray) -> Optional[int]:
    # NaN fails the comparison as well
    bad = np.flatnonzero(~np.all(np.abs(block) <= DIVERGENCE_THRESHOLD, axis=1))
    return int(bad[0]) if bad.size else None


def _finish(spec: ModelSpec, out: np.ndarray, retained: int, seed: int, burnin: int,
            diverged_at: Optional[int], representation: str) -> PathSample:
    if diverged_at is not None:
        logger.warning(f"Path diverged at step {diverged_at} (|X_t| > {DIVERGENCE_THRESHOLD:g}); "
                       f"{retained} retained rows kept")
    return PathSample(
        data=out[:retained].copy() if diverged_at is not None else out,
        seed=seed,
        burnin=burnin,
        spec_digest=spec_digest(spec),
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        representation=representation,
    )


def simulate_sre(spec: ModelSpec, T: int, burnin: int = DEFAULT_BURNIN, seed: int = 0) -> PathSample:
    """
    Iterates X_t = Mtilde_t X_{t-1} + Q_t from X_0 = 0 for burnin + T steps.

    Only the last T states are kept. A state beyond 1e300 in max-norm stops the
    run and the partial sample is returned with `diverged` set.
    """
    _check_counts(T, burnin)
    rng = np.random.default_rng(seed)
    L = cholesky(spec.C)
    total = burnin + T
    out = np.empty((T, spec.d))
    x = np.zeros(spec.d)
    step = 0
    diverged_at = None

    with np.errstate(over="ignore", invalid="ignore"):
        while step < total:
            n = min(CHUNK, total - step)
            mtilde, q = draw_coefficients(spec, rng, n, L)
            block = np.empty((n, spec.d))
            for k in range(n):
                x = mtilde[k] @ x + q[k]
                block[k] = x

            bad = _first_divergent_row(block)
            keep = n if bad is None else bad
            lo = max(step, burnin)
            hi = step + keep
            if hi > lo:
                out[lo - burnin:hi - burnin] = block[lo - step:hi - step]
            if bad is not None:
                diverged_at = step + bad
                break
            step += n

    retained = T if diverged_at is None else max(0, diverged_at - burnin)
    return _finish(spec, out, retained, seed, burnin, diverged_at, "sre")


def simulate_h_form(spec: ModelSpec, T: int, burnin: int = DEFAULT_BURNIN, seed: int = 0) -> PathSample:
    """
    Simulates X_t = H_t^{1/2} Z_t with H_t = C + sum_i A_i X_{t-1} X_{t-1}' A_i'.

    H_t^{1/2} is the Cholesky factor; Z_t is a standard normal d-vector.
    """
    if spec.A0 is not None:
        raise InapplicableError("The conditional-covariance form has no autoregressive term; use simulate_sre")
    _check_counts(T, burnin)
    rng = np.random.default_rng(seed)
    terms = np.stack(spec.A)
    C = np.asarray(spec.C, dtype=float)
    total = burnin + T
    out = np.empty((T, spec.d))
    x = np.zeros(spec.d)
    step = 0
    diverged_at = None

    with np.errstate(over="ignore", invalid="ignore"):
        while step < total and diverged_at is None:
            n = min(CHUNK, total - step)
            z = rng.standard_normal((n, spec.d))
            for k in range(n):
                v = terms @ x                      # (l, d): row i = A_i x
                H = C + v.T @ v
                try:
                    L = np.linalg.cholesky(H)
                except np.linalg.LinAlgError:
                    if not np.all(np.isfinite(H)):
                        diverged_at = step + k
                        break
                    # raises DecompositionError naming the pivot
                    L = cholesky(H)
                x = L @ z[k]
                if not np.abs(x).max() <= DIVERGENCE_THRESHOLD:
                    diverged_at = step + k
                    break
                if step + k >= burnin:
                    out[step + k - burnin] = x
            step += n

    retained = T if diverged_at is None else max(0, diverged_at - burnin)
    return _finish(spec, out, retained, seed, burnin, diverged_at, "h-form")


def simulate_tail_chain(spec: ModelSpec, y0: np.ndarray, K: int, seed: int = 0) -> TailChainSample:
    """Y_0 = y0, Y_{k+1} = Mtilde_{k+1} Y_k with fresh multiplier draws; returns K rows."""
    if spec.A0 is not None:
        raise InapplicableError("Tail chain is defined for the pure ARCH case (A0 absent)")
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (spec.d,):
        raise ValueError(f"y0 must have length {spec.d}")

    rng = np.random.default_rng(seed)
    mult = draw_multipliers(spec, rng, K - 1)
    data = np.empty((K, spec.d))
    data[0] = y0
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for k in range(K - 1):
            data[k + 1] = mult[k] @ data[k]
    return TailChainSample(data=data, y0=y0.copy())
