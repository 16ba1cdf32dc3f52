import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np


def _json_float(value: Optional[float]) -> Any:
    """JSON has no infinities: they are written as the strings "inf" and "-inf", NaN as null."""
    if value is None:
        return None
    value = float(value)
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return None
    return "inf" if value > 0 else "-inf"


def _matrix_to_list(m: Optional[np.ndarray]) -> Optional[List[List[Any]]]:
    return None if m is None else [[_json_float(v) for v in row] for row in np.asarray(m)]


@dataclass
class ModelSpec:
    """BEKK-ARCH coefficients: X_t = (A0 + sum_i m_it A_i) X_{t-1} + Q_t, Q_t ~ N(0, C)."""
    d: int
    l: int
    A: List[np.ndarray]
    C: np.ndarray
    A0: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the spec file layout (matrices as arrays of rows)."""
        return {
            "d": self.d,
            "l": self.l,
            "A": [_matrix_to_list(a) for a in self.A],
            "C": _matrix_to_list(self.C),
            "A0": _matrix_to_list(self.A0),
        }


class ParamLabel(str, Enum):
    SCALAR = "Scalar"
    DIAGONAL = "Diagonal"
    SIMILARITY = "Similarity"
    ID_CANDIDATE = "IDCandidate"
    GENERAL = "General"


@dataclass
class ParamClass:
    """Structural parameterization class of a spec."""
    labels: Set[ParamLabel] = field(default_factory=set)
    details: Dict[str, str] = field(default_factory=dict)  # label value -> rationale

    def has(self, label: ParamLabel) -> bool:
        return label in self.labels

    def to_dict(self) -> Dict[str, Any]:
        order = list(ParamLabel)
        return {
            "labels": [lbl.value for lbl in order if lbl in self.labels],
            "details": dict(self.details),
        }


@dataclass
class CoefficientDraw:
    m: np.ndarray        # (l,)
    Mtilde: np.ndarray   # (d, d)
    Q: np.ndarray        # (d,)


@dataclass
class PathSample:
    """Retained segment of a simulated path (row t = X_t)."""
    data: np.ndarray
    seed: int
    burnin: int
    spec_digest: str
    diverged: bool = False
    diverged_at: Optional[int] = None  # absolute step, burn-in included
    representation: str = "sre"

    @property
    def T(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    def to_metadata(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "burnin": self.burnin,
            "T": self.T,
            "d": self.d,
            "spec_digest": self.spec_digest,
            "diverged": self.diverged,
            "diverged_at": self.diverged_at,
            "representation": self.representation,
        }


@dataclass
class TailChainSample:
    data: np.ndarray  # (K, d), row 0 = y0
    y0: np.ndarray


@dataclass
class GateResult:
    rho: float
    threshold: float
    passed: bool


@dataclass
class MomentResult:
    rho: float
    passed: bool
    exact: bool


@dataclass
class StationarityReport:
    lyapunov_estimate: float
    lyapunov_stderr: float
    n_steps: int
    n_reps: int
    gate_l1: Optional[GateResult] = None
    moment_orders: Dict[int, MomentResult] = field(default_factory=dict)
    lyapunov_closed_form: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "lyapunov": {
                "estimate": _json_float(self.lyapunov_estimate),
                "stderr": self.lyapunov_stderr,
                "n_steps": self.n_steps,
                "n_reps": self.n_reps,
            },
            "gate_l1": None,
            "moment_orders": {
                str(n): {"rho": r.rho, "pass": r.passed, "exact": r.exact}
                for n, r in sorted(self.moment_orders.items())
            },
        }
        if self.lyapunov_closed_form is not None:
            result["lyapunov"]["closed_form"] = _json_float(self.lyapunov_closed_form)
        if self.gate_l1 is not None:
            result["gate_l1"] = {
                "rho": self.gate_l1.rho,
                "threshold": self.gate_l1.threshold,
                "pass": self.gate_l1.passed,
            }
        return result


@dataclass
class GoldieEstimate:
    estimate: float
    stderr: float
    numerator: float
    denominator: float
    burnin_sensitive: bool = False


@dataclass
class HillPlateau:
    k_values: List[int]
    estimates: List[float]
    plateau_k: Tuple[int, int]
    alpha: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "plateau_k": list(self.plateau_k),
            "k_values": list(self.k_values),
            "estimates": list(self.estimates),
        }


@dataclass
class TailProfile:
    """Per-marginal tail indices and (optionally) Goldie constants."""
    alpha: List[float]
    param_class: ParamClass
    c: Optional[List[float]] = None
    c_stderr: Optional[List[float]] = None
    source: str = "analytic"  # "analytic" | "hill"
    dominant: Optional[int] = None
    conjecture_conditional: bool = False
    hill: Dict[int, HillPlateau] = field(default_factory=dict)

    def __post_init__(self):
        if any(not a > 0 for a in self.alpha):
            raise ValueError(f"Tail indices must be positive: {self.alpha}")
        if self.c is not None and any(not v > 0 for v in self.c):
            raise ValueError(f"Goldie constants must be positive: {self.c}")

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "alpha": [_json_float(a) for a in self.alpha],
            "class": self.param_class.to_dict(),
            "source": self.source,
            "dominant": self.dominant,
            "conjecture_conditional": self.conjecture_conditional,
        }
        if self.c is not None:
            result["c"] = list(self.c)
            result["c_stderr"] = list(self.c_stderr) if self.c_stderr else None
        if self.hill:
            result["hill"] = {str(i): p.to_dict() for i, p in sorted(self.hill.items())}
        return result


@dataclass
class VsrvScale:
    """Componentwise normalization of the pseudo-norm max_i |x_i|^alpha_i / c_i."""
    alpha: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.alpha.shape != self.c.shape:
            raise ValueError("alpha and c must have the same length")
        if np.any(self.alpha <= 0) or np.any(self.c <= 0):
            raise ValueError("alpha and c must be positive")


@dataclass
class SpectralEstimate:
    theta_grid: np.ndarray
    phi: Dict[int, np.ndarray]
    T: int
    k_values: List[int]
    exceedances: Dict[int, int] = field(default_factory=dict)


@dataclass
class ExtremalEstimate:
    marginal: int
    estimate: float
    stderr: Optional[float]
    method: str  # "mc-formula" | "blocks"


@dataclass
class ExtremalReport:
    estimates: List[ExtremalEstimate] = field(default_factory=list)
    cluster_size_hist: Dict[int, int] = field(default_factory=dict)
    conjecture_conditional: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta_marginal": [
                {"marginal": e.marginal, "estimate": e.estimate, "stderr": e.stderr, "method": e.method}
                for e in self.estimates
            ],
            "cluster_size_hist": {str(s): n for s, n in sorted(self.cluster_size_hist.items())},
            "conjecture_conditional": self.conjecture_conditional,
        }


@dataclass
class CrossTailCheck:
    i: int
    j: int
    predicted: float
    empirical: float
    k: int
    within_band: bool


@dataclass
class FluctuationFit:
    i: int
    j: int
    alpha_cross: float
    slope: float
    slope_stderr: float
    predicted_slope: float
    points: List[Tuple[int, float]] = field(default_factory=list)  # (n, IQR)


@dataclass
class CovReport:
    gamma: np.ndarray
    alpha_cross_pred: Optional[np.ndarray] = None
    alpha_cross_emp: Optional[np.ndarray] = None
    k: Optional[int] = None
    band: float = 0.6
    checks: List[CrossTailCheck] = field(default_factory=list)
    gamma_stationary: Optional[np.ndarray] = None
    fluctuation: List[FluctuationFit] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"gamma": _matrix_to_list(self.gamma)}
        if self.gamma_stationary is not None:
            result["gamma_stationary"] = _matrix_to_list(self.gamma_stationary)
        if self.alpha_cross_pred is not None:
            result["alpha_cross_pred"] = _matrix_to_list(self.alpha_cross_pred)
        if self.alpha_cross_emp is not None:
            result["alpha_cross_emp"] = _matrix_to_list(self.alpha_cross_emp)
            result["k"] = self.k
            result["band"] = self.band
            result["checks"] = [
                {"i": c.i, "j": c.j, "predicted": _json_float(c.predicted), "empirical": _json_float(c.empirical),
                 "within_band": c.within_band}
                for c in self.checks
            ]
        if self.fluctuation:
            result["fluctuation_exponent"] = [
                {"i": f.i, "j": f.j, "alpha_cross": _json_float(f.alpha_cross), "slope": f.slope,
                 "slope_stderr": f.slope_stderr, "predicted_slope": f.predicted_slope}
                for f in self.fluctuation
            ]
        return result


@dataclass
class RunConfig:
    """One CLI invocation: command, files, seed and command-specific parameters."""
    command: str
    spec_path: Optional[str] = None
    path_path: Optional[str] = None
    out_path: Optional[str] = None
    seed: Optional[int] = None
    fmt: str = "json"
    params: Dict[str, Any] = field(default_factory=dict)
