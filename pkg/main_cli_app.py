#!/usr/bin/env python3
"""
bekk-tails command-line driver.

Simulates BEKK-ARCH processes, checks stationarity, and runs the tail,
extremal and covariance diagnostics. Reports are JSON, bulk series CSV with
a .meta.json sidecar.

Usage:
    python main_cli_app.py <command> [options]
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from core.bekk_model import classify, spec_digest
from core.covariance import covariance_report, fluctuation_scan
from core.data_manager import DataManager, build_metadata, spectral_rows
from core.errors import BekkError, InapplicableError
from core.extremes import extremal_report, spectral_measure
from core.models import ModelSpec, ParamClass, ParamLabel, PathSample, RunConfig, TailProfile, VsrvScale
from core.simulate import DEFAULT_BURNIN, simulate_h_form, simulate_sre
from core.stationarity import DEFAULT_MC_SAMPLES, DEFAULT_N_REPS, DEFAULT_N_STEPS, stationarity_report
from core.tails import (
    diagonal_spec_from_alphas, goldie_constant_mc, solve_alpha, tail_profile, tail_profile_from_path,
)
from core.worker import entropy_seed
from core.yaml_generator import YAMLGenerator

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "check-stationarity", "tail-index", "spectral-measure", "extremal-index",
            "covariance", "classify", "make-spec")
SPEC_GRID_POINTS = 100
EXIT_USAGE = 2


def _count(value: Any) -> int:
    """Non-negative integer; accepts 2e5-style literals."""
    number = float(value)
    if number < 0 or number != int(number):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value!r}")
    return int(number)


def _int_list(value: Any) -> List[int]:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return [_count(v) for v in items if str(v).strip()]


def _float_list(value: Any) -> List[float]:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return [float(v) for v in items if str(v).strip()]


# per-command defaults, applied after the run config file
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "simulate": {"T": 200_000, "burnin": DEFAULT_BURNIN, "form": "sre"},
    "check-stationarity": {"n_steps": DEFAULT_N_STEPS, "n_reps": DEFAULT_N_REPS, "moment_orders": [1, 2],
                           "mc_samples": DEFAULT_MC_SAMPLES},
    "tail-index": {"goldie": False, "goldie_T": 200_000, "goldie_reps": 20, "burnin": DEFAULT_BURNIN},
    "spectral-measure": {"k": [100, 200, 300, 400, 500], "grid": SPEC_GRID_POINTS},
    "extremal-index": {"reps": 100_000, "quantile": 0.99, "block_len": 100, "gap": 1},
    "covariance": {"band": 0.6, "scan": False, "n_grid": [2000, 8000, 32000, 128000], "reps": 100,
                   "burnin": DEFAULT_BURNIN},
    "classify": {},
    "make-spec": {},
}

CONVERTERS: Dict[str, Callable[[Any], Any]] = {
    "T": _count, "burnin": _count, "n_steps": _count, "n_reps": _count, "mc_samples": _count,
    "moment_orders": _int_list, "goldie_T": _count, "goldie_reps": _count, "k": _int_list,
    "grid": _count, "reps": _count, "K": _count, "quantile": float, "block_len": _count, "gap": _count,
    "band": float, "n_grid": _int_list, "alpha": _float_list, "c_scale": _float_list, "alphas": _float_list,
    "c": float, "seed": _count, "marginals": _int_list,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bekk-tails",
        description="Simulation and tail analysis of BEKK-ARCH processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML run file supplying defaults for any flag")
        p.add_argument("--seed", type=_count, help="random seed (drawn from entropy and recorded if absent)")
        p.add_argument("--out", help="output file (JSON reports go to stdout when absent)")
        p.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
        return p

    p = add("simulate", "simulate a path (CSV + sidecar JSON)")
    p.add_argument("--spec", required=True)
    p.add_argument("--T", type=_count)
    p.add_argument("--burnin", type=_count)
    p.add_argument("--form", choices=["sre", "h-form"], help="SRE recursion or conditional covariance form")

    p = add("check-stationarity", "Lyapunov exponent, l = 1 gate and moment conditions")
    p.add_argument("--spec", required=True)
    p.add_argument("--n-steps", dest="n_steps", type=_count)
    p.add_argument("--n-reps", dest="n_reps", type=_count)
    p.add_argument("--moment-orders", dest="moment_orders", type=_int_list)
    p.add_argument("--mc-samples", dest="mc_samples", type=_count)

    p = add("tail-index", "analytic tail indices from a spec or Hill plateaus from a path")
    p.add_argument("--spec")
    p.add_argument("--path")
    p.add_argument("--k", type=_int_list, help="Hill k grid (default sqrt(T)/2 .. 4 sqrt(T))")
    p.add_argument("--goldie", action="store_true", default=None, help="estimate Goldie constants (Diagonal specs)")
    p.add_argument("--goldie-T", dest="goldie_T", type=_count)
    p.add_argument("--goldie-reps", dest="goldie_reps", type=_count)
    p.add_argument("--burnin", type=_count)

    p = add("spectral-measure", "rank-based spectral measure of a bivariate path")
    p.add_argument("--path", required=True)
    p.add_argument("--k", type=_int_list)
    p.add_argument("--grid", type=_count, help="number of angles in [0, pi/2]")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")

    p = add("extremal-index", "marginal extremal indices (formula and blocks) and cluster sizes")
    p.add_argument("--spec")
    p.add_argument("--path")
    p.add_argument("--alpha", type=_float_list, help="marginal tail indices (default: from spec or Hill)")
    p.add_argument("--c-scale", dest="c_scale", type=_float_list, help="pseudo-norm constants c_i (default 1)")
    p.add_argument("--marginals", type=_int_list)
    p.add_argument("--reps", type=_count)
    p.add_argument("--K", type=_count)
    p.add_argument("--quantile", type=float)
    p.add_argument("--block-len", dest="block_len", type=_count)
    p.add_argument("--gap", type=_count)

    p = add("covariance", "sample covariance, cross-product tails and fluctuation rates")
    p.add_argument("--path", required=True)
    p.add_argument("--spec")
    p.add_argument("--alpha", type=_float_list)
    p.add_argument("--k", type=_count)
    p.add_argument("--band", type=float)
    p.add_argument("--scan", action="store_true", default=None, help="run the fluctuation scan (needs --spec)")
    p.add_argument("--n-grid", dest="n_grid", type=_int_list)
    p.add_argument("--reps", type=_count)
    p.add_argument("--burnin", type=_count)

    p = add("classify", "structural parameterization class of a spec")
    p.add_argument("--spec", required=True)

    p = add("make-spec", "Diagonal spec with prescribed marginal tail indices")
    p.add_argument("--alphas", type=_float_list, required=True)
    p.add_argument("--c", type=float, help="d = 2: C = 1e-5 [[1, c], [c, 1]] (default C = I)")
    return parser


def config_from_args(args: argparse.Namespace, data_manager: DataManager) -> RunConfig:
    """Merges command line flags over the run file over the command defaults."""
    values = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    file_values: Dict[str, Any] = {}
    if getattr(args, "config", None):
        file_values = data_manager.load_run_config(args.config)

    for key, default in DEFAULTS[args.command].items():
        if values.get(key) is None:
            values[key] = default
    for key, raw in file_values.items():
        if vars(args).get(key) is None:
            convert = CONVERTERS.get(key, lambda v: v)
            values[key] = convert(raw)

    return RunConfig(
        command=args.command,
        spec_path=values.pop("spec", None),
        path_path=values.pop("path", None),
        out_path=values.pop("out", None),
        seed=values.pop("seed", None),
        fmt=values.pop("fmt", None) or "json",
        params=values,
    )


class Runner:
    """Executes one RunConfig."""

    def __init__(self, config: RunConfig, data_manager: Optional[DataManager] = None):
        self.config = config
        self.params = config.params
        self.data = data_manager or DataManager()
        if config.seed is None:
            config.seed = entropy_seed()
            logger.info(f"No seed given, using {config.seed}")
        self.seed = config.seed

    # --- inputs ---
    def _spec(self, required: bool = True) -> Optional[ModelSpec]:
        if self.config.spec_path is None:
            if required:
                raise InapplicableError(f"{self.config.command} needs --spec")
            return None
        return self.data.load_spec(self.config.spec_path)

    def _path(self, required: bool = True) -> Optional[PathSample]:
        if self.config.path_path is None:
            if required:
                raise InapplicableError(f"{self.config.command} needs --path")
            return None
        return self.data.load_path(self.config.path_path)

    def _metadata(self, spec: Optional[ModelSpec] = None, path: Optional[PathSample] = None, **extra):
        digest = spec_digest(spec) if spec is not None else (path.spec_digest if path is not None else None)
        return build_metadata(seed=self.seed, spec_digest=digest, command=self.config.command, **extra)

    def _emit_json(self, data: Dict[str, Any], metadata: Dict[str, Any]):
        if self.config.out_path:
            self.data.write_json(data, self.config.out_path, metadata)
        else:
            print(json.dumps({"metadata": metadata, **data}, indent=2))

    def _require_out(self) -> str:
        if not self.config.out_path:
            raise InapplicableError(f"{self.config.command} writes CSV and needs --out")
        return self.config.out_path

    # --- commands ---
    def run(self):
        handler = getattr(self, "cmd_" + self.config.command.replace("-", "_"))
        handler()

    def cmd_simulate(self):
        spec = self._spec()
        out = self._require_out()
        simulator = simulate_h_form if self.params["form"] == "h-form" else simulate_sre
        sample = simulator(spec, self.params["T"], self.params["burnin"], self.seed)
        self.data.save_path(sample, out, self._metadata(spec))
        if sample.diverged:
            logger.warning(f"Divergence recorded in {out}")

    def cmd_check_stationarity(self):
        spec = self._spec()
        report = stationarity_report(spec, self.params["n_steps"], self.params["n_reps"], self.seed,
                                     self.params["moment_orders"], self.params["mc_samples"])
        self._emit_json(report.to_dict(), self._metadata(spec))

    def cmd_classify(self):
        spec = self._spec()
        self._emit_json({"class": classify(spec).to_dict()}, self._metadata(spec))

    def cmd_tail_index(self):
        spec = self._spec(required=False)
        path = self._path(required=False)
        if spec is None and path is None:
            raise InapplicableError("tail-index needs --spec or --path")
        extra: Dict[str, Any] = {}
        if spec is not None:
            profile = tail_profile(spec)
            if self.params["goldie"]:
                extra["goldie"] = self._goldie(spec, profile)
        else:
            profile = tail_profile_from_path(path, self.params.get("k"))
        self._emit_json({"profile": profile.to_dict(), **extra}, self._metadata(spec, path))

    def _goldie(self, spec: ModelSpec, profile: TailProfile) -> List[Dict[str, Any]]:
        results = []
        for i, alpha in enumerate(profile.alpha):
            if math.isinf(alpha):
                continue
            try:
                g = goldie_constant_mc(spec, i, alpha, self.params["goldie_T"], self.params["goldie_reps"],
                                       self.seed + i, self.params["burnin"])
            except InapplicableError as e:
                logger.warning(f"Goldie constant for marginal {i} skipped: {e}")
                continue
            results.append({"marginal": i, "estimate": g.estimate, "stderr": g.stderr,
                            "burnin_sensitive": g.burnin_sensitive})
        if len(results) == len(profile.alpha) and all(r["estimate"] > 0 for r in results):
            profile.c = [r["estimate"] for r in results]
            profile.c_stderr = [r["stderr"] for r in results]
        return results

    def cmd_spectral_measure(self):
        path = self._path()
        grid = np.linspace(0.0, 0.5 * math.pi, self.params["grid"])
        estimate = spectral_measure(path, self.params["k"], grid)
        metadata = self._metadata(path=path, k_values=estimate.k_values, exceedances=estimate.exceedances)
        if self.config.fmt == "json":
            data = {"theta": [float(t) for t in estimate.theta_grid],
                    "phi": {str(k): [float(v) for v in values] for k, values in estimate.phi.items()}}
            self._emit_json(data, metadata)
            return
        rows = np.asarray(spectral_rows(estimate.theta_grid, estimate.phi))
        self.data.write_csv(["theta", "k", "phi"], rows, self._require_out(), metadata,
                            fmt=["%.12g", "%d", "%.17g"])

    def cmd_extremal_index(self):
        spec = self._spec(required=False)
        path = self._path(required=False)
        if spec is None and path is None:
            raise InapplicableError("extremal-index needs --spec and/or --path")
        alphas = self._profile(spec, path).alpha
        scale = None
        if path is not None and all(math.isfinite(a) for a in alphas):
            c_scale = self.params.get("c_scale") or [1.0] * len(alphas)
            scale = VsrvScale(alpha=alphas, c=c_scale)
        report = extremal_report(
            spec, path, alphas, marginals=self.params.get("marginals"), reps=self.params["reps"],
            K=self.params.get("K"), seed=self.seed, quantile=self.params["quantile"],
            block_len=self.params["block_len"], scale=scale, gap=self.params["gap"],
        )
        self._emit_json(report.to_dict(), self._metadata(spec, path))

    def _profile(self, spec: Optional[ModelSpec], path: Optional[PathSample],
                 path_fallback: bool = False) -> TailProfile:
        if self.params.get("alpha"):
            param_class = classify(spec) if spec is not None else ParamClass(labels={ParamLabel.GENERAL})
            return TailProfile(alpha=list(self.params["alpha"]), param_class=param_class, source="given")
        if spec is not None:
            try:
                return tail_profile(spec)
            except InapplicableError as e:
                if not path_fallback or path is None:
                    raise
                logger.warning(f"{e}; using Hill estimates from the path instead")
        return tail_profile_from_path(path)

    def cmd_covariance(self):
        path = self._path()
        spec = self._spec(required=False)
        profile = self._profile(spec, path, path_fallback=True)
        k = self.params.get("k") or max(1, int(2 * math.sqrt(path.T)))
        report = covariance_report(path, spec, profile, k, self.params["band"])
        if self.params["scan"]:
            if spec is None:
                raise InapplicableError("The fluctuation scan simulates and needs --spec")
            report.fluctuation = fluctuation_scan(spec, profile, self.params["n_grid"], self.params["reps"],
                                                  self.seed, self.params["burnin"])
        metadata = self._metadata(spec, path)
        self._emit_json(report.to_dict(), metadata)
        if report.fluctuation and self.config.out_path:
            out = Path(self.config.out_path)
            rows = [[f.i, f.j, n, spread] for f in report.fluctuation for n, spread in f.points]
            self.data.write_csv(["i", "j", "n", "iqr"], np.asarray(rows, dtype=float),
                                str(out.with_name(out.stem + ".fluctuation.csv")), metadata,
                                fmt=["%d", "%d", "%d", "%.17g"])

    def cmd_make_spec(self):
        out = self._require_out()
        alphas = self.params["alphas"]
        spec = diagonal_spec_from_alphas(alphas, c=self.params.get("c"))
        if Path(out).suffix.lower() in (".yml", ".yaml"):
            coeffs = np.diag(spec.A[0])
            notes = ["A_ii: " + ", ".join(f"{a:.4f} (alpha={solve_alpha(a):.4g})" for a in coeffs)]
            header = ["Diagonal BEKK-ARCH spec with marginal tail indices " + ", ".join(f"{a:g}" for a in alphas)]
            YAMLGenerator().generate_spec(spec, out, notes, header)
        else:
            self.data.save_spec(spec, out)
        logger.info(f"Spec digest {spec_digest(spec)}")


def run(config: RunConfig) -> int:
    """Runs one command; returns the process exit status."""
    try:
        Runner(config).run()
        return 0
    except BekkError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        logger.error(f"Invalid argument: {e}")
        print(json.dumps({"error": "ValueError", "message": str(e), "exit_code": EXIT_USAGE}), file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.exception("Critical error")
        print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": 1}), file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        config = config_from_args(args, DataManager())
    except BekkError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except (argparse.ArgumentTypeError, ValueError) as e:
        print(json.dumps({"error": "ValueError", "message": str(e), "exit_code": EXIT_USAGE}), file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
