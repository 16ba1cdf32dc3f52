#!/usr/bin/env python3
"""
Tail index <-> coefficient table

For a Diagonal BEKK-ARCH marginal X_i = A_ii m_t X_i + noise, the tail index
alpha_i solves E|m|^alpha = |A_ii|^-alpha. This script tabulates A_ii for a
list of target indices and checks the inverse map on every row.

Usage:
    python -m utils.coefficient_table [--alphas 0.5,2,3,4] [--output table.json]
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from core.data_manager import atomic_write_text, build_metadata
from core.errors import BekkError
from core.stationarity import threshold_constant
from core.tails import gaussian_abs_moment_quad, solve_alpha, solve_coeff

DEFAULT_ALPHAS = [0.5, 2.0, 3.0, 4.0]
ROUND_TRIP_TOL = 1e-8

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)


@dataclass
class TableRow:
    """One alpha with its coefficient and the round-trip check."""
    alpha: float
    coefficient: float
    moment: float  # E|m|^alpha by quadrature
    alpha_back: float
    round_trip_ok: bool


def build_table(alphas: list[float]) -> list[TableRow]:
    rows = []
    for alpha in alphas:
        coeff = solve_coeff(alpha)
        alpha_back = solve_alpha(coeff)
        ok = abs(alpha_back - alpha) <= ROUND_TRIP_TOL * max(1.0, alpha)
        if not ok:
            logger.warning(f"Round trip drifted for alpha={alpha}: got {alpha_back}")
        rows.append(TableRow(alpha, coeff, gaussian_abs_moment_quad(alpha), alpha_back, ok))
    return rows


def format_table(rows: list[TableRow]) -> str:
    lines = [f"{'alpha':>8}  {'A_ii':>12}  {'E|m|^alpha':>12}  {'check':>6}"]
    for row in rows:
        lines.append(f"{row.alpha:>8g}  {row.coefficient:>12.6f}  {row.moment:>12.6f}  "
                     f"{'ok' if row.round_trip_ok else 'FAIL':>6}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Tabulate Diagonal BEKK-ARCH coefficients for target tail indices"
    )
    parser.add_argument(
        "--alphas",
        type=str,
        default=",".join(f"{a:g}" for a in DEFAULT_ALPHAS),
        help="Comma-separated tail indices (default: 0.5,2,3,4)",
    )
    parser.add_argument(
        "-o", "--output",
        type=str,
        help="Optional JSON output file",
    )
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )
    args = parser.parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
        rows = build_table(alphas)
    except (BekkError, ValueError) as e:
        logger.error(f"Failed to build table: {e}")
        return 1

    if args.output:
        document = {
            "metadata": build_metadata(stationarity_threshold=threshold_constant()),
            "rows": [asdict(row) for row in rows],
        }
        atomic_write_text(Path(args.output), json.dumps(document, indent=2) + "\n")
        logger.info(f"Table written to {args.output}")

    print("\n" + "=" * 50)
    print("TAIL INDEX TABLE")
    print("=" * 50)
    print(format_table(rows))
    print("-" * 50)
    print(f"  Stationarity threshold |A_ii| < {threshold_constant():.5f}")
    print("=" * 50)
    return 0 if all(row.round_trip_ok and math.isfinite(row.coefficient) for row in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
