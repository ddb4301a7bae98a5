#!/usr/bin/env python3
"""Estimate the maximum-subgraph-density curve and invert it.

Runs the exact flow solver over Monte Carlo G(n, lambda/n) draws for each
grid lambda, writes the curve CSV, and reports the threshold estimate
lambda_hat = rho^{-1}(1/alpha) with its stderr band.

Example:
    python scripts/rho_curve_experiment.py --n 3000 --replicates 20 \
        --lambdas 1,1.5,2,3,3.5,4,8 --alpha 0.5 --out rho_curve.csv
"""

import argparse
import sys

from corrmatch.density import rho_inverse
from corrmatch.harness import ExperimentConfig, run_rho_curve


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--lambdas", type=str, default="1,1.5,2,2.5,3,3.5,4,8")
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", type=str, default="rho_curve.csv")
    args = ap.parse_args()

    grid = tuple(float(v) for v in args.lambdas.split(","))
    cfg = ExperimentConfig(
        kind="rho-curve", n=args.n, replicates=args.replicates, seed=args.seed, lambda_grid=grid
    )
    csv, curve = run_rho_curve(cfg, threads=args.threads)
    with open(args.out, "w") as fh:
        fh.write(csv)
    print(f"curve written to {args.out}")
    target = 1.0 / args.alpha
    try:
        est = rho_inverse(target, curve)
    except ValueError as exc:
        print(f"inversion at rho = {target} refused: {exc}")
        return 1
    print(
        f"lambda_hat* = rho^(-1)({target:.3f}) = {est.lambda_star:.4f} "
        f"(band [{est.lo:.4f}, {est.hi:.4f}]); finite-n bias is not corrected"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
