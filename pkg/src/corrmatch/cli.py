"""Command-line interface.

Subcommands: sample, orbits, moments-check, density, rho-curve, estimate,
posterior, tv, admissibility, threshold-sweep.  Common flags: --config
(JSON experiment config), --seed, --threads (CORRMATCH_THREADS overrides
the default), --out (file path; stdout otherwise).

Exit codes: 0 success, 2 statistical-check failure, 3 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .admissibility import check_admissible, default_constants
from .density import rho_inverse
from .graphs import Bijection, Graph, ModelParams, overlap, sample_correlated
from .harness import (
    ConfigError,
    ExperimentConfig,
    posterior_dump_csv,
    run_moment_verification,
    run_posterior_study,
    run_rho_curve,
    run_threshold_sweep,
)
from .inference import (
    EstimatorConfig,
    exact_posterior,
    map_estimator,
    reasonable_candidate_check,
    tv_exact,
    tv_mc,
)
from .orbits import census_csv, edge_orbits, restricted_orbits
from .rng import stream

EXIT_OK = 0
EXIT_STAT_FAIL = 2
EXIT_CONFIG = 3

BUNDLE_VERSION = 1


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("CORRMATCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"CORRMATCH_THREADS is not an integer: {env!r}") from exc
    return 1


def _load_config(args, kind: str, **defaults) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
        if cfg.kind != kind:
            raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {kind!r}")
    else:
        cfg = ExperimentConfig(kind=kind, **defaults)
    if args.seed is not None:
        cfg = ExperimentConfig.from_json(
            json.dumps({**json.loads(cfg.to_json()), "seed": args.seed})
        )
    return cfg


def _sample_bundle(params: ModelParams, seed: int) -> dict:
    smpl = sample_correlated(params, seed)
    return {
        "version": BUNDLE_VERSION,
        "n": params.n,
        "p": params.p,
        "s": params.s,
        "seed": seed,
        "pi_star": [int(v) for v in smpl.pi_star.forward],
        "g": smpl.g.to_text(),
        "g_bar": smpl.g_bar.to_text(),
    }


def _read_bundle(path: str) -> tuple[ModelParams, Bijection, Graph, Graph]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != BUNDLE_VERSION:
        raise ConfigError("unsupported sample bundle version")
    params = ModelParams(n=payload["n"], p=payload["p"], s=payload["s"])
    return (
        params,
        Bijection(payload["pi_star"]),
        Graph.from_text(payload["g"]),
        Graph.from_text(payload["g_bar"]),
    )


# -- subcommand handlers -------------------------------------------------------


def _cmd_sample(args) -> int:
    params = ModelParams(n=args.n, p=args.p, s=args.s)
    bundle = _sample_bundle(params, args.seed if args.seed is not None else 0)
    _emit(json.dumps(bundle, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_orbits(args) -> int:
    params, pi_star, g, g_bar = _read_bundle(args.bundle)
    if args.pi == "star":
        pi = pi_star
    elif args.pi == "identity":
        pi = Bijection.identity(params.n)
    else:
        pi = Bijection.uniform(params.n, stream(args.seed or 0, 1))
    if args.subset:
        subset = {int(v) for v in args.subset.split(",")}
        dec = restricted_orbits(pi_star, pi, subset)
    else:
        dec = edge_orbits(pi_star, pi)
    _emit(census_csv(dec), args.out)
    return EXIT_OK


def _cmd_moments_check(args) -> int:
    cfg = _load_config(
        args, "moment-verification", p=args.p, s=args.s, replicates=args.replicates, n=2
    )
    csv, worst = run_moment_verification(cfg, _threads(args))
    _emit(csv, args.out)
    if worst > 4.0:
        print(f"FAIL: worst |z| = {worst:.2f} exceeds 4", file=sys.stderr)
        return EXIT_STAT_FAIL
    return EXIT_OK


def _cmd_density(args) -> int:
    from .density import densest_subgraph_exact

    if args.bundle:
        _, _, g, _ = _read_bundle(args.bundle)
    else:
        with open(args.graph) as fh:
            g = Graph.from_text(fh.read())
    res = densest_subgraph_exact(g)
    payload = {
        "density": float(res.density),
        "density_numerator": res.density.numerator,
        "density_denominator": res.density.denominator,
        "subset": list(res.best_subset),
        "edges": res.witness_edges,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_rho_curve(args) -> int:
    grid = tuple(float(v) for v in args.lambdas.split(","))
    cfg = _load_config(
        args, "rho-curve", n=args.n, replicates=args.replicates, lambda_grid=grid
    )
    csv, curve = run_rho_curve(cfg, _threads(args))
    _emit(csv, args.out)
    if args.invert_at is not None:
        est = rho_inverse(args.invert_at, curve)
        print(
            f"lambda* at rho = {args.invert_at}: {est.lambda_star:.4f} "
            f"[{est.lo:.4f}, {est.hi:.4f}]",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    params, pi_star, g, g_bar = _read_bundle(args.bundle)
    cfg = EstimatorConfig(
        rho_hat=args.rho_hat,
        c_lambda_hat=args.c_lambda_hat,
        eta=args.eta,
        strategy=args.strategy,
        budget=args.budget,
        seed=args.seed if args.seed is not None else 0,
    )
    est = map_estimator(g, g_bar, params, cfg)
    check = reasonable_candidate_check(est.pi, g, g_bar, cfg)
    ov = overlap(est.pi, pi_star)
    payload = {
        "estimator": "map",
        "exhaustive": est.exhaustive,
        "budget_exhausted": est.budget_exhausted,
        "intersection_edges": est.intersection_edges,
        "overlap": ov,
        "overlap_fraction": ov / params.n,
        "reasonable_candidate": check.accepted,
        "pi_hat": [int(v) for v in est.pi.forward],
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_posterior(args) -> int:
    params, pi_star, g, g_bar = _read_bundle(args.bundle)
    table = exact_posterior(g, g_bar, params)
    _emit(posterior_dump_csv(table, pi_star), args.out)
    return EXIT_OK


def _cmd_posterior_study(args) -> int:
    cfg = _load_config(
        args, "posterior-study", n=args.n, p=args.p, s=args.s, replicates=args.replicates
    )
    _emit(run_posterior_study(cfg, _threads(args)), args.out)
    return EXIT_OK


def _cmd_tv(args) -> int:
    params = ModelParams(n=args.n, p=args.p, s=args.s)
    est, se = tv_mc(params, args.replicates, args.seed if args.seed is not None else 0)
    payload = {"mc_estimate": est, "mc_stderr": se}
    if params.n <= 4:
        exact = tv_exact(params)
        payload["exact"] = exact
        payload["z_score"] = (est - exact) / se if se > 0 else 0.0
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    if "z_score" in payload and abs(payload["z_score"]) > 4.0:
        return EXIT_STAT_FAIL
    return EXIT_OK


def _cmd_admissibility(args) -> int:
    if args.bundle:
        params, pi_star, g, g_bar = _read_bundle(args.bundle)
        from .graphs import intersection_graph

        h = intersection_graph(g, g_bar, pi_star)
    else:
        with open(args.graph) as fh:
            h = Graph.from_text(fh.read())
    consts = default_constants(args.alpha, args.rho_hat, h.n)
    report = check_admissible(h, consts)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def _cmd_threshold_sweep(args) -> int:
    grid = tuple(float(v) for v in args.lambdas.split(",")) if args.lambdas else ()
    cfg = _load_config(
        args,
        "threshold-sweep",
        n=args.n,
        alpha=args.alpha,
        replicates=args.replicates,
        lambda_grid=grid,
    )
    _emit(run_threshold_sweep(cfg, _threads(args)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrmatch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=str, default=None, help="experiment config JSON")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)

    sp = sub.add_parser("sample", help="draw a correlated pair bundle")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.set_defaults(fn=_cmd_sample)

    sp = sub.add_parser("orbits", help="edge-orbit census CSV")
    common(sp)
    sp.add_argument("--bundle", type=str, required=True)
    sp.add_argument("--pi", choices=("star", "identity", "random"), default="star")
    sp.add_argument("--subset", type=str, default=None, help="comma-separated vertex set")
    sp.set_defaults(fn=_cmd_orbits)

    sp = sub.add_parser("moments-check", help="moment verification CSV; exit 2 if |z| > 4")
    common(sp)
    sp.add_argument("--p", type=float, default=0.3)
    sp.add_argument("--s", type=float, default=0.6)
    sp.add_argument("--replicates", type=int, default=200_000)
    sp.set_defaults(fn=_cmd_moments_check)

    sp = sub.add_parser("density", help="exact densest subgraph of a graph")
    common(sp)
    sp.add_argument("--graph", type=str, default=None, help="edge-list text file")
    sp.add_argument("--bundle", type=str, default=None)
    sp.set_defaults(fn=_cmd_density)

    sp = sub.add_parser("rho-curve", help="empirical rho over a lambda grid")
    common(sp)
    sp.add_argument("--lambdas", type=str, default="1,1.5,2,4,8")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--replicates", type=int, default=10)
    sp.add_argument("--invert-at", type=float, default=None, help="report rho^{-1}(target)")
    sp.set_defaults(fn=_cmd_rho_curve)

    sp = sub.add_parser("estimate", help="MAP matching + candidate acceptance")
    common(sp)
    sp.add_argument("--bundle", type=str, required=True)
    sp.add_argument("--rho-hat", dest="rho_hat", type=float, default=1.5)
    sp.add_argument("--c-lambda-hat", dest="c_lambda_hat", type=float, default=0.3)
    sp.add_argument("--eta", type=float, default=0.15)
    sp.add_argument("--strategy", choices=("auto", "exhaustive", "hill_climb"), default="auto")
    sp.add_argument("--budget", type=int, default=50_000)
    sp.set_defaults(fn=_cmd_estimate)

    sp = sub.add_parser("posterior", help="exact posterior dump for a small bundle")
    common(sp)
    sp.add_argument("--bundle", type=str, required=True)
    sp.set_defaults(fn=_cmd_posterior)

    sp = sub.add_parser("posterior-study", help="posterior mass at the truth over replicates")
    common(sp)
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--p", type=float, default=0.4)
    sp.add_argument("--s", type=float, default=0.8)
    sp.add_argument("--replicates", type=int, default=50)
    sp.set_defaults(fn=_cmd_posterior_study)

    sp = sub.add_parser("tv", help="total variation: Monte Carlo, exact at n <= 4")
    common(sp)
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--s", type=float, default=0.8)
    sp.add_argument("--replicates", type=int, default=2000)
    sp.set_defaults(fn=_cmd_tv)

    sp = sub.add_parser("admissibility", help="five-condition report as JSON")
    common(sp)
    sp.add_argument("--graph", type=str, default=None)
    sp.add_argument("--bundle", type=str, default=None, help="checks H_{pi*} of the bundle")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--rho-hat", dest="rho_hat", type=float, default=1.4)
    sp.set_defaults(fn=_cmd_admissibility)

    sp = sub.add_parser("threshold-sweep", help="pi*-acceptance across a lambda grid")
    common(sp)
    sp.add_argument("--lambdas", type=str, default=None)
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--replicates", type=int, default=10)
    sp.set_defaults(fn=_cmd_threshold_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
