"""Command-line harness.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import ridge_asymptotics
from .concavity import scan_nonconcavity
from .exceptions import NumericalError
from .harness import (
    PRESET_NAMES,
    ExperimentConfig,
    preset,
    run_experiment,
    write_outputs,
)
from .model import ModelParams, fmt17, generate_instance, instance_from_json, instance_to_json
from .oracle import gaussian_log_partition, mc_spherical_free_energy, ridge_solve, tap_ridge_distance
from .rs import solve_fixed_point
from .solver import SolverOptions, maximize_tap
from .tap import f_tap

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; remap to the documented code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _print_json(obj, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2), out)


def _add_instance_args(sub) -> None:
    sub.add_argument("--p", type=int, default=50, help="dimension p (default 50)")
    sub.add_argument("--alpha", type=float, default=2.0, help="aspect ratio n/p (default 2)")
    sub.add_argument("--delta", type=float, default=0.5, help="noise level (default 0.5)")
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument("--stream", type=int, default=0, help="RNG stream tag (default 0)")


def _instance_from_args(args):
    instance_path = getattr(args, "instance", None)
    if instance_path:
        return instance_from_json(Path(instance_path).read_text(encoding="utf-8"))
    params = ModelParams(p=args.p, alpha=args.alpha, delta=args.delta, master_seed=args.seed)
    return generate_instance(params, stream_tag=args.stream)


def _cmd_generate(args) -> int:
    instance = _instance_from_args(args)
    _emit(instance_to_json(instance), args.out)
    return 0


def _cmd_tap_opt(args) -> int:
    instance = _instance_from_args(args)
    params = instance.params
    opts = {}
    if args.restarts is not None:
        opts["restarts"] = args.restarts
    if args.max_iters is not None:
        opts["max_iters"] = args.max_iters
    if args.grad_tol is not None:
        opts["grad_tol"] = args.grad_tol
    result = maximize_tap(instance, opts=SolverOptions(**opts))
    ridge = ridge_solve(instance)
    _print_json(
        {
            "p": params.p,
            "n": params.n,
            "alpha": params.alpha,
            "delta": params.delta,
            "f_value": result.f_value,
            "q_final": result.q_final,
            "grad_norm": result.grad_norm,
            "iterations": result.iterations,
            "restarts_used": result.restarts_used,
            "converged": result.converged,
            "f_tap_ridge": f_tap(ridge.a_delta, instance).value,
            "dist_sq_norm": tap_ridge_distance(result.a_hat, ridge.a_delta),
            "rs_free_energy": solve_fixed_point(params.alpha, params.delta).free_energy,
        },
        args.out,
    )
    return 0


def _cmd_ridge(args) -> int:
    instance = _instance_from_args(args)
    params = instance.params
    ridge = ridge_solve(instance)
    limits = ridge_asymptotics(params.alpha, params.delta)
    _print_json(
        {
            "p": params.p,
            "n": params.n,
            "alpha": params.alpha,
            "delta": params.delta,
            "norm_sq_over_p": ridge.norm_sq_over_p,
            "residual_over_p": ridge.residual_over_p,
            "f_tap_at_ridge": f_tap(ridge.a_delta, instance).value,
            "limits": {
                "t_delta": limits.t_delta,
                "q_delta": limits.q_delta,
                "residual_limit": limits.residual_limit,
                "tap_at_ridge": limits.tap_at_ridge,
                "lambda_min_limit": limits.lambda_min_limit,
            },
        },
        args.out,
    )
    return 0


def _parse_float_list(text: str) -> list:
    try:
        return [float(s) for s in text.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _cmd_rs(args) -> int:
    alphas = _parse_float_list(args.alpha)
    deltas = _parse_float_list(args.delta)
    if not alphas or not deltas:
        raise ValueError("need at least one alpha and one delta")
    if len(alphas) == 1 and len(deltas) == 1 and not args.out:
        sol = solve_fixed_point(alphas[0], deltas[0])
        _print_json(
            {
                "alpha": alphas[0],
                "delta": deltas[0],
                "e_delta": sol.e_delta,
                "sigma_sq": sol.sigma_sq,
                "i_rs_at_min": sol.i_rs_at_min,
                "free_energy": sol.free_energy,
            },
            None,
        )
        return 0
    lines = ["alpha,delta,E_delta,sigma_sq,free_energy"]
    for a in alphas:
        for d in deltas:
            sol = solve_fixed_point(a, d)
            lines.append(
                ",".join(fmt17(v) for v in (a, d, sol.e_delta, sol.sigma_sq, sol.free_energy))
            )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_mc(args) -> int:
    instance = _instance_from_args(args)
    estimate = mc_spherical_free_energy(instance, samples=args.samples)
    _print_json(
        {
            "value": estimate.value,
            "ci_low": estimate.ci_low,
            "ci_high": estimate.ci_high,
            "samples": estimate.samples,
            "method": estimate.method,
            "gauss_free_energy": gaussian_log_partition(instance).value,
        },
        args.out,
    )
    return 0


def _cmd_probe(args) -> int:
    instance = _instance_from_args(args)
    q_grid = _parse_float_list(args.q_grid) if args.q_grid else None
    reports = scan_nonconcavity(instance, None, q_grid)
    lines = ["q,lambda_min,finite_p,asymptotic,nonconcave"]
    for r in reports:
        lines.append(
            ",".join(
                (
                    fmt17(r.q),
                    fmt17(r.lambda_min),
                    fmt17(r.finite_p_value),
                    fmt17(r.asymptotic_value),
                    "true" if r.nonconcave else "false",
                )
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    hits = sum(r.nonconcave for r in reports)
    print(f"nonconcave directions at {hits}/{len(reports)} grid points", file=sys.stderr)
    return 0


def _cmd_experiment(args) -> int:
    if bool(args.config) == bool(args.preset):
        raise ValueError("provide exactly one of --config or --preset")
    if args.config:
        config = ExperimentConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        config = preset(args.preset)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    if args.out is not None:
        config.out = args.out
    if args.plot is not None:
        config.plot = args.plot
    if args.table_out is not None:
        config.table_out = args.table_out
    if not config.out:
        config.out = f"{config.experiment}.csv"
    config.validate()

    records = run_experiment(config)
    files = write_outputs(records, config)
    failed = sum(1 for r in records if r.status != "ok")
    if failed:
        print(f"warning: {failed}/{len(records)} rows recorded errors", file=sys.stderr)
    written = [p for p in (files.csv_path, files.svg_path, files.table_path) if p]
    print(f"wrote {len(records)} rows: {', '.join(written)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tapreg", description="TAP free-energy toolkit for spherical linear regression")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_gen = sub.add_parser("generate", help="generate an instance and write it as JSON")
    _add_instance_args(p_gen)
    p_gen.add_argument("--out", help="output path (default: stdout)")
    p_gen.set_defaults(func=_cmd_generate)

    p_opt = sub.add_parser("tap-opt", help="maximize the TAP free energy on one instance")
    _add_instance_args(p_opt)
    p_opt.add_argument("--instance", help="load an instance JSON instead of generating")
    p_opt.add_argument("--restarts", type=int)
    p_opt.add_argument("--max-iters", type=int, dest="max_iters")
    p_opt.add_argument("--grad-tol", type=float, dest="grad_tol")
    p_opt.add_argument("--out", help="write the JSON summary here (default: stdout)")
    p_opt.set_defaults(func=_cmd_tap_opt)

    p_ridge = sub.add_parser("ridge", help="ridge solution statistics vs their limits")
    _add_instance_args(p_ridge)
    p_ridge.add_argument("--instance", help="load an instance JSON instead of generating")
    p_ridge.add_argument("--out")
    p_ridge.set_defaults(func=_cmd_ridge)

    p_rs = sub.add_parser("rs", help="RS fixed point and free energy (tables for grids)")
    p_rs.add_argument("--alpha", default="2.0", help="alpha or comma-separated list")
    p_rs.add_argument("--delta", default="0.5", help="delta or comma-separated list")
    p_rs.add_argument("--out", help="write CSV here (default: stdout)")
    p_rs.set_defaults(func=_cmd_rs)

    p_mc = sub.add_parser("mc", help="Monte Carlo spherical free energy with bootstrap CI")
    _add_instance_args(p_mc)
    p_mc.add_argument("--instance", help="load an instance JSON instead of generating")
    p_mc.add_argument("--samples", type=int, default=200_000)
    p_mc.add_argument("--out")
    p_mc.set_defaults(func=_cmd_mc)

    p_probe = sub.add_parser("probe", help="curvature scan along the minimal eigenvector")
    _add_instance_args(p_probe)
    p_probe.add_argument("--instance", help="load an instance JSON instead of generating")
    p_probe.add_argument("--q-grid", dest="q_grid", help="comma-separated overlaps (default 0.1..0.9)")
    p_probe.add_argument("--out")
    p_probe.set_defaults(func=_cmd_probe)

    p_exp = sub.add_parser("experiment", help="run a sweep from a JSON config or preset")
    p_exp.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p_exp.add_argument("--preset", choices=PRESET_NAMES)
    p_exp.add_argument("--seed", type=int, help="override master_seed")
    p_exp.add_argument("--threads", type=int)
    p_exp.add_argument("--out", help="CSV output path")
    p_exp.add_argument("--plot", help="SVG output path")
    p_exp.add_argument("--table-out", dest="table_out", help="dedicated table CSV path")
    p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
