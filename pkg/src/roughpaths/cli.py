"""Command-line driver.

Subcommands: lift, enhance, integrate, solve, solve-rpde, bracket,
convergence.  All outputs are CSV tables or JSON artifacts that embed the
full run configuration, the package version and the seed, so identical
invocations produce identical bytes.

Exit codes: 1 usage, 2 data, 3 numerical.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import DataError, GridError, NumericalBlowup, RoughPathsError, ShapeError
from .grids import SampledPath, TimeGrid, read_path_csv
from .integrate import rough_integral
from .noise import NoiseConfig, enhanced_bm, ito_enhance, sample_bm, strat_enhance, strat_shift
from .rde import make_preset_problem, residual_check, save_solution_json, solve_picard, solve_step_scheme
from .rough import (
    RoughPath,
    brackets_to_csv,
    lift_piecewise_linear,
    max_chen_defect,
    save_json,
)
from .semigroup import MatrixSemigroup, RPDEProblem, mild_residual_check, solve_mild_picard, solve_mild_step

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERICAL_EXIT = 3

_GEN_NAMESPACE = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "pi": np.pi,
    "e": np.e,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(USAGE_EXIT)


def _out_path(name, explicit):
    if explicit:
        return explicit
    base = os.environ.get("ROUGHPATHS_OUTDIR", ".")
    return os.path.join(base, name)


def _metadata(args, extra=None):
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    meta = {"config": config, "version": "roughpaths-%s" % __version__, "seed": config.get("seed")}
    if extra:
        meta.update(extra)
    return meta


def _json_dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)


def _generate_path(exprs, steps, horizon):
    grid = TimeGrid.uniform(horizon, steps)
    cols = []
    for expr in exprs.split(","):
        expr = expr.strip().replace("^", "**")
        ns = dict(_GEN_NAMESPACE)
        ns["t"] = grid.times
        try:
            col = eval(expr, {"__builtins__": {}}, ns)  # noqa: S307 - restricted namespace
        except Exception as exc:
            raise DataError("cannot evaluate generator %r: %s" % (expr, exc)) from None
        cols.append(np.broadcast_to(np.asarray(col, dtype=float), grid.times.shape))
    return SampledPath(grid, np.stack(cols, axis=1))


def _enhanced(args, path_index=0):
    cfg = NoiseConfig(
        dim=args.dim,
        n_steps=args.steps,
        horizon=args.horizon,
        oversample=args.oversample,
        seed=args.seed,
    )
    return cfg, enhanced_bm(cfg, path_index=path_index, kind=args.enhancement)


def cmd_lift(args):
    if bool(args.csv) == bool(args.generator):
        _fail_usage("lift needs exactly one of --csv or --generator")
    if args.csv:
        path = read_path_csv(args.csv)
    else:
        path = _generate_path(args.generator, args.steps, args.horizon)
    R = lift_piecewise_linear(path)
    defect = max_chen_defect(R)
    out = _out_path("lift.json", args.out)
    obj = {
        "d": R.dim,
        "times": R.times.tolist(),
        "X": R.values.tolist(),
        "blocks": R.blocks.tolist(),
        "metadata": _metadata(args, {"max_chen_defect": defect}),
    }
    _json_dump(obj, out)
    print("lift: d=%d n=%d max_chen_defect=%.3e -> %s" % (R.dim, R.n, defect, out))
    return 0


def cmd_enhance(args):
    _, R = _enhanced(args)
    defect = max_chen_defect(R)
    meta = _metadata(args, {"max_chen_defect": defect})
    if args.format == "json":
        out = _out_path("enhance.json", args.out)
        obj = {
            "d": R.dim,
            "times": R.times.tolist(),
            "X": R.values.tolist(),
            "blocks": R.blocks.tolist(),
            "metadata": meta,
        }
        _json_dump(obj, out)
    else:
        out = _out_path("enhance.csv", args.out)
        d = R.dim
        with open(out, "w") as fh:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            head = ["t"] + ["x%d" % (a + 1) for a in range(d)]
            head += ["b%d%d" % (a + 1, b + 1) for a in range(d) for b in range(d)]
            fh.write(",".join(head) + "\n")
            for k in range(R.n + 1):
                block = np.zeros((d, d)) if k == 0 else R.blocks[k - 1]
                row = [R.times[k], *R.values[k], *block.ravel()]
                fh.write(",".join("%.17g" % v for v in row) + "\n")
    print("enhance: %s d=%d n=%d q=%d -> %s" % (args.enhancement, R.dim, R.n, args.oversample, out))
    return 0


def cmd_integrate(args):
    if args.preset not in ("b-db-ito", "b-db-strat"):
        return _fail_usage("unknown integrate preset %r" % args.preset)
    kind = "ito" if args.preset.endswith("ito") else "strat"
    cfg = NoiseConfig(dim=1, n_steps=args.steps, horizon=args.horizon, oversample=args.oversample, seed=args.seed)
    fine = sample_bm(cfg)
    coarse = cfg.coarse_grid()
    R = ito_enhance(fine, coarse) if kind == "ito" else strat_enhance(fine, coarse)
    from .controlled import ControlledIntegrand

    n1 = R.n + 1
    vals = R.values.reshape(n1, 1, 1)
    deriv = np.ones((n1, 1, 1, 1))
    value = float(rough_integral(ControlledIntegrand(R.times, vals, deriv), R, 0, R.n)[0])
    b_T = float(fine.values[-1, 0])
    if kind == "ito":
        qv = float(np.sum(np.diff(fine.values[:, 0]) ** 2))
        oracle = 0.5 * (b_T**2 - qv)
    else:
        oracle = 0.5 * b_T**2
    err = abs(value - oracle)
    out = _out_path("integrate.json", args.out)
    _json_dump(
        {"value": value, "oracle": oracle, "abs_error": err, "metadata": _metadata(args)},
        out,
    )
    print("integrate %s: value=%.12g oracle=%.12g |err|=%.3e -> %s" % (args.preset, value, oracle, err, out))
    return 0


_SOLVE_PRESETS = ("gbm-ito", "gbm-strat", "linear-drift", "sine-diffusion", "ou")


def _fail_usage(message):
    sys.stderr.write("error: %s\n" % message)
    raise SystemExit(USAGE_EXIT)


def _driver_for_preset(args):
    if args.preset == "linear-drift":
        grid = TimeGrid.uniform(args.horizon, args.steps)
        zero = SampledPath(grid, np.zeros((args.steps + 1, 1)))
        return lift_piecewise_linear(zero), None
    kind = "strat" if args.preset.endswith("strat") else "ito"
    if args.preset in ("sine-diffusion", "ou"):
        kind = args.enhancement
    cfg = NoiseConfig(dim=1, n_steps=args.steps, horizon=args.horizon, oversample=args.oversample, seed=args.seed)
    fine = sample_bm(cfg)
    coarse = cfg.coarse_grid()
    R = strat_enhance(fine, coarse) if kind == "strat" else ito_enhance(fine, coarse)
    return R, fine


def cmd_solve(args):
    if args.preset not in _SOLVE_PRESETS:
        _fail_usage("unknown solve preset %r" % args.preset)
    driver, fine = _driver_for_preset(args)
    name = "gbm" if args.preset.startswith("gbm") else args.preset
    params = {}
    if name == "gbm":
        params["sigma"] = args.sigma
    problem = make_preset_problem(name, driver, xi=args.xi, **params)
    if args.method == "picard":
        sol = solve_picard(problem, window=args.window, tol=args.tol)
    else:
        sol = solve_step_scheme(problem)
    resid = residual_check(sol, problem)
    sol.diagnostics["residual"] = resid
    report = {"terminal": sol.terminal().tolist(), "residual": resid}
    if name == "gbm":
        b_T = float(fine.values[-1, 0])
        if args.preset.endswith("strat"):
            oracle = args.xi * np.exp(args.sigma * b_T)
        else:
            qv_t = args.horizon  # closed form uses the limit bracket t
            oracle = args.xi * np.exp(args.sigma * b_T - 0.5 * args.sigma**2 * qv_t)
        report["oracle_terminal"] = oracle
        report["rel_error"] = abs(float(sol.terminal()[0]) - oracle) / abs(oracle)
    out = _out_path("solve.json", args.out)
    save_solution_json(sol, out, metadata=_metadata(args, report))
    line = "solve %s [%s]: Y_T=%.10g residual=%.3e" % (
        args.preset,
        args.method,
        sol.terminal()[0],
        resid,
    )
    if "rel_error" in report:
        line += " rel_error=%.3e" % report["rel_error"]
    print(line + " -> " + out)
    if not sol.converged:
        return NUMERICAL_EXIT
    return 0


def cmd_solve_rpde(args):
    try:
        A = np.asarray(json.loads(args.A), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError("cannot parse --A as a JSON matrix: %s" % exc) from None
    G = MatrixSemigroup(A)
    m = G.dim
    cfg = NoiseConfig(dim=args.dim, n_steps=args.steps, horizon=args.horizon, oversample=args.oversample, seed=args.seed)
    driver = enhanced_bm(cfg, kind=args.enhancement)
    xi = np.full(m, args.xi)
    from .controlled import FunctionModel

    d = args.dim
    if args.preset == "orbit":
        drift = diffusion = None
    elif args.preset == "additive":
        sigma_mat = 0.5 * np.ones((m, d))
        diffusion = FunctionModel(
            f=lambda t, y: sigma_mat,
            df=lambda t, y: np.zeros((m, d, m)),
            dim_in=m,
            out_shape=(m, d),
            name="additive",
        )
        drift = None
    elif args.preset == "linear":
        sig = args.sigma
        diffusion = FunctionModel(
            f=lambda t, y: sig * np.tile(y[:, None], (1, d)),
            df=lambda t, y: sig * np.stack([np.eye(m)] * d, axis=1),
            dim_in=m,
            out_shape=(m, d),
            name="linear",
        )
        drift = None
    else:
        _fail_usage("unknown solve-rpde preset %r" % args.preset)
    problem = RPDEProblem(G, drift, diffusion, xi, driver)
    if args.method == "picard":
        sol = solve_mild_picard(problem, window=args.window, tol=args.tol)
    else:
        sol = solve_mild_step(problem)
    resid = mild_residual_check(sol, problem, stride=max(1, args.steps // 64))
    sol.diagnostics["residual"] = resid
    out = _out_path("solve_rpde.json", args.out)
    save_solution_json(sol, out, metadata=_metadata(args, {"residual": resid}))
    print(
        "solve-rpde %s [%s]: |Y_T|=%.10g residual=%.3e -> %s"
        % (args.preset, args.method, np.linalg.norm(sol.terminal()), resid, out)
    )
    if not sol.converged:
        return NUMERICAL_EXIT
    return 0


def cmd_bracket(args):
    _, R = _enhanced(args)
    out = _out_path("bracket.csv", args.out)
    brackets_to_csv(R, out)
    worst = float(np.max(np.abs(R.bracket_path())))
    print("bracket: %s max|bracket|=%.6e -> %s" % (args.enhancement, worst, out))
    return 0


def _convergence_sample(task):
    """One Monte-Carlo path of the step-scheme ladder (runs in a worker)."""
    preset, sigma, xi, seed, path_index, levels, fine_level = task
    from .rde import make_preset_problem, solve_step_scheme

    cfg = NoiseConfig(dim=1, n_steps=2**fine_level, horizon=1.0, oversample=1, seed=seed)
    fine = sample_bm(cfg, path_index)
    b_T = float(fine.values[-1, 0])
    oracle = xi * np.exp(sigma * b_T)
    errors = []
    for level in levels:
        coarse = TimeGrid.uniform(1.0, 2**level)
        R = strat_enhance(fine, coarse)
        problem = make_preset_problem("gbm", R, xi=xi, sigma=sigma, validate=False)
        sol = solve_step_scheme(problem)
        errors.append(abs(float(sol.terminal()[0]) - oracle))
    return errors


def cmd_convergence(args):
    lo, _, hi = args.levels.partition(":")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        _fail_usage("--levels must be LO:HI, got %r" % args.levels)
    levels = list(range(lo, hi + 1))
    if len(levels) < 4:
        _fail_usage("need a ladder of >= 4 dyadic step sizes, got %d" % len(levels))
    if args.preset == "gbm-strat":
        fine_level = hi + 2
        tasks = [
            ("gbm", args.sigma, args.xi, args.seed, k, levels, fine_level)
            for k in range(args.samples)
        ]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                all_errors = list(pool.map(_convergence_sample, tasks))
        else:
            all_errors = [_convergence_sample(t) for t in tasks]
        mean_errors = np.mean(np.asarray(all_errors), axis=0)
    elif args.preset == "drift-only":
        mean_errors = []
        for level in levels:
            grid = TimeGrid.uniform(1.0, 2**level)
            zero = SampledPath(grid, np.zeros((2**level + 1, 1)))
            driver = lift_piecewise_linear(zero)
            problem = make_preset_problem("linear-drift", driver, xi=1.0, validate=False)
            sol = solve_picard(problem, tol=1e-13)
            mean_errors.append(abs(float(sol.terminal()[0]) - np.e))
        mean_errors = np.asarray(mean_errors)
    else:
        _fail_usage("unknown convergence preset %r" % args.preset)
    hs = np.asarray([2.0**-level for level in levels])
    order = float(np.polyfit(np.log(hs), np.log(np.maximum(mean_errors, 1e-300)), 1)[0])
    out = _out_path("convergence.csv", args.out)
    with open(out, "w") as fh:
        fh.write("# " + json.dumps(_metadata(args), sort_keys=True) + "\n")
        fh.write("h,mean_strong_error,fitted_order\n")
        for h, err in zip(hs, mean_errors):
            fh.write("%.17g,%.17g,%.17g\n" % (h, err, order))
    print("convergence %s: fitted_order=%.3f -> %s" % (args.preset, order, out))
    return 0


def _add_noise_options(p, dim_default=1):
    p.add_argument("--dim", type=int, default=dim_default)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--oversample", type=int, default=32)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--enhancement", choices=["ito", "strat", "strat-shift"], default="ito"
    )


def build_parser():
    parser = _Parser(prog="roughpaths", description=__doc__)
    parser.add_argument("--version", action="version", version="roughpaths %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lift", help="lift a sampled path to a rough path")
    p.add_argument("--csv", help="input CSV with header t,x1,...,xm")
    p.add_argument("--generator", help="comma-separated expressions in t, e.g. 't,t^2'")
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("enhance", help="sample and enhance Brownian motion")
    _add_noise_options(p)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("integrate", help="rough integral presets with oracle report")
    p.add_argument("--preset", default="b-db-ito")
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--oversample", type=int, default=1)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("solve", help="solve a preset rough differential equation")
    p.add_argument("--preset", default="gbm-strat")
    _add_noise_options(p)
    p.add_argument("--method", choices=["step", "picard"], default="step")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("solve-rpde", help="solve a preset mild (semigroup) equation")
    p.add_argument("--A", required=True, help="generator as a JSON matrix")
    p.add_argument("--preset", choices=["orbit", "additive", "linear"], default="additive")
    _add_noise_options(p)
    p.add_argument("--method", choices=["step", "picard"], default="step")
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_rpde)

    p = sub.add_parser("bracket", help="bracket table of an enhanced path")
    _add_noise_options(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("convergence", help="strong-error ladder for a preset")
    p.add_argument("--preset", default="gbm-strat")
    p.add_argument("--levels", default="6:12", help="dyadic ladder LO:HI (h = 2^-level)")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError,) as exc:
        sys.stderr.write("data error: %s\n" % exc)
        return DATA_EXIT
    except (NumericalBlowup,) as exc:
        sys.stderr.write("numerical error: %s\n" % exc)
        return NUMERICAL_EXIT
    except (GridError, ShapeError, RoughPathsError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
