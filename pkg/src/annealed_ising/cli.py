"""Command-line interface: ``python -m annealed_ising <subcommand> ...``."""
from __future__ import annotations

import argparse
import io
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, cm2, cm12, exact, grg
from .graphs import (
    build_weights,
    make_rng,
    read_values,
    sample_cm,
    sample_grg,
)
from .samplers import ChainConfig, glauber_annealed_grg, joint_mcmc_cm
from .stats import InsufficientSamplesError, clt_diagnostics, estimate_moments, finite_size_skewness
from .verify import run_suite

THREADS_ENV = "ANNEALED_ISING_THREADS"

THERMO_COLUMNS = {
    "grg": ["beta", "B", "z_star", "pressure", "magnetization", "susceptibility", "beta_c_an", "beta_c_qu", "in_uniqueness"],
    "cm2": ["beta", "B", "pressure", "pressure_finite_N", "magnetization", "susceptibility"],
    "cm12": ["beta", "B", "p", "s_star", "t_star", "H_star", "b_star", "pressure", "pressure_finite_N", "magnetization", "sigma2"],
}


class UsageError(Exception):
    pass


def parse_grid(text: str) -> dict[str, np.ndarray]:
    """``beta=a:b:n,B=a:b:n`` into inclusive linear grids."""
    out = {}
    for part in text.split(","):
        try:
            key, bounds = part.split("=")
            a, b, n = bounds.split(":")
            out[key.strip()] = np.linspace(float(a), float(b), int(n))
        except ValueError as exc:
            raise UsageError(f"bad grid component {part!r}") from exc
    unknown = set(out) - {"beta", "B"}
    if unknown:
        raise UsageError(f"unknown grid variables {sorted(unknown)}")
    return out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, float) and not math.isfinite(v):
        return "null"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return _fmt(v)


def render(rows: list[dict], columns: list[str], fmt: str, seed) -> str:
    if fmt == "json":
        objs = ["{" + ", ".join(f'"{c}": {_json_value(r[c])}' for c in columns) + "}" for r in rows]
        return "[\n" + ",\n".join("  " + o for o in objs) + "\n]\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(r[c]) for c in columns) + "\n")
    buf.write(f"# seed={seed} version={__version__}\n")
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def make_weights(args):
    if args.weights_file:
        return build_weights("file", path=args.weights_file)
    if args.tau is not None:
        return build_weights("powerlaw", args.N, tau=args.tau, w_min=args.w_min)
    return build_weights("constant", args.N, w=args.w)


def make_degrees(args) -> np.ndarray:
    if args.degrees_file:
        return read_values(args.degrees_file, int)
    if args.model == "cm2":
        return np.full(args.N, 2, np.int64)
    return cm12.Cm12Params(args.p, args.N).degrees


# thermodynamic rows (module level so that worker processes can pickle them)


def thermo_row(model: str, beta: float, B: float, p: float, N: int, weights=None) -> dict:
    if model == "grg":
        res = grg.grg_thermo(grg.AnnealedGrgModel(weights, beta, B))
        return {
            "beta": beta, "B": B, "z_star": res.z_star, "pressure": res.pressure,
            "magnetization": res.magnetization, "susceptibility": res.susceptibility,
            "beta_c_an": res.beta_c_an, "beta_c_qu": res.beta_c_qu, "in_uniqueness": res.in_uniqueness,
        }
    if model == "cm2":
        res = cm2.cm2_thermo(beta, B, N)
        return {
            "beta": beta, "B": B, "pressure": res.pressure, "pressure_finite_N": res.pressure_finite_N,
            "magnetization": res.magnetization, "susceptibility": res.susceptibility,
        }
    res = cm12.cm12_thermo(beta, B, p, N)
    return {c: getattr(res, c) for c in THERMO_COLUMNS["cm12"]}


def _thermo_star(args):
    return thermo_row(*args)


def grid_points(args) -> list[tuple[float, float]]:
    if args.grid:
        g = parse_grid(args.grid)
        betas = g.get("beta", np.array([args.beta]))
        Bs = g.get("B", np.array([args.B]))
        return [(float(b), float(h)) for b, h in itertools.product(betas, Bs)]
    return [(args.beta, args.B)]


def n_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def cmd_thermo(args) -> int:
    model = args.model
    weights = make_weights(args) if model == "grg" else None
    tasks = [(model, b, h, args.p, args.N, weights) for b, h in grid_points(args)]
    threads = n_threads(args)
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_thermo_star, tasks))
    else:
        rows = [thermo_row(*t) for t in tasks]
    emit(render(rows, THERMO_COLUMNS[model], args.format, args.seed), args.out)
    return 0


def cmd_weights(args) -> int:
    w = make_weights(args)
    emit("".join(f"{_fmt(float(x))}\n" for x in w.weights), args.out)
    return 0


def cmd_generate(args) -> int:
    rng = make_rng(args.seed)
    if args.model == "grg":
        g = sample_grg(make_weights(args), rng)
        rows = [{"i": int(i), "j": int(j)} for i, j in g.edges]
        emit(render(rows, ["i", "j"], args.format, args.seed), args.out)
    else:
        dec = sample_cm(make_degrees(args), rng)
        rows = [{"kind": k, "length": n} for k, n in dec.rows()]
        emit(render(rows, ["kind", "length"], args.format, args.seed), args.out)
    return 0


def cmd_exact(args) -> int:
    if args.model == "grg":
        logz = exact.exact_annealed_Z_grg(make_weights(args), args.beta, args.B).log_abs
        N = args.N
    else:
        d = make_degrees(args)
        logz = exact.exact_annealed_Z_cm(d, args.beta, args.B).log_abs
        N = d.size
    row = {"model": args.model, "N": N, "beta": args.beta, "B": args.B, "log_Z": logz, "pressure": logz / N}
    emit(render([row], list(row), args.format, args.seed), args.out)
    return 0


def _chain_config(args) -> ChainConfig:
    return ChainConfig(n_samples=args.steps, seed=args.seed, burn_in=args.burn_in, thin=args.thin)


def run_sampler(args):
    cfg = _chain_config(args)
    if args.model == "grg":
        return glauber_annealed_grg(make_weights(args), args.beta, args.B, cfg)
    return joint_mcmc_cm(make_degrees(args), args.beta, args.B, cfg)


def cmd_sample(args) -> int:
    batch = run_sampler(args)
    rows = [{"step": i, "S_N": int(s)} for i, s in enumerate(batch.S)]
    emit(render(rows, ["step", "S_N"], args.format, args.seed), args.out)
    if args.out:
        with open(args.out + ".json", "w") as fh:
            fh.write(batch.sidecar_json() + "\n")
    return 0


def predicted_variance(args) -> tuple[float, float]:
    """Limiting variance of S/sqrt(N) and its B-derivative."""
    h = 1e-3
    if args.model == "grg":
        w = make_weights(args)
        f = lambda B: grg.annealed_susceptibility(grg.AnnealedGrgModel(w, args.beta, B))  # noqa: E731
    elif args.model == "cm2":
        f = lambda B: cm2.susceptibility_cm2(args.beta, B)  # noqa: E731
    else:
        f = lambda B: cm12.sigma2_variance(args.beta, B, args.p)  # noqa: E731
    h = 1e-2 if args.model == "cm12" else h
    return f(args.B), (f(args.B + h) - f(args.B - h)) / (2 * h)


def cmd_clt(args) -> int:
    batch = run_sampler(args)
    chi, dchi = predicted_variance(args)
    est = estimate_moments(batch)
    rep = clt_diagnostics(batch, chi, predicted_skewness=finite_size_skewness(dchi, chi, batch.N), seed=args.seed)
    row = {
        "model": args.model, "beta": args.beta, "B": args.B, "N": batch.N,
        "variance": est.variance, "variance_se": est.variance_se, "predicted": chi, "ess": est.ess,
        "skewness": rep.skewness, "excess_kurtosis": rep.excess_kurtosis, "ks_distance": rep.ks_distance,
        "ks_pvalue": rep.ks_pvalue, "passed": rep.passed,
    }
    emit(render([row], list(row), args.format, args.seed), args.out)
    return 0


def cmd_verify(args) -> int:
    results = run_suite(args.suite)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=["grg", "cm2", "cm12"], default="grg")
    common.add_argument("--beta", type=float, default=0.5)
    common.add_argument("--B", type=float, default=0.0)
    common.add_argument("--p", type=float, default=0.5, help="fraction of degree-2 vertices (cm12)")
    common.add_argument("--tau", type=float, default=None, help="power-law exponent; constant weights if omitted")
    common.add_argument("--w", type=float, default=1.0, help="constant weight")
    common.add_argument("--w-min", type=float, default=1.0)
    common.add_argument("--N", type=int, default=1000)
    common.add_argument("--weights-file")
    common.add_argument("--degrees-file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--steps", type=int, default=10000, help="number of recorded samples")
    common.add_argument("--burn-in", type=int, default=100, help="burn-in sweeps")
    common.add_argument("--thin", type=int, default=1, help="sweeps between samples")
    common.add_argument("--grid", help="beta=a:b:n,B=a:b:n (inclusive)")
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--threads", type=int, default=None, help=f"worker processes (default from ${THREADS_ENV})")

    parser = argparse.ArgumentParser(prog="annealed-ising", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("weights", parents=[common], help="write a weight sequence").set_defaults(func=cmd_weights)
    sub.add_parser("generate", parents=[common], help="sample a random graph").set_defaults(func=cmd_generate)
    sub.add_parser("exact", parents=[common], help="exact annealed partition function").set_defaults(func=cmd_exact)
    th = sub.add_parser("thermo", parents=[common], help="thermodynamic quantities")
    th.add_argument("thermo_model", choices=["grg", "cm2", "cm12"], nargs="?")
    th.set_defaults(func=cmd_thermo)
    sub.add_parser("sample", parents=[common], help="MCMC samples of the total spin").set_defaults(func=cmd_sample)
    sub.add_parser("clt", parents=[common], help="sampler plus CLT diagnostics").set_defaults(func=cmd_clt)
    sub.add_parser("sweep", parents=[common], help="thermo over a (beta, B) grid").set_defaults(func=cmd_thermo)
    ver = sub.add_parser("verify", help="oracle cross-checks")
    ver.add_argument("--suite", choices=["small", "full"], default="small")
    ver.set_defaults(func=cmd_verify)
    return parser


def _validate(args) -> None:
    if getattr(args, "thermo_model", None):
        args.model = args.thermo_model
    if not hasattr(args, "beta"):
        return
    if args.beta < 0:
        raise UsageError("--beta must be >= 0")
    if args.N < 1:
        raise UsageError("--N must be >= 1")
    if not 0 < args.p < 1:
        raise UsageError("--p must lie in (0, 1)")
    if args.steps < 1 or args.burn_in < 0 or args.thin < 1:
        raise UsageError("--steps >= 1, --burn-in >= 0 and --thin >= 1 required")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        _validate(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ArithmeticError, InsufficientSamplesError, RuntimeError, np.linalg.LinAlgError) as exc:
        params = {k: v for k, v in vars(args).items() if k in ("model", "beta", "B", "p", "N", "seed")}
        print(f"numeric failure in {args.command} with {params}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, UsageError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
