"""
Command-line tools for the modulo-1 pipeline.

    mod1 simulate   --function f1 --n 500 --noise gaussian --sigma 0.1 --seed 42 --out s.csv
    mod1 denoise    --in s.csv --out r.csv [--method trs --lambda 0.1 --k 2]
    mod1 unwrap     --in r.csv --out f.csv [--method ols|qt --d 1]
    mod1 evaluate   --samples s.csv --f-hat f.csv [--r-hat r.csv] --out m.csv
    mod1 experiment --function f1 --n 500 --noise gaussian --levels 0.05,0.1 --out e.csv

Exit codes: 0 success, 1 runtime or solver failure, 2 usage or parse failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from analysis.metrics import mod_out_shift, rmse, wrap_rmse
from app import config
from app.csvio import (
    SampleTable,
    read_column,
    read_residues,
    read_samples,
    write_column,
    write_records,
    write_residues,
    write_samples,
)
from app.experiment import Sweep, run_sweep, write_experiment
from simulation.functions import FunctionKind, FunctionSpec, grid_file_spec, sample_function
from simulation.noise import apply_noise, noise_model
from solver.angular import wrap_mod1
from solver.denoise import DenoiseMethod, Denoiser
from solver.errors import InvalidSpecError, LengthMismatchError, Mod1Error, ParseError, UnsupportedDimensionError
from solver.grid_graph import GridSpec, build_graph, build_laplacian
from solver.unwrap import unwrap

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LEVEL_FLAGS = {"bounded": "gamma", "bernoulli": "p", "gaussian": "sigma"}


class UsageError(Exception):
    pass


def _list_of(cast: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(text: str) -> List[Any]:
        try:
            items = [cast(tok) for tok in text.split(",") if tok.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        return items

    return parse


def _setup_logging(verbose: int, settings: Dict[str, Any]):
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, str(settings.get("log_level", "WARNING")).upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


# ---------------------------------------------------------------------------
# Shared argument groups
# ---------------------------------------------------------------------------


def _add_function_args(p: argparse.ArgumentParser):
    p.add_argument("--function", default="f1", choices=[k.value for k in FunctionKind])
    p.add_argument("--n", type=int, default=500, help="number of samples (d=1, or a perfect square for d=2)")
    p.add_argument("--m", type=int, default=None, help="points per axis for 2-D functions")
    p.add_argument("--grid-file", default=None, help="elevation grid for --function grid")
    p.add_argument("--elevation-scale", type=float, default=1.0)
    p.add_argument("--modes", type=int, default=16, help="bandlimited: number of Fourier modes")
    p.add_argument("--scale", type=float, default=3.0, help="bandlimited: output scale")
    p.add_argument("--shift", type=float, default=3.0, help="bandlimited: output shift")
    p.add_argument("--function-seed", type=int, default=0, help="bandlimited: weight seed")
    p.add_argument("--holder-m", type=float, default=None, help="override the Hölder constant M")
    p.add_argument("--holder-alpha", type=float, default=1.0)


def _add_denoise_args(p: argparse.ArgumentParser, settings: Dict[str, Any]):
    d = settings["denoise"]
    p.add_argument("--k", type=int, default=d["k"])
    p.add_argument("--lambda", dest="lam", type=float, default=d["lambda"])
    p.add_argument("--iterations", type=int, default=d["iterations"])
    p.add_argument("--tol", type=float, default=d["tol"])
    p.add_argument("--bm-rank", type=int, default=d["bm_rank"])


def _function_spec(args) -> FunctionSpec:
    return FunctionSpec(
        kind=args.function,
        modes=args.modes,
        scale=args.scale,
        shift=args.shift,
        seed=args.function_seed,
        path=args.grid_file,
        elevation_scale=args.elevation_scale,
        holder_m=args.holder_m,
        holder_alpha=args.holder_alpha,
    )


def _grid_spec(args, fn: FunctionSpec) -> GridSpec:
    """Sampling grid for ``fn``; radius 1 here, the denoiser substitutes its own ``k``."""
    if fn.kind is FunctionKind.GRID_FILE:
        return grid_file_spec(fn.path, 1)
    if fn.dimension == 2:
        if args.m is not None:
            return GridSpec(d=2, m=args.m, k=1)
        return GridSpec.from_count(args.n, 2, 1)
    return GridSpec.chain(args.n, 1)


def _noise_level(args) -> float:
    flag = LEVEL_FLAGS[args.noise]
    value = getattr(args, flag)
    if value is None:
        raise UsageError(f"--{flag} is required for --noise {args.noise}")
    return value


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args, settings: Dict[str, Any]) -> int:
    fn = _function_spec(args)
    grid = _grid_spec(args, fn)
    clean = sample_function(fn, grid)
    model = noise_model(args.noise, _noise_level(args))
    y = apply_noise(clean, model, args.seed, args.trial)
    write_samples(args.out, SampleTable(coords=grid.coordinates(), y=y.values, clean_f=clean), blind=args.blind)
    logger.info("simulated %d samples of %s with %s noise %g", grid.n, fn.kind, model.kind, model.level)
    return EXIT_OK


def cmd_denoise(args, settings: Dict[str, Any]) -> int:
    table = read_samples(args.input)
    cfg = config.denoise_config(
        settings,
        seed=args.seed,
        lam=args.lam,
        k=args.k,
        method=args.method,
        iterations=args.iterations,
        tol=args.tol,
        bm_rank=args.bm_rank,
    )
    grid = GridSpec.from_count(table.n, table.d, cfg.k)
    result = Denoiser(grid, cfg).run(table.residues)
    if result.trs is not None:
        logger.info("TRS case %s, mu*=%.6g", result.trs.case_tag, result.trs.mu_star)
    write_residues(args.out, result.residues.values, table.coords)
    return EXIT_OK


def cmd_unwrap(args, settings: Dict[str, Any]) -> int:
    r, file_d = read_residues(args.input)
    if args.d is not None and file_d is not None and args.d != file_d:
        raise UsageError(f"--d {args.d} disagrees with the {file_d}-D coordinates in {args.input}")
    d = args.d if args.d is not None else file_d
    if d is None:
        raise UnsupportedDimensionError(f"{args.input} carries no coordinates; pass --d to give the grid dimension")
    graph = build_graph(GridSpec.from_count(r.n, d, args.k))
    laplacian = build_laplacian(graph) if args.method == "ols" else None
    f_hat = unwrap(r, graph, args.method, args.zeta, laplacian=laplacian, rtol=settings["unwrap"]["cg_rtol"])
    write_column(args.out, "f_hat", f_hat)
    return EXIT_OK


def evaluate_metrics(
    clean: np.ndarray, f_hat: np.ndarray, r_hat: Optional[np.ndarray] = None, bins: int = 100
) -> Dict[str, Any]:
    if clean.shape != f_hat.shape:
        raise LengthMismatchError("f_hat", clean.shape[0], f_hat.shape[0])
    residues = r_hat if r_hat is not None else wrap_mod1(f_hat)
    alignment = mod_out_shift(clean, f_hat, bins)
    return dict(
        n=clean.shape[0],
        wrap_rmse_mod1=wrap_rmse(residues, wrap_mod1(clean)),
        rmse_f=rmse(clean, f_hat),
        rmse_f_after_shift=rmse(clean, alignment.aligned),
        shift=alignment.shift,
        shift_bin_width=alignment.bin_width,
    )


def cmd_evaluate(args, settings: Dict[str, Any]) -> int:
    table = read_samples(args.samples)
    if table.clean_f is None:
        raise UsageError(f"{args.samples} has no clean_f column (simulated with --blind?)")
    f_hat = read_column(args.f_hat, "f_hat")
    r_hat = read_column(args.r_hat, "r_hat") if args.r_hat else None
    if r_hat is not None and r_hat.shape != table.y.shape:
        raise LengthMismatchError("r_hat", table.n, r_hat.shape[0])
    metrics = evaluate_metrics(table.clean_f, f_hat, r_hat, settings["metrics"]["shift_bins"])
    write_records(args.out, list(metrics), [metrics])
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in metrics.items()))
    return EXIT_OK


def cmd_experiment(args, settings: Dict[str, Any]) -> int:
    fn = _function_spec(args)
    exp = settings["experiment"]
    sweep = Sweep(
        function=fn,
        grid=_grid_spec(args, fn),
        noise=args.noise,
        levels=tuple(args.levels),
        lams=tuple(args.lambdas),
        ks=tuple(args.ks),
        methods=tuple(args.methods),
        seeds=args.seeds if args.seeds is not None else exp["seeds"],
        master_seed=args.seed,
        iterations=args.iterations,
        unwrap=args.unwrap,
        zeta=args.zeta,
        cg_rtol=settings["unwrap"]["cg_rtol"],
        tol=settings["denoise"]["tol"],
        bm_rank=settings["denoise"]["bm_rank"],
        solver=config.solver_options(settings, args.seed),
        shift_bins=settings["metrics"]["shift_bins"],
        bound_epsilon=args.bound_epsilon if args.bound_epsilon is not None else exp["bound_epsilon"],
        timing=args.timing,
    )
    requested = args.parallel if args.parallel is not None else exp["parallel"]
    records = run_sweep(sweep, config.effective_workers(requested))
    write_experiment(sweep, records, args.out, args.summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser(settings: Dict[str, Any]) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mod1", description="Denoise and unwrap modulo-1 samples.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    ap.add_argument("--settings", default=None, help="alternative settings.json")
    sub = ap.add_subparsers(dest="command", required=True)
    methods = [m.value for m in DenoiseMethod]
    unwrap_cfg = settings["unwrap"]

    p = sub.add_parser("simulate", help="sample a test function and add noise")
    _add_function_args(p)
    p.add_argument("--noise", default="gaussian", choices=list(LEVEL_FLAGS))
    p.add_argument("--gamma", type=float, default=None, help="bounded noise half-width")
    p.add_argument("--p", type=float, default=None, help="Bernoulli-uniform outlier probability")
    p.add_argument("--sigma", type=float, default=None, help="Gaussian noise standard deviation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0, help="trial index mixed into the seed")
    p.add_argument("--blind", action="store_true", help="omit the clean_f column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("denoise", help="denoise the residues of a samples file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default=settings["denoise"]["method"], choices=methods + ["bm"])
    p.add_argument("--seed", type=int, default=0, help="Burer-Monteiro start seed")
    _add_denoise_args(p, settings)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("unwrap", help="recover samples from (denoised) residues")
    p.add_argument("--in", dest="input", required=True, help="samples file or denoise output")
    p.add_argument("--out", required=True)
    p.add_argument("--method", default=unwrap_cfg["method"], choices=["ols", "qt"])
    p.add_argument("--zeta", type=float, default=unwrap_cfg["zeta"])
    p.add_argument("--k", type=int, default=settings["denoise"]["k"], help="OLS graph radius")
    p.add_argument("--d", type=int, default=None, help="grid dimension when the input has no coordinates")
    p.set_defaults(func=cmd_unwrap)

    p = sub.add_parser("evaluate", help="compare an estimate with the clean samples")
    p.add_argument("--samples", required=True, help="samples file with clean_f")
    p.add_argument("--f-hat", required=True)
    p.add_argument("--r-hat", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="parameter sweep over seeds")
    _add_function_args(p)
    p.add_argument("--noise", default="gaussian", choices=list(LEVEL_FLAGS))
    p.add_argument("--levels", type=_list_of(float), required=True, help="noise levels (gamma, p or sigma)")
    p.add_argument("--lambdas", type=_list_of(float), default=[settings["denoise"]["lambda"]])
    p.add_argument("--ks", type=_list_of(int), default=[settings["denoise"]["k"]])
    p.add_argument("--methods", type=_list_of(DenoiseMethod.parse), default=[DenoiseMethod.parse(settings["denoise"]["method"])])
    p.add_argument("--iterations", type=int, default=settings["denoise"]["iterations"])
    p.add_argument("--seeds", type=int, default=None, help="trials per configuration")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--unwrap", default=unwrap_cfg["method"], choices=["ols", "qt"])
    p.add_argument("--zeta", type=float, default=unwrap_cfg["zeta"])
    p.add_argument("--bound-epsilon", type=float, default=None)
    p.add_argument("--parallel", type=int, default=None, help="worker threads (capped by MOD1_THREADS)")
    p.add_argument("--timing", action="store_true", help="add a wall_time_ms column")
    p.add_argument("--summary", default=None, help="per-config median/IQR CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return ap


def _settings_from_argv(argv: Sequence[str]) -> Dict[str, Any]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--settings", default=None)
    known, _ = pre.parse_known_args(argv)
    return config.load_settings(Path(known.settings) if known.settings else None)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    settings = _settings_from_argv(argv)
    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    _setup_logging(args.verbose, settings)

    try:
        return args.func(args, settings)
    except (UsageError, InvalidSpecError, ParseError) as e:
        print(f"mod1 {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (Mod1Error, RuntimeError, OSError) as e:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"mod1 {args.command}: {e}", file=sys.stderr)
        return EXIT_FAILURE
