"""
Parameter sweeps: the full denoise -> unwrap -> evaluate pipeline repeated over
a Cartesian grid of (lambda, k, noise level, method) and a range of seeds.

Each trial is deterministic given (master seed, seed index); the same seed
index draws the same noise for every configuration, so methods and parameters
are compared on identical inputs. Trials are independent and may run on a
thread pool; rows are put back in trial order before writing.
"""

from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from analysis.bounds import BoundInputs, BoundKind, kinds_for_noise, try_bound, zhz
from analysis.metrics import SHIFT_BINS, clean_embedding, correlation, mod_out_shift, realized_delta, rmse, summarize, wrap_rmse
from app.csvio import write_records
from simulation.functions import FunctionSpec, sample_function
from simulation.noise import RNG_ALGORITHM, apply_noise, noise_model
from solver.angular import Mod1Samples, wrap_mod1
from solver.denoise import DenoiseConfig, DenoiseMethod, Denoiser
from solver.errors import InvalidSpecError, UnsupportedDimensionError
from solver.grid_graph import GridSpec
from solver.manifold import SolverOptions
from solver.trs import DEFAULT_TOL, is_perpendicular
from solver.unwrap import DEFAULT_CG_RTOL, DEFAULT_ZETA, unwrap
from util import timeIt

logger = logging.getLogger(__name__)

CONFIG_COLUMNS = ["function", "d", "n", "m", "k", "noise", "level", "lambda", "method", "iterations", "unwrap"]
METRIC_COLUMNS = ["wrap_rmse_mod1", "rmse_f", "rmse_f_after_shift", "shift", "correlation", "delta"]
SUMMARY_METRICS = ["wrap_rmse_mod1", "rmse_f_after_shift"]


@dataclass(frozen=True)
class Sweep:
    function: FunctionSpec
    grid: GridSpec
    noise: str
    levels: Tuple[float, ...]
    lams: Tuple[float, ...]
    ks: Tuple[int, ...]
    methods: Tuple[DenoiseMethod, ...]
    seeds: int = 20
    master_seed: int = 0
    iterations: int = 1
    unwrap: str = "ols"
    zeta: float = DEFAULT_ZETA
    cg_rtol: float = DEFAULT_CG_RTOL
    tol: float = DEFAULT_TOL
    bm_rank: int = 3
    solver: SolverOptions = field(default_factory=SolverOptions)
    shift_bins: int = SHIFT_BINS
    bound_epsilon: float = 0.05
    timing: bool = False

    def __post_init__(self):
        for name in ("levels", "lams", "ks", "methods"):
            if not getattr(self, name):
                raise InvalidSpecError(f"sweep list {name} is empty")
        object.__setattr__(self, "methods", tuple(DenoiseMethod.parse(m) for m in self.methods))
        if self.seeds < 1:
            raise InvalidSpecError(f"seeds must be >= 1, got {self.seeds}")
        if self.unwrap not in ("ols", "qt"):
            raise InvalidSpecError(f"unknown unwrap method {self.unwrap!r} (expected 'ols' or 'qt')")
        if self.unwrap == "qt" and self.grid.d > 1:
            raise UnsupportedDimensionError("quotient tracker requires d=1")
        fn_dim = self.function.dimension
        if fn_dim is not None and fn_dim != self.grid.d:
            raise InvalidSpecError(f"function {self.function.kind} needs d={fn_dim}, grid has d={self.grid.d}")
        # validates the noise name and every level up front
        for level in self.levels:
            noise_model(self.noise, level)

    @property
    def bound_kinds(self) -> List[BoundKind]:
        return kinds_for_noise(self.noise, self.grid.d)

    @property
    def fieldnames(self) -> List[str]:
        names = ["trial", *CONFIG_COLUMNS, "seed", *METRIC_COLUMNS]
        for kind in self.bound_kinds:
            names += [f"bound_{kind}", f"holds_{kind}"]
        if self.timing:
            names.append("wall_time_ms")
        return names

    def trials(self) -> List[Trial]:
        """Cartesian product in (lambda, k, level, method, seed) order."""
        product = itertools.product(self.lams, self.ks, self.levels, self.methods, range(self.seeds))
        return [
            Trial(index=i, lam=lam, k=k, level=level, method=method, seed=seed)
            for i, (lam, k, level, method, seed) in enumerate(product)
        ]

    def meta(self) -> Dict[str, Any]:
        return dict(
            rng_algorithm=RNG_ALGORITHM,
            rng_seeding="SeedSequence([master_seed, seed_index])",
            master_seed=self.master_seed,
            seeds=self.seeds,
            function=str(self.function.kind),
            grid=dict(d=self.grid.d, m=self.grid.m, n=self.grid.n),
            noise=self.noise,
            levels=list(self.levels),
            lambdas=list(self.lams),
            ks=list(self.ks),
            methods=[str(m) for m in self.methods],
            iterations=self.iterations,
            unwrap=self.unwrap,
            zeta=self.zeta,
            cg_rtol=self.cg_rtol,
            tol=self.tol,
            bm_rank=self.bm_rank,
            shift_bins=self.shift_bins,
            bound_epsilon=self.bound_epsilon,
            trials=len(self.lams) * len(self.ks) * len(self.levels) * len(self.methods) * self.seeds,
        )


@dataclass(frozen=True)
class Trial:
    index: int
    lam: float
    k: int
    level: float
    method: DenoiseMethod
    seed: int


@dataclass(frozen=True)
class ExperimentRecord:
    trial: Trial
    config: Dict[str, Any]
    metrics: Dict[str, float]
    bounds: Dict[str, Any] = field(default_factory=dict)
    wall_time_ms: Optional[float] = None

    def as_row(self, timing: bool = False) -> Dict[str, Any]:
        row: Dict[str, Any] = {"trial": self.trial.index, **self.config, "seed": self.trial.seed, **self.metrics, **self.bounds}
        if timing:
            row["wall_time_ms"] = self.wall_time_ms
        return row


def _bound_inputs(sweep: Sweep, trial: Trial, denoiser: Denoiser, noisy: Mod1Samples, delta: float) -> Optional[BoundInputs]:
    M, alpha = sweep.function.holder_constants()
    if M is None:
        return None
    problem = denoiser.trs_problem(noisy)
    return BoundInputs(
        lam=trial.lam,
        k=trial.k,
        M=M,
        alpha=alpha,
        n=sweep.grid.n,
        d=sweep.grid.d,
        delta=delta,
        p=trial.level if sweep.noise == "bernoulli" else None,
        sigma=trial.level if sweep.noise == "gaussian" else None,
        epsilon=sweep.bound_epsilon,
        zHz=zhz(denoiser.laplacian, trial.lam, problem.zbar),
        perpendicular=is_perpendicular(problem),
    )


def run_trial(sweep: Sweep, trial: Trial, clean: np.ndarray) -> ExperimentRecord:
    cfg = DenoiseConfig(
        lam=trial.lam,
        k=trial.k,
        method=trial.method,
        iterations=sweep.iterations,
        tol=sweep.tol,
        solver=sweep.solver,
        bm_rank=sweep.bm_rank,
    )
    noisy = apply_noise(clean, noise_model(sweep.noise, trial.level), sweep.master_seed, trial.seed)

    @timeIt(return_time=True)
    def pipeline():
        denoiser = Denoiser(sweep.grid, cfg)
        result = denoiser.run(noisy)
        f_hat = unwrap(
            result.residues, denoiser.graph, sweep.unwrap, sweep.zeta, laplacian=denoiser.laplacian, rtol=sweep.cg_rtol
        )
        return denoiser, result, f_hat

    (denoiser, result, f_hat), seconds = pipeline()

    h = clean_embedding(clean)
    aligned = mod_out_shift(clean, f_hat, sweep.shift_bins)
    corr = correlation(h, result.gbar)
    metrics = dict(
        wrap_rmse_mod1=wrap_rmse(result.residues, wrap_mod1(clean)),
        rmse_f=rmse(clean, f_hat),
        rmse_f_after_shift=rmse(clean, aligned.aligned),
        shift=aligned.shift,
        correlation=corr,
        delta=realized_delta(h, noisy),
    )

    bounds: Dict[str, Any] = {}
    # bounds describe a single TRS pass
    if trial.method is DenoiseMethod.TRS and sweep.iterations == 1:
        inputs = _bound_inputs(sweep, trial, denoiser, noisy, metrics["delta"])
        kinds = sweep.bound_kinds if inputs is not None else []
        for kind in kinds:
            report = try_bound(kind, inputs, corr)
            if report is not None:
                bounds[f"bound_{kind}"] = report.bound
                bounds[f"holds_{kind}"] = report.holds

    config = dict(
        function=str(sweep.function.kind),
        d=sweep.grid.d,
        n=sweep.grid.n,
        m=sweep.grid.m,
        k=trial.k,
        noise=sweep.noise,
        level=float(trial.level),
        **{"lambda": float(trial.lam)},
        method=str(trial.method),
        iterations=sweep.iterations,
        unwrap=sweep.unwrap,
    )
    logger.debug("trial %d: %s seed %d -> rmse %.4g", trial.index, config, trial.seed, metrics["rmse_f_after_shift"])
    return ExperimentRecord(trial=trial, config=config, metrics=metrics, bounds=bounds, wall_time_ms=1e3 * seconds)


def run_sweep(sweep: Sweep, workers: int = 1) -> List[ExperimentRecord]:
    clean = sample_function(sweep.function, sweep.grid)
    trials = sweep.trials()
    logger.info("running %d trials on %d worker(s)", len(trials), workers)
    if workers <= 1:
        records = [run_trial(sweep, t, clean) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda t: run_trial(sweep, t, clean), trials))
    return sorted(records, key=lambda r: r.trial.index)


def summarize_records(records: Sequence[ExperimentRecord]) -> Tuple[List[str], List[Dict[str, Any]]]:
    """Per-config count, median and quartiles of the headline metrics, in first-seen order."""
    groups: Dict[Tuple, List[ExperimentRecord]] = {}
    for rec in records:
        key = tuple(rec.config[c] for c in CONFIG_COLUMNS)
        groups.setdefault(key, []).append(rec)

    stats = ["count", "median", "p25", "p75", "iqr"]
    fieldnames = list(CONFIG_COLUMNS) + ["count"]
    for metric in SUMMARY_METRICS:
        fieldnames += [f"{metric}_{s}" for s in stats[1:]]

    rows = []
    for key, group in groups.items():
        row: Dict[str, Any] = dict(zip(CONFIG_COLUMNS, key))
        row["count"] = len(group)
        for metric in SUMMARY_METRICS:
            summary = summarize(rec.metrics[metric] for rec in group)
            for s in stats[1:]:
                row[f"{metric}_{s}"] = summary[s]
        rows.append(row)
    return fieldnames, rows


def meta_path(out: str | Path) -> Path:
    return Path(f"{out}.meta.json")


def write_experiment(
    sweep: Sweep, records: Sequence[ExperimentRecord], out: str | Path, summary: str | Path | None = None
) -> None:
    write_records(out, sweep.fieldnames, (rec.as_row(sweep.timing) for rec in records))
    with open(meta_path(out), "w") as f:
        json.dump(sweep.meta(), f, indent=2, sort_keys=True)
        f.write("\n")
    if summary is not None:
        fieldnames, rows = summarize_records(records)
        write_records(summary, fieldnames, rows)
    logger.info("wrote %d rows to %s", len(records), out)
