"""Sweep execution: channels per (x, seed), methods per cell, tidy results."""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ..channel import effective_channels, generate_channels, stream
from ..cpdm import cpdm_warm_start, eigen_precoder, power_difference_matrix
from ..errors import RisSecrecyError
from ..pgm import NUMERIC_ERROR, generalized_eigen_precoder, solve
from ..ris_model import RisParams, RisState, project_theta
from ..secrecy import csec_value
from .config import ExperimentConfig

PRIMARY_METRIC = {
    "rate_vs_power": "C_sec",
    "rate_vs_M": "C_sec",
    "rate_vs_R": "C_sec",
    "runtime_vs_M": "n_evals",
    "convergence_trace": "C_sec",
    "stepsize_compare": "evals_to_target",
    "cpdm_vs_M": "C_sec",
    "cpdm_runtime": "n_evals",
}


class Row(NamedTuple):
    x: float
    method: str
    seed: int
    metric: str
    value: float | str


@dataclass
class ResultTable:
    """Per-seed results of one experiment.

    ``rows`` hold the family's primary metric (exactly one per
    ``(x, method, seed)``) or a ``failure`` row carrying the reason.
    ``diagnostics`` hold further deterministic per-cell numbers and
    ``timings`` the wall-clock measurements, which are kept apart because
    they differ between runs.
    """

    family: str
    sweep: tuple
    methods: tuple
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.metric == "failure"]

    @property
    def numeric_failures(self) -> int:
        bad = sum(1 for r in self.failures if str(r.value).startswith("NumericError"))
        bad += sum(1 for r in self.diagnostics if r.metric == "termination" and r.value == NUMERIC_ERROR)
        return bad

    def values(self, x, method, metric=None) -> np.ndarray:
        """Per-seed values in seed order; failed cells are skipped."""
        metric = metric or PRIMARY_METRIC[self.family]
        pick = sorted((r for r in self.rows if r.x == x and r.method == method and r.metric == metric), key=lambda r: r.seed)
        return np.array([float(r.value) for r in pick])

    def paired(self, x, method) -> dict:
        metric = PRIMARY_METRIC[self.family]
        return {r.seed: float(r.value) for r in self.rows if r.x == x and r.method == method and r.metric == metric}

    def aggregates(self) -> list:
        """Mean rows (and stderr rows when at least two seeds) per ``(x, method)``.

        The mean of a group holding ``inf`` is ``inf`` and its stderr ``nan``.
        """
        out = []
        for x in self.sweep:
            for method in self.methods:
                cells = [r for r in self.rows if r.x == x and r.method == method and r.metric != "failure"]
                metrics = sorted({r.metric for r in cells})
                for metric in metrics:
                    v = [float(r.value) for r in cells if r.metric == metric]
                    out.append(Row(x, method, "mean", metric, math.fsum(v) / len(v)))
                    if len(v) >= 2:
                        # undefined when a cell never reached its target (inf)
                        se = statistics.stdev(v) / math.sqrt(len(v)) if all(map(math.isfinite, v)) else math.nan
                        out.append(Row(x, method, "stderr", metric, se))
        return out

    def sort(self) -> None:
        xi = {x: i for i, x in enumerate(self.sweep)}
        mi = {m: i for i, m in enumerate(self.methods)}
        key = lambda r: (xi[r.x], mi[r.method], r.seed, r.metric)  # noqa: E731
        for lst in (self.rows, self.diagnostics, self.timings):
            lst.sort(key=key)


class _Outcome(NamedTuple):
    value: float
    diag: dict
    wall: float
    trace: list | None = None
    eval_trace: list | None = None


def _clamped(v: float) -> float:
    return max(float(v), 0.0)


def _timed(fn, repeats: int):
    """Run ``fn`` ``repeats`` times; return its (identical) result and the fastest wall time.

    The minimum is the least noisy estimate of the cost itself: slower
    repeats only add scheduler and cache interference.
    """
    walls, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        walls.append(time.perf_counter() - t0)
    return out, min(walls)


def _u(seed, M, purpose):
    return stream(seed, purpose, "theta").random(M)


def _pgm_diag(rep) -> dict:
    return {"n_outer": rep.n_outer, "n_evals": rep.n_evals, "termination": rep.termination}


def _start_precoder(cfg: ExperimentConfig, ch, sys_cfg, params: RisParams | None, theta):
    """Starting precoder per ``cfg.precoder_init``; ``None`` selects the solver default.

    ``params=None`` means the RIS is switched off.
    """
    if cfg.precoder_init == "svd":
        return None
    phi = np.zeros(sys_cfg.M, dtype=complex) if params is None else RisState.from_theta(theta, params).phi
    if cfg.precoder_init == "generalized":
        return generalized_eigen_precoder(*effective_channels(ch, phi), sys_cfg)
    ep = eigen_precoder(power_difference_matrix(ch, phi, sys_cfg), sys_cfg.N_s, sys_cfg.P, "top_mode")
    return None if ep.degenerate else ep.T


def _run_method(method, ch, sys_cfg, cfg: ExperimentConfig, params: RisParams, ideal: RisParams | None, opts=None):
    opts = opts or cfg.pgm
    seed, M = sys_cfg.seed, sys_cfg.M
    u = _u(seed, M, "init")
    theta0 = params.theta_min + u * params.span
    start = lambda p, th: _start_precoder(cfg, ch, sys_cfg, p, th)  # noqa: E731

    if method == "practical_pgm":
        rep, wall = _timed(lambda: solve(ch, params, sys_cfg, opts, T_init=start(params, theta0), theta_init=theta0),
                           cfg.timing_repeats)
        return _Outcome(_clamped(rep.final), _pgm_diag(rep), wall, rep.objective_trace, rep.eval_trace)

    if method == "ideal_pgm":
        def run():
            th = ideal.theta_min + u * ideal.span
            rep = solve(ch, ideal, sys_cfg, opts, T_init=start(ideal, th), theta_init=th)
            # deploy the ideal-model design on the lossy surface
            theta = project_theta(rep.theta_opt, params)
            phi = RisState.from_theta(theta, params).phi
            return rep, csec_value(ch, phi, rep.T_opt, sys_cfg.sigma2_b, sys_cfg.sigma2_e)

        (rep, c), wall = _timed(run, cfg.timing_repeats)
        return _Outcome(_clamped(c), {**_pgm_diag(rep), "C_sec_design_model": rep.final}, wall)

    if method == "random_ris":
        theta_r = params.theta_min + _u(seed, M, "random_ris") * params.span
        rep, wall = _timed(lambda: solve(ch, params, sys_cfg, opts, T_init=start(params, theta_r), theta_init=theta_r,
                                         optimize_theta=False), cfg.timing_repeats)
        return _Outcome(_clamped(rep.final), _pgm_diag(rep), wall)

    if method == "no_ris":
        rep, wall = _timed(lambda: solve(ch, params, sys_cfg, opts, T_init=start(None, theta0), theta_init=theta0,
                                         use_ris=False), cfg.timing_repeats)
        return _Outcome(_clamped(rep.final), _pgm_diag(rep), wall)

    if method == "cpdm":
        def run():
            w = cpdm_warm_start(ch, params, sys_cfg, opts, theta_init=theta0,
                                allocation=cfg.cpdm.allocation, alternations=cfg.cpdm.alternations)
            phi = RisState.from_theta(w.theta_sub, params).phi
            return w, csec_value(ch, phi, w.T_sub, sys_cfg.sigma2_b, sys_cfg.sigma2_e)

        (w, c), wall = _timed(run, cfg.timing_repeats)
        diag = {"n_outer": w.n_outer, "n_evals": w.n_evals, "termination": w.termination, "P_diff": w.final}
        return _Outcome(_clamped(c), diag, wall)

    raise ValueError(f"unknown method {method}")


def _warm_started(ch, sys_cfg, cfg, params):
    """Full solver seeded by the surrogate solution."""
    theta0 = params.theta_min + _u(sys_cfg.seed, sys_cfg.M, "init") * params.span

    def run():
        w = cpdm_warm_start(ch, params, sys_cfg, cfg.pgm, theta_init=theta0,
                            allocation=cfg.cpdm.allocation, alternations=cfg.cpdm.alternations)
        return solve(ch, params, sys_cfg, cfg.pgm, T_init=w.T_sub, theta_init=w.theta_sub)

    rep, wall = _timed(run, cfg.timing_repeats)
    return _Outcome(_clamped(rep.final), _pgm_diag(rep), wall, rep.objective_trace, rep.eval_trace)


def _fail(exc) -> str:
    return f"{type(exc).__name__}: {exc}"


def _run_cell(args):
    """One channel realisation; returns (rows, diagnostics, timings)."""
    cfg, x, seed, params, ideal = args
    rows, diags, times = [], [], []
    axis = cfg.axis
    override = {axis: x} if axis in ("M", "P_dbm") else {}
    sys_cfg = cfg.system.build(seed, **override)
    ch = generate_channels(sys_cfg, cfg.geometry, cfg.path_loss)
    metric = PRIMARY_METRIC[cfg.family]

    def record(xv, method, out: _Outcome, value=None):
        rows.append(Row(xv, method, seed, metric, out.value if value is None else value))
        for k, v in out.diag.items():
            diags.append(Row(xv, method, seed, k, v))
        times.append(Row(xv, method, seed, "wall_time", out.wall))

    if cfg.family == "convergence_trace":
        for method in cfg.methods:
            try:
                out = _warm_started(ch, sys_cfg, cfg, params) if method == "cpdm" else _run_method(method, ch, sys_cfg, cfg, params, ideal)
            except (RisSecrecyError, np.linalg.LinAlgError) as exc:
                rows.extend(Row(k, method, seed, "failure", _fail(exc)) for k in cfg.sweep)
                continue
            for k in cfg.sweep:
                v = out.trace[min(k, len(out.trace) - 1)]
                record(k, method, out, _clamped(v))
        return rows, diags, times

    if cfg.family == "stepsize_compare":
        runs = {}
        fixed_stop = cfg.extra.get("fixed_stop_on", "iteration")
        for step in cfg.sweep:
            opts = cfg.pgm if step == 0 else replace(cfg.pgm, fixed_step=float(step), stop_on=fixed_stop)
            for method in cfg.methods:
                try:
                    if method == "cpdm":
                        out = _warm_started(ch, sys_cfg, replace(cfg, pgm=opts), params)
                    else:
                        out = _run_method(method, ch, sys_cfg, cfg, params, ideal, opts)
                    runs[(step, method)] = out
                except (RisSecrecyError, np.linalg.LinAlgError) as exc:
                    rows.append(Row(step, method, seed, "failure", _fail(exc)))
        for method in cfg.methods:
            finals = [max(o.trace) for (s, m), o in runs.items() if m == method]
            if not finals:
                continue
            target = max(finals) - cfg.pgm.xi
            for (step, m), out in runs.items():
                if m != method:
                    continue
                hit = [e for c, e in zip(out.trace, out.eval_trace) if c >= target]
                record(step, m, out, float(hit[0]) if hit else math.inf)
                diags.append(Row(step, m, seed, "C_sec", out.trace[-1]))
        return rows, diags, times

    for method in cfg.methods:
        try:
            out = _run_method(method, ch, sys_cfg, cfg, params, ideal)
        except (RisSecrecyError, np.linalg.LinAlgError) as exc:
            rows.append(Row(x, method, seed, "failure", _fail(exc)))
            continue
        value = out.diag["n_evals"] if metric == "n_evals" else out.value
        record(x, method, out, value)
        if metric == "n_evals":
            diags.append(Row(x, method, seed, "C_sec", out.value))
    return rows, diags, times


def _cells(cfg: ExperimentConfig):
    ideal = cfg.ris.ideal() if "ideal_pgm" in cfg.methods else None
    if cfg.axis == "R":
        params_by_x = {R: cfg.ris.practical(R) for R in cfg.sweep}
    else:
        p = cfg.ris.practical()
        params_by_x = {x: p for x in cfg.sweep}
    if cfg.family in ("convergence_trace", "stepsize_compare"):
        # x is not a channel parameter: one cell per seed covers every x
        first = cfg.sweep[0]
        return [(cfg, first, s, params_by_x[first], ideal) for s in cfg.seeds]
    # seed-major, so machine-speed drift spreads over the whole sweep instead of one x
    return [(cfg, x, s, params_by_x[x], ideal) for s in cfg.seeds for x in cfg.sweep]


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Run every ``(x, seed)`` cell of ``cfg`` and collect a sorted table.

    With ``threads > 1`` cells run in worker processes; results are
    gathered in submission order and sorted, so the table does not depend
    on the worker count.
    """
    cells = _cells(cfg)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * threads))))
    else:
        results = [_run_cell(c) for c in cells]
    table = ResultTable(cfg.family, tuple(cfg.sweep), tuple(cfg.methods))
    for rows, diags, times in results:
        table.rows.extend(rows)
        table.diagnostics.extend(diags)
        table.timings.extend(times)
    table.sort()
    return table
