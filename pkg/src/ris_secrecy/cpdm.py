"""Channel-power-difference surrogate.

Maximising ``Tr[T^H G T]`` with ``G = Hb^H Hb/sb - He^H He/se`` is much
cheaper than maximising the log-det secrecy rate, and its solution is a
good starting point for the full solver. This module provides the
eigen-precoder, a phase ascent on the surrogate and a checker for the
upper-bound relation between the two objectives.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ChannelSet, SystemConfig, effective_channels, stream
from .errors import DomainError, NumericError
from .pgm import (
    CONVERGED,
    MAX_ITER,
    NUMERIC_ERROR,
    PgmOptions,
    _Ascent,
    _complex_to_pairs,
    default_precoder,
    init_step_theta,
)
from .ris_model import RisParams, RisState, project_theta
from .secrecy import LN2, SecrecyProblem

ALLOCATIONS = ("proportional", "top_mode", "equal")


class EigenPrecoder(NamedTuple):
    T: np.ndarray
    eigvals: np.ndarray  # spectrum of G, descending
    n_active: int  # columns that carry power

    @property
    def degenerate(self) -> bool:
        """True when ``G`` has no positive eigenvalue and ``T`` is zero."""
        return self.n_active == 0


def power_difference_matrix(ch: ChannelSet, phi, cfg: SystemConfig):
    Hb, He = effective_channels(ch, phi)
    G = Hb.conj().T @ Hb / cfg.sigma2_b - He.conj().T @ He / cfg.sigma2_e
    return 0.5 * (G + G.conj().T)


def eigen_precoder(G, N_s: int, P: float, allocation: str = "proportional") -> EigenPrecoder:
    """Precoder built from the leading positive eigen-directions of Hermitian ``G``.

    Only directions with a positive eigenvalue get power. ``allocation``
    decides how ``P`` is split among them: in proportion to the
    eigenvalues, all on the top mode, or equally. Unused columns are zero.
    """
    if allocation not in ALLOCATIONS:
        raise DomainError(f"allocation must be one of {ALLOCATIONS}")
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DomainError("G must be square")
    if N_s < 1 or N_s > G.shape[0]:
        raise DomainError(f"N_s must lie in [1, {G.shape[0]}]")
    w, V = np.linalg.eigh(G)
    w, V = w[::-1], V[:, ::-1]
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite eigenvalues")
    tol = 1e-12 * float(np.max(np.abs(w)))
    lam = w[:N_s]
    pos = lam > tol
    n = int(np.count_nonzero(pos))
    T = np.zeros((G.shape[0], N_s), dtype=complex)
    if n == 0:
        return EigenPrecoder(T, w, 0)
    if allocation == "proportional":
        powers = P * lam[:n] / lam[:n].sum()
    elif allocation == "top_mode":
        powers = np.zeros(n)
        powers[0] = P
        n = 1
        powers = powers[:1]
    else:
        powers = np.full(n, P / n)
    T[:, :n] = V[:, :n] * np.sqrt(powers)
    return EigenPrecoder(T, w, n)


def optimal_precoder_cpdm(ch: ChannelSet, state: RisState, cfg: SystemConfig, allocation: str = "proportional"):
    return eigen_precoder(power_difference_matrix(ch, state.phi, cfg), cfg.N_s, cfg.P, allocation)


@dataclass
class CpdmReport:
    pdiff_trace: list
    theta_sub: np.ndarray
    T_sub: np.ndarray
    eigen_spectrum_of_G: np.ndarray
    termination: str
    wall_time: float
    n_outer: int = 0
    n_evals: int = 0
    step_history: list = field(default_factory=list)
    degenerate: bool = False
    error: str | None = None
    options: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def final(self) -> float:
        return self.pdiff_trace[-1]

    def to_dict(self) -> dict:
        return {
            "pdiff_trace": list(map(float, self.pdiff_trace)),
            "theta_sub": list(map(float, self.theta_sub)),
            "T_sub": _complex_to_pairs(self.T_sub),
            "eigen_spectrum_of_G": list(map(float, self.eigen_spectrum_of_G)),
            "termination": self.termination,
            "wall_time": self.wall_time,
            "n_outer": self.n_outer,
            "n_evals": self.n_evals,
            "step_history": [None if v is None else float(v) for v in self.step_history],
            "degenerate": self.degenerate,
            "error": self.error,
            "options": self.options,
            "seed": self.seed,
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _check_theta(theta, params: RisParams, M: int):
    theta = np.array(theta, dtype=float)
    if theta.shape != (M,):
        raise DomainError(f"theta_init has shape {theta.shape}, expected ({M},)")
    if np.any(theta < params.theta_min) or np.any(theta > params.theta_max):
        raise DomainError("theta_init violates the phase bounds")
    return theta


def solve_theta_cpdm(
    ch: ChannelSet,
    params: RisParams,
    cfg: SystemConfig,
    opts: PgmOptions,
    T,
    theta_init,
) -> CpdmReport:
    """Projected-gradient ascent of the power difference over phases, ``T`` fixed."""
    t0 = time.perf_counter()
    M = ch.H_ar.shape[0]
    theta = _check_theta(theta_init, params, M)
    T = np.asarray(T, dtype=complex)
    if float(np.vdot(T, T).real) > cfg.P * (1 + 1e-9):
        raise DomainError("precoder exceeds the power budget")
    prob = SecrecyProblem(ch, params, cfg.sigma2_b, cfg.sigma2_e)
    max_step = opts.max_step_for(params)
    block = _Ascent(opts, lambda g: init_step_theta(g, max_step))
    spectrum = np.linalg.eigvalsh(power_difference_matrix(ch, RisState.from_theta(theta, params).phi, cfg))[::-1]
    report = CpdmReport([], theta, T, spectrum, MAX_ITER, 0.0, options=asdict(opts), seed=cfg.seed)
    try:
        value = prob.pdiff(theta, T)
        report.pdiff_trace.append(value)
        for _ in range(opts.i_max_outer):
            report.n_outer += 1
            g = prob.grad_theta_pdiff(theta, T)
            cand, value, _, delta = block.run(
                value, g,
                lambda v: project_theta(theta + v * g, params),
                lambda th: prob.pdiff(th, T),
            )
            if cand is not None:
                theta = cand
            report.theta_sub = theta
            report.pdiff_trace.append(value)
            report.step_history.append(block.step)
            if abs(delta) <= opts.xi:
                report.termination = CONVERGED
                break
    except NumericError as exc:
        report.termination = NUMERIC_ERROR
        report.error = str(exc)
    report.n_evals = prob.n_evals
    report.wall_time = time.perf_counter() - t0
    return report


def cpdm_warm_start(
    ch: ChannelSet,
    params: RisParams,
    cfg: SystemConfig,
    opts: PgmOptions = PgmOptions(),
    theta_init=None,
    allocation: str = "top_mode",
    alternations: int = 1,
) -> CpdmReport:
    """Surrogate solution ``(T_sub, theta_sub)`` for seeding the full solver.

    Each alternation recomputes the eigen-precoder at the current phases
    and then runs the phase ascent with that precoder held fixed. With
    ``alternations=1`` this is a single pass. The returned ``T_sub`` is
    the eigen-precoder at ``theta_sub``, the surrogate's best precoder for
    the phases it hands over.

    The default allocation is ``top_mode``, the exact maximiser of the
    surrogate for fixed phases. A proportional split keeps weak modes
    alive, and those are the slowest directions for the full solver.

    If ``G`` has no positive mode the direct-channel precoder is used
    instead, because a zero precoder has zero gradient everywhere.
    """
    if alternations < 1:
        raise DomainError("alternations must be >= 1")
    t0 = time.perf_counter()
    M = ch.H_ar.shape[0]
    if theta_init is None:
        theta_init = params.theta_min + stream(cfg.seed, "init", "theta").random(M) * params.span
    theta = _check_theta(theta_init, params, M)
    traces, steps, n_outer, n_evals = [], [], 0, 0
    degenerate = False
    def precoder_at(th):
        ep = optimal_precoder_cpdm(ch, RisState.from_theta(th, params), cfg, allocation)
        if ep.degenerate:
            return default_precoder(ch, cfg.N_s, cfg.P), True
        return ep.T, False

    for _ in range(alternations):
        T, flat = precoder_at(theta)
        degenerate |= flat
        rep = solve_theta_cpdm(ch, params, cfg, opts, T, theta)
        theta = rep.theta_sub
        traces.extend(rep.pdiff_trace)
        steps.extend(rep.step_history)
        n_outer += rep.n_outer
        n_evals += rep.n_evals
        if rep.termination == NUMERIC_ERROR:
            break
    if rep.termination != NUMERIC_ERROR:
        rep.T_sub, flat = precoder_at(theta)
        degenerate |= flat
    rep.pdiff_trace, rep.step_history = traces, steps
    rep.n_outer, rep.n_evals, rep.degenerate = n_outer, n_evals, degenerate
    rep.wall_time = time.perf_counter() - t0
    return rep


@dataclass(frozen=True)
class SurrogateCheck:
    is_psd: bool
    csec: float
    pdiff_over_ln2: float
    gap: float  # pdiff_over_ln2 - csec
    bound_holds: bool | None  # None when F_b - F_e is not PSD
    small_eigs: bool  # all eigenvalues of F_b and F_e <= 0.1
    taylor_envelope: float  # 0.5 (Tr F_b^2 + Tr F_e^2) / ln 2
    taylor_holds: bool | None  # None outside the small-eigenvalue regime


def check_surrogate_bound(ch: ChannelSet, state: RisState, T, cfg: SystemConfig) -> SurrogateCheck:
    """Compare the secrecy rate with the power difference divided by ``ln 2``.

    Works in the ``N_s x N_s`` stream domain, where
    ``F = T^H H^H H T / sigma2``.
    """
    Hb, He = effective_channels(ch, state.phi)
    T = np.asarray(T, dtype=complex)
    Kb, Ke = Hb @ T, He @ T
    Fb = Kb.conj().T @ Kb / cfg.sigma2_b
    Fe = Ke.conj().T @ Ke / cfg.sigma2_e
    Fb, Fe = 0.5 * (Fb + Fb.conj().T), 0.5 * (Fe + Fe.conj().T)
    D = Fb - Fe
    eig_d = np.linalg.eigvalsh(D)
    scale = max(float(np.linalg.norm(D, 2)), float(np.linalg.norm(Fb, 2)), float(np.linalg.norm(Fe, 2)))
    is_psd = bool(eig_d.min() >= -1e-9 * scale)

    eb, ee = np.linalg.eigvalsh(Fb), np.linalg.eigvalsh(Fe)
    eb, ee = np.clip(eb, 0.0, None), np.clip(ee, 0.0, None)
    csec = float(np.sum(np.log1p(eb)) - np.sum(np.log1p(ee))) / LN2
    pdiff = float(np.trace(D).real)
    gap = pdiff / LN2 - csec
    tol = 1e-12 * max(1.0, abs(pdiff) / LN2)
    bound_holds = bool(gap >= -tol) if is_psd else None
    small = bool(max(eb.max(initial=0.0), ee.max(initial=0.0)) <= 0.1)
    envelope = 0.5 * float(np.sum(eb**2) + np.sum(ee**2)) / LN2
    taylor_holds = bool(abs(gap) <= envelope + tol) if small else None
    return SurrogateCheck(is_psd, csec, pdiff / LN2, gap, bound_holds, small, envelope, taylor_holds)
