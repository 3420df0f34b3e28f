"""Joint projected-gradient ascent over precoder and RIS phases.

Each outer iteration takes one phase step and then one precoder step.
Both steps shrink geometrically while they would lower the secrecy rate,
so the accepted objective never decreases. Step sizes are initialised
once from the first gradient and afterwards only ever shrink.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh

from .channel import ChannelSet, SystemConfig, stream
from .errors import DomainError, NumericError, ZeroGradientError
from .ris_model import RisParams, project_theta
from .secrecy import SecrecyProblem

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITER = "max_iter"
NUMERIC_ERROR = "numeric_error"
STEP_POLICIES = ("persist", "restart", "grow")
STOP_RULES = ("last_block", "iteration")


@dataclass(frozen=True)
class PgmOptions:
    """Iteration limits and step-size controls.

    ``theta_max_step=None`` means a quarter of the feasible phase span.
    Setting ``fixed_step`` gives the basic variant: both step sizes are
    pinned to that value and no backtracking happens.
    """

    i_max_outer: int = 500
    i_max_inner: int = 30
    xi: float = 1e-4
    c: float = 0.5
    tau: float = 0.5
    theta_max_step: float | None = None
    fixed_step: float | None = None
    step_policy: str = "persist"
    stop_on: str = "last_block"

    def __post_init__(self):
        if self.step_policy not in STEP_POLICIES:
            raise DomainError(f"step_policy must be one of {STEP_POLICIES}")
        if self.stop_on not in STOP_RULES:
            raise DomainError(f"stop_on must be one of {STOP_RULES}")
        if self.i_max_outer < 1 or self.i_max_inner < 1:
            raise DomainError("iteration limits must be >= 1")
        if self.xi < 0:
            raise DomainError("xi must be non-negative")
        if not 0 < self.c < 1:
            raise DomainError("backtracking factor c must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise DomainError("tau must lie in (0, 1]")
        if self.theta_max_step is not None and self.theta_max_step <= 0:
            raise DomainError("theta_max_step must be positive")
        if self.fixed_step is not None and self.fixed_step <= 0:
            raise DomainError("fixed_step must be positive")

    def max_step_for(self, params: RisParams) -> float:
        if self.theta_max_step is None:
            return params.span / 4.0
        if self.theta_max_step > params.span / 2.0:
            raise DomainError("theta_max_step exceeds half the feasible phase span")
        return self.theta_max_step


def _complex_to_pairs(A):
    return np.stack([A.real, A.imag], axis=-1).tolist()


@dataclass
class SolveReport:
    objective_trace: list
    T_opt: np.ndarray
    theta_opt: np.ndarray
    step_history: list
    termination: str
    wall_time: float
    n_outer: int = 0
    n_evals: int = 0
    inner_theta: int = 0
    inner_T: int = 0
    error: str | None = None
    options: dict = field(default_factory=dict)
    seed: int | None = None
    eval_trace: list = field(default_factory=list)  # cumulative evaluations per trace entry

    @property
    def final(self) -> float:
        return self.objective_trace[-1]

    def to_dict(self) -> dict:
        return {
            "objective_trace": list(map(float, self.objective_trace)),
            "T_opt": _complex_to_pairs(self.T_opt),
            "theta_opt": list(map(float, self.theta_opt)),
            "step_history": [[None if v is None else float(v) for v in pair] for pair in self.step_history],
            "termination": self.termination,
            "wall_time": self.wall_time,
            "n_outer": self.n_outer,
            "n_evals": self.n_evals,
            "inner_theta": self.inner_theta,
            "inner_T": self.inner_T,
            "error": self.error,
            "options": self.options,
            "seed": self.seed,
            "eval_trace": list(self.eval_trace),
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def project_precoder(T_hat, P: float):
    """Scale ``T_hat`` back onto the power ball ``Tr(T T^H) <= P``.

    Returns
    -------
    T : ndarray
    on_boundary : bool
        False only for a zero input, which cannot be scaled onto the
        boundary and is returned unchanged.
    """
    T_hat = np.asarray(T_hat)
    power = float(np.vdot(T_hat, T_hat).real)
    if power <= P:
        return T_hat, power > 0
    return T_hat * np.sqrt(P / power), True


def init_step_theta(g, theta_max_step: float) -> float:
    """Step that moves the largest phase entry by exactly ``theta_max_step``."""
    gmax = float(np.max(np.abs(g)))
    if gmax == 0.0:
        raise ZeroGradientError("phase gradient is identically zero")
    return theta_max_step / gmax


def init_step_T(G, P: float, tau: float) -> float:
    """Step that displaces the precoder by ``tau * sqrt(P)`` in Frobenius norm."""
    gnorm = float(np.linalg.norm(G))
    if gnorm == 0.0:
        raise ZeroGradientError("precoder gradient is identically zero")
    return tau * np.sqrt(P) / gnorm


def default_precoder(ch: ChannelSet, N_s: int, P: float):
    """Top right-singular directions of the direct Bob channel at full power."""
    if not np.all(np.isfinite(ch.H_ab)):
        raise NumericError("direct Bob channel has non-finite entries")
    _, _, Vh = np.linalg.svd(ch.H_ab)
    V = Vh.conj().T[:, :N_s]
    if V.shape[1] < N_s:
        V = np.hstack([V, np.zeros((V.shape[0], N_s - V.shape[1]))])
    return V * np.sqrt(P / N_s)


def generalized_eigen_precoder(Hb, He, cfg: SystemConfig, floor: float = 1e-8):
    """Full-rank start along the generalized eigenvectors of Bob's and Eve's covariances.

    Directions solve ``(I + P Hb^H Hb/sb) v = lam (I + P He^H He/se) v``.
    Power goes to the ``N_s`` leading directions in proportion to
    ``max(log lam, 0)``, the full-power secrecy gain of each. A
    ``floor`` share is spread over all columns so none starts at zero:
    a zero column has zero gradient and would never be switched on.
    """
    N_a = Hb.shape[1]
    I = np.eye(N_a)
    Bb = I + cfg.P * (Hb.conj().T @ Hb) / cfg.sigma2_b
    Be = I + cfg.P * (He.conj().T @ He) / cfg.sigma2_e
    try:
        lam, V = eigh(0.5 * (Bb + Bb.conj().T), 0.5 * (Be + Be.conj().T))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError("generalized eigenproblem failed") from exc
    lam, V = lam[::-1][: cfg.N_s], V[:, ::-1][:, : cfg.N_s]
    V = V / np.linalg.norm(V, axis=0)
    gain = np.log(np.maximum(lam, 1.0))
    if gain.sum() == 0.0:
        gain[0] = 1.0
    share = (1.0 - floor) * gain / gain.sum() + floor / cfg.N_s
    return V * np.sqrt(cfg.P * share)


def random_precoder(rng: np.random.Generator, N_a: int, N_s: int, P: float):
    T = (rng.standard_normal((N_a, N_s)) + 1j * rng.standard_normal((N_a, N_s))) / np.sqrt(2)
    return T * np.sqrt(P / np.vdot(T, T).real)


class _Ascent:
    """One projected, backtracked ascent block (phases or precoder)."""

    def __init__(self, opts: PgmOptions, init_step):
        self.opts = opts
        self.init_step = init_step
        self.step = opts.fixed_step

    def run(self, value, grad, propose, evaluate):
        """Return ``(accepted_point_or_None, value, inner_steps, last_delta)``."""
        opts = self.opts
        if opts.fixed_step is None and opts.step_policy == "restart":
            self.step = None
        if self.step is None:
            try:
                self.step = self.init_step(grad)
            except ZeroGradientError:
                return None, value, 0, 0.0
        if opts.fixed_step is not None:
            cand = propose(self.step)
            new_value = evaluate(cand)
            return cand, new_value, 1, new_value - value
        delta = np.inf
        k = 0
        while k < opts.i_max_inner and abs(delta) > opts.xi:
            k += 1
            cand = propose(self.step)
            new_value = evaluate(cand)
            delta = new_value - value
            if delta < 0:
                self.step *= opts.c
            else:
                if k == 1 and opts.step_policy == "grow":
                    self.step /= opts.c
                return cand, new_value, k, delta
        # every trial lowered the objective: keep the current point
        return None, value, k, delta


def solve(
    ch: ChannelSet,
    params: RisParams,
    cfg: SystemConfig,
    opts: PgmOptions = PgmOptions(),
    T_init=None,
    theta_init=None,
    use_ris: bool = True,
    optimize_theta: bool = True,
    callback=None,
) -> SolveReport:
    """Maximise the secrecy rate jointly over ``(T, theta)``.

    ``use_ris=False`` removes the RIS (all reflection coefficients zero)
    and ``optimize_theta=False`` keeps the phases at ``theta_init``; in
    both cases only the precoder is updated. ``callback(T, theta, value)``
    is called with every accepted iterate.
    """
    t0 = time.perf_counter()
    M = ch.H_ar.shape[0]
    if theta_init is None:
        theta_init = params.theta_min + stream(cfg.seed, "init", "theta").random(M) * params.span
    theta = np.array(theta_init, dtype=float)
    if theta.shape != (M,):
        raise DomainError(f"theta_init has shape {theta.shape}, expected ({M},)")
    if np.any(theta < params.theta_min) or np.any(theta > params.theta_max):
        raise DomainError("theta_init violates the phase bounds")
    T = default_precoder(ch, cfg.N_s, cfg.P) if T_init is None else np.array(T_init, dtype=complex)
    if float(np.vdot(T, T).real) > cfg.P * (1 + 1e-9):
        log.warning("initial precoder exceeds the power budget; projecting")
        T, _ = project_precoder(T, cfg.P)

    prob = SecrecyProblem(ch, params, cfg.sigma2_b, cfg.sigma2_e, use_ris=use_ris)
    step_theta = opts.max_step_for(params) if use_ris else 0.0
    theta_block = _Ascent(opts, lambda g: init_step_theta(g, step_theta))
    T_block = _Ascent(opts, lambda G: init_step_T(G, cfg.P, opts.tau))
    do_theta = use_ris and optimize_theta

    report = SolveReport([], T, theta, [], MAX_ITER, 0.0, options=asdict(opts), seed=cfg.seed)
    try:
        value = prob.csec(theta, T)
        report.objective_trace.append(value)
        report.eval_trace.append(prob.n_evals)
        for _ in range(opts.i_max_outer):
            report.n_outer += 1
            start = value
            if do_theta:
                g = prob.grad_theta(theta, T)
                cand, value, k, _ = theta_block.run(
                    value, g,
                    lambda v: project_theta(theta + v * g, params),
                    lambda th: prob.csec(th, T),
                )
                report.inner_theta += k
                if cand is not None:
                    theta = cand
            G = prob.grad_T(theta, T)
            cand, value, k, last_delta = T_block.run(
                value, G,
                lambda v: project_precoder(T + v * G, cfg.P)[0],
                lambda TT: prob.csec(theta, TT),
            )
            report.inner_T += k
            if cand is not None:
                T = cand
            report.T_opt, report.theta_opt = T, theta
            if callback is not None:
                callback(T, theta, value)
            report.objective_trace.append(value)
            report.eval_trace.append(prob.n_evals)
            report.step_history.append((theta_block.step, T_block.step))
            change = last_delta if opts.stop_on == "last_block" else value - start
            if abs(change) <= opts.xi:
                report.termination = CONVERGED
                break
    except NumericError as exc:
        report.termination = NUMERIC_ERROR
        report.error = str(exc)
    report.n_evals = prob.n_evals
    report.wall_time = time.perf_counter() - t0
    return report
