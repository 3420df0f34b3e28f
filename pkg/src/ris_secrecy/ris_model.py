"""Lossy RIS reflection physics.

A reflecting element is modelled as a parallel resonant circuit whose
tunable capacitance sets the phase of the reflection coefficient. Any
series resistance makes the amplitude depend on the phase; that
dependence is summarised by a four-constant amplitude law that is fitted
once against the circuit and then used by the optimisers.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FitError, NumericError

TWO_PI = 2.0 * np.pi

# Capacitance tuning range used for every packaged fit. Chosen so the
# sweep passes through resonance; it is a fixture choice, not a measured
# hardware value.
DEFAULT_C_RANGE = (0.47e-12, 2.35e-12)
DEFAULT_N_SAMPLES = 512


@dataclass(frozen=True)
class CircuitParams:
    """Equivalent-circuit constants of one reflecting element.

    Inductances in henry, frequency in hertz, resistances in ohm and
    capacitances in farad.
    """

    L1: float = 2.5e-9
    L2: float = 0.7e-9
    f: float = 2.5e9
    R: float = 0.0
    Z0: float = 377.0
    C_range: tuple[float, float] = DEFAULT_C_RANGE

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0 and self.f > 0 and self.Z0 > 0):
            raise DomainError("L1, L2, f and Z0 must be strictly positive")
        if self.R < 0:
            raise DomainError(f"resistance must be non-negative, got {self.R}")
        lo, hi = self.C_range
        if not 0 < lo < hi:
            raise DomainError(f"invalid capacitance range {self.C_range}")
        object.__setattr__(self, "C_range", (float(lo), float(hi)))


@dataclass(frozen=True)
class RisParams:
    """Fitted constants of the amplitude-phase law plus the phase bounds."""

    beta_min: float
    alpha: float
    theta_tilde: float
    theta_min: float
    theta_max: float
    resistance: float = 0.0
    fit_rms: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.beta_min <= 1.0:
            raise DomainError(f"beta_min must lie in [0, 1], got {self.beta_min}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not -np.pi < self.theta_min < self.theta_max < np.pi:
            raise DomainError(
                f"need -pi < theta_min < theta_max < pi, got "
                f"({self.theta_min}, {self.theta_max})"
            )

    @property
    def span(self) -> float:
        return self.theta_max - self.theta_min

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("fit_rms")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RisParams":
        keys = ("beta_min", "alpha", "theta_tilde", "theta_min", "theta_max", "resistance")
        missing = [k for k in keys if k not in d]
        if missing:
            raise DomainError(f"RisParams JSON is missing keys {missing}")
        return cls(**{k: float(d[k]) for k in keys})

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "RisParams":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RisParams":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class RisState:
    """Phase vector with the amplitudes, coefficients and phase derivatives it implies."""

    theta: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray

    @classmethod
    def from_theta(cls, theta, params: RisParams) -> "RisState":
        theta = np.array(theta, dtype=float, ndmin=1)
        beta = amplitude_of_phase(theta, params)
        phi, dphi = reflection_and_derivative(theta, params)
        for a in (theta, beta, phi, dphi):
            a.setflags(write=False)
        return cls(theta=theta, beta=beta, phi=phi, dphi=dphi)

    @property
    def M(self) -> int:
        return self.theta.size


def element_impedance(C, cp: CircuitParams):
    w = TWO_PI * cp.f
    series = 1j * w * cp.L2 + 1.0 / (1j * w * np.asarray(C, dtype=float)) + cp.R
    shunt = 1j * w * cp.L1
    return shunt * series / (shunt + series)


def circuit_reflection(C, cp: CircuitParams):
    """Reflection coefficient of an element tuned to capacitance ``C``.

    Parameters
    ----------
    C : float or array_like
        Tunable capacitance in farad, inside ``cp.C_range``.
    cp : CircuitParams

    Returns
    -------
    complex or ndarray of complex
        ``(Z - Z0) / (Z + Z0)``.
    """
    C_arr = np.asarray(C, dtype=float)
    lo, hi = cp.C_range
    if np.any(C_arr < lo) or np.any(C_arr > hi) or not np.all(np.isfinite(C_arr)):
        raise DomainError(f"capacitance outside {cp.C_range}")
    Z = element_impedance(C_arr, cp)
    den = Z + cp.Z0
    if np.any(np.abs(den) < np.finfo(float).tiny * 1e3) or not np.all(np.isfinite(Z)):
        raise NumericError("Z + Z0 underflowed while evaluating the reflection coefficient")
    gamma = (Z - cp.Z0) / den
    return gamma[()] if gamma.ndim == 0 else gamma


def sweep_circuit(cp: CircuitParams, n_samples: int = DEFAULT_N_SAMPLES):
    """Log-spaced capacitance sweep; returns ``(C, theta, beta)``."""
    C = np.geomspace(cp.C_range[0], cp.C_range[1], n_samples)
    # geomspace endpoints can land one ulp outside the range
    C = np.clip(C, *cp.C_range)
    g = circuit_reflection(C, cp)
    return C, np.angle(g), np.abs(g)


def _amplitude_law(theta, beta_min, alpha, theta_tilde):
    s = np.clip((np.sin(theta - theta_tilde) + 1.0) / 2.0, 0.0, 1.0)
    return (1.0 - beta_min) * s**alpha + beta_min


def fit_ris_params(cp: CircuitParams, n_samples: int = DEFAULT_N_SAMPLES) -> RisParams:
    """Fit the amplitude-phase law to a capacitance sweep of ``cp``.

    The phase bounds are the extremes attained by the sweep. ``beta_min``,
    ``alpha`` and ``theta_tilde`` come from a bounded damped least-squares
    fit started from several values of ``alpha``; the best RMS wins and is
    stored in ``fit_rms``. For a lossless circuit the amplitude is flat,
    ``beta_min`` is exactly 1 and the other two constants are immaterial.
    """
    if n_samples < 16:
        raise DomainError(f"n_samples must be >= 16, got {n_samples}")
    _, theta, beta = sweep_circuit(cp, n_samples)
    theta_min, theta_max = float(theta.min()), float(theta.max())
    if theta_max - theta_min < 0.1:
        raise FitError(f"attained phase span {theta_max - theta_min:.3g} rad is degenerate")
    if theta_min <= -np.pi or theta_max >= np.pi:
        raise FitError("sweep phase reaches +-pi; bounds would not be interior")

    if np.max(np.abs(1.0 - beta)) < 1e-9:
        return RisParams(1.0, 1.0, 0.0, theta_min, theta_max, cp.R, fit_rms=float(np.sqrt(np.mean((1.0 - beta) ** 2))))

    def residual(p):
        return _amplitude_law(theta, *p) - beta

    # the law reaches its minimum where sin(theta - theta_tilde) = -1
    tilde0 = float(theta[np.argmin(beta)] + np.pi / 2)
    best = None
    for alpha0 in (0.5, 1.0, 2.0, 4.0):
        sol = least_squares(
            residual,
            x0=[float(beta.min()), alpha0, tilde0],
            bounds=([0.0, 1e-3, tilde0 - np.pi], [1.0, 100.0, tilde0 + np.pi]),
            method="trf",
            xtol=1e-12,
            ftol=1e-12,
        )
        if sol.status > 0 and (best is None or sol.cost < best.cost):
            best = sol
    if best is None:
        raise FitError("least-squares fit of the amplitude law did not converge")
    beta_min, alpha, theta_tilde = (float(v) for v in best.x)
    theta_tilde = float((theta_tilde + np.pi) % TWO_PI - np.pi)
    rms = float(np.sqrt(np.mean(best.fun**2)))
    return RisParams(beta_min, alpha, theta_tilde, theta_min, theta_max, cp.R, fit_rms=rms)


def _check_bounds(theta, p: RisParams):
    # NaN fails both comparisons, so it is rejected too
    if theta.size and not (theta.min() >= p.theta_min and theta.max() <= p.theta_max):
        raise DomainError(f"phase outside [{p.theta_min}, {p.theta_max}]")


def amplitude_of_phase(theta, p: RisParams):
    """Reflection amplitude at phase ``theta`` (scalar or array), in ``[beta_min, 1]``."""
    th = np.asarray(theta, dtype=float)
    _check_bounds(th, p)
    beta = np.clip(_amplitude_law(th, p.beta_min, p.alpha, p.theta_tilde), p.beta_min, 1.0)
    return beta[()] if beta.ndim == 0 else beta


def reflection_and_derivative(theta, p: RisParams):
    """Reflection coefficients and their derivatives with respect to phase.

    Returns
    -------
    phi, dphi_dtheta : ndarray of complex, shape (M,)
    """
    th = np.array(theta, dtype=float, ndmin=1)
    _check_bounds(th, p)
    rot = np.exp(1j * th)
    if p.beta_min == 1.0:
        return rot, 1j * rot
    shifted = th - p.theta_tilde
    s1 = np.clip(np.sin(shifted) + 1.0, 0.0, 2.0)
    k = 1.0 - p.beta_min
    beta = np.clip(k * (s1 / 2.0) ** p.alpha + p.beta_min, p.beta_min, 1.0)
    dbeta = (k * p.alpha / 2.0**p.alpha) * s1 ** (p.alpha - 1.0) * np.cos(shifted)
    return beta * rot, (dbeta + 1j * beta) * rot


def project_theta(theta_hat, p: RisParams):
    """Project arbitrary real phases onto ``[theta_min, theta_max]``.

    Entries outside ``[-pi, pi)`` are first wrapped. Feasible entries are
    kept; the rest snap to whichever bound is nearer on the circle, with
    ties going to ``theta_min``.
    """
    th = np.array(theta_hat, dtype=float, ndmin=1)
    if not np.all(np.isfinite(th)):
        raise DomainError("cannot project non-finite phases")
    # only wrap where needed: the wrap formula is not exact for in-range values
    out_of_range = (th < -np.pi) | (th >= np.pi)
    th[out_of_range] = np.mod(th[out_of_range] + np.pi, TWO_PI) - np.pi
    inside = (th >= p.theta_min) & (th <= p.theta_max)
    lifted = np.where(th >= 0, th, th + TWO_PI)
    theta_c = ((p.theta_min + TWO_PI) + p.theta_max) / 2.0
    snapped = np.where(lifted >= theta_c, p.theta_min, p.theta_max)
    return np.where(inside, th, snapped)


def random_theta(rng: np.random.Generator, M: int, p: RisParams):
    """Uniform phases over the feasible interval."""
    return p.theta_min + rng.random(M) * p.span


def ideal_params(theta_min: float = -np.pi + 1e-9, theta_max: float = np.pi - 1e-9) -> RisParams:
    """Unit-amplitude model over the given phase interval."""
    return RisParams(1.0, 1.0, 0.0, theta_min, theta_max, 0.0)


FIXTURE_RESISTANCES = (0.0, 0.5, 1.0, 1.5, 2.0)


def fixture_name(resistance: float) -> str:
    return f"ris_params_R{resistance:g}".replace(".", "p") + ".json"


def load_fixture(resistance: float) -> RisParams:
    """Packaged fit of the default circuit at one of ``FIXTURE_RESISTANCES``."""
    ref = resources.files("ris_secrecy.fixtures") / fixture_name(resistance)
    if not ref.is_file():
        raise DomainError(f"no packaged RIS fit for R = {resistance} ohm")
    return RisParams.from_json(ref.read_text(encoding="utf-8"))


def params_for_resistance(resistance: float, cp: CircuitParams | None = None) -> RisParams:
    """Packaged fit when one exists for the default circuit, else a fresh fit."""
    if cp is None or cp == CircuitParams(R=cp.R):
        try:
            return load_fixture(resistance)
        except DomainError:
            pass
    base = cp or CircuitParams()
    return fit_ris_params(CircuitParams(base.L1, base.L2, base.f, resistance, base.Z0, base.C_range))
