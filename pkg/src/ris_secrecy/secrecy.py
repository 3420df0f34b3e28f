"""Rates, secrecy objective, channel-power difference and their gradients.

Gradients with respect to the precoder follow the conjugate-cogradient
convention ``dC/dT*``; the ascent step adds a multiple of it directly.
Every ``A^{-1} X`` is a Cholesky solve, never an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .channel import ChannelSet, SystemConfig, effective_channels
from .errors import DomainError, NumericError
from .ris_model import RisParams, RisState, reflection_and_derivative

LN2 = np.log(2.0)


@dataclass(frozen=True)
class RateBundle:
    R_b: float
    R_e: float
    C_sec: float

    @property
    def C_sec_reported(self) -> float:
        """Secrecy rate clamped at zero, for reporting only."""
        return max(self.C_sec, 0.0)


def _gram_cholesky(K, sigma2):
    """Lower Cholesky factor of ``I + K K^H / sigma2``."""
    A = K @ K.conj().T
    A /= sigma2
    A += np.eye(A.shape[0])
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError("Gram matrix is not numerically positive definite") from exc


def _logdet_nats(L):
    v = 2.0 * float(np.sum(np.log(np.diag(L).real)))
    if not np.isfinite(v):
        raise NumericError("non-finite log-determinant")
    return v


def _check_T(H, T):
    if T.ndim != 2 or H.shape[1] != T.shape[0]:
        raise DomainError(f"cannot apply {H.shape} channel to precoder of shape {T.shape}")


def rate(H_hat, T, sigma2: float) -> float:
    """Achievable rate ``log2 det(I + H T T^H H^H / sigma2)`` in bit/s/Hz."""
    H_hat, T = np.atleast_2d(H_hat), np.atleast_2d(T)
    _check_T(H_hat, T)
    if not sigma2 > 0:
        raise DomainError("noise power must be positive")
    return max(_logdet_nats(_gram_cholesky(H_hat @ T, sigma2)) / LN2, 0.0)


def secrecy_rate(ch: ChannelSet, state: RisState, T, cfg: SystemConfig) -> RateBundle:
    Hb, He = effective_channels(ch, state.phi)
    R_b = rate(Hb, T, cfg.sigma2_b)
    R_e = rate(He, T, cfg.sigma2_e)
    return RateBundle(R_b, R_e, R_b - R_e)


class _Terms:
    """Per-iterate quantities shared by the objective and its gradients."""

    __slots__ = ("Hb", "He", "Kb", "Ke", "Lb", "Le", "sb", "se")

    def __init__(self, ch, phi, T, sigma2_b, sigma2_e):
        self.Hb, self.He = effective_channels(ch, phi)
        _check_T(self.Hb, T)
        self.Kb, self.Ke = self.Hb @ T, self.He @ T
        self.Lb = _gram_cholesky(self.Kb, sigma2_b)
        self.Le = _gram_cholesky(self.Ke, sigma2_e)
        self.sb, self.se = sigma2_b, sigma2_e

    def csec(self):
        return (_logdet_nats(self.Lb) - _logdet_nats(self.Le)) / LN2

    def solved(self):
        """``A_b^{-1} H_b T`` and ``A_e^{-1} H_e T``."""
        return (
            cho_solve((self.Lb, True), self.Kb, check_finite=False),
            cho_solve((self.Le, True), self.Ke, check_finite=False),
        )


def _theta_core(ch: ChannelSet, dphi, T, Wb, We, sb, se):
    """``2 Re{dphi o diag[H_ar T (Wb^H H_rb/sb - We^H H_re/se)]}``.

    With ``W = A^{-1} H_hat T`` this is ``ln2`` times the secrecy-rate
    gradient; with ``W = H_hat T`` it is the power-difference gradient.
    """
    HarT = ch.H_ar @ T
    Y = (Wb.conj().T @ ch.H_rb) / sb - (We.conj().T @ ch.H_re) / se
    d = np.einsum("ms,sm->m", HarT, Y)
    return 2.0 * np.real(dphi * d)


def csec_value(ch, phi, T, sigma2_b, sigma2_e) -> float:
    """Raw (unclamped) secrecy rate from reflection coefficients."""
    return _Terms(ch, phi, T, sigma2_b, sigma2_e).csec()


def grad_T(ch: ChannelSet, state: RisState, T, cfg: SystemConfig):
    """Conjugate cogradient ``dC_sec/dT*`` of the secrecy rate."""
    t = _Terms(ch, state.phi, T, cfg.sigma2_b, cfg.sigma2_e)
    Wb, We = t.solved()
    return _grad_T_from(t, Wb, We)


def _grad_T_from(t: _Terms, Wb, We):
    return (t.Hb.conj().T @ Wb / t.sb - t.He.conj().T @ We / t.se) / LN2


def grad_theta_secrecy(ch: ChannelSet, state: RisState, T, cfg: SystemConfig):
    """Gradient of the secrecy rate with respect to the phase vector."""
    dphi = state.dphi
    t = _Terms(ch, state.phi, T, cfg.sigma2_b, cfg.sigma2_e)
    Wb, We = t.solved()
    return _theta_core(ch, dphi, T, Wb, We, t.sb, t.se) / LN2


def channel_power_diff(ch: ChannelSet, state: RisState, T, cfg: SystemConfig) -> float:
    """``Tr[T^H (Hb^H Hb/sb - He^H He/se) T]``; may be negative."""
    Hb, He = effective_channels(ch, state.phi)
    _check_T(Hb, T)
    return _pdiff(Hb @ T, He @ T, cfg.sigma2_b, cfg.sigma2_e)


def _pdiff(Kb, Ke, sb, se):
    return float(np.vdot(Kb, Kb).real / sb - np.vdot(Ke, Ke).real / se)


def grad_theta_pdiff(ch: ChannelSet, state: RisState, T, cfg: SystemConfig):
    dphi = state.dphi
    Hb, He = effective_channels(ch, state.phi)
    _check_T(Hb, T)
    return _theta_core(ch, dphi, T, Hb @ T, He @ T, cfg.sigma2_b, cfg.sigma2_e)


class SecrecyProblem:
    """Objective and gradient oracle over ``(theta, T)`` for one channel.

    The solvers hold one of these; every call re-derives the reflection
    coefficients from ``theta`` through the amplitude law in ``params``.
    ``n_evals`` counts objective evaluations; gradient calls are not
    counted.
    """

    def __init__(self, ch: ChannelSet, params: RisParams, sigma2_b: float, sigma2_e: float, use_ris: bool = True):
        self.ch = ch
        self.params = params
        self.sb = sigma2_b
        self.se = sigma2_e
        self.use_ris = use_ris
        self.n_evals = 0
        self._zero = np.zeros(ch.H_ar.shape[0], dtype=complex)

    def _phi(self, theta):
        if not self.use_ris:
            return self._zero, self._zero
        return reflection_and_derivative(theta, self.params)

    def csec(self, theta, T) -> float:
        self.n_evals += 1
        return _Terms(self.ch, self._phi(theta)[0], T, self.sb, self.se).csec()

    def pdiff(self, theta, T) -> float:
        self.n_evals += 1
        Hb, He = effective_channels(self.ch, self._phi(theta)[0])
        return _pdiff(Hb @ T, He @ T, self.sb, self.se)

    def grad_theta(self, theta, T):
        phi, dphi = self._phi(theta)
        t = _Terms(self.ch, phi, T, self.sb, self.se)
        Wb, We = t.solved()
        return _theta_core(self.ch, dphi, T, Wb, We, self.sb, self.se) / LN2

    def grad_T(self, theta, T):
        t = _Terms(self.ch, self._phi(theta)[0], T, self.sb, self.se)
        Wb, We = t.solved()
        return _grad_T_from(t, Wb, We)

    def grad_theta_pdiff(self, theta, T):
        phi, dphi = self._phi(theta)
        Hb, He = effective_channels(self.ch, phi)
        return _theta_core(self.ch, dphi, T, Hb @ T, He @ T, self.sb, self.se)
