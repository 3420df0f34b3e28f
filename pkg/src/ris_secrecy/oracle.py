"""Independent checks: finite differences, extended precision, brute force.

Nothing here calls into the solvers or the analytic gradients, so it can
certify them.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError, NumericError


@dataclass(frozen=True)
class FdSpec:
    h: float = 1e-6
    scheme: str = "central"
    rel_tol: float = 1e-5

    def __post_init__(self):
        if not (self.h > 0 and self.rel_tol > 0):
            raise DomainError("h and rel_tol must be positive")
        if self.scheme != "central":
            raise DomainError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True)
class FdResult:
    grad: np.ndarray
    one_sided: np.ndarray  # True where a bound forced a one-sided difference


def _finite(v):
    v = float(v)
    if not np.isfinite(v):
        raise NumericError("objective returned a non-finite value")
    return v


def fd_grad_theta(objective, theta, spec: FdSpec = FdSpec(), bounds=None) -> FdResult:
    """Central differences of a real function of a real vector.

    With ``bounds=(lo, hi)`` perturbed points never leave the interval;
    coordinates sitting on (or within ``h`` of) a bound fall back to a
    one-sided difference and are flagged.
    """
    theta = np.array(theta, dtype=float)
    grad = np.empty_like(theta)
    flags = np.zeros(theta.shape, dtype=bool)
    lo, hi = bounds if bounds is not None else (-np.inf, np.inf)
    for m in range(theta.size):
        up = min(theta[m] + spec.h, hi)
        dn = max(theta[m] - spec.h, lo)
        flags[m] = theta[m] + spec.h > hi or theta[m] - spec.h < lo
        tp, tm = theta.copy(), theta.copy()
        tp[m], tm[m] = up, dn
        if up == dn:
            raise DomainError("interval too narrow for a finite difference")
        grad[m] = (_finite(objective(tp)) - _finite(objective(tm))) / (up - dn)
    return FdResult(grad, flags)


def fd_grad_T(objective, T, spec: FdSpec = FdSpec()):
    """Finite-difference conjugate cogradient of a real function of a complex matrix.

    For ``T = X + iY`` the returned matrix is ``(df/dX + i df/dY) / 2``,
    which is ``df/dT*`` in Wirtinger calculus; an ascent step along it is
    a step along the real gradient scaled by one half.
    """
    T = np.array(T, dtype=complex)
    out = np.empty_like(T)
    h = spec.h
    for idx in np.ndindex(T.shape):
        parts = []
        for unit in (1.0, 1j):
            tp, tm = T.copy(), T.copy()
            tp[idx] += unit * h
            tm[idx] -= unit * h
            parts.append((_finite(objective(tp)) - _finite(objective(tm))) / (2 * h))
        out[idx] = 0.5 * (parts[0] + 1j * parts[1])
    return out


def relative_error(a, b) -> float:
    """``||a - b|| / max(||b||, tiny)`` in the Frobenius norm."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def grid_search_theta(objective, params, resolution: int, M: int = 2, batched: bool = False, chunk: int = 1 << 16):
    """Exhaustive maximisation over a uniform grid on ``[theta_min, theta_max]^M``.

    ``objective`` maps an ``(M,)`` vector to a float, or with
    ``batched=True`` a ``(K, M)`` array to ``(K,)``. Ties resolve to the
    first grid point in C order, so the result is deterministic.

    Returns
    -------
    theta_best : ndarray, shape (M,)
    value : float
    """
    if M > 3:
        raise DomainError(f"grid search limited to M <= 3, got {M}")
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    axis = np.linspace(params.theta_min, params.theta_max, resolution)
    total = resolution**M
    best_val, best_idx = -np.inf, 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        pts = axis[np.stack(np.unravel_index(flat, (resolution,) * M), axis=1)]
        if batched:
            vals = np.asarray(objective(pts), dtype=float)
        else:
            vals = np.array([objective(p) for p in pts], dtype=float)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_idx = float(vals[k]), int(flat[k])
    return axis[np.array(np.unravel_index(best_idx, (resolution,) * M))], best_val


def rate_mp(H, T, sigma2, dps: int = 50) -> float:
    """``log2 det(I + H T T^H H^H / sigma2)`` by LU in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        Hm = mpmath.matrix(np.asarray(H, dtype=complex).tolist())
        Tm = mpmath.matrix(np.asarray(T, dtype=complex).tolist())
        K = Hm * Tm
        A = mpmath.eye(K.rows) + (K * K.H) / mpmath.mpf(sigma2)
        d = mpmath.det(A)
        return float(mpmath.log(mpmath.re(d), 2))


def amplitude_mp(theta, beta_min, alpha, theta_tilde, dps: int = 50) -> float:
    """Amplitude law evaluated in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        s = (mpmath.sin(mpmath.mpf(theta) - mpmath.mpf(theta_tilde)) + 1) / 2
        return float((1 - mpmath.mpf(beta_min)) * s ** mpmath.mpf(alpha) + mpmath.mpf(beta_min))


def _siso_links(ch):
    if ch.H_ab.shape != (1, 1) or ch.H_ae.shape != (1, 1):
        raise DomainError("single-antenna channels required")
    return ch.H_ab[0, 0], ch.H_ar[:, 0], ch.H_rb[0, :], ch.H_ae[0, 0], ch.H_re[0, :]


def _siso_amplitude(thetas, params):
    s = np.clip((np.sin(thetas - params.theta_tilde) + 1.0) / 2.0, 0.0, 1.0)
    return (1.0 - params.beta_min) * s**params.alpha + params.beta_min


def siso_gains(ch, params, thetas):
    """Per-point ``|h_b|^2, |h_e|^2`` for a batch of phase vectors (single antennas)."""
    h_ab, h_ar, h_rb, h_ae, h_re = _siso_links(ch)
    thetas = np.atleast_2d(thetas)
    phi = _siso_amplitude(thetas, params) * np.exp(1j * thetas)
    hb = h_ab + phi @ (h_rb * h_ar)
    he = h_ae + phi @ (h_re * h_ar)
    return np.abs(hb) ** 2, np.abs(he) ** 2


def siso_secrecy_objective(ch, params, P, sigma2_b, sigma2_e):
    """Batched secrecy rate with the best single-antenna power choice.

    The scalar secrecy rate is monotone in transmit power, so the optimum
    is full power when Bob's normalised gain exceeds Eve's and zero
    otherwise.
    """

    def f(thetas):
        gb, ge = siso_gains(ch, params, thetas)
        c = np.log2(1.0 + P * gb / sigma2_b) - np.log2(1.0 + P * ge / sigma2_e)
        return np.maximum(c, 0.0)

    return f


def siso_pdiff_objective(ch, params, t, sigma2_b, sigma2_e):
    """Batched power difference for a fixed scalar precoder ``t``."""

    def f(thetas):
        gb, ge = siso_gains(ch, params, thetas)
        return abs(t) ** 2 * (gb / sigma2_b - ge / sigma2_e)

    return f
