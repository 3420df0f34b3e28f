"""Rates, secrecy objective and gradients, certified against the oracle module.

Complex-gradient convention: for T = X + iY the finite-difference oracle
returns (dC/dX + i dC/dY) / 2, which is dC/dT*; the analytic precoder
gradient is compared with it directly.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ris_secrecy.channel import ChannelSet, SystemConfig
from ris_secrecy.errors import DomainError, NumericError
from ris_secrecy.oracle import FdSpec, fd_grad_T, fd_grad_theta, rate_mp, relative_error
from ris_secrecy.ris_model import RisState, load_fixture
from ris_secrecy.secrecy import (
    LN2,
    RateBundle,
    _theta_core,
    channel_power_diff,
    csec_value,
    effective_channels,
    grad_T,
    grad_theta_pdiff,
    grad_theta_secrecy,
    rate,
    secrecy_rate,
)

from helpers import cn, random_channels, random_feasible_theta


def _cfg(N_a, N_b, N_e, N_s, M, sb=1.0, se=1.0):
    return SystemConfig(N_a=N_a, N_b=N_b, N_e=N_e, N_s=N_s, M=M, P=1.0, sigma2_b=sb, sigma2_e=se)


def _instance(rng, params, N_a=3, N_b=2, N_e=3, N_s=2, M=6):
    ch = random_channels(rng, N_a, N_b, N_e, M)
    cfg = _cfg(N_a, N_b, N_e, N_s, M, sb=0.5 + rng.random(), se=0.5 + rng.random())
    state = RisState.from_theta(random_feasible_theta(rng, params, M), params)
    T = cn(rng, (N_a, N_s)) / np.sqrt(N_a * N_s)
    return ch, cfg, state, T


def _csec_of_theta(ch, params, T, cfg):
    return lambda th: secrecy_rate(ch, RisState.from_theta(th, params), T, cfg).C_sec


class TestRate:
    def test_zero_precoder(self, rng):
        assert rate(cn(rng, (3, 2)), np.zeros((2, 2)), 1.0) == 0.0

    def test_scalar(self):
        h, t, s = 0.3 - 1.1j, 0.8 + 0.2j, 0.25
        assert rate([[h]], [[t]], s) == pytest.approx(np.log2(1 + abs(h) ** 2 * abs(t) ** 2 / s), rel=1e-14)

    def test_against_extended_precision(self, rng):
        for _ in range(5):
            H, T = cn(rng, (2, 2)), cn(rng, (2, 2))
            assert rate(H, T, 0.3) == pytest.approx(rate_mp(H, T, 0.3), rel=1e-10)

    def test_unitary_invariance(self, rng):
        H, T = cn(rng, (4, 4)), cn(rng, (4, 3))
        U, _ = np.linalg.qr(cn(rng, (3, 3)))
        assert rate(H, T @ U, 0.7) == pytest.approx(rate(H, T, 0.7), rel=1e-10)

    def test_bad_inputs(self, rng):
        with pytest.raises(DomainError):
            rate(cn(rng, (2, 3)), cn(rng, (2, 2)), 1.0)
        with pytest.raises(DomainError):
            rate(cn(rng, (2, 2)), cn(rng, (2, 2)), 0.0)
        with pytest.raises(NumericError):
            rate(np.full((2, 2), np.nan), np.eye(2), 1.0)

    def test_high_snr_still_finite(self, rng):
        H = cn(rng, (4, 4)) * 1e-5
        assert np.isfinite(rate(H, np.eye(4), 1e-14))


class TestSecrecyRate:
    def test_identical_channels(self, rng, lossy):
        ch = random_channels(rng, 3, 2, 2, 4)
        twin = ChannelSet(ch.H_ab, ch.H_ar, ch.H_rb, ch.H_ab.copy(), ch.H_rb.copy())
        state = RisState.from_theta(random_feasible_theta(rng, lossy, 4), lossy)
        r = secrecy_rate(twin, state, cn(rng, (3, 2)), _cfg(3, 2, 2, 2, 4))
        assert r.C_sec == 0.0

    def test_zero_precoder(self, rng, lossy):
        ch, cfg, state, T = _instance(rng, lossy)
        assert secrecy_rate(ch, state, np.zeros_like(T), cfg).C_sec == 0.0

    def test_fixture_pinned_by_extended_precision(self, lossy):
        rng = np.random.default_rng(2024)
        ch, cfg, state, T = _instance(rng, lossy, 2, 2, 2, 2, 3)
        Hb, He = effective_channels(ch, state.phi)
        expected = rate_mp(Hb, T, cfg.sigma2_b) - rate_mp(He, T, cfg.sigma2_e)
        assert secrecy_rate(ch, state, T, cfg).C_sec == pytest.approx(expected, rel=1e-10)

    def test_antisymmetry(self, rng, lossy):
        ch, cfg, state, T = _instance(rng, lossy, N_b=3)
        swapped = ChannelSet(ch.H_ae, ch.H_ar, ch.H_re, ch.H_ab, ch.H_rb)
        cfg_s = _cfg(3, 3, 3, 2, 6, cfg.sigma2_e, cfg.sigma2_b)
        assert secrecy_rate(swapped, state, T, cfg_s).C_sec == -secrecy_rate(ch, state, T, cfg).C_sec

    def test_reported_clamp(self):
        assert RateBundle(1.0, 2.0, -1.0).C_sec_reported == 0.0
        assert RateBundle(2.0, 1.0, 1.0).C_sec_reported == 1.0


class TestGradT:
    def test_identical_channels_zero(self, rng, lossy):
        ch = random_channels(rng, 3, 2, 2, 4)
        twin = ChannelSet(ch.H_ab, ch.H_ar, ch.H_rb, ch.H_ab.copy(), ch.H_rb.copy())
        state = RisState.from_theta(random_feasible_theta(rng, lossy, 4), lossy)
        G = grad_T(twin, state, cn(rng, (3, 2)), _cfg(3, 2, 2, 2, 4))
        assert np.max(np.abs(G)) == 0.0

    def test_finite_differences(self, lossy):
        rng = np.random.default_rng(8)
        for _ in range(10):
            ch, cfg, state, T = _instance(rng, lossy)
            fd = fd_grad_T(lambda TT: secrecy_rate(ch, state, TT, cfg).C_sec, T)
            assert relative_error(grad_T(ch, state, T, cfg), fd) <= 1e-5

    def test_beamforming_vector_case(self, lossy):
        # N_s = 1: dR/dt* = H^H H t / (ln2 (sigma2 + |H t|^2)) for a single receive antenna
        rng = np.random.default_rng(4)
        ch, cfg, state, t = _instance(rng, lossy, 3, 1, 1, 1, 4)
        Hb, He = effective_channels(ch, state.phi)
        hb, he = Hb[0], He[0]
        x = t[:, 0]
        expect = (np.conj(hb) * (hb @ x) / (cfg.sigma2_b + abs(hb @ x) ** 2)
                  - np.conj(he) * (he @ x) / (cfg.sigma2_e + abs(he @ x) ** 2)) / LN2
        np.testing.assert_allclose(grad_T(ch, state, t, cfg)[:, 0], expect, rtol=1e-12)


class TestGradTheta:
    def test_zero_precoder(self, rng, lossy):
        ch, cfg, state, T = _instance(rng, lossy)
        assert np.all(grad_theta_secrecy(ch, state, np.zeros_like(T), cfg) == 0)
        assert np.all(grad_theta_pdiff(ch, state, np.zeros_like(T), cfg) == 0)

    def test_finite_differences_M8(self, lossy):
        rng = np.random.default_rng(9)
        for _ in range(10):
            ch, cfg, state, T = _instance(rng, lossy, M=8)
            fd = fd_grad_theta(_csec_of_theta(ch, lossy, T, cfg), state.theta, bounds=(lossy.theta_min, lossy.theta_max))
            assert relative_error(grad_theta_secrecy(ch, state, T, cfg), fd.grad) <= 1e-5

    def test_single_element_chain_rule(self, lossy):
        rng = np.random.default_rng(10)
        ch, cfg, state, T = _instance(rng, lossy, 2, 2, 2, 2, 1)
        th = state.theta[0]
        # dC/dtheta = dC/dphi * dphi/dtheta + c.c., with dC/dphi* from the scalar chain rule
        phi, dphi = state.phi[0], state.dphi[0]
        h = 1e-7

        def c_of_phi(p):
            Hb = ch.H_ab + p * np.outer(ch.H_rb[:, 0], ch.H_ar[0])
            He = ch.H_ae + p * np.outer(ch.H_re[:, 0], ch.H_ar[0])
            return rate(Hb, T, cfg.sigma2_b) - rate(He, T, cfg.sigma2_e)

        dre = (c_of_phi(phi + h) - c_of_phi(phi - h)) / (2 * h)
        dim = (c_of_phi(phi + 1j * h) - c_of_phi(phi - 1j * h)) / (2 * h)
        expect = dre * dphi.real + dim * dphi.imag
        assert grad_theta_secrecy(ch, state, T, cfg)[0] == pytest.approx(expect, rel=1e-6)
        assert state.theta[0] == th

    def test_pdiff_finite_differences(self, lossy):
        rng = np.random.default_rng(11)
        for _ in range(10):
            ch, cfg, state, T = _instance(rng, lossy, M=8)
            f = lambda th: channel_power_diff(ch, RisState.from_theta(th, lossy), T, cfg)  # noqa: E731
            fd = fd_grad_theta(f, state.theta, bounds=(lossy.theta_min, lossy.theta_max))
            assert relative_error(grad_theta_pdiff(ch, state, T, cfg), fd.grad) <= 1e-5

    def test_pdiff_is_secrecy_gradient_with_identity_weights(self, rng, lossy):
        ch, cfg, state, T = _instance(rng, lossy)
        Hb, He = effective_channels(ch, state.phi)
        via_core = _theta_core(ch, state.dphi, T, Hb @ T, He @ T, cfg.sigma2_b, cfg.sigma2_e)
        np.testing.assert_array_equal(grad_theta_pdiff(ch, state, T, cfg), via_core)
        # the secrecy gradient uses A^{-1} H T and the 1/ln2 factor instead
        Ab = np.eye(2) + Hb @ T @ T.conj().T @ Hb.conj().T / cfg.sigma2_b
        Ae = np.eye(3) + He @ T @ T.conj().T @ He.conj().T / cfg.sigma2_e
        g = _theta_core(ch, state.dphi, T, np.linalg.solve(Ab, Hb @ T), np.linalg.solve(Ae, He @ T),
                        cfg.sigma2_b, cfg.sigma2_e) / LN2
        np.testing.assert_allclose(grad_theta_secrecy(ch, state, T, cfg), g, rtol=1e-10)


class TestPowerDiff:
    def test_identical(self, rng, lossy):
        ch = random_channels(rng, 3, 2, 2, 4)
        twin = ChannelSet(ch.H_ab, ch.H_ar, ch.H_rb, ch.H_ab.copy(), ch.H_rb.copy())
        state = RisState.from_theta(random_feasible_theta(rng, lossy, 4), lossy)
        assert channel_power_diff(twin, state, cn(rng, (3, 2)), _cfg(3, 2, 2, 2, 4)) == 0.0

    def test_quadratic_scaling(self, rng, lossy):
        ch, cfg, state, T = _instance(rng, lossy)
        assert channel_power_diff(ch, state, 3.0 * T, cfg) == pytest.approx(9.0 * channel_power_diff(ch, state, T, cfg), rel=1e-12)

    def test_elementwise_expansion(self, lossy):
        rng = np.random.default_rng(12)
        ch, cfg, state, T = _instance(rng, lossy, 2, 2, 2, 2, 2)
        Hb, He = effective_channels(ch, state.phi)
        total = 0.0
        for H, s in ((Hb, cfg.sigma2_b), (He, -cfg.sigma2_e)):
            for r in range(2):
                for c in range(2):
                    total += abs(sum(H[r, k] * T[k, c] for k in range(2))) ** 2 / s
        assert channel_power_diff(ch, state, T, cfg) == pytest.approx(total, rel=1e-12)

    def test_additive_on_orthogonal_spans(self, rng, lossy):
        ch, cfg, state, _ = _instance(rng, lossy, N_a=4, N_b=3, N_s=1)
        Q, _ = np.linalg.qr(cn(rng, (4, 4)))
        T1, T2 = Q[:, :1], Q[:, 1:3]
        cfg2 = SystemConfig(N_a=4, N_b=3, N_e=3, N_s=3, M=6, sigma2_b=cfg.sigma2_b, sigma2_e=cfg.sigma2_e)
        both = channel_power_diff(ch, state, np.hstack([T1, T2]), cfg2)
        parts = channel_power_diff(ch, state, T1, cfg) + channel_power_diff(ch, state, T2, cfg)
        assert both == pytest.approx(parts, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_csec_value_matches_secrecy_rate(seed):
    rng = np.random.default_rng(seed)
    p = load_fixture(1.0)
    ch, cfg, state, T = _instance(rng, p)
    assert csec_value(ch, state.phi, T, cfg.sigma2_b, cfg.sigma2_e) == pytest.approx(
        secrecy_rate(ch, state, T, cfg).C_sec, rel=1e-12, abs=1e-12)
