import numpy as np
import pytest

from ris_secrecy.channel import ChannelSet
from ris_secrecy.errors import DomainError, NumericError
from ris_secrecy.oracle import (
    FdSpec,
    fd_grad_T,
    fd_grad_theta,
    grid_search_theta,
    rate_mp,
    relative_error,
    siso_gains,
    siso_secrecy_objective,
)
from ris_secrecy.ris_model import RisParams


def test_spec_validation():
    with pytest.raises(DomainError):
        FdSpec(h=0.0)
    with pytest.raises(DomainError):
        FdSpec(scheme="forward")


def test_sinusoid_recovered():
    th = np.linspace(-1.0, 1.0, 7)
    r = fd_grad_theta(lambda v: np.sum(np.sin(v)), th)
    np.testing.assert_allclose(r.grad, np.cos(th), atol=1e-9)
    assert not r.one_sided.any()


def test_quadratic_recovered():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -0.2])
    r = fd_grad_theta(lambda v: 0.5 * v @ A @ v, x)
    np.testing.assert_allclose(r.grad, A @ x, atol=1e-9)


def test_boundary_one_sided():
    r = fd_grad_theta(lambda v: np.sum(v**2), [1.0, 0.0], bounds=(-1.0, 1.0))
    assert r.one_sided.tolist() == [True, False]
    assert r.grad[0] == pytest.approx(2.0, abs=1e-5)


def test_non_finite_objective():
    with pytest.raises(NumericError):
        fd_grad_theta(lambda v: np.nan, [0.0])


def test_complex_convention():
    # f(T) = |a^T T|^2 has df/dT* = conj(a) (a^T T)
    a = np.array([1.0 + 2j, -0.5j])
    T = np.array([[0.3 - 0.1j], [0.2 + 0.7j]])
    G = fd_grad_T(lambda X: abs(a @ X[:, 0]) ** 2, T)
    np.testing.assert_allclose(G[:, 0], np.conj(a) * (a @ T[:, 0]), atol=1e-9)


def test_complex_linear_real_part():
    # f(T) = Re(c T) -> df/dT* = conj(c) / 2
    c = 0.4 - 1.5j
    G = fd_grad_T(lambda X: (c * X[0, 0]).real, np.array([[0.1 + 0.1j]]))
    assert G[0, 0] == pytest.approx(np.conj(c) / 2, abs=1e-9)


def test_relative_error():
    assert relative_error([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert relative_error([1.1], [1.0]) == pytest.approx(0.1)


P = RisParams(0.5, 1.0, 0.0, -2.0, 2.0)


class TestGrid:
    def test_constant(self):
        th, v = grid_search_theta(lambda x: 3.0, P, 11, M=2)
        assert v == 3.0
        assert np.all((th >= -2.0) & (th <= 2.0))

    def test_cost_guard(self):
        with pytest.raises(DomainError):
            grid_search_theta(lambda x: 0.0, P, 5, M=4)

    def test_concave_single_angle(self):
        th, v = grid_search_theta(lambda x: -((x[0] - 0.37) ** 2), P, 401, M=1)
        assert abs(th[0] - 0.37) <= 4.0 / 400

    def test_batched_equals_scalar(self):
        f = lambda x: np.sin(x[0]) * np.cos(2 * x[1])  # noqa: E731
        fb = lambda X: np.sin(X[:, 0]) * np.cos(2 * X[:, 1])  # noqa: E731
        a = grid_search_theta(f, P, 31, M=2)
        b = grid_search_theta(fb, P, 31, M=2, batched=True, chunk=97)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_refinement_bounded_by_lipschitz(self):
        f = lambda X: np.sin(3 * X[:, 0]) + np.cos(2 * X[:, 1])  # noqa: E731
        lip = np.hypot(3.0, 2.0)
        _, v1 = grid_search_theta(f, P, 41, M=2, batched=True)
        _, v2 = grid_search_theta(f, P, 81, M=2, batched=True)
        cell = 4.0 / 40
        assert abs(v2 - v1) <= lip * cell * np.sqrt(2)

    def test_first_maximum_wins(self):
        th, _ = grid_search_theta(lambda X: np.zeros(len(X)), P, 5, M=2, batched=True)
        np.testing.assert_array_equal(th, [-2.0, -2.0])


def test_rate_mp_identity():
    assert rate_mp(np.zeros((2, 2)), np.eye(2), 1.0) == 0.0


def test_siso_helpers():
    rng = np.random.default_rng(0)
    c = lambda s: rng.standard_normal(s) + 1j * rng.standard_normal(s)  # noqa: E731
    ch = ChannelSet(c((1, 1)), c((2, 1)), c((1, 2)), c((1, 1)), c((1, 2)))
    th = np.array([[0.1, -0.4]])
    gb, ge = siso_gains(ch, P, th)
    beta = P.beta_min + (1 - P.beta_min) * (np.sin(th[0]) + 1) / 2
    phi = beta * np.exp(1j * th[0])
    hb = ch.H_ab[0, 0] + np.sum(ch.H_rb[0] * phi * ch.H_ar[:, 0])
    assert gb[0] == pytest.approx(abs(hb) ** 2)
    f = siso_secrecy_objective(ch, P, 1.0, 1.0, 1.0)
    assert f(th)[0] == pytest.approx(max(np.log2(1 + gb[0]) - np.log2(1 + ge[0]), 0.0))
