"""Shared builders for random test instances."""

import numpy as np

from ris_secrecy.channel import ChannelSet


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channels(rng, N_a, N_b, N_e, M):
    """Unit-variance channels: objective values of order one, good for finite differences."""
    return ChannelSet(
        H_ab=cn(rng, (N_b, N_a)),
        H_ar=cn(rng, (M, N_a)),
        H_rb=cn(rng, (N_b, M)),
        H_ae=cn(rng, (N_e, N_a)),
        H_re=cn(rng, (N_e, M)),
    )


def random_feasible_theta(rng, params, M):
    return params.theta_min + rng.random(M) * (params.theta_max - params.theta_min)


# one "criterion N: PASS|FAIL ..." line per acceptance criterion, printed at session end
ACCEPTANCE = {}


def record_criterion(n, ok, detail):
    ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
