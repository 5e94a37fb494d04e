"""Session-scoped fixtures for experiments too heavy to rerun per test."""

import pytest

from eulerriesz import linflow, phasekernel
from eulerriesz.dispersion import DispersionParams


@pytest.fixture(scope="session")
def degenerate_decay():
    return linflow.decay_experiment_degenerate(DispersionParams(sigma=1.5))


@pytest.fixture(scope="session")
def nondegenerate_decay():
    return linflow.decay_experiment_nondegenerate(DispersionParams(sigma=1.0), scale=1.0)


@pytest.fixture(scope="session")
def phase_bound_reports():
    params = DispersionParams(sigma=0.5)
    return {
        regime: phasekernel.verify_phase_lower_bound(
            params, regime, n_samples=10**6, seed=11
        )
        for regime in ("b_large", "c_small")
    }


@pytest.fixture(scope="session")
def derivative_bound_reports():
    return phasekernel.verify_derivative_bounds(
        DispersionParams(sigma=1.5), n_samples=10**6, seed=11
    )


@pytest.fixture(scope="session")
def kernel_norm_summary_canonical():
    kp = phasekernel.KernelParams(sigma=1.0, lam=3.25, k=1.5)
    return phasekernel.kernel_norm_summary(
        phasekernel.SignPair(1, 1), kp, octaves=(1, 2, 4, 8, 16, 32, 64)
    )
