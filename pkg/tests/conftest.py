"""Shared helpers: seeded random instances of valid protocols/environments."""

import numpy as np
import pytest

from token_lab import PopulationParams, PopulationStrategy, Protocol


def random_params(rng, beta_lo=0.2, beta_hi=0.97):
    rho = float(rng.uniform(0.05, 0.5))
    beta = float(rng.uniform(beta_lo, beta_hi))
    c = float(rng.uniform(0.5, 2.0))
    r = float(rng.uniform(1.05, 8.0))
    return PopulationParams(rho=rho, beta=beta, b=r * c, c=c)


def random_protocol(rng, k_max=50):
    K = int(rng.integers(1, k_max + 1))
    alpha = float(rng.uniform(0.05, 0.95)) * K
    return Protocol(alpha, PopulationStrategy.pure(K))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
