"""Shared fixtures and hypothesis configuration."""

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from electricwalk import Coin, FieldSpec, WalkState

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def hadamard():
    return Coin.hadamard()


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_state(rng, width=5, x_min=-2, dps=None) -> WalkState:
    raw = rng.normal(size=(width, 2)) + 1j * rng.normal(size=(width, 2))
    raw /= np.linalg.norm(raw)
    state = WalkState(x_min, raw.astype(np.complex128))
    return state if dps is None else state.to_precision(dps)


def random_coin(rng) -> Coin:
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return Coin(complex(v[0], v[1]), complex(v[2], v[3]), tol=1e-12)
