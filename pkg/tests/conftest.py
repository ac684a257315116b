"""Shared fixtures: small deterministic instances reused across modules."""

import pytest

from tapreg.model import ModelParams, generate_instance


@pytest.fixture(scope="session")
def small_instance():
    """p=24, alpha=2, delta=0.5 instance; session-scoped (instances are immutable)."""
    return generate_instance(ModelParams(p=24, alpha=2.0, delta=0.5, master_seed=7), 0)


@pytest.fixture(scope="session")
def wide_instance():
    """Underdetermined n < p instance (alpha = 0.5)."""
    return generate_instance(ModelParams(p=40, alpha=0.5, delta=0.5, master_seed=3), 0)
