"""Shared fixtures for the numerics tests."""

import pytest

from measures import Params
from processes import SamplerConfig


@pytest.fixture
def unit_params():
    return Params(a=1.0, c=1.0, tau=1.0)


@pytest.fixture
def skew_params():
    return Params(a=1.5, c=0.7, tau=1.0)


@pytest.fixture
def small_sampler():
    """Coarse grid so that sampling tests stay quick."""
    return SamplerConfig(grid_points=256, seed=12345, bld_steps=64)


@pytest.fixture
def output_dir(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
