"""Samplers for Y, the dual Hahn process and the KPZ profile."""

import math

import numpy as np
import pytest
from scipy import stats

from errors import DomainError, GridError, RangeError
from measures import Params, normalizing_C
from processes import (
    PathSample, SamplerConfig, effective_sample_size, laplace_estimate, path_matrix, path_weights,
    richardson_check, sample_H_bld, sample_H_kpz, sample_T_cdh, sample_Y, y_joint_density,
)

Y_TIMES = [0.0, 0.5, 1.0]


@pytest.mark.parametrize("kwargs", [
    {'grid_points': 32},
    {'range_policy': 'wide'},
    {'range_lo': 1.0, 'range_hi': 0.0},
    {'bld_steps': 3},
    {'tail_mass_tol': 0.0},
])
def test_sampler_config_validation(kwargs):
    with pytest.raises(DomainError):
        SamplerConfig(**kwargs)


def test_sampler_config_from_mapping():
    config = SamplerConfig.from_mapping({'grid_points': '512', 'seed': 7.0, 'n_paths': 10,
                                         'range_lo': -5})
    assert config.grid_points == 512
    assert config.seed == 7
    assert config.range_lo == -5.0


@pytest.fixture(scope="module")
def y_paths():
    config = SamplerConfig(grid_points=256, seed=12345)
    return sample_Y(Y_TIMES, 50, config, Params(a=1.0, c=1.0, tau=1.0))


def test_sample_y_shape(y_paths):
    assert len(y_paths) == 50
    assert all(isinstance(p, PathSample) for p in y_paths)
    assert y_paths[0].times == tuple(Y_TIMES)
    values = path_matrix(y_paths)
    assert values.shape == (50, 3)
    assert np.all(np.isfinite(values))
    assert np.all(path_weights(y_paths) == 1.0)


def test_sample_y_prefix_does_not_depend_on_path_count(y_paths):
    config = SamplerConfig(grid_points=256, seed=12345)
    fewer = sample_Y(Y_TIMES, 20, config, Params(a=1.0, c=1.0, tau=1.0))
    assert np.array_equal(path_matrix(fewer), path_matrix(y_paths)[:20])


@pytest.mark.parametrize("times", [[0.5, 1.0], [0.0, 0.7, 0.3], [0.0, 1.5]])
def test_sample_y_grid_errors(times, small_sampler, unit_params):
    with pytest.raises(GridError):
        sample_Y(times, 10, small_sampler, unit_params)


def test_y_joint_density(unit_params):
    value = y_joint_density([0.0, 0.5, 1.0], [0.0, 0.1, -0.2], unit_params)
    assert value > 0.0
    with pytest.raises(GridError):
        y_joint_density([0.0, 1.0], [0.0, 0.1, 0.2], unit_params)
    with pytest.raises(GridError):
        y_joint_density([0.0, 0.5], [0.0, 0.1], unit_params)


def test_sample_cdh(small_sampler, unit_params):
    paths = sample_T_cdh([0.1, 0.5], 40, small_sampler, unit_params)
    values = path_matrix(paths)
    assert values.shape == (40, 2)
    assert np.all(values > 0)
    again = sample_T_cdh([0.1, 0.5], 40, small_sampler, unit_params)
    assert np.array_equal(values, path_matrix(again))


@pytest.mark.parametrize("times", [[-1.5, 0.5], [0.1, 1.0]])
def test_sample_cdh_time_range(times, small_sampler, unit_params):
    with pytest.raises(RangeError):
        sample_T_cdh(times, 10, small_sampler, unit_params)


def test_sample_kpz_brownian_part(small_sampler):
    paths = sample_H_kpz([0.0, 0.5, 1.0], 4000, small_sampler, 1.0, 1.0, freeze_y=True)
    values = path_matrix(paths)
    assert np.all(values[:, 0] == 0.0)
    # B_{t/2} has variance t/2
    assert np.var(values[:, 2]) == pytest.approx(0.5, abs=0.05)
    assert np.var(values[:, 1]) == pytest.approx(0.25, abs=0.03)


def test_sample_kpz(small_sampler):
    paths = sample_H_kpz([0.0, 0.5, 1.0], 30, small_sampler, 1.0, 1.0)
    values = path_matrix(paths)
    assert values.shape == (30, 3)
    assert np.all(values[:, 0] == 0.0)
    assert np.all(np.isfinite(values))


@pytest.mark.parametrize("a, c", [(-3.0, 4.0), (-1.0, 0.5)])
def test_sample_kpz_range(a, c, small_sampler):
    with pytest.raises(RangeError):
        sample_H_kpz([0.0, 1.0], 10, small_sampler, a, c)


@pytest.mark.parametrize("times", [[0.1, 1.0], [0.0, 1.2], [0.0, 0.6, 0.4]])
def test_sample_kpz_times(times, small_sampler):
    with pytest.raises(GridError):
        sample_H_kpz(times, 10, small_sampler, 1.0, 1.0)


def test_sample_bld(small_sampler):
    paths = sample_H_bld([0.0, 0.5, 1.0], 2000, small_sampler, 1.0, 1.0)
    weights = path_weights(paths)
    assert weights.max() == 1.0
    assert np.all(weights > 0)
    assert effective_sample_size(weights) > 20.0
    assert np.all(path_matrix(paths)[:, 0] == 0.0)


def test_sample_bld_needs_positive_parameters(small_sampler):
    with pytest.raises(RangeError):
        sample_H_bld([0.0, 1.0], 10, small_sampler, -0.5, 1.0)


def test_richardson_check(small_sampler):
    result = richardson_check(500, small_sampler, 1.0, 1.0)
    assert result['steps'] == small_sampler.bld_steps
    assert result['max_log_weight_change'] >= result['mean_log_weight_change'] >= 0.0


def test_effective_sample_size():
    assert effective_sample_size(np.ones(10)) == pytest.approx(10.0)
    assert effective_sample_size([1.0, 0.0, 0.0]) == pytest.approx(1.0)


def test_laplace_estimate():
    mean, stderr = laplace_estimate([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert stderr == pytest.approx(1.0 / math.sqrt(3.0))
    weighted_mean, _ = laplace_estimate([1.0, 2.0, 3.0], weights=[1.0, 1.0, 2.0])
    assert weighted_mean == pytest.approx(2.25)
    with pytest.raises(DomainError):
        laplace_estimate([1.0])


def test_path_matrix_empty():
    assert path_matrix([]).shape == (0, 0)


# Law checks. Each uses a fixed seed, so a pass or fail is reproducible.

@pytest.mark.slow
def test_time_reversal_swaps_boundary_parameters():
    tau = 1.0
    config = SamplerConfig(grid_points=1024, seed=101)
    forward = sample_Y([0.0, 2.0 * tau / 3.0], 20000, config, Params(a=1.5, c=0.7, tau=tau))
    swapped = sample_Y([0.0, tau / 3.0], 20000, SamplerConfig(grid_points=1024, seed=202),
                       Params(a=0.7, c=1.5, tau=tau))
    result = stats.ks_2samp(path_matrix(forward)[:, 1], path_matrix(swapped)[:, 1])
    assert result.pvalue > 0.01


@pytest.mark.slow
def test_y_increment_moment_matches_C_ratio(unit_params):
    s = 0.3
    config = SamplerConfig(grid_points=1024, seed=303)
    values = path_matrix(sample_Y([0.0, 1.0], 40000, config, unit_params))
    mean, stderr = laplace_estimate(np.exp(s * (values[:, 1] - values[:, 0])))
    expected = normalizing_C(unit_params.shifted(s)) / normalizing_C(unit_params)
    assert abs(mean - expected) <= 3.0 * stderr


@pytest.mark.slow
def test_kpz_and_bld_representations_agree():
    s = 0.5
    config = SamplerConfig(grid_points=1024, seed=404)
    kpz = path_matrix(sample_H_kpz([0.0, 1.0], 20000, config, 1.0, 1.0))
    kpz_mean, kpz_err = laplace_estimate(np.exp(-s * kpz[:, 1]))

    bld_paths = sample_H_bld([0.0, 1.0], 20000, SamplerConfig(seed=505), 1.0, 1.0)
    bld = path_matrix(bld_paths)
    bld_mean, bld_err = laplace_estimate(np.exp(-s * bld[:, 1]), weights=path_weights(bld_paths))
    assert abs(kpz_mean - bld_mean) <= 3.0 * math.hypot(kpz_err, bld_err)


@pytest.mark.slow
def test_cdh_two_steps_match_one_step(unit_params):
    first = SamplerConfig(grid_points=1024, seed=606)
    second = SamplerConfig(grid_points=1024, seed=707)
    two_step = path_matrix(sample_T_cdh([-0.5, 0.0, 0.5], 20000, first, unit_params))[:, 2]
    one_step = path_matrix(sample_T_cdh([-0.5, 0.5], 20000, second, unit_params))[:, 1]
    # 20 bins at quantiles of the pooled sample
    inner = np.quantile(np.concatenate([two_step, one_step]), np.linspace(0.0, 1.0, 21)[1:-1])
    table = np.vstack([np.bincount(np.searchsorted(inner, sample), minlength=20)
                       for sample in (two_step, one_step)])
    _, pvalue, _, _ = stats.chi2_contingency(table)
    assert pvalue > 0.01
