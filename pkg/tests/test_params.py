import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from swarmroom.params import (
    DEFAULT_PRIOR,
    PARAM_NAMES,
    FixedParams,
    GlobalParams,
    PriorSpec,
    SimConfig,
    prior_log_density,
    sample_prior,
    sample_prior_array,
    validate_params,
)
from swarmroom.rng import derive_seed, make_rng

N_DRAWS = 1_000_000


@pytest.fixture(scope="module")
def draws():
    return sample_prior_array(DEFAULT_PRIOR, make_rng(17), N_DRAWS)


@pytest.mark.parametrize(
    "column, mean, var",
    [(0, 0.5, 0.05), (2, 0.5, 0.05), (3, 2 / 7, 10 / 392)],
)
def test_beta_marginal_moments(draws, column, mean, var):
    x = draws[:, column]
    se_mean = math.sqrt(var / N_DRAWS)
    assert abs(x.mean() - mean) < 3 * se_mean
    # variance of the sample variance for large n is roughly (m4 - var^2) / n
    m4 = np.mean((x - mean) ** 4)
    assert abs(x.var() - var) < 3 * math.sqrt((m4 - var**2) / N_DRAWS)


def test_lognormal_median_and_mean(draws):
    r = draws[:, 1]
    # standard error of the median: 1 / (2 f(m) sqrt(n)) with f(1) the LogNormal pdf at 1
    f1 = 1 / (0.5 * math.sqrt(2 * math.pi))
    assert abs(np.median(r) - 1.0) < 3 / (2 * f1 * math.sqrt(N_DRAWS))
    mean = math.exp(0.125)
    sd = math.sqrt((math.exp(0.25) - 1) * math.exp(0.25))
    assert abs(r.mean() - mean) < 3 * sd / math.sqrt(N_DRAWS)


def test_prior_draws_are_valid_params(draws):
    sample = draws[:100_000]
    assert (sample[:, 0] >= 0).all() and (sample[:, 0] <= 1).all()
    assert (sample[:, 1] > 0).all()
    for k in (2, 3):
        assert ((sample[:, k] > 0) & (sample[:, k] < 1)).all()
    assert all(not validate_params(GlobalParams.from_array(row)) for row in sample[:2000])


def test_sample_prior_is_deterministic():
    a = sample_prior(DEFAULT_PRIOR, make_rng(5))
    b = sample_prior(DEFAULT_PRIOR, make_rng(5))
    assert a == b
    assert a != sample_prior(DEFAULT_PRIOR, make_rng(6))


def test_log_density_closed_form():
    # each factor written out by hand
    beta22 = math.log(6 * 0.5 * 0.5)
    lognormal_at_1 = -math.log(0.5 * math.sqrt(2 * math.pi))
    x = 2 / 7
    beta25 = math.log(30 * x * (1 - x) ** 4)
    expected = beta22 + lognormal_at_1 + beta22 + beta25
    got = prior_log_density(DEFAULT_PRIOR, GlobalParams(0.5, 1.0, 0.5, 2 / 7))
    assert got == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "params",
    [GlobalParams(1.5, 1.0, 0.5, 0.2), GlobalParams(0.0, 1.0, 0.5, 0.2), GlobalParams(0.5, -1.0, 0.5, 0.2),
     GlobalParams(0.5, 1.0, 1.0, 0.2), GlobalParams(0.5, 1.0, 0.5, 0.0)],
)
def test_log_density_outside_support(params):
    assert prior_log_density(DEFAULT_PRIOR, params) == -math.inf


@pytest.mark.parametrize("name", PARAM_NAMES)
def test_marginal_density_integrates_to_one(name):
    dist = DEFAULT_PRIOR.marginal(name)
    lo, hi = DEFAULT_PRIOR.support(name)
    total, _ = integrate.quad(dist.pdf, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert abs(total - 1) < 1e-6


def test_validate_params_examples():
    assert validate_params(GlobalParams(0.5, 1.0, 0.5, 0.2)) == []
    (msg,) = validate_params(GlobalParams(-0.1, 1.0, 0.5, 0.2))
    assert msg.startswith("w out of range")
    (msg,) = validate_params(GlobalParams(0.5, 0.0, 0.5, 0.2))
    assert msg.startswith("r not positive")
    assert len(validate_params(GlobalParams(2.0, -1.0, 0.0, 1.0))) == 4


@pytest.mark.parametrize(
    "kwargs",
    [{"num_agents": 0}, {"num_beacons": 0}, {"num_steps": 0}, {"dt": 0.0}, {"seed": -1}, {"seed": 2**64}],
)
def test_sim_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_sim_config_defaults():
    cfg = SimConfig()
    assert (cfg.num_agents, cfg.num_beacons, cfg.num_steps, cfg.dt) == (49, 8, 600, 0.1)


@pytest.mark.parametrize("kappa, sigma", [(0.02, 0.05), (-0.001, 0.05), (0.01, -0.1)])
def test_fixed_params_bounds(kappa, sigma):
    with pytest.raises(ValueError):
        FixedParams(kappa, sigma)


def test_prior_spec_rejects_bad_shapes():
    with pytest.raises(ValueError):
        PriorSpec(w=(0.0, 2.0))
    with pytest.raises(ValueError):
        PriorSpec(r=(0.0, 0.0))


def test_analytic_prior_variances():
    np.testing.assert_allclose(
        DEFAULT_PRIOR.variances(),
        [0.05, (math.exp(0.25) - 1) * math.exp(0.25), 0.05, 10 / 392],
        rtol=1e-12,
    )


@given(st.floats(0, 1), st.floats(1e-3, 10), st.floats(1e-3, 0.999), st.floats(1e-3, 0.999))
def test_params_array_round_trip(w, r, v, eta):
    p = GlobalParams(w, r, v, eta)
    assert GlobalParams.from_array(p.as_array()) == p


@settings(max_examples=200)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**20))
def test_derived_seeds_injective_in_last_index(base, i):
    assert derive_seed(base, 3, i) != derive_seed(base, 3, i + 1)
    assert 0 <= derive_seed(base, i) < 2**64


def test_row_seeds_distinct():
    seeds = {derive_seed(123, 3, i) for i in range(100_000)}
    assert len(seeds) == 100_000


def test_make_rng_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        make_rng(2**64)
    make_rng(2**64 - 1).random()
