import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixhom import DomainError, Kernel, fit_null, lrt_statistic
from mixhom import emtest, lrt
from mixhom.kernels import sample
from mixhom.lrt import bootstrap_null, fit_full_penalized, full_em, table_p_value
from mixhom.penalty import PenaltyConfig, p_sigma

KERNELS = ["logistic", "extreme", "t10", "normal"]


def _mixture(rng, n=200, gap=3.0):
    x = rng.logistic(size=n)
    x[: n // 2] += gap
    return x


def test_objective_beats_null(kernel, rng):
    x = _mixture(rng, 120)
    null = fit_null(kernel, x)
    full = fit_full_penalized(kernel, x, null)
    cfg = PenaltyConfig(1.0 / x.size, null.sigma_hat)
    assert full.objective >= null.loglik + 2 * p_sigma(null.sigma_hat, cfg) - 1e-9


@settings(max_examples=15)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(KERNELS), n=st.integers(10, 120))
def test_statistic_nonnegative(seed, name, n):
    k = Kernel.parse(name)
    assert lrt_statistic(k, sample(k, n, seed)).statistic >= -1e-6


@settings(max_examples=15)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(KERNELS),
       a=st.floats(1e-3, 1e3), b=st.floats(-1e4, 1e4))
def test_affine_invariance(seed, name, a, b):
    k = Kernel.parse(name)
    x = sample(k, 60, seed)
    x[:25] += 2.5
    s1 = lrt_statistic(k, x).statistic
    s2 = lrt_statistic(k, a * x + b).statistic
    assert s2 == pytest.approx(s1, rel=1e-4, abs=1e-6)


def test_two_cluster_proportion(rng):
    k = Kernel.parse("normal")
    x = np.concatenate([rng.normal(0, 1, 70), rng.normal(0, 1, 130)])
    s = fit_null(k, x).sigma_hat
    x[:70] -= 5 * s
    x[70:] += 5 * s
    G = fit_full_penalized(k, x).G
    a_low = G.alpha1 if G.theta1.mu < G.theta2.mu else G.alpha2
    assert abs(a_low - 0.35) < 0.15


def test_start_grid_saturation(monkeypatch, rng):
    k = Kernel.parse("logistic")
    x = _mixture(rng, 150, 2.0)
    base = fit_full_penalized(k, x).objective
    monkeypatch.setattr(lrt, "START_ALPHAS", (0.05, 0.1, 0.2, 0.3, 0.4, 0.5))
    monkeypatch.setattr(emtest, "START_SCALES", (0.35, 0.5, 0.7, 1.0))
    assert fit_full_penalized(k, x).objective == pytest.approx(base, abs=1e-6)


@pytest.mark.parametrize("name", KERNELS)
def test_full_em_ascent(name, rng):
    k = Kernel.parse(name)
    z = _mixture(rng, 100)
    z = (z - z.mean()) / z.std()
    p0 = np.array([-0.5, math.log(0.6), 0.7, math.log(0.8), 0.3])
    _, trace = full_em(k, z, p0, 1.0 / z.size, 300)
    assert len(trace) > 10
    assert np.all(np.diff(trace) >= -1e-8)


def test_homogeneous_normal_rarely_rejects():
    k = Kernel.parse("normal")
    table = bootstrap_null(k, 100, 200, seed=1)
    crit = np.quantile(table, 0.95)
    stats = [lrt_statistic(k, np.random.default_rng([7, s]).normal(3, 2, 100)).statistic
             for s in range(30)]
    assert np.mean(np.array(stats) < crit) >= 0.9


def test_bootstrap_null_table():
    k = Kernel.parse("logistic")
    t = bootstrap_null(k, 30, 100, seed=3)
    assert t.size == 100 and np.all(np.diff(t) >= 0)
    np.testing.assert_array_equal(t, bootstrap_null(k, 30, 100, seed=3))
    e = bootstrap_null(k, 30, 100, seed=3, statistic="em")
    assert e.size == 100 and np.all(np.diff(e) >= 0)
    with pytest.raises(DomainError):
        bootstrap_null(k, 30, 99)
    with pytest.raises(DomainError):
        bootstrap_null(k, 30, 100, statistic="wald")


def test_table_p_value():
    t = np.arange(1.0, 100.0)  # 99 values
    assert table_p_value(t, 0.0) == 1.0
    assert table_p_value(t, 99.0) == pytest.approx(2 / 100)
    assert table_p_value(t, 1e9) == pytest.approx(1 / 100)
