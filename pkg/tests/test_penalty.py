import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixhom import ConfigurationError, DomainError, Kernel, fit_null
from mixhom.penalty import (A_N_COEFFICIENTS, PenaltyConfig, a_n_formula, p_alpha, p_sigma,
                            resolve_a_n)


def test_p_alpha_examples():
    assert p_alpha(0.5) == 0.0
    assert p_alpha(0.25) == pytest.approx(-0.693147, abs=1e-6)
    assert p_alpha(0.75) == pytest.approx(math.log(0.5), abs=1e-15)
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            p_alpha(bad)


def test_p_alpha_c1_conditions():
    grid = np.linspace(1e-6, 1 - 1e-6, 20001)
    vals = np.array([p_alpha(a) for a in grid])
    assert grid[np.argmax(vals)] == pytest.approx(0.5, abs=1e-4)
    assert np.all(vals[np.abs(grid - 0.5) > 1e-3] < 0)
    assert p_alpha(1e-300) < -600
    # continuity: no jumps larger than the local slope allows
    assert np.max(np.abs(np.diff(vals[100:-100]))) < 0.01


@given(st.floats(1e-6, 0.5))
def test_p_alpha_branches(a):
    assert p_alpha(a) == pytest.approx(math.log(2 * a), abs=1e-12)
    assert p_alpha(1 - a) == pytest.approx(math.log(2 * a), abs=1e-9)


def test_p_sigma_examples():
    cfg = PenaltyConfig(0.5, 1.0)
    assert p_sigma(1.0, cfg) == pytest.approx(-0.5)
    assert p_sigma(2.0, cfg) == pytest.approx(-0.818147, abs=1e-6)
    with pytest.raises(DomainError):
        p_sigma(0.0, cfg)
    assert p_sigma(1e-8, cfg) < -1e10
    assert p_sigma(1e100, cfg) < -100


@given(a=st.floats(0.01, 5), s_hat=st.floats(0.01, 100))
def test_p_sigma_maximised_at_sigma_hat(a, s_hat):
    cfg = PenaltyConfig(a, s_hat)
    grid = s_hat * np.exp(np.linspace(-3, 3, 6001))
    vals = np.array([p_sigma(s, cfg) for s in grid])
    assert grid[np.argmax(vals)] == pytest.approx(s_hat, rel=2e-3)
    assert p_sigma(s_hat, cfg) == pytest.approx(-a, rel=1e-12)
    assert np.all(vals <= -a + 1e-12)


@given(scale=st.floats(0.01, 100), shift=st.floats(-50, 50), sigma=st.floats(0.1, 10))
def test_p_sigma_scale_invariance_through_null_fit(scale, shift, sigma):
    k = Kernel.parse("logistic")
    x = np.random.default_rng(0).logistic(size=60)
    f1 = fit_null(k, x)
    f2 = fit_null(k, scale * x + shift)
    v1 = p_sigma(sigma, PenaltyConfig(0.4, f1.sigma_hat))
    v2 = p_sigma(scale * sigma, PenaltyConfig(0.4, f2.sigma_hat))
    assert v2 == pytest.approx(v1, rel=1e-8, abs=1e-10)


def test_a_n_formula_examples():
    assert a_n_formula(Kernel.parse("logistic"), 300) == pytest.approx(0.4570, abs=1e-4)
    assert a_n_formula(Kernel.parse("extreme"), 100) == pytest.approx(0.3716, abs=1e-4)
    assert a_n_formula(Kernel.parse("normal"), 1000) == pytest.approx(0.4177, abs=1e-4)
    assert a_n_formula(Kernel.parse("t6"), 200) == a_n_formula(Kernel.parse("t14"), 200)
    with pytest.raises(DomainError):
        a_n_formula(Kernel.parse("normal"), 0)


@pytest.mark.parametrize("family", sorted(A_N_COEFFICIENTS))
def test_a_n_monotone_and_bounded(family):
    k = Kernel("student_t", 10.0) if family == "student_t" else Kernel(family)
    c0, _ = A_N_COEFFICIENTS[family]
    vals = np.array([a_n_formula(k, n) for n in range(1, 5000)])
    assert np.all(np.diff(vals) >= 0)
    # exp(c1/n) underflows relative to 0.2 for tiny n; strict beyond that
    assert np.all(np.diff(vals[30:]) > 0)
    assert np.all(vals >= 0.2) and np.all(vals[30:] > 0.2)
    assert np.all(vals < 0.2 + math.exp(c0))


def test_resolve_a_n():
    k = Kernel.parse("logistic")
    assert resolve_a_n("auto", k, 100) == a_n_formula(k, 100)
    assert resolve_a_n(None, k, 100) == a_n_formula(k, 100)
    assert resolve_a_n("0.3", k, 100) == 0.3
    for bad in ("x", -1, 0):
        with pytest.raises(ConfigurationError):
            resolve_a_n(bad, k, 100)
