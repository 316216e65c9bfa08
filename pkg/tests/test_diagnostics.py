import math

import numpy as np
import pytest

from kernseq.diagnostics import (MomentTestResult, _confidence,
                                 chi2_upper_quantile, moment_test,
                                 vector_moment_test)
from kernseq.kernels import KernelConfigError


def test_constant_sample_mu_one():
    res = moment_test(np.full(100, 3.0), order_k=4, B=100, seed=0)
    # |x|^4 / (x^2)^2 = 1 exactly, so psi = e - 1
    assert res.psi_k == pytest.approx(math.e - 1.0, rel=1e-12)


def test_scale_invariance_exact():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(500)
    a = moment_test(x, 4, B=200, seed=3)
    b = moment_test(4.0 * x, 4, B=200, seed=3)  # power-of-two scale: exact
    assert a.psi_k == b.psi_k
    assert a.Q == b.Q and a.decide_infinite_moment == b.decide_infinite_moment


def test_determinism():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(300)
    a = moment_test(x, 4, B=150, seed=7)
    b = moment_test(x, 4, B=150, seed=7)
    assert a == b


def test_confidence_increases_with_psi():
    # small psi: the indicator sums are far from fair coins, Theta explodes;
    # huge psi: Theta is chi-square(1) and Q concentrates near 1 - alpha
    qs = [_confidence(psi, 0.05, 500, 2) for psi in (0.01, 100.0, 1e8)]
    assert qs[0] < qs[2] and qs[1] <= qs[2]
    assert qs[2] == pytest.approx(0.95, abs=0.03)


def test_chi2_quantiles():
    assert chi2_upper_quantile(0.05) == pytest.approx(3.841458820694124, abs=1e-6)
    assert chi2_upper_quantile(0.01) == pytest.approx(6.634896601021214, abs=1e-6)


def test_gaussian_fourth_moment_finite():
    rng = np.random.default_rng(0)
    res = moment_test(rng.standard_normal(2000), order_k=4, B=500, seed=1)
    assert not res.decide_infinite_moment
    assert res.Q < res.threshold
    assert res.psi_k == pytest.approx(math.expm1(3.0), rel=0.5)


def test_cauchy_fourth_moment_infinite():
    rng = np.random.default_rng(0)
    res = moment_test(rng.standard_cauchy(2000), order_k=4, B=500, seed=1)
    assert res.decide_infinite_moment
    assert res.Q >= res.threshold


def test_vector_variants():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((800, 3))
    res = vector_moment_test(X, 4, B=300, seed=4)
    assert isinstance(res, MomentTestResult)
    assert not res.decide_infinite_moment
    col = vector_moment_test(X, 4, B=300, seed=4, reduce=1)
    assert col.psi_k == moment_test(X[:, 1], 4, B=300, seed=4).psi_k
    with pytest.raises(KernelConfigError):
        vector_moment_test(X, 4, reduce="max")


def test_validation():
    with pytest.raises(KernelConfigError):
        moment_test(np.ones(10), order_k=0)
    with pytest.raises(KernelConfigError):
        moment_test(np.ones(10), order_k=4, B=10)
    with pytest.raises(KernelConfigError):
        moment_test(np.zeros(10), order_k=4)
