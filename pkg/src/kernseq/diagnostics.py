"""Randomised moment-existence test.

Decides between H0: E|X|^k = infinity and the finite-moment alternative
from the scale-free statistic

    mu_k  = mean(|X|^k) / mean(X^2)^{k/2},      psi_k = exp(mu_k) - 1.

Each of B replications draws N = B standard normals xi, forms the
indicators zeta_n(u) = 1[psi_k^{1/2} xi_n <= u] at u = +-sqrt(2), the sums
vartheta(u) = (2/sqrt(N)) sum (zeta_n(u) - 1/2), and Theta = (vartheta(+)^2
+ vartheta(-)^2)/2.  Under an infinite moment psi_k diverges, the
indicators degenerate to fair coin flips and Theta is chi-square(1); the
confidence function Q = (1/B) sum 1[Theta_b <= c_alpha] then concentrates
near 1 - alpha.  Decision: infinite moment iff
Q >= (1 - alpha) - sqrt(alpha (1 - alpha)) / B^{1/4}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelConfigError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MomentTestResult:
    order_k: int
    psi_k: float
    Q: float
    threshold: float
    decide_infinite_moment: bool
    B: int
    alpha: float


def _norm_ppf(p: float) -> float:
    """Inverse standard-normal CDF (Acklam's rational approximation, ~1e-9)."""
    if not (0.0 < p < 1.0):
        raise KernelConfigError(f"probability must lie in (0, 1), got {p}")
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    plow, phigh = 0.02425, 1 - 0.02425
    if p < plow:
        q = math.sqrt(-2 * math.log(p))
        return (((((c[0]*q+c[1])*q+c[2])*q+c[3])*q+c[4])*q+c[5]) / \
               ((((d[0]*q+d[1])*q+d[2])*q+d[3])*q+1)
    if p > phigh:
        q = math.sqrt(-2 * math.log(1 - p))
        return -(((((c[0]*q+c[1])*q+c[2])*q+c[3])*q+c[4])*q+c[5]) / \
               ((((d[0]*q+d[1])*q+d[2])*q+d[3])*q+1)
    q = p - 0.5
    r = q * q
    return (((((a[0]*r+a[1])*r+a[2])*r+a[3])*r+a[4])*r+a[5])*q / \
           (((((b[0]*r+b[1])*r+b[2])*r+b[3])*r+b[4])*r+1)


def chi2_upper_quantile(alpha: float) -> float:
    """Upper-alpha quantile of chi-square(1): the square of z_{1-alpha/2}."""
    z = _norm_ppf(1.0 - alpha / 2.0)
    return z * z


def _confidence(psi: float, alpha: float, B: int, seed: int) -> float:
    """Q = fraction of randomised Theta replications below c_alpha."""
    c_a = chi2_upper_quantile(alpha)
    sqrt_psi = math.sqrt(psi)
    count = 0
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence((seed, b)))
        z = sqrt_psi * rng.standard_normal(B)
        vp = 2.0 / math.sqrt(B) * np.sum((z <= _SQRT2) - 0.5)
        vn = 2.0 / math.sqrt(B) * np.sum((z <= -_SQRT2) - 0.5)
        theta = 0.5 * (vp * vp + vn * vn)
        count += bool(theta <= c_a)
    return count / B


def moment_test(sample, order_k: int, alpha: float = 0.05, B: int = 2000,
                seed: int = 0) -> MomentTestResult:
    """Run the randomised test on a scalar sample."""
    x = np.asarray(sample, dtype=float).ravel()
    if order_k < 1:
        raise KernelConfigError("order_k must be >= 1")
    if B < 100:
        raise KernelConfigError("B must be >= 100")
    m2 = float(np.mean(x * x))
    if m2 <= 0.0:
        raise KernelConfigError("all-zero sample: mu_k undefined")
    mu = float(np.mean(np.abs(x) ** order_k) / m2 ** (order_k / 2.0))
    psi = math.expm1(min(mu, 700.0))  # cap avoids overflow; decision saturates
    Q = _confidence(psi, alpha, B, seed)
    threshold = (1.0 - alpha) - math.sqrt(alpha * (1.0 - alpha)) / B**0.25
    return MomentTestResult(order_k=order_k, psi_k=psi, Q=Q, threshold=threshold,
                            decide_infinite_moment=bool(Q >= threshold),
                            B=B, alpha=alpha)


def vector_moment_test(sample, order_k: int, alpha: float = 0.05, B: int = 2000,
                       seed: int = 0, reduce: str | int = "l2") -> MomentTestResult:
    """Vector data variant: reduce rows to scalars by L2 norm or coordinate."""
    X = np.atleast_2d(np.asarray(sample, dtype=float))
    if reduce == "l2":
        x = np.linalg.norm(X, axis=1)
    elif isinstance(reduce, int):
        x = X[:, reduce]
    else:
        raise KernelConfigError(f"unknown reduction {reduce!r}")
    return moment_test(x, order_k, alpha=alpha, B=B, seed=seed)
