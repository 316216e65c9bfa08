"""Symmetric kernels h(x, y) on R^d used by the changepoint detectors.

A kernel here is a symmetric, pairwise-evaluable function; the detectors
require h to annihilate nothing special beyond symmetry, but the shipped
variants are all distribution-determining metrics (or metric-like
divergences):

* ``EnergyKernel(eta, norm)``      -- ||x - y||^eta for the L1 or L2 norm,
  eta in (0, 2); eta = 1, L2 gives the classical energy-distance kernel.
* ``GaussianDerivedKernel(a)``     -- [1 - exp(-||x - y||_2^2 / (2 a^2))]^{1/2},
  the metric derived from a Gaussian kernel with bandwidth ``a``.
* ``GrothendieckKernel()``         -- arccos[(1 + <x,y>) / sqrt((1+<x,x>)(1+<y,y>))].
* ``PsdDerivedMetricKernel(base, s)`` -- [K(x,x) + K(y,y) - 2 K(x,y)]^s for a
  positive semidefinite base kernel K and s in (0, 1/2].
* ``CustomKernel(fn)``             -- escape hatch for arbitrary symmetric
  callables (used heavily by the test suite).

All pairwise evaluation is vectorized through :func:`kernel_matrix`.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist


class KernelConfigError(ValueError):
    """Invalid kernel parameters."""


class DimensionMismatchError(ValueError):
    """Operands of incompatible dimension."""


class DegenerateBandwidthError(ValueError):
    """Median bandwidth requested on a sample of identical points."""


def _as_points(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-d sample, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# kernel variants


@dataclass(frozen=True)
class EnergyKernel:
    eta: float = 1.0
    norm: str = "l2"

    def __post_init__(self):
        if not (0.0 < self.eta < 2.0):
            raise KernelConfigError(f"eta must lie in (0, 2), got {self.eta}")
        if self.norm not in ("l1", "l2"):
            raise KernelConfigError(f"norm must be 'l1' or 'l2', got {self.norm!r}")


@dataclass(frozen=True)
class GaussianDerivedKernel:
    # `a` may be the string "median": resolve via `resolve_kernel` before use.
    a: Union[float, str] = 1.0

    def __post_init__(self):
        if isinstance(self.a, str):
            if self.a != "median":
                raise KernelConfigError(f"bandwidth string must be 'median', got {self.a!r}")
        elif not (isinstance(self.a, numbers.Real) and self.a > 0):
            raise KernelConfigError(f"bandwidth a must be > 0, got {self.a}")


@dataclass(frozen=True)
class GrothendieckKernel:
    pass


@dataclass(frozen=True)
class GaussianPsdKernel:
    """Positive semidefinite base kernel exp(-||x-y||^2 / (2 a^2))."""

    a: Union[float, str] = 1.0

    def __post_init__(self):
        if isinstance(self.a, str):
            if self.a != "median":
                raise KernelConfigError(f"bandwidth string must be 'median', got {self.a!r}")
        elif not (isinstance(self.a, numbers.Real) and self.a > 0):
            raise KernelConfigError(f"bandwidth a must be > 0, got {self.a}")


@dataclass(frozen=True)
class TablePsdKernel:
    """Finite eigen-expansion K(x,y) = sum_i w_i f_i(x) f_i(y), w_i >= 0.

    A test double for PSD base kernels: positive semidefiniteness is
    immediate from the expansion.
    """

    weights: tuple
    funcs: tuple  # callables mapping a (n, d) array to an (n,) array

    def __post_init__(self):
        if len(self.weights) != len(self.funcs):
            raise KernelConfigError("weights and funcs must have equal length")
        if any(w < 0 for w in self.weights):
            raise KernelConfigError("eigen-expansion weights must be >= 0")


@dataclass(frozen=True)
class PsdDerivedMetricKernel:
    base: object  # GaussianPsdKernel or TablePsdKernel
    s: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.s <= 0.5):
            raise KernelConfigError(f"s must lie in (0, 1/2], got {self.s}")
        if not isinstance(self.base, (GaussianPsdKernel, TablePsdKernel)):
            raise KernelConfigError(f"unsupported PSD base kernel {self.base!r}")


@dataclass(frozen=True)
class CustomKernel:
    """Arbitrary symmetric kernel.

    ``fn(x, y)`` evaluates a single pair of 1-d vectors; ``pairwise``, if
    given, must map two (n, d)/(n', d) arrays to an (n, n') matrix and is
    used for vectorized evaluation.
    """

    fn: Callable
    pairwise: Callable | None = None


KernelSpec = Union[
    EnergyKernel,
    GaussianDerivedKernel,
    GrothendieckKernel,
    PsdDerivedMetricKernel,
    CustomKernel,
]


# ---------------------------------------------------------------------------
# evaluation


def _psd_gram(base, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if isinstance(base, GaussianPsdKernel):
        if isinstance(base.a, str):
            raise KernelConfigError("bandwidth 'median' must be resolved before evaluation")
        d2 = cdist(X, Y, "sqeuclidean")
        return np.exp(-d2 / (2.0 * base.a**2))
    if isinstance(base, TablePsdKernel):
        out = np.zeros((len(X), len(Y)))
        for w, f in zip(base.weights, base.funcs):
            out += w * np.outer(f(X), f(Y))
        return out
    raise KernelConfigError(f"unsupported PSD base kernel {base!r}")


def _psd_diag(base, X: np.ndarray) -> np.ndarray:
    if isinstance(base, GaussianPsdKernel):
        return np.ones(len(X))
    if isinstance(base, TablePsdKernel):
        out = np.zeros(len(X))
        for w, f in zip(base.weights, base.funcs):
            out += w * f(X) ** 2
        return out
    raise KernelConfigError(f"unsupported PSD base kernel {base!r}")


def kernel_matrix(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Evaluate h on all pairs: entry (i, j) is h(X[i], Y[j])."""
    X = _as_points(X)
    Y = X if Y is None else _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(
            f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}"
        )

    if isinstance(spec, EnergyKernel):
        metric = "euclidean" if spec.norm == "l2" else "cityblock"
        d = cdist(X, Y, metric)
        if spec.eta != 1.0:
            d **= spec.eta
        return d

    if isinstance(spec, GaussianDerivedKernel):
        if isinstance(spec.a, str):
            raise KernelConfigError("bandwidth 'median' must be resolved before evaluation")
        d2 = cdist(X, Y, "sqeuclidean")
        # 1 - exp(-z) = -expm1(-z); clip guards tiny negative round-off
        inner = -np.expm1(-d2 / (2.0 * spec.a**2))
        return np.sqrt(np.clip(inner, 0.0, None))

    if isinstance(spec, GrothendieckKernel):
        g = X @ Y.T
        nx = 1.0 + np.einsum("ij,ij->i", X, X)
        ny = 1.0 + np.einsum("ij,ij->i", Y, Y)
        arg = (1.0 + g) / np.sqrt(np.outer(nx, ny))
        return np.arccos(np.clip(arg, -1.0, 1.0))

    if isinstance(spec, PsdDerivedMetricKernel):
        kxy = _psd_gram(spec.base, X, Y)
        kxx = _psd_diag(spec.base, X)
        kyy = _psd_diag(spec.base, Y)
        delta = kxx[:, None] + kyy[None, :] - 2.0 * kxy
        return np.clip(delta, 0.0, None) ** spec.s

    if isinstance(spec, CustomKernel):
        if spec.pairwise is not None:
            return np.asarray(spec.pairwise(X, Y), dtype=float)
        out = np.empty((len(X), len(Y)))
        for i, x in enumerate(X):
            for j, y in enumerate(Y):
                out[i, j] = spec.fn(x, y)
        return out

    raise KernelConfigError(f"unknown kernel spec {spec!r}")


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate h(x, y) for a single pair of vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatchError(f"incompatible shapes {x.shape} and {y.shape}")
    return float(kernel_matrix(spec, x[None, :], y[None, :])[0, 0])


def grothendieck_psi(x, y) -> float:
    """arccos[(1 + <x,y>) / sqrt((1 + <x,x>)(1 + <y,y>))], in [0, pi]."""
    return eval_kernel(GrothendieckKernel(), x, y)


def median_bandwidth(sample) -> float:
    """Lower median of the pairwise L2 distances ||X_i - X_j||, i < j.

    Diagonal (i = j) pairs are excluded so that duplicated points do not
    deflate the bandwidth; a sample of identical points is an error since
    the Gaussian-derived kernel is undefined at bandwidth 0.
    """
    X = _as_points(sample)
    n = len(X)
    if n < 2:
        raise DimensionMismatchError("median bandwidth needs at least 2 points")
    d = cdist(X, X, "euclidean")[np.triu_indices(n, k=1)]
    d.sort()
    med = float(d[(len(d) - 1) // 2])  # lower median for even counts
    if med <= 0.0:
        raise DegenerateBandwidthError("all points identical: median distance is 0")
    return med


def derived_metric(base, s: float) -> PsdDerivedMetricKernel:
    """Kernel [K(x,x) + K(y,y) - 2 K(x,y)]^s from a PSD base kernel K.

    For s in (0, 1/2] the result is a metric of strong negative type; the
    inner expression is floored at 0 before the fractional power to absorb
    round-off.
    """
    return PsdDerivedMetricKernel(base=base, s=s)


def resolve_kernel(spec: KernelSpec, training) -> KernelSpec:
    """Replace a 'median' bandwidth request by the training-sample median."""
    if isinstance(spec, GaussianDerivedKernel) and isinstance(spec.a, str):
        return GaussianDerivedKernel(a=median_bandwidth(training))
    if isinstance(spec, PsdDerivedMetricKernel) and isinstance(spec.base, GaussianPsdKernel) \
            and isinstance(spec.base.a, str):
        return PsdDerivedMetricKernel(
            base=GaussianPsdKernel(a=median_bandwidth(training)), s=spec.s)
    return spec


# ---------------------------------------------------------------------------
# JSON serialization


def kernel_to_json(spec: KernelSpec) -> dict:
    if isinstance(spec, EnergyKernel):
        return {"kind": "energy", "eta": spec.eta, "norm": spec.norm}
    if isinstance(spec, GaussianDerivedKernel):
        return {"kind": "gaussian", "a": spec.a}
    if isinstance(spec, GrothendieckKernel):
        return {"kind": "grothendieck"}
    if isinstance(spec, PsdDerivedMetricKernel):
        if not isinstance(spec.base, GaussianPsdKernel):
            raise KernelConfigError("only Gaussian-based PSD metrics serialize to JSON")
        return {"kind": "psd_metric", "a": spec.base.a, "s": spec.s}
    raise KernelConfigError(f"kernel {spec!r} has no JSON form")


def kernel_from_json(obj) -> KernelSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise KernelConfigError("kernel JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "energy":
        return EnergyKernel(eta=float(obj.get("eta", 1.0)), norm=obj.get("norm", "l2"))
    if kind == "gaussian":
        a = obj.get("a", "median")
        return GaussianDerivedKernel(a=a if a == "median" else float(a))
    if kind == "grothendieck":
        return GrothendieckKernel()
    if kind == "psd_metric":
        a = obj.get("a", "median")
        base = GaussianPsdKernel(a=a if a == "median" else float(a))
        return PsdDerivedMetricKernel(base=base, s=float(obj.get("s", 0.5)))
    raise KernelConfigError(f"unknown kernel kind {kind!r}")
