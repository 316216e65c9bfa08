"""Eigenvalues of the kernel integral operator from the training sample.

The m x m matrix has entries

    A[i, j] = (1/m) * (h(X_i, X_j) - h1_i - h1_j + grand_mean)

with row means h1_i = sum_{l != i} h(X_i, X_l) / (m - 1) and grand_mean =
C(m, 2)^{-1} sum_{i<j} h(X_i, X_j).  The "+" on the grand-mean term matches
the double centering h(x,y) - E h(X,y) - E h(x,Y) + E h(X,Y); its spectrum
estimates the eigenvalues weighting the limit processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kernels import DimensionMismatchError, kernel_matrix


@dataclass(frozen=True)
class SpectrumEstimate:
    lambdas: np.ndarray  # ordered by decreasing |.|
    m: int
    frobenius_sq: float

    def to_json(self) -> dict:
        return {"m": self.m, "lambdas": [float(v) for v in self.lambdas]}

    @staticmethod
    def from_json(obj) -> "SpectrumEstimate":
        if isinstance(obj, str):
            obj = json.loads(obj)
        lam = np.asarray(obj["lambdas"], dtype=float)
        order = np.argsort(-np.abs(lam), kind="stable")
        lam = lam[order]
        return SpectrumEstimate(lambdas=lam, m=int(obj["m"]),
                                frobenius_sq=float(np.sum(lam**2)))


def build_centered_gram(h, training) -> np.ndarray:
    """Doubly centered, 1/m-scaled kernel matrix of the training sample."""
    X = np.atleast_2d(np.asarray(training, dtype=float))
    m = len(X)
    if m < 3:
        raise DimensionMismatchError("need at least 3 training points")
    G = kernel_matrix(h, X)
    diag = np.diag(G)
    h1 = (G.sum(axis=1) - diag) / (m - 1)
    grand = (G.sum() - diag.sum()) / (m * (m - 1))
    A = (G - h1[:, None] - h1[None, :] + grand) / m
    return 0.5 * (A + A.T)  # exact symmetry despite round-off


def eigenvalues(matrix: np.ndarray) -> SpectrumEstimate:
    """All real eigenvalues of a symmetric matrix, by decreasing |.|."""
    A = np.asarray(matrix, dtype=float)
    m = len(A)
    scale = max(float(np.max(np.abs(A))), 1e-300)
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    lam = np.linalg.eigvalsh(A)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam = lam[order]
    return SpectrumEstimate(lambdas=lam, m=m, frobenius_sq=float(np.sum(lam**2)))


def estimate_spectrum(h, training) -> SpectrumEstimate:
    """Spectrum of the centered kernel matrix built from `training`."""
    return eigenvalues(build_centered_gram(h, training))


def truncate_lambdas(lambdas: np.ndarray, rel_tail: float = 1e-4) -> np.ndarray:
    """Shortest leading block whose discarded tail has sum of squares
    <= rel_tail times the total (eigenvalues already sorted by |.|)."""
    lam = np.asarray(lambdas, dtype=float)
    if len(lam) == 0:
        raise ValueError("empty eigenvalue sequence")
    total = float(np.sum(lam**2))
    if total == 0.0 or len(lam) == 1:
        return lam[:1].copy()
    tail = np.concatenate((np.cumsum((lam**2)[::-1])[::-1][1:], [0.0]))
    keep = int(np.argmax(tail <= rel_tail * total)) + 1
    return lam[:keep].copy()
