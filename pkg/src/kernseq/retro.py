"""Retrospective (offline) test for distributional stability of a sample.

For each candidate split k the two-sample statistic

    R(k) = 2 / (k (m-k)) sum_{i<=k<j} h - C(k,2)^{-1} sum_{i<j<=k} h
           - C(m-k,2)^{-1} sum_{k<i<j} h

is scaled to r(t) = m t^2 (1-t)^2 R(floor(mt)) at t = k/m and weighted by
q(t) = (t (1-t))^zeta; the test statistic is the maximum of |r(t)| / q(t)
over k = 2 .. m-2.  The null limit is the supremum of the weighted bridge
process simulated in :mod:`kernseq.limits` with eigenvalues estimated from
the full sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .kernels import DimensionMismatchError, KernelConfigError, kernel_matrix, resolve_kernel
from .limits import LimitSimConfig, critical_value, simulate_bridge_sup
from .spectrum import estimate_spectrum


@dataclass(frozen=True)
class RetroResult:
    statistic: float
    argmax_k: int  # heuristic break-date diagnostic
    critical_value: float | None
    reject: bool | None
    zeta: float


def retro_statistic(h, sample, zeta: float = 0.0) -> RetroResult:
    """Weighted sup statistic; critical value left for the caller to fill."""
    if not zeta < 1.0:
        raise KernelConfigError(f"zeta must be < 1, got {zeta}")
    X = np.atleast_2d(np.asarray(sample, dtype=float))
    m = len(X)
    if m < 5:
        raise DimensionMismatchError("retrospective test needs m >= 5")
    h = resolve_kernel(h, X)
    G = kernel_matrix(h, X)
    diag = np.diag(G)
    row_lower = np.array([G[:j, j].sum() for j in range(m)])
    within1 = np.cumsum(row_lower)            # sum_{i<j<=k}, index k-1
    rows = G.sum(axis=1)
    total_pairs = within1[-1]
    ks = np.arange(2, m - 1)
    w1 = within1[ks - 1]
    cross = np.cumsum(rows)[ks - 1] - 2.0 * w1 - np.cumsum(diag)[ks - 1]
    w2 = total_pairs - w1 - cross
    n2 = m - ks
    r_stat = (2.0 * cross / (ks * n2)
              - w1 / (ks * (ks - 1) / 2.0)
              - w2 / (n2 * (n2 - 1) / 2.0))
    t = ks / m
    weighted = m * t**2 * (1.0 - t) ** 2 * np.abs(r_stat) / (t * (1.0 - t)) ** zeta
    j = int(np.argmax(weighted))
    return RetroResult(statistic=float(weighted[j]), argmax_k=int(ks[j]),
                       critical_value=None, reject=None, zeta=zeta)


def retro_test(h, sample, zeta: float = 0.0, alpha: float = 0.05,
               sim_cfg: dict | None = None,
               lambdas: np.ndarray | None = None) -> RetroResult:
    """Full test: statistic, bridge-limit critical value, rejection flag.

    The spectrum is estimated from the full sample (the null prescription);
    `lambdas` may be supplied to reuse a precomputed spectrum.  `sim_cfg`
    passes grid_n/reps/seed overrides to the limit simulator.
    """
    X = np.atleast_2d(np.asarray(sample, dtype=float))
    h = resolve_kernel(h, X)
    base = retro_statistic(h, X, zeta)
    if lambdas is None:
        lambdas = estimate_spectrum(h, X).lambdas
    kw = {"grid_n": 4096, "reps": 2000, "seed": 0}
    kw.update(sim_cfg or {})
    cfg = LimitSimConfig(lambdas=np.asarray(lambdas, dtype=float),
                         zeta=zeta, **kw)
    cv = critical_value(simulate_bridge_sup(cfg), alpha)
    return RetroResult(statistic=base.statistic, argmax_k=base.argmax_k,
                       critical_value=cv, reject=base.statistic > cv,
                       zeta=zeta)
