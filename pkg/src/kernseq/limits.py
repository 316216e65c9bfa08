"""Monte Carlo simulation of the null limit processes and critical values.

All limits are weighted sums over independent Wiener paths W_l with weights
lambda_l (estimated operator eigenvalues):

* Gamma(u)        = sum_l lambda_l (W_l(u)^2 - u)                 (cusum)
* GammaBar(u)     = sup_{0<=v<=u} |G(u, v)| with
  G(u, v) = sum_l lambda_l [ (W_l(u) - a W_l(v))^2 - (u - v a)(1 - v a) ],
  a = (1 - u)/(1 - v)                                             (page)
* GammaWindow(u)  = sum_l lambda_l [ (W_l(u) - W_l(y(u)))^2 - (u - y(u)) ]
  with the window time map y(u)                                   (moving window)
* Bridge(t)       = sum_l lambda_l (B_l(t)^2 - t (1 - t)),
  B_l(t) = W_l(t) - t W_l(1)                                      (retrospective)

Each simulator returns `reps` draws of the weighted supremum
sup_{0<u<u0} u^{-beta} |.| over a regular grid of (0, u0]; the critical
value is the conservative (higher order statistic) empirical quantile.

Wiener increments are generated in time-major order from a per-replication
seed stream, so replications are order-independent and simulators sharing a
seed and grid see identical paths (this realizes the pathwise coupling
properties asserted in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import KernelConfigError
from .spectrum import truncate_lambdas

GAMMA = "gamma"
GAMMA_BAR = "gamma_bar"
GAMMA_WINDOW = "gamma_window"
BRIDGE = "bridge"


@dataclass(frozen=True)
class LimitSimConfig:
    lambdas: np.ndarray
    beta: float = 0.0
    u0: float = 1.0
    grid_n: int = 4096
    reps: int = 2000
    seed: int = 0
    cw: float | None = None
    bw: float | None = None
    zeta: float | None = None
    v_grid_n: int = 128       # segmentation grid for GammaBar (plus v = 0)
    rel_tail: float = 1e-4    # eigenvalue truncation tolerance
    top_L: int | None = None  # explicit eigenvalue count override

    def __post_init__(self):
        object.__setattr__(self, "lambdas", np.asarray(self.lambdas, dtype=float))
        if not (0.0 <= self.beta < 1.0):
            raise KernelConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if not (0.0 < self.u0 <= 1.0):
            raise KernelConfigError(f"u0 must lie in (0, 1], got {self.u0}")
        if self.grid_n < 100:
            raise KernelConfigError("grid_n must be >= 100")
        if self.reps < 100:
            raise KernelConfigError("reps must be >= 100")


@dataclass(frozen=True)
class LimitSample:
    sup_draws: np.ndarray
    kind: str
    alpha_meta: dict = field(default_factory=dict)


def _effective_lambdas(cfg: LimitSimConfig) -> np.ndarray:
    lam = cfg.lambdas
    if cfg.top_L is not None:
        return lam[: max(cfg.top_L, 1)]
    return truncate_lambdas(lam, cfg.rel_tail)


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, rep)))


def _wiener(rng: np.random.Generator, L: int, grid: np.ndarray) -> np.ndarray:
    """Paths of L independent Wiener processes at the grid points.

    Increments are drawn in time-major order so that a coarser grid sharing
    the leading time points of a finer one (same step width) consumes the
    same leading variates.
    """
    steps = np.diff(grid, prepend=0.0)
    incr = rng.standard_normal((len(grid), L)) * np.sqrt(steps)[:, None]
    return np.cumsum(incr, axis=0).T  # (L, len(grid))


def _grid(cfg: LimitSimConfig) -> np.ndarray:
    return cfg.u0 * np.arange(1, cfg.grid_n + 1) / cfg.grid_n


def simulate_gamma_sup(cfg: LimitSimConfig) -> LimitSample:
    """Draws of sup_{0<u<u0} u^{-beta} |Gamma(u)|."""
    lam = _effective_lambdas(cfg)
    u = _grid(cfg)
    weight = u ** (-cfg.beta)
    s = float(np.sum(lam))
    draws = np.empty(cfg.reps)
    for rep in range(cfg.reps):
        W = _wiener(_rep_rng(cfg.seed, rep), len(lam), u)
        gam = lam @ (W * W) - s * u
        draws[rep] = np.max(weight * np.abs(gam))
    return LimitSample(draws, GAMMA)


def simulate_gamma_bar_sup(cfg: LimitSimConfig) -> LimitSample:
    """Draws of sup_{0<u<u0} u^{-beta} sup_{0<=v<=u} |G(u, v)|.

    v runs over a subsampled grid (v_grid_n points plus v = 0); the v = 0
    slice reduces G(u, 0) to Gamma(u), so the draws dominate the Gamma draws
    pathwise on coupled paths.
    """
    lam = _effective_lambdas(cfg)
    u = _grid(cfg)
    weight = u ** (-cfg.beta)
    s = float(np.sum(lam))
    stride = max(cfg.grid_n // cfg.v_grid_n, 1)
    v_idx = np.arange(stride - 1, cfg.grid_n, stride)
    v_idx = v_idx[u[v_idx] < 1.0]  # a = (1-u)/(1-v) needs v < 1
    v = u[v_idx]
    mask = v[:, None] <= u[None, :]
    a = np.where(mask, (1.0 - u[None, :]) / (1.0 - v[:, None]), 0.0)
    va = v[:, None] * a
    mu = (u[None, :] - va) * (1.0 - va)
    draws = np.empty(cfg.reps)
    for rep in range(cfg.reps):
        W = _wiener(_rep_rng(cfg.seed, rep), len(lam), u)
        W2 = W * W
        s2u = lam @ W2
        s2v = s2u[v_idx]
        cross = (lam[:, None] * W[:, v_idx]).T @ W  # (n_v, grid)
        G = s2u[None, :] - 2.0 * a * cross + (a * a) * s2v[:, None] - s * mu
        G = np.where(mask, np.abs(G), 0.0)
        gbar = np.maximum(G.max(axis=0), np.abs(s2u - s * u))  # include v = 0
        draws[rep] = np.max(weight * gbar)
    return LimitSample(draws, GAMMA_BAR)


def window_time_map(u, cw: float, bw: float):
    """y(u): start of the limiting moving window at scaled time u.

    y(u) = 0 for u <= cw/(1+cw); otherwise with f = u/(1-u) - cw,
    y(u) = f(1-bw) / (1 + f(1-bw)).
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(u < 1.0, u / (1.0 - u) - cw, np.inf)
        g = f * (1.0 - bw)
        y = np.where(np.isinf(g), 1.0, g / (1.0 + g))
    y = np.where(u <= cw / (1.0 + cw), 0.0, y)
    if bw >= 1.0:
        y = np.zeros_like(y)
    return y


def simulate_gamma_window_sup(cfg: LimitSimConfig) -> LimitSample:
    """Draws of sup_{0<u<u0} u^{-beta} |GammaWindow(u)|."""
    if cfg.cw is None or cfg.bw is None:
        raise KernelConfigError("window simulation requires cw and bw")
    lam = _effective_lambdas(cfg)
    u = _grid(cfg)
    weight = u ** (-cfg.beta)
    s = float(np.sum(lam))
    y = window_time_map(u, cfg.cw, cfg.bw)
    extra = np.unique(y[y > 0.0])
    pts = np.unique(np.concatenate((u, extra)))
    iu = np.searchsorted(pts, u)
    iy = np.searchsorted(pts, y)  # y = 0 handled via a zero column below
    draws = np.empty(cfg.reps)
    for rep in range(cfg.reps):
        W = _wiener(_rep_rng(cfg.seed, rep), len(lam), pts)
        Wu = W[:, iu]
        Wy = np.where(y[None, :] > 0.0, W[:, iy], 0.0)
        diff = Wu - Wy
        gam = lam @ (diff * diff) - s * (u - y)
        draws[rep] = np.max(weight * np.abs(gam))
    return LimitSample(draws, GAMMA_WINDOW)


def simulate_bridge_sup(cfg: LimitSimConfig) -> LimitSample:
    """Draws of sup_{0<t<1} |Bridge(t)| / (t(1-t))^zeta."""
    if cfg.zeta is None or not cfg.zeta < 1.0:
        raise KernelConfigError("bridge simulation requires zeta < 1")
    lam = _effective_lambdas(cfg)
    t = np.arange(1, cfg.grid_n + 1) / cfg.grid_n
    interior = slice(0, cfg.grid_n - 1)  # exclude t = 1
    ti = t[interior]
    q = (ti * (1.0 - ti)) ** cfg.zeta
    s = float(np.sum(lam))
    draws = np.empty(cfg.reps)
    for rep in range(cfg.reps):
        W = _wiener(_rep_rng(cfg.seed, rep), len(lam), t)
        B = W[:, interior] - ti[None, :] * W[:, -1][:, None]
        proc = lam @ (B * B) - s * ti * (1.0 - ti)
        draws[rep] = np.max(np.abs(proc) / q)
    return LimitSample(draws, BRIDGE)


def gamma_pointwise_draws(cfg: LimitSimConfig, u: float) -> np.ndarray:
    """Draws of Gamma(u) itself (no sup), for distributional checks."""
    lam = _effective_lambdas(cfg)
    s = float(np.sum(lam))
    grid = np.asarray([u])
    draws = np.empty(cfg.reps)
    for rep in range(cfg.reps):
        W = _wiener(_rep_rng(cfg.seed, rep), len(lam), grid)
        draws[rep] = lam @ (W[:, 0] * W[:, 0]) - s * u
    return draws


def critical_value(sample: LimitSample, alpha: float) -> float:
    """Empirical (1-alpha) quantile of the sup draws, higher interpolation."""
    if not (0.0 < alpha < 1.0):
        raise KernelConfigError(f"alpha must lie in (0, 1), got {alpha}")
    draws = np.asarray(sample.sup_draws)
    if draws.size == 0:
        raise KernelConfigError("empty limit sample")
    return float(np.quantile(draws, 1.0 - alpha, method="higher"))


_SCHEME_KINDS = {"d1": GAMMA, "d2": GAMMA_BAR, "d3": GAMMA_WINDOW}


def monitor_critical_value(lambdas, scheme: str, *, beta: float, u0: float,
                           alpha: float, cw: float | None = None,
                           bw: float | None = None, grid_n: int | None = None,
                           reps: int = 2000, seed: int = 0,
                           top_L: int | None = None) -> float:
    """Critical value for one detector scheme from estimated eigenvalues."""
    if scheme not in _SCHEME_KINDS:
        raise KernelConfigError(f"unknown scheme {scheme!r}")
    kind = _SCHEME_KINDS[scheme]
    if grid_n is None:
        grid_n = 1024 if kind == GAMMA_BAR else 4096
    cfg = LimitSimConfig(lambdas=np.asarray(lambdas, dtype=float), beta=beta,
                         u0=u0, grid_n=grid_n, reps=reps, seed=seed,
                         cw=cw, bw=bw, top_L=top_L)
    if kind == GAMMA:
        sample = simulate_gamma_sup(cfg)
    elif kind == GAMMA_BAR:
        sample = simulate_gamma_bar_sup(cfg)
    else:
        sample = simulate_gamma_window_sup(cfg)
    return critical_value(sample, alpha)
