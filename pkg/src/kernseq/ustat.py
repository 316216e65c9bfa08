"""U-statistic detectors and their incremental maintenance.

With a training block X_1..X_m and monitoring points Z_1..Z_k (stream
indices m+1..m+k), the two-sample U-statistic over the segment (r, k] is

    U_m(h; r, k) = 2 / ((k - r) m) * sum_{i<=m} sum_{r<j<=k} h(X_i, Z_j)
                   - C(m, 2)^{-1}  * sum_{i<j<=m} h(X_i, X_j)
                   - C(k-r, 2)^{-1}* sum_{r<i<j<=k} h(Z_i, Z_j)

and U_m(h; k) = U_m(h; 0, k).  Degenerate segments are clamped:
U(r, k) = U(min(r, k-2), max(k, 2)).

The three detectors evaluated at monitoring time k:

    D1(k) = k^2 / m * |U_m(h; k)|                      (cusum type)
    D2(k) = 1 / m * max_{0<=r<k} (k-r)^2 |U_m(h; r, k)|  (page type)
    D3(k) = min(k, w)^2 / m * |U~_m(h, w; k)|          (moving window)

where for k > w the first r = k - w monitoring points are recycled into
the training side of the statistic, and w = floor(cw*m + bw*max(k-cw*m, 0)).

``DetectorState`` maintains exactly the prefix aggregates needed to compute
all three detectors after each new observation with m + k fresh kernel
evaluations and O(k) arithmetic:

    C[t]           cross prefix  sum_{i<=m, j<=t} h(X_i, Z_j)
    mon_row[j]     new-point row sum  sum_{i<j} h(Z_i, Z_j)
    pairs_prefix[t] = sum_{i<j<=t} h(Z_i, Z_j)
    V[r]           segment pair sums  sum_{r<i<j<=k} h(Z_i, Z_j), r = 0..k-1

V is updated per new point from the suffix sums of its row, so the Page
maximum needs no O(k^2) storage.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .kernels import DimensionMismatchError, KernelConfigError, kernel_matrix


@dataclass(frozen=True)
class BoundaryParams:
    """Boundary shape: g(k) = ((k/m)/(1+k/m))^beta (1+k/m)^2, or the
    short-horizon variant g(k) = (M/m)(k/M)^beta."""

    beta: float = 0.0
    mode: str = "standard"  # "standard" | "short"
    M: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise KernelConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if self.mode not in ("standard", "short"):
            raise KernelConfigError(f"unknown boundary mode {self.mode!r}")
        if self.mode == "short" and (self.M is None or self.M < 2):
            raise KernelConfigError("short-horizon boundary requires M >= 2")


def boundary(k: int, m: int, p: BoundaryParams) -> float:
    """Weighted boundary value g_m(k) > 0."""
    if k < 1 or m < 1:
        raise KernelConfigError("k and m must be >= 1")
    if p.mode == "short":
        if k > p.M:
            raise KernelConfigError(f"short-horizon boundary needs k <= M, got k={k}")
        return (p.M / m) * (k / p.M) ** p.beta
    t = k / m
    return (t / (1.0 + t)) ** p.beta * (1.0 + t) ** 2


def boundary_curve(ks: np.ndarray, m: int, p: BoundaryParams) -> np.ndarray:
    """Vectorized boundary over an array of monitoring indices."""
    ks = np.asarray(ks, dtype=float)
    if p.mode == "short":
        return (p.M / m) * (ks / p.M) ** p.beta
    t = ks / m
    return (t / (1.0 + t)) ** p.beta * (1.0 + t) ** 2


def _clamp(r: int, k: int) -> tuple[int, int]:
    k = max(k, 2)
    r = min(max(r, 0), k - 2)
    return r, k


def u_stat_batch(h, training, monitoring, r: int, k: int) -> float:
    """Reference oracle: direct evaluation of U_m(h; r, k) from the sums."""
    training = np.atleast_2d(np.asarray(training, dtype=float))
    monitoring = np.atleast_2d(np.asarray(monitoring, dtype=float))
    m = len(training)
    if m < 2:
        raise DimensionMismatchError("need at least 2 training points")
    r, k = _clamp(r, k)
    if len(monitoring) < k:
        raise DimensionMismatchError(f"need {k} monitoring points, got {len(monitoring)}")
    seg = monitoring[r:k]
    n = k - r
    cross = kernel_matrix(h, training, seg).sum()
    gt = kernel_matrix(h, training)
    train_pairs = gt[np.triu_indices(m, k=1)].sum()
    gs = kernel_matrix(h, seg)
    seg_pairs = gs[np.triu_indices(n, k=1)].sum()
    return 2.0 * cross / (n * m) - train_pairs / comb(m, 2) - seg_pairs / comb(n, 2)


def window_length(k: int, m: int, cw: float, bw: float) -> int:
    """Moving-window length w = floor(cw*m + bw*max(k - cw*m, 0))."""
    if cw < 0 or not (0.0 <= bw <= 1.0):
        raise KernelConfigError("need cw >= 0 and bw in [0, 1]")
    return int(np.floor(cw * m + bw * max(k - cw * m, 0.0)))


class _Buf:
    """Growable 1-d float buffer with amortized appends."""

    __slots__ = ("_a", "n")

    def __init__(self, cap: int = 64):
        self._a = np.zeros(cap)
        self.n = 0

    def _grow(self, need: int):
        if self.n + need > len(self._a):
            cap = max(2 * len(self._a), self.n + need)
            a = np.zeros(cap)
            a[: self.n] = self._a[: self.n]
            self._a = a

    def append(self, v: float):
        self._grow(1)
        self._a[self.n] = v
        self.n += 1

    @property
    def view(self) -> np.ndarray:
        return self._a[: self.n]


class DetectorState:
    """Incremental sufficient statistics for D1/D2/D3 over one stream."""

    def __init__(self, kernel, training, max_page_lag: int | None = None):
        training = np.atleast_2d(np.asarray(training, dtype=float))
        if len(training) < 2:
            raise DimensionMismatchError("need at least 2 training points")
        self.kernel = kernel
        self.training = training
        self.m, self.d = training.shape
        gt = kernel_matrix(kernel, training)
        self.training_pair_sum = float(gt[np.triu_indices(self.m, k=1)].sum())
        self.max_page_lag = max_page_lag
        self.k = 0
        self._zcap = 64
        self._Z = np.zeros((self._zcap, self.d))
        self._C = _Buf()
        self._C.append(0.0)  # C[0] = 0
        self._mon_row = _Buf()
        self._mon_row.append(0.0)  # 1-based: slot 0 unused
        self._pairs = _Buf()
        self._pairs.append(0.0)  # pairs_prefix[0] = 0
        self._V = _Buf()

    # -- accessors used by detectors and tests ----------------------------

    @property
    def cross_prefix(self) -> np.ndarray:
        return self._C.view

    @property
    def mon_row(self) -> np.ndarray:
        return self._mon_row.view

    @property
    def pairs_prefix(self) -> np.ndarray:
        return self._pairs.view

    @property
    def segment_pair_sums(self) -> np.ndarray:
        """V[r] = sum_{r<i<j<=k} h(Z_i, Z_j) for r = 0..k-1."""
        return self._V.view

    @property
    def monitoring(self) -> np.ndarray:
        return self._Z[: self.k]

    # -- updates -----------------------------------------------------------

    def _store(self, pts: np.ndarray):
        need = self.k + len(pts)
        if need > self._zcap:
            self._zcap = max(2 * self._zcap, need)
            z = np.zeros((self._zcap, self.d))
            z[: self.k] = self._Z[: self.k]
            self._Z = z
        self._Z[self.k : need] = pts

    def _push(self, cross_sum: float, row: np.ndarray):
        """Advance k by one; `row` holds h(Z_i, new) for i = 1..k."""
        k = self.k
        self._C.append(self._C.view[k] + cross_sum)
        if k:
            rowsum = float(np.sum(row))
            # V[r] += suffix sum of the row after position r
            head = np.concatenate(([0.0], np.cumsum(row[:-1])))
            self._V.view[:] += rowsum - head
        else:
            rowsum = 0.0
        self._V.append(0.0)
        self._mon_row.append(rowsum)
        self._pairs.append(self._pairs.view[k] + rowsum)
        self.k += 1

    def update(self, obs) -> "DetectorState":
        """Consume one monitoring observation (m + k kernel evaluations)."""
        obs = np.atleast_1d(np.asarray(obs, dtype=float))
        if obs.ndim != 1 or obs.shape[0] != self.d:
            raise DimensionMismatchError(
                f"observation dimension {obs.shape} does not match d={self.d}")
        self.extend(obs[None, :])
        return self

    def extend(self, block) -> "DetectorState":
        """Consume a block of observations with vectorized kernel evaluation."""
        block = np.atleast_2d(np.asarray(block, dtype=float))
        if block.shape[1] != self.d:
            raise DimensionMismatchError(
                f"block dimension {block.shape[1]} does not match d={self.d}")
        if len(block) == 0:
            return self
        cross = kernel_matrix(self.kernel, self.training, block).sum(axis=0)
        prev = kernel_matrix(self.kernel, self._Z[: self.k], block) if self.k else \
            np.zeros((0, len(block)))
        within = kernel_matrix(self.kernel, block, block)
        k0 = self.k
        self._store(block)
        self.k = k0  # _push re-advances
        for t in range(len(block)):
            row = np.concatenate((prev[:, t], within[:t, t]))
            self._push(float(cross[t]), row)
        return self

    # -- detectors -----------------------------------------------------------

    def _check_k(self, k: int | None) -> int:
        k = self.k if k is None else k
        if k < 2:
            k = 2  # clamping convention: evaluate at k = 2
        if k > self.k:
            raise KernelConfigError(f"state holds k={self.k} points, asked for k={k}")
        return k

    def _check_current_k(self, k: int | None) -> int:
        k = self._check_k(k)
        if k != self.k:
            raise KernelConfigError(
                f"segment sums track only the current index k={self.k}, got k={k}")
        return k

    def u_stat(self, k: int) -> float:
        """U_m(h; k) from the prefix aggregates."""
        k = self._check_k(k)
        return (2.0 * self._C.view[k] / (k * self.m)
                - self.training_pair_sum / comb(self.m, 2)
                - self._pairs.view[k] / comb(k, 2))


def update_state(state: DetectorState, new_obs) -> DetectorState:
    """Functional alias for :meth:`DetectorState.update`."""
    return state.update(new_obs)


def detector_d1(state: DetectorState, k: int | None = None) -> float:
    """CUSUM-type detector k^2/m |U_m(h; k)|."""
    k = state._check_k(k)
    return k * k / state.m * abs(state.u_stat(k))


def detector_d2(state: DetectorState, k: int | None = None) -> float:
    """Page-type detector max over segmentations r < k.

    The r = k-1 candidate is clamped to the r = k-2 statistic with the
    smaller weight 1 < 4, so it never attains the maximum and the effective
    range is r <= k-2.  The segment pair sums V are maintained only for the
    current monitoring index, so k must be the state's current k.
    """
    k = state._check_current_k(k)
    r_lo = 0
    if state.max_page_lag is not None:
        r_lo = max(0, k - state.max_page_lag)
    r = np.arange(r_lo, k - 1)
    n = (k - r).astype(float)
    C = state._C.view
    cross = C[k] - C[r]
    seg = state._V.view[r]
    u = (2.0 * cross / (n * state.m)
         - state.training_pair_sum / comb(state.m, 2)
         - seg / (n * (n - 1.0) / 2.0))
    return float(np.max(n * n * np.abs(u)) / state.m)


def detector_d3(state: DetectorState, k: int | None = None,
                cw: float = 1.0, bw: float = 0.5) -> float:
    """Moving-window detector: recycles the oldest r = k - w monitoring
    points into the training side once k exceeds the window w.  As for
    detector_d2, k must be the state's current monitoring index."""
    k = state._check_current_k(k)
    m = state.m
    w = window_length(k, m, cw, bw)
    if w < 2:
        raise KernelConfigError(f"window w={w} too small (needs >= 2)")
    if w >= k:
        return detector_d1(state, k)
    r = k - w
    C = state._C.view
    P = state._pairs.view
    V = state._V.view
    if state.max_page_lag is not None and r < k - state.max_page_lag:
        raise KernelConfigError(
            "max_page_lag too small to serve the moving-window detector")
    cross = (C[k] - C[r]) + (P[k] - P[r] - V[r])
    train_ext = state.training_pair_sum + C[r] + P[r]
    u = (2.0 * cross / (w * (m + r))
         - train_ext / comb(m + r, 2)
         - V[r] / comb(w, 2))
    return w * w / m * abs(u)
