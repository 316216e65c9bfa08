"""Stopping-rule engine driving the detectors over a monitoring stream.

The monitor raises an alarm at the first k >= 2 with D(k) > c * g(k).  Open
horizons run until the stream is exhausted (stopping time = inf if no
alarm); a closed horizon M examines k = 2 .. M-1 and reports stopping time
M when no alarm occurred (the closed-ended rule rejects iff the stopping
time is < M).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelConfigError, resolve_kernel
from .ustat import (BoundaryParams, DetectorState, boundary, detector_d1,
                    detector_d2, detector_d3)

_DETECTORS = {
    "d1": lambda st, k, cfg: detector_d1(st, k),
    "d2": lambda st, k, cfg: detector_d2(st, k),
    "d3": lambda st, k, cfg: detector_d3(st, k, cfg.cw, cfg.bw),
}


@dataclass(frozen=True)
class MonitorConfig:
    kernel: object
    scheme: str = "d1"              # "d1" | "d2" | "d3"
    boundary: BoundaryParams = field(default_factory=BoundaryParams)
    horizon: int | None = None      # None = open-ended, else closed at M
    critical_value: float = 1.0
    cw: float = 1.0
    bw: float = 0.5
    max_page_lag: int | None = None

    def __post_init__(self):
        if self.scheme not in _DETECTORS:
            raise KernelConfigError(f"unknown scheme {self.scheme!r}")
        if not self.critical_value > 0:
            raise KernelConfigError("critical value must be > 0")
        if self.horizon is not None and self.horizon < 3:
            raise KernelConfigError("closed horizon requires M >= 3")
        if self.boundary.mode == "short" and self.horizon is None:
            raise KernelConfigError("short-horizon boundary requires a closed horizon")


@dataclass(frozen=True)
class MonitorEvent:
    k: int
    detector_value: float
    boundary_value: float
    alarm: bool
    stopped_at: int | None = None

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "stat": self.detector_value,
                           "bound": self.boundary_value, "alarm": self.alarm})


@dataclass(frozen=True)
class DelayConstants:
    rho: float
    w_const: float
    v_m: float
    v_m_prime: float


class Monitor:
    """Step-wise monitor over one stream; single-threaded, deterministic."""

    def __init__(self, cfg: MonitorConfig, training):
        self.cfg = cfg
        kernel = resolve_kernel(cfg.kernel, training)
        self.state = DetectorState(kernel, training, max_page_lag=cfg.max_page_lag)
        self.stopped_at: int | None = None
        self._terminated = False

    @property
    def terminated(self) -> bool:
        return self._terminated

    def step(self, obs) -> MonitorEvent:
        if self._terminated:
            raise RuntimeError("monitor already terminated; no further steps accepted")
        cfg = self.cfg
        self.state.update(obs)
        k = self.state.k
        if k < 2:
            return MonitorEvent(k, 0.0, boundary(k, self.state.m, cfg.boundary), False)
        stat = _DETECTORS[cfg.scheme](self.state, k, cfg)
        bound = boundary(k, self.state.m, cfg.boundary)
        alarm = stat > cfg.critical_value * bound
        if alarm:
            self.stopped_at = k
            self._terminated = True
            return MonitorEvent(k, stat, bound, True, stopped_at=k)
        if cfg.horizon is not None and k >= cfg.horizon - 1:
            self.stopped_at = cfg.horizon
            self._terminated = True
            return MonitorEvent(k, stat, bound, False, stopped_at=cfg.horizon)
        return MonitorEvent(k, stat, bound, False)


def run(cfg: MonitorConfig, training, stream):
    """Drive a monitor over a stream.

    Returns (events, stopping_time): the first alarmed k, else math.inf for
    an open horizon with the stream exhausted, or M for a closed horizon.
    """
    mon = Monitor(cfg, training)
    stream = np.atleast_2d(np.asarray(stream, dtype=float))
    events = []
    for obs in stream:
        events.append(mon.step(obs))
        if mon.terminated:
            break
    if mon.stopped_at is not None:
        return events, mon.stopped_at
    return events, math.inf


def first_crossings(kernel, training, stream, *, thresholds: dict,
                    bparams: BoundaryParams, cw: float = 1.0, bw: float = 0.5,
                    horizon: int | None = None, block: int = 256,
                    max_page_lag: int | None = None) -> dict:
    """Stopping times for several schemes over one stream in one pass.

    `thresholds` maps scheme name -> critical value.  Kernel evaluations are
    batched per block; the scan stops early once every scheme has alarmed.
    Returns scheme -> first alarmed k, or None when no alarm occurred before
    the horizon / end of stream.
    """
    kernel = resolve_kernel(kernel, training)
    state = DetectorState(kernel, training, max_page_lag=max_page_lag)
    stream = np.atleast_2d(np.asarray(stream, dtype=float))
    n = len(stream)
    if horizon is not None:
        n = min(n, horizon - 1)
    stops: dict = {s: None for s in thresholds}
    pending = set(thresholds)
    pos = 0
    cfg = MonitorConfig(kernel=kernel, cw=cw, bw=bw,
                        critical_value=max(max(thresholds.values()), 1e-300))
    while pos < n and pending:
        blk = stream[pos : pos + block]
        # feed one block, evaluating detectors after each point
        cross, prev, within = _block_rows(state, blk)
        for t in range(len(blk)):
            row = np.concatenate((prev[:, t], within[:t, t]))
            state._push(float(cross[t]), row)
            k = state.k
            if k < 2:
                continue
            g = boundary(k, state.m, bparams)
            for s in list(pending):
                stat = _DETECTORS[s](state, k, cfg)
                if stat > thresholds[s] * g:
                    stops[s] = k
                    pending.discard(s)
            if not pending:
                break
        pos += len(blk)
    return stops


def _block_rows(state: DetectorState, blk: np.ndarray):
    """Kernel evaluations for one block against training and prior points."""
    from .kernels import kernel_matrix

    blk = np.atleast_2d(np.asarray(blk, dtype=float))
    cross = kernel_matrix(state.kernel, state.training, blk).sum(axis=0)
    prev = (kernel_matrix(state.kernel, state.monitoring, blk)
            if state.k else np.zeros((0, len(blk))))
    within = kernel_matrix(state.kernel, blk, blk)
    state._store(blk)
    return cross, prev, within


def detector_curves(kernel, training, stream, *, schemes=("d1", "d2", "d3"),
                    cw: float = 1.0, bw: float = 0.5, block: int = 256,
                    max_page_lag: int | None = None) -> dict:
    """Full detector trajectories D(k), k = 1..len(stream), per scheme.

    Entries at k < 2 are 0 (no detector is defined there).
    """
    kernel = resolve_kernel(kernel, training)
    state = DetectorState(kernel, training, max_page_lag=max_page_lag)
    stream = np.atleast_2d(np.asarray(stream, dtype=float))
    n = len(stream)
    out = {s: np.zeros(n + 1) for s in schemes}
    cfg = MonitorConfig(kernel=kernel, cw=cw, bw=bw, critical_value=1.0)
    pos = 0
    while pos < n:
        blk = stream[pos : pos + block]
        cross, prev, within = _block_rows(state, blk)
        for t in range(len(blk)):
            row = np.concatenate((prev[:, t], within[:t, t]))
            state._push(float(cross[t]), row)
            k = state.k
            if k < 2:
                continue
            for s in schemes:
                out[s][k] = _DETECTORS[s](state, k, cfg)
        pos += len(blk)
    return out


def delay_constants(beta: float, c: float, theta: float, nu_gap: float,
                    sigma_star: float, m: int, Dh: float) -> DelayConstants:
    """Asymptotic delay constants: expected early-change delay w_const*m^rho."""
    if not (0.0 <= beta < 1.0):
        raise KernelConfigError(f"beta must lie in [0, 1), got {beta}")
    if not c > 0:
        raise KernelConfigError("c must be > 0")
    if not (0.0 < theta < 1.0):
        raise KernelConfigError("theta must lie in (0, 1)")
    if nu_gap == 0.0 or Dh == 0.0:
        raise KernelConfigError("change is undetectable: zero divergence gap")
    rho = (1.0 - beta) / (2.0 - beta)
    w_const = (c / (theta * abs(nu_gap))) ** (1.0 / (2.0 - beta))
    v_m = 2.0 * sigma_star * math.sqrt(w_const * m**rho) / ((2.0 - beta) * abs(nu_gap))
    v_m_prime = math.sqrt(m) / (theta * math.sqrt(abs(Dh)))
    return DelayConstants(rho=rho, w_const=w_const, v_m=v_m, v_m_prime=v_m_prime)


def empirical_delay_distribution(cfg: MonitorConfig, alt_generator, reps: int,
                                 seed: int = 0) -> dict:
    """Monte Carlo summary of detection delays under an alternative.

    `alt_generator(rng)` must return (training, stream, k_star).  Power is
    the fraction of replications alarmed before the horizon; delays (stop -
    k_star) are summarized over replications alarmed after the change.
    """
    if reps < 1:
        raise KernelConfigError("reps must be >= 1")
    delays, alarmed = [], 0
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
        training, stream, k_star = alt_generator(rng)
        stops = first_crossings(cfg.kernel, training, stream,
                                thresholds={cfg.scheme: cfg.critical_value},
                                bparams=cfg.boundary, cw=cfg.cw, bw=cfg.bw,
                                horizon=cfg.horizon,
                                max_page_lag=cfg.max_page_lag)
        stop = stops[cfg.scheme]
        if stop is not None:
            alarmed += 1
            if stop > k_star:
                delays.append(stop - k_star)
    delays = np.asarray(delays, dtype=float)
    q = (np.percentile(delays, [25, 50, 75]) if delays.size
         else np.array([math.nan] * 3))
    return {"power": alarmed / reps, "median": float(q[1]),
            "quartiles": (float(q[0]), float(q[2])), "delays": delays}
