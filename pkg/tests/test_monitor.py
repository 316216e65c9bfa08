import json
import math

import numpy as np
import pytest

from kernseq.kernels import CustomKernel, EnergyKernel, KernelConfigError
from kernseq.monitor import (Monitor, MonitorConfig, delay_constants,
                             detector_curves, empirical_delay_distribution,
                             first_crossings, run)
from kernseq.ustat import BoundaryParams, boundary

H = EnergyKernel(eta=1.0, norm="l2")


def _data(seed=0, m=20, n=40, d=2, shift=0.0, k_star=None):
    rng = np.random.default_rng(seed)
    tr = rng.standard_normal((m, d))
    stream = rng.standard_normal((n, d))
    if shift:
        stream[k_star or 0 :] += shift
    return tr, stream


def _cfg(**kw):
    base = dict(kernel=H, scheme="d1", boundary=BoundaryParams(beta=0.0),
                critical_value=1.0)
    base.update(kw)
    return MonitorConfig(**base)


def test_additive_stream_never_alarms():
    f0 = lambda x: float(np.sum(np.cos(x)))
    h = CustomKernel(fn=lambda x, y: f0(x) + f0(y))
    tr, stream = _data(1)
    for scheme in ("d1", "d2", "d3"):
        _, stop = run(_cfg(kernel=h, scheme=scheme, critical_value=1e-6),
                      tr, stream)
        assert stop == math.inf


def test_tiny_c_alarms_at_k2():
    tr, stream = _data(2)
    events, stop = run(_cfg(critical_value=1e-12), tr, stream)
    assert stop == 2
    assert events[-1].alarm and events[-1].k == 2
    assert len(events) == 2  # k = 1 (no detector) then the alarm


def test_step_after_termination_raises():
    tr, stream = _data(3)
    mon = Monitor(_cfg(critical_value=1e-12), tr)
    mon.step(stream[0])
    mon.step(stream[1])
    assert mon.terminated
    with pytest.raises(RuntimeError):
        mon.step(stream[2])


def test_closed_horizon_no_alarm():
    tr, stream = _data(4, n=30)
    events, stop = run(_cfg(critical_value=1e6, horizon=20), tr, stream)
    assert stop == 20
    assert max(e.k for e in events) == 19  # nothing examined at k >= M


def test_deterministic_replay():
    tr, stream = _data(5)
    a = run(_cfg(critical_value=2.0), tr, stream)
    b = run(_cfg(critical_value=2.0), tr, stream)
    assert a[1] == b[1]
    assert [e.detector_value for e in a[0]] == [e.detector_value for e in b[0]]


def test_alarm_monotone_in_c():
    tr, stream = _data(6, n=80, shift=1.5, k_star=10)
    stops = []
    for c in (0.05, 0.2, 1.0, 5.0):
        _, stop = run(_cfg(critical_value=c), tr, stream)
        stops.append(stop)
    assert all(a <= b for a, b in zip(stops, stops[1:]))


def test_d2_stops_no_later_than_d1():
    tr, stream = _data(7, n=100, shift=1.0, k_star=30)
    for c in (0.3, 1.0):
        _, s1 = run(_cfg(scheme="d1", critical_value=c), tr, stream)
        _, s2 = run(_cfg(scheme="d2", critical_value=c), tr, stream)
        assert s2 <= s1


def test_first_crossings_matches_run():
    tr, stream = _data(8, n=70, shift=1.2, k_star=15)
    bp = BoundaryParams(beta=0.0)
    for c in (0.1, 0.8, 1e6):
        stops = first_crossings(H, tr, stream, thresholds={s: c for s in
                                ("d1", "d2", "d3")}, bparams=bp, block=16)
        for scheme in ("d1", "d2", "d3"):
            _, stop = run(_cfg(scheme=scheme, critical_value=c), tr, stream)
            expect = None if stop == math.inf else stop
            assert stops[scheme] == expect


def test_detector_curves_match_run_events():
    tr, stream = _data(9, n=25)
    curves = detector_curves(H, tr, stream, block=7)
    events, _ = run(_cfg(critical_value=1e6), tr, stream)
    for e in events:
        if e.k >= 2:
            assert curves["d1"][e.k] == pytest.approx(e.detector_value, rel=1e-12)
    assert curves["d1"][0] == 0.0 and curves["d1"][1] == 0.0


def test_curves_boundary_consistency():
    tr, stream = _data(10, n=15)
    bp = BoundaryParams(beta=0.3)
    events, _ = run(_cfg(boundary=bp, critical_value=1e6), tr, stream)
    for e in events:
        assert e.boundary_value == pytest.approx(boundary(e.k, 20, bp))


def test_event_json():
    tr, stream = _data(11)
    events, _ = run(_cfg(critical_value=1e6), tr, stream[:5])
    obj = json.loads(events[-1].to_json())
    assert set(obj) == {"k", "stat", "bound", "alarm"}
    assert obj["k"] == 5 and obj["alarm"] is False


def test_delay_constants_examples():
    dc = delay_constants(beta=0.0, c=2.0, theta=0.5, nu_gap=1.0,
                         sigma_star=1.0, m=100, Dh=4.0)
    assert dc.rho == 0.5
    assert dc.w_const == pytest.approx(2.0, rel=1e-13)  # (2/(0.5*1))^(1/2)
    assert dc.v_m_prime == pytest.approx(10.0 / (0.5 * 2.0), rel=1e-13)
    # c = theta * |gap| makes the delay constant 1 for any beta
    for beta in (0.0, 0.4, 0.9):
        dc = delay_constants(beta=beta, c=0.3, theta=0.6, nu_gap=0.5,
                             sigma_star=1.0, m=50, Dh=1.0)
        assert dc.w_const == pytest.approx(1.0, rel=1e-13)
        assert dc.rho == pytest.approx((1 - beta) / (2 - beta), rel=1e-14)
    rhos = [delay_constants(beta=b, c=1.0, theta=0.5, nu_gap=1.0,
                            sigma_star=1.0, m=10, Dh=1.0).rho
            for b in np.linspace(0.0, 0.95, 8)]
    assert all(a > b for a, b in zip(rhos, rhos[1:]))


def test_delay_constants_validation():
    with pytest.raises(KernelConfigError):
        delay_constants(beta=1.0, c=1.0, theta=0.5, nu_gap=1.0,
                        sigma_star=1.0, m=10, Dh=1.0)
    with pytest.raises(KernelConfigError):
        delay_constants(beta=0.0, c=1.0, theta=0.5, nu_gap=0.0,
                        sigma_star=1.0, m=10, Dh=1.0)


def test_config_validation():
    with pytest.raises(KernelConfigError):
        _cfg(scheme="d4")
    with pytest.raises(KernelConfigError):
        _cfg(critical_value=0.0)
    with pytest.raises(KernelConfigError):
        _cfg(boundary=BoundaryParams(beta=0.5, mode="short", M=100))


def test_empirical_delay_distribution_smoke():
    def gen(rng):
        tr = rng.standard_normal((15, 2))
        stream = rng.standard_normal((60, 2))
        stream[10:] += 2.0
        return tr, stream, 10

    out = empirical_delay_distribution(
        _cfg(critical_value=0.5, horizon=61), gen, reps=8, seed=12)
    assert 0.0 <= out["power"] <= 1.0
    assert out["power"] > 0.5
    assert out["delays"].min() >= 1
    assert out["quartiles"][0] <= out["median"] <= out["quartiles"][1]
