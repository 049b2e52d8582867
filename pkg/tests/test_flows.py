"""Reno/Cubic state machines: growth, loss reaction, Cubic curve shape."""

import math

import pytest

from tcpshare import flows
from tcpshare.flows import FlowConfig, FlowState, Flavor
from tcpshare.formulas import TcpParams


def _state(cwnd, **kw):
    return FlowState(cwnd=cwnd, w_max=cwnd, epoch_start=0.0, reno_estimate=cwnd, **kw)


def test_reno_on_ack_full_window():
    # a full window of 10 segments arrives as 5 delayed-ACK events
    # (a=2); the increments telescope to +1/a per RTT to first order
    s = _state(10.0)
    for _ in range(5):
        flows.reno_on_ack(s, acked_segments=2, a=2.0)
    assert s.cwnd == pytest.approx(10.490381, rel=1e-6)  # sqrt(w0^2 + 2k) growth law
    assert s.cwnd == pytest.approx(10.5, abs=0.012)
    assert s.cwnd < 10.5  # compounding denominator grows slightly


def test_reno_growth_rate_lossless():
    # simulated lossless second at RTT=0.1: growth per RTT -> 1/a within 2%
    s = _state(100.0)
    rtts = 10
    for _ in range(rtts):
        for _ in range(int(s.cwnd) // 2):
            flows.reno_on_ack(s, acked_segments=2, a=2.0)
    assert (s.cwnd - 100.0) / rtts == pytest.approx(0.5, rel=0.02)


def test_reno_on_loss():
    assert flows.reno_on_loss(_state(100.0)).cwnd == 50.0
    assert flows.reno_on_loss(_state(3.0)).cwnd == 2.0  # clamp at the floor
    s = _state(100.0)
    flows.reno_on_loss(flows.reno_on_loss(s))
    assert s.cwnd == 25.0


def test_cubic_window_anchors():
    w_max = 100.0
    k = flows.cubic_plateau_time(w_max)
    assert k == pytest.approx(75.0 ** (1 / 3), rel=1e-12)
    # reduced window at epoch start, back to the peak at t=K
    assert flows.cubic_window(0.0, w_max, 0.1) == pytest.approx(70.0)
    assert flows.cubic_window(k, w_max, 0.1) == pytest.approx(100.0)


def test_cubic_window_continuous():
    w_max = 60.0
    prev = flows.cubic_window(0.0, w_max, 0.1)
    for i in range(1, 400):
        cur = flows.cubic_window(i * 0.02, w_max, 0.1)
        assert abs(cur - prev) < 0.6
        prev = cur


def test_cubic_friendliness_dominates_at_small_rtt():
    # at 1 ms RTT the emulated Reno window outruns the cubic curve
    w_max = 100.0
    k = flows.cubic_plateau_time(w_max)
    cubic_part = 0.4 * (1.0 - k) ** 3 + w_max
    got = flows.cubic_window(1.0, w_max, 0.001)
    assert got > cubic_part
    assert got == pytest.approx(70.0 + (0.9 / 1.7) * 1000.0)


def test_cubic_on_loss():
    s = _state(100.0)
    flows.cubic_on_loss(s, now=12.0)
    assert s.w_max == 100.0
    assert s.cwnd == pytest.approx(70.0)
    assert s.epoch_start == 12.0
    assert s.reno_estimate == pytest.approx(70.0)
    # consecutive losses keep tracking the pre-loss window
    flows.cubic_on_loss(s, now=13.0)
    assert s.w_max == pytest.approx(70.0)
    assert s.cwnd == pytest.approx(49.0)


def test_cubic_on_loss_clamps():
    s = _state(2.5)
    flows.cubic_on_loss(s, now=0.0)
    assert s.cwnd == 2.0


def test_cubic_long_lived_start_on_plateau():
    cfg = FlowConfig(flavor=Flavor.CUBIC, tcp=TcpParams(), initial_cwnd=80.0)
    s = flows.make_state(cfg, now=0.0)
    assert flows.cubic_refresh(s, now=0.0, rtt_s=0.1) == pytest.approx(80.0)


def test_slow_start_doubles_per_window():
    cfg = FlowConfig(flavor=Flavor.RENO, tcp=TcpParams(), initial_cwnd=2.0)
    s = flows.make_state(cfg, slow_start=True)
    for _ in range(2):
        flows.on_ack(s, cfg, now=0.0)
    assert s.cwnd == 4.0  # +1 per ACK event
    flows.on_loss(s, cfg, now=0.1)
    assert not s.in_slow_start
    flows.on_ack(s, cfg, now=0.2, acked_segments=2)
    assert s.cwnd == pytest.approx(2.0 + 1 / 2.0)


def test_on_ack_dispatch():
    reno_cfg = FlowConfig(flavor=Flavor.RENO, tcp=TcpParams(), initial_cwnd=10.0)
    s = flows.make_state(reno_cfg)
    flows.on_ack(s, reno_cfg, now=0.0, acked_segments=2)
    assert s.cwnd == pytest.approx(10.1)

    cubic_cfg = FlowConfig(flavor=Flavor.CUBIC, tcp=TcpParams(), initial_cwnd=50.0)
    c = flows.make_state(cubic_cfg)
    flows.cubic_on_loss(c, now=0.0)
    flows.on_ack(c, cubic_cfg, now=1.0)
    assert c.cwnd == pytest.approx(flows.cubic_window(1.0, 50.0, 0.1))


def test_on_loss_dispatch():
    reno_cfg = FlowConfig(flavor=Flavor.RENO, tcp=TcpParams(), initial_cwnd=40.0)
    s = flows.make_state(reno_cfg)
    flows.on_loss(s, reno_cfg, now=5.0)
    assert s.cwnd == 20.0

    cubic_cfg = FlowConfig(flavor=Flavor.CUBIC, tcp=TcpParams(), initial_cwnd=40.0)
    c = flows.make_state(cubic_cfg)
    flows.on_loss(c, cubic_cfg, now=5.0)
    assert c.cwnd == pytest.approx(28.0)
    assert c.epoch_start == 5.0


def test_cwnd_floor_holds_everywhere():
    s = _state(2.0)
    for _ in range(5):
        flows.reno_on_loss(s)
        assert s.cwnd >= 2.0
    c = _state(2.0)
    for i in range(5):
        flows.cubic_on_loss(c, now=float(i))
        assert c.cwnd >= 2.0


def test_flow_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(initial_cwnd=1.0)
    with pytest.raises(ValueError):
        flows.cubic_window(-0.5, 100.0, 0.1)
