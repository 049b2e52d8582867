"""Per-flow congestion-control state machines.

Reno: additive increase of 1/cwnd per ACK event, halving on loss.
Cubic: time-based window curve w(t) = C(t-K)^3 + w_max after a 0.7
reduction, with the tcp_friendliness fallback that tracks an emulated
Reno window and uses the larger of the two.

Windows are kept as real numbers; packet emission elsewhere caps
in-flight segments at floor(cwnd).  The floor of 2 segments is enforced
on every loss path (loss detection needs at least 2 segments in
flight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .formulas import CUBIC_BETA, CUBIC_C, Flavor, TcpParams

MIN_CWND = 2.0


@dataclass(frozen=True)
class FlowConfig:
    """Static description of one simulated flow."""

    flavor: Flavor = Flavor.RENO
    tcp: TcpParams = TcpParams()
    initial_cwnd: float = MIN_CWND

    def __post_init__(self):
        if self.initial_cwnd < MIN_CWND:
            raise ValueError(f"initial_cwnd must be >= {MIN_CWND}, got {self.initial_cwnd}")


@dataclass
class FlowState:
    """Mutable per-flow simulation state.

    w_max / epoch_start / reno_estimate drive the Cubic curve and are
    carried but unused for Reno.  Sequence numbers count segments.
    """

    cwnd: float
    w_max: float
    epoch_start: float
    reno_estimate: float
    bytes_delivered: int = 0
    next_seq: int = 0
    highest_acked: int = -1
    in_slow_start: bool = False


def make_state(cfg: FlowConfig, now: float = 0.0, slow_start: bool = False) -> FlowState:
    """Fresh state at simulated time `now`.

    A long-lived Cubic flow starts on the plateau of its own curve
    (epoch back-dated by K) so there is no artificial startup dip.
    """
    w0 = cfg.initial_cwnd
    epoch = now if cfg.flavor is not Flavor.CUBIC else now - cubic_plateau_time(w0)
    return FlowState(cwnd=w0, w_max=w0, epoch_start=epoch, reno_estimate=w0,
                     in_slow_start=slow_start)


def reno_on_ack(state: FlowState, acked_segments: int = 1,
                a: float = 2.0) -> FlowState:
    """Additive increase for one ACK event covering acked_segments.

    A delayed-ACK event (acked_segments = a) adds exactly 1/cwnd, so the
    window grows by 1/a per RTT regardless of its size.
    """
    state.cwnd += acked_segments / (a * state.cwnd)
    return state


def reno_on_loss(state: FlowState) -> FlowState:
    """Multiplicative decrease: halve, floored at 2."""
    state.cwnd = max(MIN_CWND, state.cwnd / 2.0)
    state.in_slow_start = False
    return state


def slow_start_on_ack(state: FlowState) -> FlowState:
    # exponential phase: +1 per ACK event until the first loss
    state.cwnd += 1.0
    return state


def cubic_plateau_time(w_max: float) -> float:
    """Time K at which the cubic curve returns to w_max."""
    return (w_max * (1.0 - CUBIC_BETA) / CUBIC_C) ** (1.0 / 3.0)


def cubic_window(t_since_epoch: float, w_max: float, rtt_s: float) -> float:
    """Cubic window with the tcp_friendliness fallback.

    Returns the larger of the cubic curve and the emulated Reno window
    w_max*beta + 3(1-beta)/(1+beta) * t/RTT.
    """
    if t_since_epoch < 0:
        raise ValueError(f"t_since_epoch must be >= 0, got {t_since_epoch}")
    k = cubic_plateau_time(w_max)
    cubic = CUBIC_C * (t_since_epoch - k) ** 3 + w_max
    reno_est = w_max * CUBIC_BETA + (3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA)) \
        * (t_since_epoch / rtt_s)
    return max(cubic, reno_est)


def cubic_on_loss(state: FlowState, now: float) -> FlowState:
    """Cubic reduction: remember the peak, cut to 0.7, restart the epoch."""
    state.w_max = state.cwnd
    state.cwnd = max(MIN_CWND, CUBIC_BETA * state.cwnd)
    state.epoch_start = now
    state.reno_estimate = state.cwnd
    state.in_slow_start = False
    return state


def cubic_refresh(state: FlowState, now: float, rtt_s: float) -> float:
    """Re-evaluate the Cubic curve at `now` and store it in state.cwnd."""
    t = max(0.0, now - state.epoch_start)
    state.cwnd = max(MIN_CWND, cubic_window(t, state.w_max, rtt_s))
    state.reno_estimate = state.w_max * CUBIC_BETA \
        + (3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA)) * (t / rtt_s)
    return state.cwnd


def on_ack(state: FlowState, cfg: FlowConfig, now: float,
           acked_segments: int = 1) -> FlowState:
    """Flavor dispatch for one ACK event."""
    if state.in_slow_start:
        return slow_start_on_ack(state)
    if cfg.flavor is Flavor.CUBIC:
        cubic_refresh(state, now, cfg.tcp.rtt_s)
        return state
    return reno_on_ack(state, acked_segments, cfg.tcp.ack_ratio_a)


def on_loss(state: FlowState, cfg: FlowConfig, now: float) -> FlowState:
    """Flavor dispatch for one loss reaction."""
    if cfg.flavor is Flavor.CUBIC:
        return cubic_on_loss(state, now)
    return reno_on_loss(state)
