"""Discrete-event TCP simulation engine.

Three scenarios:

RandomDrop
    One flow stepped at RTT granularity with i.i.d. per-packet drops
    and no queue.  PerLoss mode halves on every drop and is the
    sampling counterpart of the window Markov chain; PerWindow reacts
    at most once per round.

SharedBottleneck
    N flows feeding one tail-drop FIFO served at the link capacity.
    Packet-level events: send, queue arrival (after half the base
    RTT), service completion, ACK return (lossless, half base RTT).
    Loss detection is a dup-ACK abstraction: a transmission is known
    lost once a later transmission of the same flow leaves the
    bottleneck (FIFO order is certain), and the reaction is taken
    after 3 subsequent deliveries.  Reductions happen once per window
    unless PerLoss mode is forced.

FiniteFlow
    SharedBottleneck plus one short flow of fixed volume restarted
    repeatedly (slow start each time); reports completion times.

Determinism: every random quantity comes from per-flow Philox
substreams keyed by (seed, flow index), so identical configs produce
identical traces.  The shared-bottleneck engine draws only the initial
window jitter and a microsecond-scale send jitter per packet; the
latter breaks the artificial phase locking a perfectly symmetric
deterministic system can fall into.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import OrderedDict, deque
from dataclasses import dataclass, field

import numpy as np

from . import flows
from .flows import Flavor, FlowConfig
from .formulas import TcpParams

ENGINE_VERSION = "tcpshare-sim-1"

DEFAULT_WARMUP_S = 300.0
DEFAULT_IDLE_GAP_S = 5.0

# send-time jitter, seconds; sub-packet-scale, only to desynchronize
SEND_JITTER_S = 2e-5

# dup-ACK threshold of the loss-detection abstraction
DUP_ACK_THRESHOLD = 3


class Scenario(enum.Enum):
    RANDOM_DROP = "random-drop"
    SHARED_BOTTLENECK = "shared"
    FINITE_FLOW = "finite"


class LossReaction(enum.Enum):
    PER_LOSS = "per-loss"
    PER_WINDOW = "per-window"


@dataclass(frozen=True)
class LinkSpec:
    """Bottleneck link: capacity, FIFO buffer, propagation RTT."""

    capacity_bps: float
    base_rtt_s: float
    buffer_bytes: int | None = None  # None -> bandwidth-delay product

    def __post_init__(self):
        if self.capacity_bps <= 0:
            raise ValueError(f"capacity_bps must be positive, got {self.capacity_bps}")
        if self.base_rtt_s <= 0:
            raise ValueError(f"base_rtt_s must be positive, got {self.base_rtt_s}")
        if self.buffer_bytes is None:
            object.__setattr__(self, "buffer_bytes",
                               int(self.capacity_bps * self.base_rtt_s / 8.0))
        if self.buffer_bytes <= 0:
            raise ValueError(f"buffer_bytes must be positive, got {self.buffer_bytes}")

    @property
    def bdp_bytes(self) -> int:
        return int(self.capacity_bps * self.base_rtt_s / 8.0)


@dataclass
class QueueState:
    """Tail-drop FIFO snapshot.

    occupancy_bytes includes the packet in service until its last bit
    leaves, so admission (occupancy + size <= buffer) bounds queueing
    plus service delay by buffer_bytes*8/capacity exactly.
    """

    occupancy_bytes: int = 0
    busy_until: float = 0.0
    drops_per_flow: dict = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    scenario: Scenario
    flows: list
    duration_s: float
    seed: int = 1
    link: LinkSpec | None = None
    p_loss: float | None = None
    loss_reaction: LossReaction = LossReaction.PER_WINDOW
    interval_s: float = 1.0
    warmup_s: float = DEFAULT_WARMUP_S
    # segments emitted back to back per send opportunity (TSO/GSO-style
    # offload bursts); 1 = pure per-ACK pacing
    burst_segments: int = 4
    # FiniteFlow only: the last flow in `flows` is the repeated one
    volume_bytes: int | None = None
    repetitions: int | None = None
    idle_gap_s: float = DEFAULT_IDLE_GAP_S

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        if not self.flows:
            raise ValueError("at least one flow required")
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be positive, got {self.interval_s}")
        if self.scenario is Scenario.RANDOM_DROP:
            if len(self.flows) != 1:
                raise ValueError("RandomDrop uses exactly one flow")
            if self.p_loss is None or not 0.0 <= self.p_loss < 1.0:
                raise ValueError(f"RandomDrop needs p_loss in [0, 1), got {self.p_loss}")
        else:
            if self.link is None:
                raise ValueError(f"{self.scenario.value} needs a link")
            if self.p_loss is not None:
                raise ValueError("p_loss applies to RandomDrop only; "
                                 "queue overflow drives the other scenarios")
        if self.burst_segments < 1:
            raise ValueError(f"burst_segments must be >= 1, got {self.burst_segments}")
        if self.scenario is Scenario.FINITE_FLOW:
            if self.volume_bytes is None or self.volume_bytes <= 0:
                raise ValueError("FiniteFlow needs a positive volume_bytes")
            if self.repetitions is None or self.repetitions < 1:
                raise ValueError("FiniteFlow needs repetitions >= 1")
            if len(self.flows) < 2:
                raise ValueError("FiniteFlow needs long-lived flows plus the finite one")


@dataclass
class RateTrace:
    """Per-flow delivered bytes on a fixed interval grid from t=0."""

    interval_s: float
    bytes_per_interval: np.ndarray  # shape (n_flows, n_intervals)
    config: ScenarioConfig
    sent: np.ndarray      # segments per flow
    dropped: np.ndarray
    delivered: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_flows(self) -> int:
        return self.bytes_per_interval.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.bytes_per_interval.shape[1]

    def rates_bps(self, flow: int | None = None) -> np.ndarray:
        """Interval-average bit rates, one row per flow (or one flow)."""
        b = self.bytes_per_interval if flow is None else self.bytes_per_interval[flow]
        return b * 8.0 / self.interval_s


def flow_rng(seed: int, flow_idx: int) -> np.random.Generator:
    """Philox substream for one flow; independent across flow indices."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(flow_idx,))
    return np.random.Generator(np.random.Philox(seq))


def measured_loss_ratio(trace: RateTrace) -> dict:
    """Dropped/sent per flow plus the aggregate, from trace counters."""
    sent = trace.sent
    dropped = trace.dropped
    out = {}
    for i in range(trace.n_flows):
        out[i] = float(dropped[i] / sent[i]) if sent[i] else 0.0
    out["aggregate"] = float(dropped.sum() / sent.sum()) if sent.sum() else 0.0
    return out


# ---------------------------------------------------------------------------
# RandomDrop: RTT-granularity rounds, no queue

def _occupancy_add(occ: np.ndarray, w_a: float, w_b: float, dt: float) -> np.ndarray:
    """Attribute dt of wall time to integer window states along a linear
    segment w_a -> w_b.  Returns occ, grown if the segment ran off the end."""
    hi_state = int(max(w_a, w_b))
    if hi_state >= occ.size:
        occ = np.concatenate([occ, np.zeros(max(occ.size, hi_state + 1 - occ.size))])
    if w_b - w_a <= 1e-12:
        occ[int(w_a)] += dt
        return occ
    span = w_b - w_a
    lo = int(w_a)
    hi = int(w_b - 1e-12)
    if lo == hi:
        occ[lo] += dt
        return occ
    occ[lo] += dt * (lo + 1 - w_a) / span
    for s in range(lo + 1, hi):
        occ[s] += dt / span
    occ[hi] += dt * (w_b - hi) / span
    return occ


def run_random_drop(cfg: ScenarioConfig) -> RateTrace:
    """One flow under i.i.d. per-packet loss, stepped one RTT at a time.

    Window occupancy (time spent at each integer window, exact along
    the piecewise-linear trajectory) is returned in
    metadata["occupancy"]; drops take effect at their position within
    the round.
    """
    if cfg.scenario is not Scenario.RANDOM_DROP:
        raise ValueError("config is not a RandomDrop scenario")
    fc: FlowConfig = cfg.flows[0]
    tcp = fc.tcp
    rtt = tcp.rtt_s
    a = tcp.ack_ratio_a
    mss = tcp.mss_bytes
    p = cfg.p_loss
    per_loss = cfg.loss_reaction is LossReaction.PER_LOSS
    cubic = fc.flavor is Flavor.CUBIC

    rng = flow_rng(cfg.seed, 0)
    n_rounds = int(round(cfg.duration_s / rtt))
    n_intervals = int(math.ceil(cfg.duration_s / cfg.interval_s))
    bytes_grid = np.zeros(n_intervals)
    occ = np.zeros(4096)
    sent = dropped = 0

    st = flows.make_state(fc)
    growth = 1.0 / a  # Reno window gain per round
    buf = rng.random(1 << 20)
    pos = 0
    t = 0.0
    for r in range(n_rounds):
        if cubic:
            flows.cubic_refresh(st, t, rtt)
        w = st.cwnd
        s = int(w)
        if pos + s > buf.size:
            buf = rng.random(1 << 20)
            pos = 0
        u = buf[pos:pos + s]
        pos += s
        drops = np.flatnonzero(u < p) if p > 0.0 else ()
        k = len(drops)
        sent += s
        dropped += k
        bytes_grid[min(int(t / cfg.interval_s), n_intervals - 1)] += (s - k) * mss

        if k == 0:
            w_next = w + growth if not cubic else st.cwnd
            occ = _occupancy_add(occ, w, w if cubic else w_next, rtt)
            if not cubic:
                st.cwnd = w_next
        else:
            if not per_loss:
                k = 1
            frac = (drops[0] + 0.5) / s
            t_loss = t + frac * rtt
            if cubic:
                occ = _occupancy_add(occ, w, w, rtt * frac)
                for _ in range(k):
                    flows.cubic_on_loss(st, t_loss)
                occ = _occupancy_add(occ, st.cwnd, st.cwnd, rtt * (1.0 - frac))
            else:
                w_mid = w + frac * growth
                occ = _occupancy_add(occ, w, w_mid, rtt * frac)
                st.cwnd = w_mid
                for _ in range(k):
                    flows.reno_on_loss(st)
                w_post = st.cwnd
                occ = _occupancy_add(occ, w_post, w_post + (1.0 - frac) * growth,
                                     rtt * (1.0 - frac))
                st.cwnd = w_post + (1.0 - frac) * growth
        t += rtt

    st.bytes_delivered = (sent - dropped) * mss
    return RateTrace(
        interval_s=cfg.interval_s,
        bytes_per_interval=bytes_grid[None, :],
        config=cfg,
        sent=np.array([sent]),
        dropped=np.array([dropped]),
        delivered=np.array([sent - dropped]),
        metadata={"occupancy": occ / max(occ.sum(), 1e-300),
                  "final_cwnd": st.cwnd,
                  "engine": ENGINE_VERSION},
    )


# ---------------------------------------------------------------------------
# SharedBottleneck: packet-level event loop

# event kinds; heap entries are (time, serial, kind, flow_idx, payload)
_SEND, _ARRIVE, _DEPART, _ACK, _TIMER, _START, _WATCHDOG = range(7)


class _FlowRuntime:
    """Book-keeping of one flow inside the event engine."""

    __slots__ = ("idx", "cfg", "state", "rng", "jitter", "jpos",
                 "xmit_serial", "outstanding", "known_dropped", "cum",
                 "delivered_set", "retx_queue", "recover_xmit",
                 "next_seq", "sent", "dropped", "delivered", "active",
                 "volume_segments", "seg_delivered", "start_time",
                 "completions", "reps_left", "rtt_min", "rtt_max", "epoch",
                 "last_send", "alive", "wd_armed")

    def __init__(self, idx: int, cfg: FlowConfig, rng):
        self.idx = idx
        self.cfg = cfg
        self.rng = rng
        self.jitter = rng.random(1 << 16) * SEND_JITTER_S
        self.jpos = 0
        self.state = None
        self.xmit_serial = 0
        self.outstanding = OrderedDict()   # xmit -> (seq, send_time)
        self.known_dropped = OrderedDict() # xmit -> [seq, dup_count]
        self.cum = -1
        self.delivered_set = set()
        self.retx_queue = deque()
        self.recover_xmit = -1
        self.next_seq = 0
        self.sent = 0
        self.dropped = 0
        self.delivered = 0
        self.active = True
        self.volume_segments = None
        self.seg_delivered = 0
        self.start_time = 0.0
        self.completions = []
        self.reps_left = 0
        self.rtt_min = math.inf
        self.rtt_max = 0.0
        self.epoch = 0
        self.last_send = 0.0
        self.alive = 0          # transmissions that will still be ACKed
        self.wd_armed = False

    def next_jitter(self) -> float:
        if self.jpos >= self.jitter.size:
            self.jitter = self.rng.random(1 << 16) * SEND_JITTER_S
            self.jpos = 0
        v = self.jitter[self.jpos]
        self.jpos += 1
        return v

    def in_flight(self) -> int:
        return len(self.outstanding) + len(self.known_dropped)

    def mark_delivered(self, seq: int) -> None:
        if seq == self.cum + 1:
            self.cum += 1
            while self.cum + 1 in self.delivered_set:
                self.delivered_set.discard(self.cum + 1)
                self.cum += 1
        elif seq > self.cum:
            self.delivered_set.add(seq)

    def is_delivered(self, seq: int) -> bool:
        return seq <= self.cum or seq in self.delivered_set

    def reset_for_repetition(self, volume_segments: int, now: float) -> None:
        self.state = flows.make_state(self.cfg, now=now, slow_start=True)
        self.epoch += 1
        self.xmit_serial = 0
        self.outstanding.clear()
        self.known_dropped.clear()
        self.cum = -1
        self.delivered_set.clear()
        self.retx_queue.clear()
        self.recover_xmit = -1
        self.next_seq = 0
        self.volume_segments = volume_segments
        self.seg_delivered = 0
        self.start_time = now
        self.active = True
        self.alive = 0
        self.wd_armed = False


def _fair_share_window(link: LinkSpec, tcp: TcpParams, n_flows: int) -> float:
    w = link.capacity_bps * link.base_rtt_s / (8.0 * tcp.mss_bytes * n_flows)
    return max(flows.MIN_CWND, w)


class _Engine:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.link = cfg.link
        self.mss = cfg.flows[0].tcp.mss_bytes
        self.heap = []
        self.serial = 0
        self.queue = QueueState()
        self.fifo = deque()
        self.busy = False
        n = len(cfg.flows)
        self.flows = [_FlowRuntime(i, fc, flow_rng(cfg.seed, i))
                      for i, fc in enumerate(cfg.flows)]
        n_intervals = int(math.ceil(cfg.duration_s / cfg.interval_s))
        self.bytes_grid = np.zeros((n, n_intervals))
        self.n_intervals = n_intervals
        # generous RTO bound: twice the worst-case base + full-buffer delay
        self.rto = 2.0 * (self.link.base_rtt_s
                          + self.link.buffer_bytes * 8.0 / self.link.capacity_bps)
        self.finite_idx = n - 1 if cfg.scenario is Scenario.FINITE_FLOW else None
        self.queue_peak = 0
        self.wd_sweeps = 0

    def push(self, t: float, kind: int, flow_idx: int, payload) -> None:
        heapq.heappush(self.heap, (t, self.serial, kind, flow_idx, payload))
        self.serial += 1

    # --- sending ---------------------------------------------------------

    def try_send(self, fr: _FlowRuntime, now: float) -> None:
        if not fr.active:
            return
        cwnd_i = int(fr.state.cwnd)
        # offload-style bursts: new data goes out in groups, so a queue
        # overflow tends to clip one flow's burst instead of spreading
        # single drops over everyone; retransmits are never held back
        quantum = max(1, min(self.cfg.burst_segments, cwnd_i // 2))
        while True:
            room = cwnd_i - fr.in_flight()
            if room < 1:
                return
            if fr.retx_queue:
                seq = fr.retx_queue.popleft()
            else:
                if room < quantum and fr.in_flight() > 0:
                    return
                if fr.volume_segments is not None and fr.next_seq >= fr.volume_segments:
                    return
                seq = fr.next_seq
                fr.next_seq += 1
            xmit = fr.xmit_serial
            fr.xmit_serial += 1
            # jitter desynchronizes flows; the max() keeps send times
            # monotone per flow so FIFO certainty stays valid
            send_t = max(now, fr.last_send) + fr.next_jitter()
            fr.last_send = send_t
            fr.outstanding[xmit] = (seq, send_t)
            fr.sent += 1
            self.push(send_t + self.link.base_rtt_s / 2.0, _ARRIVE, fr.idx, (xmit, seq))

    # --- queue -----------------------------------------------------------

    def on_arrive(self, now: float, fr: _FlowRuntime, xmit: int, seq: int) -> None:
        size = self.mss
        if self.queue.occupancy_bytes + size > self.link.buffer_bytes:
            fr.dropped += 1
            self.queue.drops_per_flow[fr.idx] = \
                self.queue.drops_per_flow.get(fr.idx, 0) + 1
            # the transmission record stays; FIFO certainty resolves it,
            # unless this drop killed the flow's last pending ACK
            if fr.active and fr.alive == 0:
                self.arm_watchdog(fr, now)
            return
        self.queue.occupancy_bytes += size
        fr.alive += 1
        if self.queue.occupancy_bytes > self.queue_peak:
            self.queue_peak = self.queue.occupancy_bytes
        self.fifo.append((fr.idx, xmit, seq, size))
        if not self.busy:
            self.start_service(now)

    def start_service(self, now: float) -> None:
        flow_idx, xmit, seq, size = self.fifo[0]
        self.busy = True
        depart = now + size * 8.0 / self.link.capacity_bps
        self.queue.busy_until = depart
        self.push(depart, _DEPART, flow_idx, (xmit, seq, size))

    def on_depart(self, now: float, fr: _FlowRuntime, xmit: int, seq: int,
                  size: int) -> None:
        self.fifo.popleft()
        self.queue.occupancy_bytes -= size
        if self.fifo:
            self.start_service(now)
        else:
            self.busy = False
        slot = min(int(now / self.cfg.interval_s), self.n_intervals - 1)
        self.bytes_grid[fr.idx, slot] += size
        fr.delivered += 1
        self.push(now + self.link.base_rtt_s / 2.0, _ACK, fr.idx, (xmit, seq))

    # --- ACK / loss handling ----------------------------------------------

    def reduce_once(self, fr: _FlowRuntime, now: float, dropped_xmit: int) -> None:
        """One window reduction, suppressed inside an existing recovery
        (PerWindow) unless PerLoss mode is forced."""
        if (self.cfg.loss_reaction is LossReaction.PER_LOSS
                or dropped_xmit >= fr.recover_xmit):
            flows.on_loss(fr.state, fr.cfg, now)
            fr.recover_xmit = fr.xmit_serial

    def on_ack(self, now: float, fr: _FlowRuntime, xmit: int, seq: int) -> None:
        rec = fr.outstanding.pop(xmit, None)
        if rec is None:
            # repetition ended and bookkeeping was cleared; late ACKs of
            # the old run carry no information for the new one
            return
        fr.alive -= 1
        sample = now - rec[1]
        if sample < fr.rtt_min:
            fr.rtt_min = sample
        if sample > fr.rtt_max:
            fr.rtt_max = sample
        first_delivery = not fr.is_delivered(seq)
        fr.mark_delivered(seq)
        if first_delivery:
            fr.state.bytes_delivered += self.mss
            fr.seg_delivered += 1
            flows.on_ack(fr.state, fr.cfg, now, acked_segments=1)

        # FIFO certainty: transmissions still outstanding but older than
        # the one just ACKed must have been dropped at the queue
        while fr.outstanding:
            oldest_xmit, (oseq, _) = next(iter(fr.outstanding.items()))
            if oldest_xmit > xmit:
                break
            fr.outstanding.pop(oldest_xmit)
            fr.known_dropped[oldest_xmit] = [oseq, 0]

        # dup-ACK abstraction: react on the 3rd delivery after the drop
        resolved = []
        for dx, entry in fr.known_dropped.items():
            entry[1] += 1
            if entry[1] >= DUP_ACK_THRESHOLD:
                resolved.append(dx)
        for dx in resolved:
            dseq, _ = fr.known_dropped.pop(dx)
            self.handle_confirmed_loss(fr, now, dx, dseq)

        if fr.volume_segments is not None \
                and fr.seg_delivered >= fr.volume_segments and fr.active:
            self.finish_repetition(fr, now)
            return
        self.check_stall(fr, now)
        self.try_send(fr, now)

    def handle_confirmed_loss(self, fr: _FlowRuntime, now: float, xmit: int,
                              seq: int) -> None:
        if not fr.is_delivered(seq) and seq not in fr.retx_queue:
            fr.retx_queue.append(seq)
        self.reduce_once(fr, now, xmit)

    def check_stall(self, fr: _FlowRuntime, now: float) -> None:
        """Nothing in flight but data still missing: dup-ACKs can no
        longer arrive, so retransmit immediately (RTO stand-in)."""
        if not fr.active:
            return
        if fr.in_flight() > 0:
            # transmissions are on the books, but if none of them can
            # still be ACKed nothing will resolve them: leave a watchdog
            if fr.alive == 0:
                self.arm_watchdog(fr, now)
            return
        for dx, (dseq, _) in list(fr.known_dropped.items()):
            fr.known_dropped.pop(dx)
            if not fr.is_delivered(dseq) and dseq not in fr.retx_queue:
                fr.retx_queue.append(dseq)
        missing = self.lowest_missing(fr)
        if missing is None:
            return
        if missing not in fr.retx_queue:
            fr.retx_queue.appendleft(missing)
        flows.on_loss(fr.state, fr.cfg, now)
        fr.recover_xmit = fr.xmit_serial
        self.push(now + self.rto, _TIMER, fr.idx, (fr.epoch, missing))

    def lowest_missing(self, fr: _FlowRuntime):
        limit = fr.next_seq
        seq = fr.cum + 1
        while seq < limit:
            if not fr.is_delivered(seq):
                return seq
            seq += 1
        return None

    def on_timer(self, now: float, fr: _FlowRuntime, epoch: int, seq: int) -> None:
        if not fr.active or epoch != fr.epoch or fr.is_delivered(seq):
            return
        if fr.in_flight() == 0:
            if seq not in fr.retx_queue:
                fr.retx_queue.appendleft(seq)
            flows.on_loss(fr.state, fr.cfg, now)
            fr.recover_xmit = fr.xmit_serial
            self.push(now + self.rto, _TIMER, fr.idx, (epoch, seq))
            self.try_send(fr, now)

    def arm_watchdog(self, fr: _FlowRuntime, now: float) -> None:
        if fr.wd_armed:
            return
        fr.wd_armed = True
        self.push(now + self.rto, _WATCHDOG, fr.idx, fr.epoch)

    def on_watchdog(self, now: float, fr: _FlowRuntime, epoch: int) -> None:
        """RTO stand-in for a fully dropped tail.

        Every transmission still on the books was lost at the queue and
        no ACK is pending, so dup-ACK certainty is out of reach forever.
        Declare them lost, take one reduction, retransmit.
        """
        if epoch != fr.epoch:
            return
        fr.wd_armed = False
        if not fr.active or fr.alive > 0:
            return
        # a transmission sent less than half an RTT ago is still on the
        # wire and may yet be queued, so the flow is not dead: leave it
        # alone (a drop or ACK of those packets re-arms as needed)
        horizon = now - self.link.base_rtt_s / 2.0
        if any(send_t >= horizon for _, send_t in fr.outstanding.values()):
            return
        if not fr.outstanding and not fr.known_dropped:
            return
        for dseq, _ in fr.outstanding.values():
            if not fr.is_delivered(dseq) and dseq not in fr.retx_queue:
                fr.retx_queue.append(dseq)
        for dseq, _ in fr.known_dropped.values():
            if not fr.is_delivered(dseq) and dseq not in fr.retx_queue:
                fr.retx_queue.append(dseq)
        fr.outstanding.clear()
        fr.known_dropped.clear()
        self.wd_sweeps += 1
        flows.on_loss(fr.state, fr.cfg, now)
        fr.recover_xmit = fr.xmit_serial
        self.arm_watchdog(fr, now)
        self.try_send(fr, now)

    # --- finite-flow lifecycle ---------------------------------------------

    def finish_repetition(self, fr: _FlowRuntime, now: float) -> None:
        fr.completions.append(now - fr.start_time)
        fr.active = False
        fr.outstanding.clear()
        fr.known_dropped.clear()
        fr.reps_left -= 1
        if fr.reps_left > 0:
            self.push(now + self.cfg.idle_gap_s, _START, fr.idx, None)

    def on_start(self, now: float, fr: _FlowRuntime) -> None:
        segments = int(math.ceil(self.cfg.volume_bytes / self.mss))
        fr.reset_for_repetition(segments, now)
        self.try_send(fr, now)

    # --- main loop ---------------------------------------------------------

    def run(self) -> None:
        cfg = self.cfg
        n = len(self.flows)
        n_long = n - 1 if self.finite_idx is not None else n
        for fr in self.flows:
            if self.finite_idx is not None and fr.idx == self.finite_idx:
                fr.reps_left = cfg.repetitions
                fr.active = False
                fr.volume_segments = 0
                self.push(cfg.warmup_s, _START, fr.idx, None)
                continue
            share = _fair_share_window(self.link, fr.cfg.tcp, max(1, n_long))
            w0 = max(flows.MIN_CWND,
                     share * (1.0 + 0.05 * (fr.rng.random() - 0.5)))
            fr.state = flows.make_state(
                FlowConfig(flavor=fr.cfg.flavor, tcp=fr.cfg.tcp, initial_cwnd=w0))
            start = fr.idx * self.link.base_rtt_s / n
            self.push(start, _SEND, fr.idx, None)

        heap = self.heap
        duration = cfg.duration_s
        while heap:
            t, _, kind, fi, payload = heapq.heappop(heap)
            if t > duration:
                break
            fr = self.flows[fi]
            if kind == _ARRIVE:
                self.on_arrive(t, fr, payload[0], payload[1])
            elif kind == _DEPART:
                self.on_depart(t, fr, payload[0], payload[1], payload[2])
            elif kind == _ACK:
                self.on_ack(t, fr, payload[0], payload[1])
            elif kind == _SEND:
                self.try_send(fr, t)
            elif kind == _TIMER:
                self.on_timer(t, fr, payload[0], payload[1])
            elif kind == _WATCHDOG:
                self.on_watchdog(t, fr, payload)
            elif kind == _START:
                if fr.reps_left > 0:
                    self.on_start(t, fr)

    def trace(self) -> RateTrace:
        cfg = self.cfg
        meta = {
            "engine": ENGINE_VERSION,
            "rtt_min": [fr.rtt_min for fr in self.flows],
            "rtt_max": [fr.rtt_max for fr in self.flows],
            "queue_drops": dict(self.queue.drops_per_flow),
            "queue_peak_bytes": self.queue_peak,
            "watchdog_sweeps": self.wd_sweeps,
        }
        if self.finite_idx is not None:
            meta["completions"] = list(self.flows[self.finite_idx].completions)
        return RateTrace(
            interval_s=cfg.interval_s,
            bytes_per_interval=self.bytes_grid,
            config=cfg,
            sent=np.array([fr.sent for fr in self.flows]),
            dropped=np.array([fr.dropped for fr in self.flows]),
            delivered=np.array([fr.delivered for fr in self.flows]),
            metadata=meta,
        )


def run_shared_bottleneck(cfg: ScenarioConfig) -> RateTrace:
    """N flows through one tail-drop FIFO bottleneck."""
    if cfg.scenario is not Scenario.SHARED_BOTTLENECK:
        raise ValueError("config is not a SharedBottleneck scenario")
    eng = _Engine(cfg)
    eng.run()
    return eng.trace()


def run_finite_flow(cfg: ScenarioConfig) -> list:
    """Repeated fixed-volume flow among long-lived ones.

    Returns the list of completion times (seconds); the full trace is
    available via run_finite_flow_trace.
    """
    return run_finite_flow_trace(cfg).metadata["completions"]


def run_finite_flow_trace(cfg: ScenarioConfig) -> RateTrace:
    if cfg.scenario is not Scenario.FINITE_FLOW:
        raise ValueError("config is not a FiniteFlow scenario")
    eng = _Engine(cfg)
    eng.run()
    return eng.trace()


def run_scenario(cfg: ScenarioConfig) -> RateTrace:
    """Dispatch on cfg.scenario."""
    if cfg.scenario is Scenario.RANDOM_DROP:
        return run_random_drop(cfg)
    if cfg.scenario is Scenario.SHARED_BOTTLENECK:
        return run_shared_bottleneck(cfg)
    return run_finite_flow_trace(cfg)


# ---------------------------------------------------------------------------
# plain-text config files

_SCENARIOS = {s.value: s for s in Scenario}
_REACTIONS = {m.value: m for m in LossReaction}
_FLAVORS = {f.value: f for f in Flavor}


def parse_config(text: str) -> ScenarioConfig:
    """Parse the key = value config format.

    Global keys: scenario, duration, seed, interval, warmup, p_loss,
    capacity, rtt, buffer, mode, volume, repetitions, idle_gap.
    Each `[flow]` section starts one flow with keys flavor, mss,
    initial_cwnd, ack_ratio.  Lines starting with # are comments.
    """
    globals_: dict = {}
    flow_dicts: list = []
    current = globals_
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[flow]":
            flow_dicts.append({})
            current = flow_dicts[-1]
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        current[key.strip()] = value.strip()

    def fget(d, key, cast, default=None):
        if key not in d:
            return default
        try:
            return cast(d[key])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad value for {key}: {d[key]!r}") from exc

    scenario_name = globals_.get("scenario")
    if scenario_name not in _SCENARIOS:
        raise ValueError(f"scenario must be one of {sorted(_SCENARIOS)}, "
                         f"got {scenario_name!r}")
    scenario = _SCENARIOS[scenario_name]

    rtt = fget(globals_, "rtt", float, 0.1)
    flow_cfgs = []
    if not flow_dicts:
        raise ValueError("at least one [flow] section required")
    for fd in flow_dicts:
        flavor_name = fd.get("flavor", "reno")
        if flavor_name not in _FLAVORS:
            raise ValueError(f"flavor must be one of {sorted(_FLAVORS)}, "
                             f"got {flavor_name!r}")
        count = fget(fd, "count", int, 1)
        tcp = TcpParams(mss_bytes=fget(fd, "mss", int, 1514),
                        rtt_s=rtt,
                        ack_ratio_a=fget(fd, "ack_ratio", float, 2.0),
                        flavor=_FLAVORS[flavor_name])
        for _ in range(count):
            flow_cfgs.append(FlowConfig(
                flavor=_FLAVORS[flavor_name], tcp=tcp,
                initial_cwnd=fget(fd, "initial_cwnd", float, 2.0)))

    link = None
    if "capacity" in globals_:
        link = LinkSpec(capacity_bps=fget(globals_, "capacity", float),
                        base_rtt_s=rtt,
                        buffer_bytes=fget(globals_, "buffer", int))

    mode_name = globals_.get("mode", LossReaction.PER_WINDOW.value)
    if mode_name not in _REACTIONS:
        raise ValueError(f"mode must be one of {sorted(_REACTIONS)}, got {mode_name!r}")

    return ScenarioConfig(
        scenario=scenario,
        flows=flow_cfgs,
        duration_s=fget(globals_, "duration", float),
        seed=fget(globals_, "seed", int, 1),
        link=link,
        p_loss=fget(globals_, "p_loss", float),
        loss_reaction=_REACTIONS[mode_name],
        interval_s=fget(globals_, "interval", float, 1.0),
        warmup_s=fget(globals_, "warmup", float, DEFAULT_WARMUP_S),
        volume_bytes=fget(globals_, "volume", int),
        repetitions=fget(globals_, "repetitions", int),
        idle_gap_s=fget(globals_, "idle_gap", float, DEFAULT_IDLE_GAP_S),
    )
