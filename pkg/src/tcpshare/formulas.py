"""Closed-form TCP response functions.

Steady-state window and rate formulas for Reno and Cubic under a given
per-packet loss probability, plus their inversions (loss probability
required to hit a target rate).  These are used to parameterize
experiments and as analytic cross-checks against the window Markov
chain and the simulator.

Conventions: MSS is the on-wire packet size in bytes (default 1514, a
full Ethernet frame), rates are bit/s, RTT is seconds, and `a` is the
delayed-acknowledgment ratio (segments per ACK, 2 on stock receivers).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

DEFAULT_MSS_BYTES = 1514
DEFAULT_ACK_RATIO = 2.0

# Cubic window-curve constants (scaling factor and multiplicative
# decrease), as used by the kernel implementation.
CUBIC_C = 0.4
CUBIC_BETA = 0.7
# Prefactor of the steady-state Cubic window formula for C=0.4, beta=0.7.
CUBIC_RATE_COEFF = 1.17


class Flavor(enum.Enum):
    RENO = "reno"
    CUBIC = "cubic"


@dataclass(frozen=True)
class TcpParams:
    """Static per-flow TCP parameters."""

    mss_bytes: int = DEFAULT_MSS_BYTES
    rtt_s: float = 0.1
    ack_ratio_a: float = DEFAULT_ACK_RATIO
    flavor: Flavor = Flavor.RENO

    def __post_init__(self):
        if self.mss_bytes <= 0:
            raise ValueError(f"mss_bytes must be positive, got {self.mss_bytes}")
        if self.rtt_s <= 0:
            raise ValueError(f"rtt_s must be positive, got {self.rtt_s}")
        if self.ack_ratio_a < 1:
            raise ValueError(f"ack_ratio_a must be >= 1, got {self.ack_ratio_a}")

    @property
    def mss_bits(self) -> float:
        return 8.0 * self.mss_bytes


def flow_rate(cwnd: float, p: TcpParams) -> float:
    """Bit rate of a window-limited flow: mss_bits * cwnd / rtt."""
    return p.mss_bits * cwnd / p.rtt_s


def _check_loss_prob(p_loss: float) -> None:
    if not 0.0 < p_loss <= 1.0:
        raise ValueError(f"loss probability must be in (0, 1], got {p_loss}")


def reno_expected_cwnd(p_loss: float, a: float = DEFAULT_ACK_RATIO) -> float:
    """Expected Reno congestion window at loss probability p_loss.

    sqrt(3/(2a)) / sqrt(p_loss) -- the inverse-square-root law with the
    delayed-ACK ratio folded in.
    """
    _check_loss_prob(p_loss)
    return math.sqrt(3.0 / (2.0 * a)) / math.sqrt(p_loss)


def reno_expected_rate(p_loss: float, p: TcpParams) -> float:
    """Expected Reno bit rate at loss probability p_loss."""
    return flow_rate(reno_expected_cwnd(p_loss, p.ack_ratio_a), p)


def reno_required_loss(target_rate: float, p: TcpParams) -> float:
    """Loss probability at which Reno settles at target_rate bit/s.

    Exact inversion of reno_expected_rate.  A result > 1 means the
    target is unreachable at this MSS/RTT (window would sit below 1).
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    p_loss = (3.0 / (2.0 * p.ack_ratio_a)) * (p.mss_bits / (target_rate * p.rtt_s)) ** 2
    if p_loss > 1.0:
        raise ValueError(
            f"target rate {target_rate:g} bit/s unreachable: "
            f"required loss probability {p_loss:g} exceeds 1"
        )
    return p_loss


def cubic_expected_cwnd(p_loss: float, rtt_s: float) -> float:
    """Expected Cubic congestion window: 1.17 * (rtt/p_loss)^(3/4)."""
    _check_loss_prob(p_loss)
    if rtt_s <= 0:
        raise ValueError(f"rtt_s must be positive, got {rtt_s}")
    return CUBIC_RATE_COEFF * (rtt_s / p_loss) ** 0.75


def cubic_expected_rate(p_loss: float, p: TcpParams) -> float:
    """Expected Cubic bit rate at loss probability p_loss."""
    return flow_rate(cubic_expected_cwnd(p_loss, p.rtt_s), p)


def cubic_required_loss(target_rate: float, p: TcpParams) -> float:
    """Loss probability at which Cubic settles at target_rate bit/s.

    Solves 1.17 * (rtt/p)^(3/4) * mss_bits / rtt = target_rate for p.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    # (rtt/p)^(3/4) = target * rtt / (1.17 * mss_bits)
    ratio = target_rate * p.rtt_s / (CUBIC_RATE_COEFF * p.mss_bits)
    p_loss = p.rtt_s / ratio ** (4.0 / 3.0)
    if p_loss > 1.0:
        raise ValueError(
            f"target rate {target_rate:g} bit/s unreachable: "
            f"required loss probability {p_loss:g} exceeds 1"
        )
    return p_loss


def expected_cwnd(p_loss: float, p: TcpParams) -> float:
    """Flavor-dispatching expected window."""
    if p.flavor is Flavor.CUBIC:
        return cubic_expected_cwnd(p_loss, p.rtt_s)
    return reno_expected_cwnd(p_loss, p.ack_ratio_a)


def required_loss(target_rate: float, p: TcpParams) -> float:
    """Flavor-dispatching inversion of the expected-rate formula."""
    if p.flavor is Flavor.CUBIC:
        return cubic_required_loss(target_rate, p)
    return reno_required_loss(target_rate, p)
