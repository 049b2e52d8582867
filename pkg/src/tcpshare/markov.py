"""Continuous-time Markov chain of congestion-window evolution.

The window of a long-lived flow under i.i.d. per-packet loss performs a
birth-halving process on the integer states 2..cwnd_max: unit steps up
at the (delayed-ACK reduced) growth rate, and halvings at a rate
proportional to the window itself, because a larger window sends more
packets and therefore catches more drops.  With the shortcut
P = a * p_loss and time rescaled by a*RTT the growth rate is exactly 1
and the halving rate of state i is i*P, so the equilibrium depends on P
alone.

State 2 is the floor (loss detection needs at least 2 segments in
flight): it is never left by halving, and state 3 halves into it.  The
top state is never left by increment.  State 1 is unreachable and not
modeled.

The equilibrium state vector is obtained by a direct sparse linear
solve of the balance equations with one equation replaced by the
normalization sum(p) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import ndtr

from .formulas import TcpParams, flow_rate, reno_expected_cwnd

# Logarithmic standard deviation of the log-normal window approximation.
# The relative spread of the window distribution is nearly constant over
# many decades of loss probability; this single value captures it.
LOGNORMAL_SIGMA = 0.41

MIN_STATE = 2

BALANCE_TOL = 1e-10
NORM_TOL = 1e-12


class EquilibriumError(RuntimeError):
    """Raised when the equilibrium solve does not meet the residual bound."""


def auto_cwnd_max(p_loss: float, a: float = 2.0) -> int:
    """Smallest power of two >= 8x the expected Reno window.

    Puts the far tail of the window distribution (several log-normal
    sigma) comfortably inside the truncated state space.
    """
    target = 8.0 * reno_expected_cwnd(p_loss, a)
    n = 1 << max(2, math.ceil(math.log2(target)))
    return max(n, 8)


@dataclass(frozen=True)
class ChainSpec:
    """Parameters of the window chain.

    p_loss and ack_ratio_a enter the equilibrium only through the
    product P = a * p_loss; rtt_s and mss_bytes are carried along to
    scale window states into bit rates.
    """

    p_loss: float
    ack_ratio_a: float = 2.0
    cwnd_max: int | None = None
    rtt_s: float = 0.1
    mss_bytes: int = 1514

    def __post_init__(self):
        if not 0.0 < self.p_loss < 1.0:
            raise ValueError(f"p_loss must be in (0, 1), got {self.p_loss}")
        if self.ack_ratio_a < 1:
            raise ValueError(f"ack_ratio_a must be >= 1, got {self.ack_ratio_a}")
        if self.cwnd_max is None:
            object.__setattr__(self, "cwnd_max", auto_cwnd_max(self.p_loss, self.ack_ratio_a))
        if self.cwnd_max < 4:
            raise ValueError(f"cwnd_max must be >= 4, got {self.cwnd_max}")

    @property
    def shortcut_p(self) -> float:
        return self.ack_ratio_a * self.p_loss

    @property
    def tcp(self) -> TcpParams:
        return TcpParams(mss_bytes=self.mss_bytes, rtt_s=self.rtt_s,
                         ack_ratio_a=self.ack_ratio_a)


def halving_target(i: int) -> int:
    """Destination state of a halving from state i (floor, clamped to 2)."""
    if i < 3:
        raise ValueError(f"halving source must be >= 3, got {i}")
    return max(MIN_STATE, i // 2)


def outgoing_rate(i: int, spec: ChainSpec) -> float:
    """Total rate at which state i is left (time unit: a*RTT).

    Interior states leave by unit-rate increment plus halving at i*P;
    state 2 only by increment; the top state only by halving.
    """
    p = spec.shortcut_p
    rate = 0.0
    if i < spec.cwnd_max:
        rate += 1.0
    if i >= 3:
        rate += i * p
    return rate


@dataclass
class TransitionMatrix:
    """Sparse transition matrix over states 2..cwnd_max.

    matrix[i, j] is the rate from state j into state i divided by the
    total outgoing rate of state i, so the equilibrium vector satisfies
    p = matrix @ p.  Row/column k corresponds to state k + 2.
    """

    spec: ChainSpec
    matrix: sp.csr_matrix
    out_rates: np.ndarray  # outgoing rate per state, same indexing

    @property
    def states(self) -> np.ndarray:
        return np.arange(MIN_STATE, self.spec.cwnd_max + 1)

    def entry(self, i: int, j: int) -> float:
        """Matrix entry addressed by state numbers (not array indices)."""
        return self.matrix[i - MIN_STATE, j - MIN_STATE]


def build_transition_matrix(spec: ChainSpec) -> TransitionMatrix:
    """Assemble the normalized transition matrix for the given spec.

    Un-normalized rates: state j contributes rate 1 to state j+1
    (increment, absent for the top state) and rate j*P to its halving
    target (absent for state 2, where halving is a self-loop below the
    floor).  Each row is then divided by the destination state's total
    outgoing rate.
    """
    m = spec.cwnd_max
    p = spec.shortcut_p
    n = m - MIN_STATE + 1

    out = np.array([outgoing_rate(i, spec) for i in range(MIN_STATE, m + 1)])

    rows, cols, vals = [], [], []
    for j in range(MIN_STATE, m + 1):
        if j < m:  # increment j -> j+1 at rate 1
            i = j + 1
            rows.append(i - MIN_STATE)
            cols.append(j - MIN_STATE)
            vals.append(1.0 / out[i - MIN_STATE])
        if j >= 3:  # halving j -> max(2, j//2) at rate j*P
            i = halving_target(j)
            rows.append(i - MIN_STATE)
            cols.append(j - MIN_STATE)
            vals.append(j * p / out[i - MIN_STATE])

    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return TransitionMatrix(spec=spec, matrix=matrix, out_rates=out)


@dataclass
class StateDistribution:
    """Equilibrium probability over window states 2..cwnd_max."""

    spec: ChainSpec
    probabilities: np.ndarray  # index k -> state k + 2

    @property
    def states(self) -> np.ndarray:
        return np.arange(MIN_STATE, self.spec.cwnd_max + 1)

    def prob(self, state: int) -> float:
        return float(self.probabilities[state - MIN_STATE])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def mean_cwnd(self) -> float:
        return float(np.dot(self.states, self.probabilities))

    def tail_mass(self, top_fraction: float = 0.1) -> float:
        """Probability mass in the top fraction of the state range."""
        k = max(1, int(len(self.probabilities) * top_fraction))
        return float(np.sum(self.probabilities[-k:]))


def solve_equilibrium(tm: TransitionMatrix) -> StateDistribution:
    """Solve p = A p with sum(p) = 1 by sparse direct elimination.

    One balance equation (the first) is replaced by the normalization
    row; the dropped balance is implied by rate conservation and is
    re-checked afterwards together with the rest.
    """
    a = tm.matrix.tocsc()
    n = a.shape[0]
    system = (a - sp.identity(n, format="csc")).tolil()
    system[0, :] = 1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0

    p = spla.spsolve(system.tocsc(), rhs)

    if not np.all(np.isfinite(p)):
        raise EquilibriumError("equilibrium solve produced non-finite entries")
    # Tiny negative round-off is clamped; anything larger is a failure.
    if np.any(p < -1e-12):
        raise EquilibriumError(
            f"equilibrium has negative probabilities (min {p.min():.3e})"
        )
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if not math.isclose(total, 1.0, rel_tol=1e-9):
        raise EquilibriumError(f"normalization off by {total - 1.0:.3e}")
    p /= total

    residual = np.max(np.abs(p - tm.matrix @ p))
    if residual > BALANCE_TOL:
        raise EquilibriumError(
            f"balance residual {residual:.3e} exceeds {BALANCE_TOL:.0e}"
        )
    return StateDistribution(spec=tm.spec, probabilities=p)


def solve_chain(spec: ChainSpec) -> StateDistribution:
    """Convenience wrapper: build the matrix and solve it."""
    return solve_equilibrium(build_transition_matrix(spec))


@dataclass
class RatePmf:
    """Discrete flow-rate distribution derived from a state distribution."""

    rates_bps: np.ndarray
    probabilities: np.ndarray

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probabilities)


def rate_distribution(d: StateDistribution) -> RatePmf:
    """Scale window states into bit rates, keeping the probabilities."""
    tcp = d.spec.tcp
    rates = np.array([flow_rate(int(s), tcp) for s in d.states])
    return RatePmf(rates_bps=rates, probabilities=d.probabilities.copy())


def distribution_stats(pmf: RatePmf,
                       quantiles: tuple[float, ...] = (0.05, 0.5, 0.95)) -> dict:
    """Mean, standard deviation and quantiles of a discrete PMF.

    A quantile is the smallest support point whose CDF reaches the
    requested level.
    """
    p = pmf.probabilities
    x = pmf.rates_bps
    mean = float(np.dot(x, p))
    var = float(np.dot((x - mean) ** 2, p))
    cdf = np.cumsum(p)
    out = {"mean": mean, "stddev": math.sqrt(max(var, 0.0))}
    for q in quantiles:
        idx = int(np.searchsorted(cdf, q - 1e-15))
        out[f"q{int(round(q * 100)):02d}"] = float(x[min(idx, len(x) - 1)])
    return out


def lognormal_cdf(cwnd, e_cwnd: float, sigma: float = LOGNORMAL_SIGMA):
    """Log-normal window CDF: Phi(ln(cwnd/e_cwnd) / sigma).

    Median at the expected window, constant logarithmic spread.
    Accepts scalars or arrays.
    """
    if e_cwnd <= 0 or sigma <= 0:
        raise ValueError("e_cwnd and sigma must be positive")
    cwnd = np.asarray(cwnd, dtype=float)
    with np.errstate(divide="ignore"):
        z = np.log(cwnd / e_cwnd) / sigma
    result = np.where(cwnd > 0, ndtr(z), 0.0)
    return float(result) if result.ndim == 0 else result


def ks_distance(d: StateDistribution, e_cwnd: float,
                sigma: float = LOGNORMAL_SIGMA) -> float:
    """Max CDF gap between the chain and its log-normal approximation.

    Evaluated at every chain support point.
    """
    chain_cdf = d.cdf()
    ln_cdf = lognormal_cdf(d.states.astype(float), e_cwnd, sigma)
    return float(np.max(np.abs(chain_cdf - ln_cdf)))
