"""Rate-trace statistics: reaggregation, summaries, convergence metrics.

The central question these helpers answer: does averaging over longer
intervals shrink the rate fluctuations, and how long until it does?
Quantiles use the nearest-rank convention and stddev is the population
form, so results are reproducible to the bit across platforms.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .sim import RateTrace

DEFAULT_INTERVALS_S = (1.0, 4.0, 16.0, 30.0, 60.0, 120.0, 300.0, 600.0)


def reaggregate(trace: RateTrace, interval_s: float) -> RateTrace:
    """Regroup a trace onto a coarser grid.

    interval_s must be an integer multiple of the trace interval; a
    trailing partial group is discarded.  Byte totals over the kept
    span are preserved exactly.
    """
    ratio = interval_s / trace.interval_s
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9:
        raise ValueError(f"interval {interval_s} is not an integer multiple "
                         f"of the trace interval {trace.interval_s}")
    if m == 1:
        return trace
    n_flows, n = trace.bytes_per_interval.shape
    keep = (n // m) * m
    grouped = trace.bytes_per_interval[:, :keep] \
        .reshape(n_flows, keep // m, m).sum(axis=2)
    return dataclasses.replace(
        trace, interval_s=interval_s, bytes_per_interval=grouped,
        metadata={**trace.metadata, "reaggregated_from_s": trace.interval_s})


def strip_warmup(trace: RateTrace, warmup_s: float | None = None) -> RateTrace:
    """Drop the leading warm-up intervals (config warmup by default)."""
    if warmup_s is None:
        warmup_s = trace.config.warmup_s
    k = int(math.ceil(warmup_s / trace.interval_s - 1e-9))
    if k <= 0:
        return trace
    return dataclasses.replace(
        trace, bytes_per_interval=trace.bytes_per_interval[:, k:],
        metadata={**trace.metadata, "warmup_stripped_s": k * trace.interval_s})


def histogram(values, bin_edges=None, n_bins: int = 50):
    """Normalized histogram; the masses sum to 1 within 1e-12.

    Returns (edges, mass) with len(mass) == len(edges) - 1.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("histogram of an empty sample")
    if bin_edges is None:
        lo, hi = values.min(), values.max()
        if hi <= lo:
            hi = lo + 1.0
        bin_edges = np.linspace(lo, hi, n_bins + 1)
    counts, edges = np.histogram(values, bins=bin_edges)
    total = counts.sum()
    if total == 0:
        raise ValueError("all values fall outside the given bin edges")
    return edges, counts / total


def nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile on an already sorted sample."""
    n = sorted_values.size
    rank = max(1, int(math.ceil(q * n)))
    return float(sorted_values[min(rank, n) - 1])


def summary(values) -> dict:
    """Mean, population stddev and nearest-rank q05/q50/q95."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("summary of an empty sample")
    s = np.sort(values)
    return {
        "n": int(values.size),
        "mean": float(values.mean()),
        "stddev": float(values.std()),
        "q05": nearest_rank(s, 0.05),
        "q50": nearest_rank(s, 0.50),
        "q95": nearest_rank(s, 0.95),
    }


def rate_samples(trace: RateTrace, interval_s: float,
                 warmup_s: float | None = None,
                 flow: int | None = None) -> np.ndarray:
    """Per-interval rates (bit/s), warm-up removed.

    All flows pooled by default; `flow` restricts to one.  Pooling
    mixes any static rate offset between flows into the spread, so
    time-fluctuation measurements on multi-flow traces should go
    per flow.
    """
    t = strip_warmup(trace, warmup_s)
    t = reaggregate(t, interval_s)
    return t.rates_bps(flow).ravel() if flow is not None else t.rates_bps().ravel()


def stddev_vs_interval(trace: RateTrace,
                       intervals_s=DEFAULT_INTERVALS_S,
                       warmup_s: float | None = None,
                       flow: int | None = None) -> dict:
    """Population stddev of the rates at each averaging interval.

    Intervals that leave fewer than two samples are skipped.
    """
    out = {}
    for dt in intervals_s:
        samples = rate_samples(trace, dt, warmup_s, flow)
        if samples.size < 2:
            continue
        out[float(dt)] = float(samples.std())
    return out


def flow_mean_stddev_vs_interval(trace: RateTrace,
                                 intervals_s=DEFAULT_INTERVALS_S,
                                 warmup_s: float | None = None) -> dict:
    """Per-flow stddev curves, averaged over the flows.

    The pooled curve carries any static rate offset between flows at
    every interval, so it can never fall below that offset no matter
    how long the averaging window gets.  Convergence is about temporal
    fluctuation, which only the per-flow curves measure.
    """
    curves = [stddev_vs_interval(trace, intervals_s, warmup_s, flow=i)
              for i in range(trace.n_flows)]
    keys = set(curves[0]).intersection(*curves[1:]) if curves else set()
    return {dt: float(np.mean([c[dt] for c in curves])) for dt in sorted(keys)}


def sawtooth_interval_s(p_loss: float, rate_bps: float,
                        mss_bytes: int = 1514) -> float:
    """Mean time between losses at the given send rate: one loss per
    1/p packets, rate/(8 mss) packets per second."""
    if p_loss <= 0 or rate_bps <= 0:
        raise ValueError("p_loss and rate_bps must be positive")
    return 8.0 * mss_bytes / (p_loss * rate_bps)


def convergence_interval_50(stddevs: dict) -> float:
    """Averaging interval where stddev first falls to half its value at
    the shortest interval; log-linear interpolation between the
    measured points.  Returns math.inf when the curve never gets there.
    """
    if len(stddevs) < 2:
        raise ValueError("need stddevs at two or more intervals")
    items = sorted(stddevs.items())
    t0, s0 = items[0]
    target = 0.5 * s0
    prev_t, prev_s = t0, s0
    for t, s in items[1:]:
        if s <= target:
            if prev_s <= target:  # already below at the previous point
                return prev_t
            # linear in log(t) between the bracketing points
            f = (prev_s - target) / (prev_s - s)
            return float(math.exp(math.log(prev_t)
                                  + f * (math.log(t) - math.log(prev_t))))
        prev_t, prev_s = t, s
    return math.inf
