import math

import numpy as np
import pytest

from tcpshare import sim, stats
from tcpshare.flows import FlowConfig
from tcpshare.formulas import TcpParams


def make_trace(grid, interval_s=1.0, warmup_s=0.0):
    grid = np.asarray(grid, dtype=float)
    tcp = TcpParams(rtt_s=0.1)
    link = sim.LinkSpec(capacity_bps=1e7, base_rtt_s=0.1)
    cfg = sim.ScenarioConfig(
        scenario=sim.Scenario.SHARED_BOTTLENECK,
        flows=[FlowConfig(tcp=tcp) for _ in range(grid.shape[0])],
        duration_s=grid.shape[1] * interval_s or 1.0, seed=1, link=link,
        interval_s=interval_s, warmup_s=warmup_s)
    n = grid.shape[0]
    return sim.RateTrace(interval_s=interval_s, bytes_per_interval=grid,
                         config=cfg, sent=np.zeros(n), dropped=np.zeros(n),
                         delivered=np.zeros(n))


# --- reaggregate --------------------------------------------------------

def test_reaggregate_groups_and_discards_partial():
    tr = make_trace([[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]])
    out = stats.reaggregate(tr, 4.0)
    assert out.interval_s == 4.0
    assert np.array_equal(out.bytes_per_interval, [[10.0, 26.0]])


def test_reaggregate_preserves_totals():
    rng = np.random.default_rng(3)
    tr = make_trace(rng.integers(0, 1000, size=(2, 60)))
    out = stats.reaggregate(tr, 5.0)
    assert out.bytes_per_interval.sum() == tr.bytes_per_interval.sum()


def test_reaggregate_identity():
    tr = make_trace([[1, 2, 3]])
    assert stats.reaggregate(tr, 1.0) is tr


def test_reaggregate_rejects_non_multiple():
    tr = make_trace([[1, 2, 3, 4]])
    with pytest.raises(ValueError, match="multiple"):
        stats.reaggregate(tr, 2.5)
    with pytest.raises(ValueError, match="multiple"):
        stats.reaggregate(tr, 0.5)


def test_strip_warmup():
    tr = make_trace([[1, 2, 3, 4, 5]], warmup_s=2.0)
    out = stats.strip_warmup(tr)
    assert np.array_equal(out.bytes_per_interval, [[3.0, 4.0, 5.0]])
    explicit = stats.strip_warmup(tr, warmup_s=4.0)
    assert np.array_equal(explicit.bytes_per_interval, [[5.0]])
    assert stats.strip_warmup(tr, warmup_s=0.0) is tr


# --- histogram / summary --------------------------------------------------

def test_histogram_mass_sums_to_one():
    rng = np.random.default_rng(1)
    edges, mass = stats.histogram(rng.normal(10, 2, 10000), n_bins=40)
    assert abs(mass.sum() - 1.0) < 1e-12
    assert len(mass) == len(edges) - 1


def test_histogram_custom_edges():
    edges, mass = stats.histogram([0.5, 1.5, 2.5, 2.6], bin_edges=[0, 1, 2, 3])
    assert np.array_equal(mass, [0.25, 0.25, 0.5])


def test_histogram_empty_rejected():
    with pytest.raises(ValueError):
        stats.histogram([])


def test_nearest_rank_quantiles():
    v = np.arange(1.0, 11.0)  # 1..10
    assert stats.nearest_rank(v, 0.05) == 1.0
    assert stats.nearest_rank(v, 0.50) == 5.0
    assert stats.nearest_rank(v, 0.95) == 10.0
    assert stats.nearest_rank(v, 1.00) == 10.0


def test_summary_population_stddev():
    s = stats.summary([2, 4, 4, 4, 5, 5, 7, 9])
    assert s["mean"] == 5.0
    assert s["stddev"] == 2.0  # population form, not n-1
    assert s["n"] == 8
    assert s["q50"] == 4.0


# --- interval scan --------------------------------------------------------

def test_stddev_vs_interval_constant_rate():
    tr = make_trace([[1000] * 64])
    out = stats.stddev_vs_interval(tr, intervals_s=(1.0, 4.0, 16.0))
    assert out == {1.0: 0.0, 4.0: 0.0, 16.0: 0.0}


def test_stddev_vs_interval_alternation_cancels():
    # rate alternates 0 / 2X every second: full spread at 1 s,
    # exactly zero once intervals pair the phases
    tr = make_trace([[0, 2000] * 32])
    out = stats.stddev_vs_interval(tr, intervals_s=(1.0, 2.0))
    assert out[1.0] == pytest.approx(8000.0)  # bits/s
    assert out[2.0] == 0.0


def test_stddev_vs_interval_skips_starved():
    tr = make_trace([[100] * 8])
    out = stats.stddev_vs_interval(tr, intervals_s=(1.0, 8.0))
    assert 8.0 not in out  # single sample, no stddev


def test_rate_samples_pools_flows():
    tr = make_trace([[100, 200], [300, 400]])
    samples = stats.rate_samples(tr, 1.0)
    assert sorted(samples) == [800.0, 1600.0, 2400.0, 3200.0]


def test_rate_samples_single_flow():
    tr = make_trace([[100, 200], [300, 400]])
    assert list(stats.rate_samples(tr, 1.0, flow=1)) == [2400.0, 3200.0]


def test_stddev_per_flow_excludes_static_offset():
    # constant but unequal flows: pooled spread is the offset itself,
    # per-flow spread is zero at every interval
    tr = make_trace([[1000] * 16, [3000] * 16])
    pooled = stats.stddev_vs_interval(tr, intervals_s=(1.0, 4.0))
    assert pooled[1.0] == pytest.approx(8000.0)
    assert pooled[4.0] == pytest.approx(8000.0)
    for flow in (0, 1):
        per = stats.stddev_vs_interval(tr, intervals_s=(1.0, 4.0), flow=flow)
        assert per == {1.0: 0.0, 4.0: 0.0}


# --- sawtooth / convergence -----------------------------------------------

def test_sawtooth_interval_examples():
    # measured loss ratios of the four 10 Mbit/s runs and the intervals
    # they imply
    cases = [
        (3.3e-3, 0.37),
        (4.0e-5, 29.5),
        (2.8e-3, 0.42),
        (2.5e-4, 4.7),
    ]
    for p, expected in cases:
        got = stats.sawtooth_interval_s(p, 10e6)
        assert got == pytest.approx(expected, rel=0.10)


def test_sawtooth_interval_formula():
    assert stats.sawtooth_interval_s(1e-3, 10e6, mss_bytes=1514) \
        == pytest.approx(12112.0 / 10000.0)
    with pytest.raises(ValueError):
        stats.sawtooth_interval_s(0.0, 10e6)


def test_convergence_interval_interpolates_log_linear():
    # stddev halves exactly between 16 and 64: target 2.0 from 4.0
    curve = {1.0: 4.0, 16.0: 3.0, 64.0: 1.0}
    got = stats.convergence_interval_50(curve)
    # f = (3-2)/(3-1) = 0.5 in log space between 16 and 64 -> 32
    assert got == pytest.approx(32.0)


def test_convergence_interval_not_reached():
    assert stats.convergence_interval_50({1.0: 4.0, 600.0: 3.9}) == math.inf


def test_convergence_interval_validates():
    with pytest.raises(ValueError):
        stats.convergence_interval_50({1.0: 4.0})
