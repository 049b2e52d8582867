"""Window chain: matrix structure, equilibrium, statistics, log-normal fit.

The equilibrium solver is cross-checked two independent ways: a
three-state chain solved by hand, and a brute-force simulation of the
embedded jump chain weighted by expected holding times.
"""

import math

import numpy as np
import pytest

from tcpshare import formulas, markov
from tcpshare.markov import ChainSpec


def test_halving_target():
    assert markov.halving_target(3) == 2
    assert markov.halving_target(4) == 2
    assert markov.halving_target(5) == 2
    assert markov.halving_target(6) == 3
    assert markov.halving_target(7) == 3
    assert markov.halving_target(9) == 4
    assert markov.halving_target(1024) == 512
    with pytest.raises(ValueError):
        markov.halving_target(2)


def test_outgoing_rates():
    spec = ChainSpec(p_loss=0.05, ack_ratio_a=2.0, cwnd_max=8)
    p = spec.shortcut_p
    assert p == pytest.approx(0.1)
    assert markov.outgoing_rate(2, spec) == pytest.approx(1.0)  # no halving out of the floor
    assert markov.outgoing_rate(5, spec) == pytest.approx(1.0 + 5 * p)
    assert markov.outgoing_rate(8, spec) == pytest.approx(8 * p)  # no increment at the top


def test_transition_matrix_three_states():
    # cwnd_max=4, P=0.1: out = (1, 1.3, 0.4); nonzeros are the two
    # increments and the halvings 3->2, 4->2
    spec = ChainSpec(p_loss=0.05, ack_ratio_a=2.0, cwnd_max=4)
    tm = markov.build_transition_matrix(spec)
    assert tm.matrix.shape == (3, 3)
    assert tm.entry(3, 2) == pytest.approx(1 / 1.3)
    assert tm.entry(4, 3) == pytest.approx(1 / 0.4)
    assert tm.entry(2, 3) == pytest.approx(0.3)
    assert tm.entry(2, 4) == pytest.approx(0.4)
    assert tm.entry(2, 2) == 0.0
    assert tm.entry(3, 4) == 0.0
    assert tm.entry(4, 2) == 0.0
    np.testing.assert_allclose(tm.out_rates, [1.0, 1.3, 0.4])


def test_rate_conservation():
    # un-normalizing rows by the destination out-rate must recover, per
    # column j, a total outflow equal to out(j)
    spec = ChainSpec(p_loss=1e-3, ack_ratio_a=2.0, cwnd_max=64)
    tm = markov.build_transition_matrix(spec)
    dense = tm.matrix.toarray() * tm.out_rates[:, None]
    np.testing.assert_allclose(dense.sum(axis=0), tm.out_rates, rtol=1e-12)


def test_equilibrium_three_states_by_hand():
    # balance: p2 = 0.3 p3 + 0.4 p4, 1.3 p3 = p2, 0.4 p4 = p3
    # gives (13, 10, 25)/48
    d = markov.solve_chain(ChainSpec(p_loss=0.05, ack_ratio_a=2.0, cwnd_max=4))
    np.testing.assert_allclose(d.probabilities, [13 / 48, 10 / 48, 25 / 48], rtol=1e-12)
    assert d.mean_cwnd() == pytest.approx((2 * 13 + 3 * 10 + 4 * 25) / 48)


def test_equilibrium_is_fixed_point():
    spec = ChainSpec(p_loss=1.1e-4)
    tm = markov.build_transition_matrix(spec)
    d = markov.solve_equilibrium(tm)
    assert d.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(d.probabilities >= 0)
    residual = np.max(np.abs(d.probabilities - tm.matrix @ d.probabilities))
    assert residual < markov.BALANCE_TOL


def _jump_chain_occupancy(spec, n_steps, seed):
    """Simulate the embedded jump chain; weight visits by holding times."""
    lo, hi = markov.MIN_STATE, spec.cwnd_max
    out = np.array([markov.outgoing_rate(i, spec) for i in range(lo, hi + 1)])
    p_inc = np.array([(1.0 if i < hi else 0.0) for i in range(lo, hi + 1)]) / out
    hold = 1.0 / out
    u = np.random.default_rng(seed).random(n_steps)
    weights = np.zeros(hi - lo + 1)
    state = lo
    for k in range(n_steps):
        idx = state - lo
        weights[idx] += hold[idx]
        if u[k] < p_inc[idx]:
            state += 1
        else:
            state = max(lo, state // 2)
    return weights / weights.sum()


def test_equilibrium_matches_jump_chain_simulation():
    spec = ChainSpec(p_loss=0.125, ack_ratio_a=2.0, cwnd_max=12)
    d = markov.solve_chain(spec)
    emp = _jump_chain_occupancy(spec, n_steps=1_000_000, seed=7)
    assert np.max(np.abs(emp - d.probabilities)) < 0.005
    visible = d.probabilities >= 0.05
    rel = np.abs(emp[visible] - d.probabilities[visible]) / d.probabilities[visible]
    assert np.max(rel) < 0.01


def test_auto_cwnd_max():
    assert markov.auto_cwnd_max(1.1e-4) == 1024  # 8 * 82.6 -> next power of two
    assert markov.auto_cwnd_max(1e-2) == 128
    assert markov.auto_cwnd_max(0.4) == 16
    spec = ChainSpec(p_loss=1.1e-4)
    assert spec.cwnd_max == 1024


def test_truncation_insensitive():
    # doubling the truncation point must not move the quantiles
    st1 = markov.distribution_stats(markov.rate_distribution(
        markov.solve_chain(ChainSpec(p_loss=1.1e-4, cwnd_max=1024))))
    st2 = markov.distribution_stats(markov.rate_distribution(
        markov.solve_chain(ChainSpec(p_loss=1.1e-4, cwnd_max=2048))))
    for key in ("q05", "q50", "q95", "mean"):
        assert st2[key] == pytest.approx(st1[key], rel=1e-3)


def test_tail_mass_small_at_auto_truncation():
    d = markov.solve_chain(ChainSpec(p_loss=1.1e-4))
    assert d.tail_mass(0.1) < 1e-8


def test_mean_cwnd_tracks_inverse_sqrt_law():
    for p in (1e-5, 1e-4, 1e-3, 1e-2):
        d = markov.solve_chain(ChainSpec(p_loss=p))
        assert d.mean_cwnd() == pytest.approx(formulas.reno_expected_cwnd(p), rel=0.10)


def test_rate_quantiles_10mbit_operating_point():
    # loss probability tuned for 10 Mbit/s: median ~10, 5th ~4.7,
    # 95th ~19 Mbit/s, mean ~10.6
    d = markov.solve_chain(ChainSpec(p_loss=1.1e-4, rtt_s=0.1, mss_bytes=1514))
    st = markov.distribution_stats(markov.rate_distribution(d))
    assert st["q05"] == pytest.approx(4.72368e6, rel=1e-4)
    assert st["q50"] == pytest.approx(9.93184e6, rel=1e-4)
    assert st["q95"] == pytest.approx(1.888947e7 / 1.0, rel=1e-3)
    assert st["mean"] == pytest.approx(1.0645487e7, rel=1e-4)
    # the span q05..q95 covers a factor of four
    assert st["q95"] / st["q05"] > 3.5


def test_distribution_stats_by_hand():
    pmf = markov.RatePmf(rates_bps=np.array([10.0, 20.0, 30.0]),
                         probabilities=np.array([0.5, 0.3, 0.2]))
    st = markov.distribution_stats(pmf)
    assert st["mean"] == pytest.approx(17.0)
    assert st["stddev"] == pytest.approx(math.sqrt(61.0))
    assert st["q05"] == 10.0
    assert st["q50"] == 10.0  # CDF hits 0.5 exactly at the first point
    assert st["q95"] == 30.0


def test_rate_distribution_scaling():
    d = markov.solve_chain(ChainSpec(p_loss=0.05, ack_ratio_a=2.0, cwnd_max=4,
                                     rtt_s=0.1, mss_bytes=1514))
    pmf = markov.rate_distribution(d)
    np.testing.assert_allclose(pmf.rates_bps, [s * 8 * 1514 / 0.1 for s in (2, 3, 4)])
    np.testing.assert_allclose(pmf.probabilities, d.probabilities)


def test_lognormal_cdf_basics():
    assert markov.lognormal_cdf(82.6, 82.6) == pytest.approx(0.5)
    assert markov.lognormal_cdf(0.0, 82.6) == 0.0
    vals = markov.lognormal_cdf(np.array([10.0, 80.0, 600.0]), 82.6)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 0.99
    with pytest.raises(ValueError):
        markov.lognormal_cdf(10.0, -1.0)
    with pytest.raises(ValueError):
        markov.lognormal_cdf(10.0, 82.6, sigma=0.0)


def test_ks_distance_of_binned_lognormal_is_small():
    # binning a log-normal onto the integer lattice and comparing it to
    # itself must give a near-zero distance
    e_cwnd = 200.0
    edges = np.arange(1.5, 4096.5)
    mass = np.diff(markov.lognormal_cdf(edges, e_cwnd))
    mass /= mass.sum()
    synth = markov.StateDistribution(
        spec=ChainSpec(p_loss=1e-4, cwnd_max=4095), probabilities=mass)
    assert markov.ks_distance(synth, e_cwnd) < 0.01


def test_chain_depends_on_shortcut_product_only():
    # (p_loss, a) enter only through P = a * p_loss, in the chain and in
    # the expected-window formula alike
    d2 = markov.solve_chain(ChainSpec(p_loss=1e-3, ack_ratio_a=2.0, cwnd_max=256))
    d1 = markov.solve_chain(ChainSpec(p_loss=2e-3, ack_ratio_a=1.0, cwnd_max=256))
    np.testing.assert_allclose(d1.probabilities, d2.probabilities, rtol=1e-12)
    e2 = formulas.reno_expected_cwnd(1e-3, a=2.0)
    e1 = formulas.reno_expected_cwnd(2e-3, a=1.0)
    assert e1 == pytest.approx(e2, rel=1e-12)
    assert markov.ks_distance(d1, e1) == pytest.approx(markov.ks_distance(d2, e2), rel=1e-12)


def test_ks_distance_sweep_regression():
    # frozen values of the log-normal fit quality across five decades;
    # the fit is tight at low loss and degrades near the window floor
    expected = {1e-5: 0.0191, 1e-4: 0.0270, 1e-3: 0.0537, 1e-2: 0.1358, 1e-1: 0.1715}
    for p, want in expected.items():
        d = markov.solve_chain(ChainSpec(p_loss=p))
        got = markov.ks_distance(d, formulas.reno_expected_cwnd(p))
        assert got == pytest.approx(want, abs=2e-3)


def test_chain_spec_validation():
    with pytest.raises(ValueError):
        ChainSpec(p_loss=0.0)
    with pytest.raises(ValueError):
        ChainSpec(p_loss=1.0)
    with pytest.raises(ValueError):
        ChainSpec(p_loss=0.1, cwnd_max=3)
    with pytest.raises(ValueError):
        ChainSpec(p_loss=0.1, ack_ratio_a=0.0)
