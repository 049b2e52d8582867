#!/usr/bin/env python3
"""How wide is the equilibrium rate distribution of a single TCP flow?

Solves the window Markov chain at a loss probability chosen so the
expected rate is 10 Mbit/s on a 100 ms path, then prints the rate
quantiles.  The 5%..95% span covers roughly a factor four; the spread
is an equilibrium property, so no amount of waiting shrinks it.
"""

from tcpshare import (ChainSpec, TcpParams, distribution_stats, ks_distance,
                      rate_distribution, reno_expected_cwnd,
                      reno_required_loss, solve_chain)

tcp = TcpParams(rtt_s=0.1, mss_bytes=1514)
p = reno_required_loss(10e6, tcp)
print(f"loss probability for 10 Mbit/s at 100 ms: p = {p:.3g}")

spec = ChainSpec(p_loss=p, rtt_s=tcp.rtt_s, mss_bytes=tcp.mss_bytes)
dist = solve_chain(spec)
pmf = rate_distribution(dist)
stats = distribution_stats(pmf, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95))

print(f"states 2..{spec.cwnd_max}, mean cwnd {dist.mean_cwnd():.1f}")
print("rate quantiles (Mbit/s):")
for name in ("q05", "q25", "q50", "q75", "q95"):
    print(f"  {name}  {stats[name]/1e6:6.2f}")
print(f"  mean  {stats['mean']/1e6:6.2f}")
print(f"spread q95/q05 = {stats['q95']/stats['q05']:.1f}")

# the whole curve stays close to a log-normal of p-independent width
ks = ks_distance(dist, reno_expected_cwnd(p))
print(f"KS distance to the sigma=0.41 log-normal: {ks:.3f}")
