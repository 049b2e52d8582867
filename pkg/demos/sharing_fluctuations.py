#!/usr/bin/env python3
"""Two identical flows on one bottleneck do not settle at half each.

Runs a 35 minute tail-drop experiment (two Reno flows, 20 Mbit/s,
100 ms) and prints a minute-by-minute strip chart of flow 0's share.
The share sits far from 1/2 for tens of minutes at a stretch while
the link itself stays essentially full; only the two flows combined
are predictable, not either one alone.

Takes about a minute of wall time.
"""

import numpy as np

from tcpshare import (Flavor, FlowConfig, LinkSpec, Scenario, ScenarioConfig,
                      TcpParams, run_scenario)
from tcpshare.stats import rate_samples, stddev_vs_interval, summary

RTT = 0.1
WARMUP = 300.0

tcp = TcpParams(rtt_s=RTT)
cfg = ScenarioConfig(
    scenario=Scenario.SHARED_BOTTLENECK,
    flows=[FlowConfig(flavor=Flavor.RENO, tcp=tcp) for _ in range(2)],
    duration_s=2400.0, seed=1,
    link=LinkSpec(capacity_bps=20e6, base_rtt_s=RTT),
)
print("simulating 2x reno, 20 Mbit/s, 100 ms, BDP buffer ...")
tr = run_scenario(cfg)

r0 = rate_samples(tr, 60.0, WARMUP, flow=0)
r1 = rate_samples(tr, 60.0, WARMUP, flow=1)
print("\nminute  flow0 share  0%        50%       100%")
for k, (a, b) in enumerate(zip(r0, r1)):
    share = a / (a + b)
    bar = int(round(share * 40))
    print(f"  {k + 1:4d}  {share:10.2f}  |{'#' * bar:<40}|")

s = summary(rate_samples(tr, 1.0, WARMUP, flow=0))
print(f"\nflow 0 at 1 s resolution: q05 {s['q05']/1e6:.1f}  "
      f"q50 {s['q50']/1e6:.1f}  q95 {s['q95']/1e6:.1f} Mbit/s "
      f"(fair share 10.0)")

util = (np.sum(tr.bytes_per_interval) * 8.0
        / (cfg.duration_s * cfg.link.capacity_bps))
print(f"link utilization {util:.4f}")

print("\nstddev of flow 0's interval-average rate:")
for dt, sd in stddev_vs_interval(tr, (1, 4, 16, 60, 300), WARMUP,
                                 flow=0).items():
    print(f"  {dt:5.0f} s  {sd/1e6:5.2f} Mbit/s")

r300 = rate_samples(tr, 300.0, WARMUP, flow=0)
print("\nthe 300 s averages are stable, but stable at the wrong value:")
print("  " + "  ".join(f"{x/1e6:.1f}" for x in r300)
      + "   Mbit/s (fair share 10.0)")
