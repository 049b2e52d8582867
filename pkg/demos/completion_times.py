#!/usr/bin/env python3
"""The completion-time lottery for a short transfer on a busy link.

Launches the same 12 MB transfer thirty times into a 100 Mbit/s link
carrying nine long-lived Reno flows (fair share 10 Mbit/s, so the
nominal duration is 9.6 s) and prints what each shot actually took.
The long flows' shares wander on a time scale far beyond one transfer,
so every shot samples a different quasi-static rate and the spread is
huge even though nothing about the setup changed between shots.

Takes two to three minutes of wall time.
"""

import numpy as np

from tcpshare import (Flavor, FlowConfig, LinkSpec, Scenario, ScenarioConfig,
                      TcpParams, run_scenario)

CAPACITY = 100e6
RTT = 0.1
SHOTS = 30
BDP = int(CAPACITY * RTT / 8)

tcp = TcpParams(rtt_s=RTT)
cfg = ScenarioConfig(
    scenario=Scenario.FINITE_FLOW,
    flows=[FlowConfig(flavor=Flavor.RENO, tcp=tcp) for _ in range(10)],
    duration_s=1300.0, seed=3,
    link=LinkSpec(capacity_bps=CAPACITY, base_rtt_s=RTT,
                  buffer_bytes=BDP // 3),
    volume_bytes=12_000_000, repetitions=SHOTS,
)
print(f"12 MB transfer, 9 competing long flows, {SHOTS} shots ...")
tr = run_scenario(cfg)

comps = np.array(tr.metadata["completions"], dtype=float)
nominal = cfg.volume_bytes * 8.0 / (CAPACITY / 10)
print(f"\nnominal duration at fair share: {nominal:.1f} s\n")
for k, c in enumerate(comps):
    print(f"  shot {k + 1:2d}  {c:6.2f} s  |{'#' * int(round(c * 2)):<60}|")

s = np.sort(comps)
print(f"\n{s.size} shots: min {s[0]:.1f}  median {np.median(s):.1f}  "
      f"max {s[-1]:.1f} s")
print(f"same bytes, same link, same competition: "
      f"factor {s[-1]/s[0]:.1f} between luckiest and unluckiest")
