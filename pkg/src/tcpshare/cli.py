"""Command line front end.

Five subcommands cover the workflow end to end:

  solve      equilibrium of the window chain: rate PMF, quantiles,
             log-normal comparison
  simulate   run a packet-level scenario and persist its trace
  analyze    histogram, summary and averaging statistics of a stored trace
  reproduce  regenerate the published figures and tables as gnuplot-ready
             .dat files plus a comparison JSON
  verify     self-check against the published numbers, one line per check

Output files land in --outdir, else $TCPSHARE_OUTDIR, else the working
directory.  Exit codes: 0 success, 1 usage error, 2 verification
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import functools
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import reference
from .flows import FlowConfig
from .formulas import (DEFAULT_ACK_RATIO, DEFAULT_MSS_BYTES, Flavor,
                       TcpParams, cubic_required_loss, expected_cwnd,
                       reno_expected_cwnd, reno_required_loss)
from .markov import (LOGNORMAL_SIGMA, ChainSpec, EquilibriumError,
                     build_transition_matrix, distribution_stats,
                     ks_distance, lognormal_cdf, rate_distribution,
                     solve_chain)
from .sim import (LinkSpec, LossReaction, RateTrace, Scenario,
                  ScenarioConfig, measured_loss_ratio, parse_config,
                  run_random_drop, run_scenario, run_shared_bottleneck)
from .stats import (DEFAULT_INTERVALS_S, convergence_interval_50,
                    flow_mean_stddev_vs_interval, histogram, nearest_rank,
                    rate_samples, sawtooth_interval_s, stddev_vs_interval,
                    strip_warmup, summary)
from .trace import config_to_dict, read_trace, write_trace

# published setup durations and the desk-scale defaults used by reproduce
FULL_DURATION_S = 43200.0
DESK_DURATION_S = 7200.0
FULL_REPETITIONS = 2500
DESK_REPETITIONS = 500


def _out_dir(args) -> Path:
    d = getattr(args, "outdir", None) or os.environ.get("TCPSHARE_OUTDIR") or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _mbps(x: float) -> str:
    return f"{x / 1e6:.2f}"


def _write_csv(path: Path, header: str, rows) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_dat(path: Path, blocks) -> None:
    """Gnuplot data file: blocks separated by two blank lines (index n)."""
    with path.open("w", encoding="utf-8") as fh:
        for b, (label, rows) in enumerate(blocks):
            if b:
                fh.write("\n\n")
            fh.write(f"# {label}\n")
            for row in rows:
                fh.write(" ".join(f"{v:.8g}" for v in row) + "\n")


def _ecdf(samples: np.ndarray, max_points: int = 2000):
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    ys = np.arange(1, n + 1) / n
    if n > max_points:
        idx = np.unique(np.linspace(0, n - 1, max_points).astype(int))
        xs, ys = xs[idx], ys[idx]
    return xs, ys


def _json_safe(obj):
    """inf/nan have no JSON encoding; map them to None."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_json_safe(obj), indent=1, sort_keys=True) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    spec = ChainSpec(p_loss=args.p_loss, ack_ratio_a=args.a,
                     cwnd_max=args.cwnd_max, rtt_s=args.rtt,
                     mss_bytes=args.mss)
    dist = solve_chain(spec)
    pmf = rate_distribution(dist)
    st = distribution_stats(pmf)
    e_w = reno_expected_cwnd(args.p_loss, args.a)
    ks = ks_distance(dist, e_w, sigma=args.sigma)

    out = _out_dir(args)
    tag = f"solve-p{args.p_loss:g}-a{args.a:g}-rtt{args.rtt:g}"
    rates_csv = out / f"{tag}.rates.csv"
    _write_csv(rates_csv, "cwnd,rate_bps,probability,cdf",
               zip((int(s) for s in dist.states),
                   (float(r) for r in pmf.rates_bps),
                   (float(p) for p in dist.probabilities),
                   (float(c) for c in dist.cdf())))
    report = {
        "p_loss": args.p_loss,
        "ack_ratio_a": args.a,
        "rtt_s": args.rtt,
        "mss_bytes": args.mss,
        "cwnd_max": dist.spec.cwnd_max,
        "cwnd_max_auto": args.cwnd_max is None,
        "mean_cwnd": dist.mean_cwnd(),
        "expected_cwnd": e_w,
        "rate_bps": st,
        "lognormal_sigma": args.sigma,
        "lognormal_ks": ks,
        "rates_csv": str(rates_csv),
    }
    summary_json = out / f"{tag}.summary.json"
    _dump_json(summary_json, report)

    if args.json:
        print(json.dumps(_json_safe(report), indent=1, sort_keys=True))
        return 0
    print(f"q05 {_mbps(st['q05'])}  q50 {_mbps(st['q50'])}  "
          f"q95 {_mbps(st['q95'])}  mean {_mbps(st['mean'])} Mbit/s")
    print(f"E[cwnd] {dist.mean_cwnd():.2f} (closed form {e_w:.2f})  "
          f"log-normal ks {ks:.4f} (sigma {args.sigma})")
    if args.cwnd_max is None:
        print(f"cwnd_max auto-selected: {dist.spec.cwnd_max}")
    print(f"wrote {rates_csv}")
    print(f"wrote {summary_json}")
    return 0


# ---------------------------------------------------------------------------
# simulate

_SCENARIO_FLAGS = ("scenario", "flavor", "flows", "capacity", "rtt", "buffer",
                   "p_loss", "duration", "seed", "mode", "mss", "a",
                   "interval", "warmup", "burst", "initial_cwnd", "volume",
                   "repetitions", "idle_gap")


def _parse_flows(text: str, rtt: float, mss: int, a: float) -> list:
    """Flow list from a spec like '2xreno' or '1xreno,1xcubic'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        head, sep, flavor_txt = part.partition("x")
        if sep:
            try:
                n = int(head)
            except ValueError:
                raise ValueError(f"bad flow spec {part!r}: want NxFLAVOR") from None
        else:
            n, flavor_txt = 1, part
        if n < 1:
            raise ValueError(f"bad flow count in {part!r}")
        try:
            flavor = Flavor(flavor_txt.strip().lower())
        except ValueError:
            raise ValueError(f"unknown flavor {flavor_txt!r}") from None
        tcp = TcpParams(mss_bytes=mss, rtt_s=rtt, ack_ratio_a=a, flavor=flavor)
        out.extend(FlowConfig(flavor=flavor, tcp=tcp) for _ in range(n))
    if not out:
        raise ValueError(f"empty flow spec {text!r}")
    return out


def _build_sim_config(args) -> ScenarioConfig:
    if args.config is not None:
        clash = [f for f in _SCENARIO_FLAGS if getattr(args, f) is not None]
        if clash:
            raise ValueError("--config replaces the scenario flags "
                             f"(drop --{clash[0].replace('_', '-')})")
        return parse_config(Path(args.config).read_text(encoding="utf-8"))

    scenario = Scenario(args.scenario) if args.scenario else Scenario.RANDOM_DROP
    rtt = 0.1 if args.rtt is None else args.rtt
    mss = DEFAULT_MSS_BYTES if args.mss is None else args.mss
    a = DEFAULT_ACK_RATIO if args.a is None else args.a
    if args.duration is not None:
        duration = args.duration
    else:
        # default runs: 2 h, except finite needs room for 500 repetitions
        duration = 10800.0 if scenario is Scenario.FINITE_FLOW else DESK_DURATION_S
    kw: dict = {"scenario": scenario, "duration_s": duration,
                "seed": 1 if args.seed is None else args.seed}
    if args.mode is not None:
        kw["loss_reaction"] = LossReaction(args.mode)
    if args.interval is not None:
        kw["interval_s"] = args.interval
    if args.warmup is not None:
        kw["warmup_s"] = args.warmup
    if args.burst is not None:
        kw["burst_segments"] = args.burst

    if scenario is Scenario.RANDOM_DROP:
        if args.flows is not None:
            raise ValueError("--flows applies to shared/finite; "
                             "random-drop takes --flavor")
        if args.p_loss is None:
            raise ValueError("random-drop needs --p-loss")
        flavor = Flavor(args.flavor) if args.flavor else Flavor.RENO
        tcp = TcpParams(mss_bytes=mss, rtt_s=rtt, ack_ratio_a=a, flavor=flavor)
        if args.initial_cwnd is not None:
            w0 = args.initial_cwnd
        elif args.p_loss > 0:
            # start at the stationary mean so no warm-up is wasted
            w0 = max(2.0, expected_cwnd(args.p_loss, tcp))
        else:
            w0 = 2.0
        kw["flows"] = [FlowConfig(flavor=flavor, tcp=tcp, initial_cwnd=w0)]
        kw["p_loss"] = args.p_loss
        return ScenarioConfig(**kw)

    capacity = args.capacity if args.capacity is not None else \
        (100e6 if scenario is Scenario.FINITE_FLOW else 20e6)
    buffer_b = int(args.buffer) if args.buffer is not None else None
    kw["link"] = LinkSpec(capacity_bps=capacity, base_rtt_s=rtt,
                          buffer_bytes=buffer_b)
    if args.p_loss is not None:
        kw["p_loss"] = args.p_loss  # ScenarioConfig rejects it with context

    if scenario is Scenario.SHARED_BOTTLENECK:
        spec_txt = args.flows or (f"2x{args.flavor}" if args.flavor else "2xreno")
        kw["flows"] = _parse_flows(spec_txt, rtt, mss, a)
        return ScenarioConfig(**kw)

    # finite: --flows gives the long-lived background, the repeated
    # fixed-volume flow (flavor from --flavor) is appended last
    flows_list = _parse_flows(args.flows or "9xreno", rtt, mss, a)
    fin = Flavor(args.flavor) if args.flavor else Flavor.RENO
    flows_list.append(FlowConfig(
        flavor=fin, tcp=TcpParams(mss_bytes=mss, rtt_s=rtt, ack_ratio_a=a,
                                  flavor=fin)))
    kw["flows"] = flows_list
    kw["volume_bytes"] = int(args.volume) if args.volume is not None else 12_000_000
    kw["repetitions"] = 500 if args.repetitions is None else args.repetitions
    if args.idle_gap is not None:
        kw["idle_gap_s"] = args.idle_gap
    return ScenarioConfig(**kw)


def cmd_simulate(args) -> int:
    cfg = _build_sim_config(args)
    trace = run_scenario(cfg)
    rec = write_trace(trace, _out_dir(args))

    loss = measured_loss_ratio(trace)
    k0 = min(int(math.ceil(cfg.warmup_s / cfg.interval_s - 1e-9)),
             trace.n_intervals)
    span = (trace.n_intervals - k0) * cfg.interval_s
    flows_info = []
    for i, fc in enumerate(cfg.flows):
        mean = (float(trace.bytes_per_interval[i, k0:].sum()) * 8.0 / span
                if span > 0 else 0.0)
        flows_info.append({"flow": i, "flavor": fc.flavor.value,
                           "mean_bps": mean, "loss_ratio": loss[i]})
    completions = trace.metadata.get("completions")

    if args.json:
        report = {"run_id": rec.run_id, "trace_csv": str(rec.trace_path),
                  "meta_json": str(rec.meta_path), "flows": flows_info}
        if completions is not None:
            c = np.sort(np.array(completions))
            report["completions"] = {
                "count": int(c.size),
                "median_s": float(nearest_rank(c, 0.5)) if c.size else None,
                "q05_s": float(nearest_rank(c, 0.05)) if c.size else None,
                "q95_s": float(nearest_rank(c, 0.95)) if c.size else None,
            }
        print(json.dumps(_json_safe(report), indent=1, sort_keys=True))
        return 0

    print(f"run {rec.run_id}")
    print(f"wrote {rec.trace_path}")
    print(f"wrote {rec.meta_path}")
    for fi in flows_info:
        print(f"flow {fi['flow']} {fi['flavor']:<5}  mean {_mbps(fi['mean_bps'])} "
              f"Mbit/s  loss ratio {fi['loss_ratio']:.3g}")
    if completions is not None and completions:
        c = np.sort(np.array(completions))
        print(f"completions {c.size}  median {nearest_rank(c, 0.5):.2f} s  "
              f"q05 {nearest_rank(c, 0.05):.2f}  q95 {nearest_rank(c, 0.95):.2f}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    path = Path(args.trace)
    try:
        trace, rec = read_trace(path)
    except ValueError as exc:
        # malformed store content is an I/O failure, not a usage error
        print(f"error: {exc}", file=sys.stderr)
        return 3

    intervals = (tuple(float(x) for x in args.intervals.split(","))
                 if args.intervals else DEFAULT_INTERVALS_S)
    qs = (tuple(float(x) for x in args.quantiles.split(","))
          if args.quantiles else (5.0, 50.0, 95.0))
    n_bins = 50 if args.bins is None else args.bins

    base = trace.config.interval_s
    pooled = rate_samples(trace, base)
    if pooled.size < 2:
        print("error: insufficient data after warm-up", file=sys.stderr)
        return 1

    stripped = strip_warmup(trace)
    rates = stripped.rates_bps()
    loss = measured_loss_ratio(trace)

    def stats_of(vals: np.ndarray) -> dict:
        st = summary(vals)
        s = np.sort(vals)
        for q in qs:
            st[f"q{int(round(q)):02d}"] = float(nearest_rank(s, q / 100.0))
        return st

    flows_info = []
    for i, fc in enumerate(trace.config.flows):
        st = stats_of(rates[i])
        saw = (sawtooth_interval_s(loss[i], st["mean"], fc.tcp.mss_bytes)
               if loss[i] > 0 and st["mean"] > 0 else None)
        flows_info.append({"flow": i, "flavor": fc.flavor.value,
                           "loss_ratio": loss[i], "sawtooth_s": saw,
                           "rate_bps": st})

    # per-flow curves averaged: a static offset between flows is not
    # a fluctuation and must not show up as one
    curve = flow_mean_stddev_vs_interval(trace, intervals)
    conv = convergence_interval_50(curve) if len(curve) >= 2 else math.inf
    edges, mass = histogram(pooled, n_bins=n_bins)

    out = _out_dir(args)
    rid = rec.run_id
    hist_csv = out / f"{rid}.histogram.csv"
    _write_csv(hist_csv, "bin_left_bps,bin_right_bps,probability",
               zip(edges[:-1].tolist(), edges[1:].tolist(), mass.tolist()))
    stddev_csv = out / f"{rid}.stddev.csv"
    _write_csv(stddev_csv, "interval_s,stddev_bps",
               sorted(curve.items()))
    report = {
        "run_id": rid,
        "engine": rec.engine,
        "scenario": trace.config.scenario.value,
        "interval_s": base,
        "warmup_s": trace.config.warmup_s,
        "flows": flows_info,
        "pooled_rate_bps": stats_of(pooled),
        "loss_ratio_aggregate": loss["aggregate"],
        "stddev_vs_interval_bps": {f"{k:g}": v for k, v in sorted(curve.items())},
        "convergence_interval_50_s": conv,
        "histogram_csv": str(hist_csv),
        "stddev_csv": str(stddev_csv),
    }
    summary_json = out / f"{rid}.summary.json"
    _dump_json(summary_json, report)

    if args.json:
        print(json.dumps(_json_safe(report), indent=1, sort_keys=True))
        return 0
    for fi in flows_info:
        st = fi["rate_bps"]
        saw = f"  sawtooth {fi['sawtooth_s']:.1f} s" if fi["sawtooth_s"] else ""
        print(f"flow {fi['flow']} {fi['flavor']:<5}  mean {_mbps(st['mean'])}  "
              f"q05 {_mbps(st['q05'])}  q50 {_mbps(st['q50'])}  "
              f"q95 {_mbps(st['q95'])} Mbit/s  "
              f"loss {fi['loss_ratio']:.3g}{saw}")
    pooled_st = report["pooled_rate_bps"]
    print(f"pooled  mean {_mbps(pooled_st['mean'])} Mbit/s  "
          f"stddev {_mbps(pooled_st['stddev'])} Mbit/s  n {pooled_st['n']}")
    conv_txt = f"{conv:.0f} s" if math.isfinite(conv) else "not reached"
    print(f"convergence interval (50%): {conv_txt}")
    for f in (hist_csv, stddev_csv, summary_json):
        print(f"wrote {f}")
    return 0


# ---------------------------------------------------------------------------
# reproduce

# operating points frozen for the comparison runs
_RD_P_LOSS = 1.1e-4           # holds one Reno flow at 10 Mbit/s over 100 ms
_STDDEV_P_LOSS = 6e-5         # loss ratio matching the shared-run drop rate
_CONV_BURST = 1               # per-ACK pacing for the convergence runs
_CONV_DURATION_S = 14400.0
_FIN_DURATION_S = 9500.0
_FIN_BUFFER_DIVISOR = 3       # BDP/sqrt(N) sizing for ~10 flows


@functools.lru_cache(maxsize=None)
def _chain(p_loss: float, rtt: float):
    return solve_chain(ChainSpec(p_loss=p_loss, rtt_s=rtt))


@functools.lru_cache(maxsize=None)
def _random_drop_trace(flavor_v: str, p_loss: float, rtt: float,
                       duration: float, seed: int, reaction_v: str) -> RateTrace:
    flavor = Flavor(flavor_v)
    tcp = TcpParams(rtt_s=rtt, flavor=flavor)
    cfg = ScenarioConfig(
        scenario=Scenario.RANDOM_DROP,
        flows=[FlowConfig(flavor=flavor, tcp=tcp,
                          initial_cwnd=max(2.0, expected_cwnd(p_loss, tcp)))],
        duration_s=duration, seed=seed, p_loss=p_loss,
        loss_reaction=LossReaction(reaction_v))
    return run_random_drop(cfg)


@functools.lru_cache(maxsize=None)
def _shared_trace(flavors: tuple, capacity: float, rtt: float,
                  duration: float, seed: int, burst: int) -> RateTrace:
    flows = [FlowConfig(flavor=Flavor(f), tcp=TcpParams(rtt_s=rtt, flavor=Flavor(f)))
             for f in flavors]
    cfg = ScenarioConfig(
        scenario=Scenario.SHARED_BOTTLENECK, flows=flows,
        duration_s=duration, seed=seed,
        link=LinkSpec(capacity_bps=capacity, base_rtt_s=rtt),
        burst_segments=burst)
    return run_shared_bottleneck(cfg)


@functools.lru_cache(maxsize=None)
def _finite_trace(n_long: int, capacity: float, rtt: float, volume: int,
                  reps: int, duration: float, seed: int) -> RateTrace:
    flows = [FlowConfig(flavor=Flavor.RENO, tcp=TcpParams(rtt_s=rtt))
             for _ in range(n_long)]
    flows.append(FlowConfig(flavor=Flavor.RENO, tcp=TcpParams(rtt_s=rtt)))
    buf = int(capacity * rtt / 8) // _FIN_BUFFER_DIVISOR
    cfg = ScenarioConfig(
        scenario=Scenario.FINITE_FLOW, flows=flows,
        duration_s=duration, seed=seed,
        link=LinkSpec(capacity_bps=capacity, base_rtt_s=rtt,
                      buffer_bytes=buf),
        volume_bytes=volume, repetitions=reps)
    return run_scenario(cfg)


def _rate_row(st: dict) -> dict:
    return {"q05_mbps": st["q05"] / 1e6, "q50_mbps": st["q50"] / 1e6,
            "q95_mbps": st["q95"] / 1e6, "mean_mbps": st["mean"] / 1e6}


def _published_row(key: str) -> dict:
    q05, q50, q95, mean = reference.RATE_STATS[key]
    return {"q05_mbps": q05 / 1e6, "q50_mbps": q50 / 1e6,
            "q95_mbps": q95 / 1e6, "mean_mbps": mean / 1e6}


def _desk_note(full: bool, what: str, desk: str, orig: str) -> list:
    if full:
        return []
    return [f"desk scale: {what} {desk} (published setup {orig}); "
            f"--full restores it"]


def _fig2(out: Path, full: bool, seed: int):
    dur = FULL_DURATION_S if full else DESK_DURATION_S
    dist = _chain(_RD_P_LOSS, 0.1)
    pmf = rate_distribution(dist)
    tr = _random_drop_trace("reno", _RD_P_LOSS, 0.1, dur, seed, "per-window")
    sim = rate_samples(tr, 1.0)
    xs, ys = _ecdf(sim)
    dat = out / "fig2.dat"
    _write_dat(dat, [
        ("window chain: rate_mbps cdf",
         zip(pmf.rates_bps / 1e6, np.cumsum(pmf.probabilities))),
        ("random-drop simulation, 1 s averages: rate_mbps cdf",
         zip(xs / 1e6, ys)),
    ])
    comparison = {
        "p_loss": _RD_P_LOSS, "duration_s": dur, "seed": seed,
        "chain": _rate_row(distribution_stats(pmf)),
        "simulated": _rate_row(summary(sim)),
        "published_numeric": _published_row("reno-random-drop-numeric"),
        "published_experiment": _published_row("reno-random-drop-experiment"),
    }
    notes = _desk_note(full, "duration", "7200 s", "43200 s")
    return [dat], notes, comparison


def _fig3(out: Path, full: bool, seed: int):
    decades = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
    blocks, ks_map = [], {}
    for p in decades:
        dist = _chain(p, 0.1)
        e_w = reno_expected_cwnd(p)
        ks_map[f"{p:g}"] = ks_distance(dist, e_w)
        w = dist.states.astype(float)
        blocks.append((f"p_loss={p:g}: cwnd_over_mean chain_cdf lognormal_cdf",
                       zip(w / e_w, dist.cdf(), lognormal_cdf(w, e_w))))
    dat = out / "fig3.dat"
    _write_dat(dat, blocks)
    comparison = {"sigma": LOGNORMAL_SIGMA, "ks_by_p_loss": ks_map,
                  "ks_threshold": 0.05,
                  "within": {k: v <= 0.05 for k, v in ks_map.items()}}
    return [dat], [], comparison


def _fig4(out: Path, full: bool, seed: int):
    dur = FULL_DURATION_S if full else DESK_DURATION_S
    tr = _shared_trace(("reno", "reno"), 20e6, 0.1, dur, seed, 4)
    pooled = rate_samples(tr, 1.0)
    f0 = strip_warmup(tr).rates_bps()[0]
    loss = measured_loss_ratio(tr)
    # chain overlay at the loss ratio the shared run produced
    p_eq = max(loss["aggregate"], 1e-7)
    pmf = rate_distribution(_chain(p_eq, 0.1))
    xs0, ys0 = _ecdf(f0)
    xsp, ysp = _ecdf(pooled)
    dat = out / "fig4.dat"
    _write_dat(dat, [
        ("flow 0, 1 s averages: rate_mbps cdf", zip(xs0 / 1e6, ys0)),
        ("both flows pooled: rate_mbps cdf", zip(xsp / 1e6, ysp)),
        (f"window chain at measured p_loss={p_eq:.3g}: rate_mbps cdf",
         zip(pmf.rates_bps / 1e6, np.cumsum(pmf.probabilities))),
    ])
    st = summary(pooled)
    comparison = {
        "duration_s": dur, "seed": seed, "measured_loss_ratio": p_eq,
        "simulated": _rate_row(st),
        "q05_over_mean": st["q05"] / st["mean"],
        "q95_over_mean": st["q95"] / st["mean"],
        "published": _published_row("reno-1-of-2"),
    }
    notes = _desk_note(full, "duration", "7200 s", "43200 s")
    return [dat], notes, comparison


def _fig5(out: Path, full: bool, seed: int):
    dur = FULL_DURATION_S if full else DESK_DURATION_S
    rd = _random_drop_trace("reno", _STDDEV_P_LOSS, 0.1, dur, seed,
                            "per-window")
    sh = _shared_trace(("reno", "reno"), 20e6, 0.1, dur, seed, 4)
    curve_rd = flow_mean_stddev_vs_interval(rd)
    curve_sh = flow_mean_stddev_vs_interval(sh)
    dat = out / "fig5.dat"
    _write_dat(dat, [
        ("random drop: interval_s stddev_mbps",
         ((k, v / 1e6) for k, v in sorted(curve_rd.items()))),
        ("shared bottleneck, 2 flows: interval_s stddev_mbps",
         ((k, v / 1e6) for k, v in sorted(curve_sh.items()))),
    ])
    ratio16 = curve_rd[16.0] / curve_rd[1.0]
    comparison = {
        "p_loss": _STDDEV_P_LOSS, "duration_s": dur, "seed": seed,
        "random_drop_stddev_bps": {f"{k:g}": v for k, v in sorted(curve_rd.items())},
        "stddev_ratio_16s_over_1s": ratio16,
        "ratio_16s_min": reference.STDDEV_RATIO_16S_MIN,
        "stddev_600s_bps": curve_rd.get(600.0),
        "stddev_600s_target_bps": reference.STDDEV_600S_TARGET_BPS,
    }
    notes = _desk_note(full, "duration", "7200 s", "43200 s")
    return [dat], notes, comparison


def _conv_runs(full: bool, seed: int) -> dict:
    dur = FULL_DURATION_S if full else _CONV_DURATION_S
    out = {}
    for flavor in ("reno", "cubic"):
        for rtt in (0.1, 0.01):
            tr = _shared_trace((flavor, flavor), 20e6, rtt, dur, seed,
                               _CONV_BURST)
            curve = flow_mean_stddev_vs_interval(tr)
            out[(flavor, rtt)] = (curve, convergence_interval_50(curve))
    return out


def _fig6(out: Path, full: bool, seed: int):
    runs = _conv_runs(full, seed)
    blocks, conv_map = [], {}
    for (flavor, rtt), (curve, conv) in runs.items():
        blocks.append((f"{flavor} rtt={rtt:g}: interval_s stddev_mbps",
                       ((k, v / 1e6) for k, v in sorted(curve.items()))))
        conv_map[f"{flavor}-{rtt:g}"] = conv
    dat = out / "fig6.dat"
    _write_dat(dat, blocks)
    shift = {f: conv_map[f"{f}-0.1"] / conv_map[f"{f}-0.01"]
             for f in ("reno", "cubic")}
    comparison = {
        "seed": seed, "burst_segments": _CONV_BURST,
        "convergence_interval_50_s": conv_map,
        "shift_factor": shift,
        "published": {f"{fl}-{rtt:g}": ref["conv50_s"]
                      for (fl, rtt), ref in reference.RTT_CONVERGENCE.items()},
    }
    dur = FULL_DURATION_S if full else _CONV_DURATION_S
    notes = _desk_note(full, "duration per run", f"{dur:.0f} s", "43200 s")
    return [dat], notes, comparison


def _fig7(out: Path, full: bool, seed: int):
    dur = FULL_DURATION_S if full else DESK_DURATION_S
    tr = _shared_trace(("cubic", "cubic"), 20e6, 0.1, dur, seed, 4)
    rates = tr.rates_bps()
    k1 = tr.n_intervals
    k0 = max(0, k1 - 600)
    t = (np.arange(k0, k1) + 1) * tr.interval_s
    dat = out / "fig7.dat"
    _write_dat(dat, [
        ("last 600 s: t_s flow0_mbps flow1_mbps",
         zip(t, rates[0, k0:k1] / 1e6, rates[1, k0:k1] / 1e6)),
    ])
    st = summary(rate_samples(tr, 1.0))
    comparison = {
        "duration_s": dur, "seed": seed,
        "simulated": _rate_row(st),
        "published": _published_row("cubic-1-of-2"),
    }
    notes = _desk_note(full, "duration", "7200 s", "43200 s")
    return [dat], notes, comparison


def _fig8(out: Path, full: bool, seed: int):
    reps = FULL_REPETITIONS if full else DESK_REPETITIONS
    dur = 300.0 + reps * 21.0 + 300.0 if full else _FIN_DURATION_S
    tr = _finite_trace(9, 100e6, 0.1, 12_000_000, reps, dur, seed)
    comps = np.array(tr.metadata["completions"], dtype=float)
    xs, ys = _ecdf(comps)
    blocks = [("completion time: t_s cdf", zip(xs, ys))]
    # progress curves of the first four repetitions off the 1 s grid
    gap = tr.config.idle_gap_s
    row = tr.bytes_per_interval[-1]
    start = tr.config.warmup_s
    for r in range(min(4, comps.size)):
        k0, k1 = int(start), min(int(math.ceil(start + comps[r])) + 1,
                                 tr.n_intervals)
        cum = np.cumsum(row[k0:k1]) / 1e6
        t = np.arange(1, cum.size + 1) * tr.interval_s
        blocks.append((f"repetition {r}: t_since_start_s mbytes",
                       zip(t, cum)))
        start += comps[r] + gap
    dat = out / "fig8.dat"
    _write_dat(dat, blocks)
    c = np.sort(comps)
    comparison = {
        "repetitions": int(comps.size), "seed": seed,
        "median_s": float(nearest_rank(c, 0.5)),
        "q05_s": float(nearest_rank(c, 0.05)),
        "q95_s": float(nearest_rank(c, 0.95)),
        "nominal_s": reference.COMPLETION_NOMINAL_S,
        "published_fast_tail_s": reference.COMPLETION_FAST_TAIL_S,
        "published_slow_tail_s": reference.COMPLETION_SLOW_TAIL_S,
    }
    notes = _desk_note(full, "repetitions", str(DESK_REPETITIONS),
                       str(FULL_REPETITIONS))
    return [dat], notes, comparison


def _table1(out: Path, full: bool, seed: int):
    dur = FULL_DURATION_S if full else DESK_DURATION_S
    rows = []

    pmf = rate_distribution(_chain(_RD_P_LOSS, 0.1))
    rows.append(("random drop (numeric)", "reno-random-drop-numeric",
                 _rate_row(distribution_stats(pmf))))
    rd = _random_drop_trace("reno", _RD_P_LOSS, 0.1, dur, seed, "per-window")
    rows.append(("reno random drop", "reno-random-drop-experiment",
                 _rate_row(summary(rate_samples(rd, 1.0)))))
    sh2 = _shared_trace(("reno", "reno"), 20e6, 0.1, dur, seed, 4)
    rows.append(("reno 1 of 2", "reno-1-of-2",
                 _rate_row(summary(rate_samples(sh2, 1.0)))))
    cu2 = _shared_trace(("cubic", "cubic"), 20e6, 0.1, dur, seed, 4)
    rows.append(("cubic 1 of 2", "cubic-1-of-2",
                 _rate_row(summary(rate_samples(cu2, 1.0)))))
    notes = _desk_note(full, "duration per run", "7200 s", "43200 s")
    if full:
        # the wider sharing rows are heavy; only run them at full scale
        for n, flavor in ((3, "reno"), (10, "reno"), (3, "cubic"), (10, "cubic")):
            tr = _shared_trace((flavor,) * n, n * 10e6, 0.1, dur, seed, 4)
            rows.append((f"{flavor} 1 of {n}", f"{flavor}-1-of-{n}",
                         _rate_row(summary(rate_samples(tr, 1.0)))))
    else:
        notes.append("1-of-3 and 1-of-10 rows need --full")

    txt = out / "table1.txt"
    comparison = {}
    with txt.open("w", encoding="utf-8") as fh:
        fh.write(f"{'row':<24} {'q05':>6} {'q50':>6} {'q95':>6} {'mean':>6}"
                 f"   {'published q05/q50/q95/mean':>30}\n")
        for label, key, st in rows:
            pub = _published_row(key)
            fh.write(f"{label:<24} {st['q05_mbps']:>6.1f} {st['q50_mbps']:>6.1f} "
                     f"{st['q95_mbps']:>6.1f} {st['mean_mbps']:>6.1f}   "
                     f"{pub['q05_mbps']:>6.1f}/{pub['q50_mbps']:.1f}"
                     f"/{pub['q95_mbps']:.1f}/{pub['mean_mbps']:.1f}\n")
            comparison[key] = {"simulated": st, "published": pub}
    return [txt], notes, comparison


def _table2(out: Path, full: bool, seed: int):
    runs = _conv_runs(full, seed)
    txt = out / "table2.txt"
    comparison = {}
    with txt.open("w", encoding="utf-8") as fh:
        fh.write(f"{'row':<14} {'p_loss':>8} {'sawtooth_s':>11} "
                 f"{'published':>10} {'conv50_s':>9} {'published':>10}\n")
        for (flavor, rtt), ref in sorted(reference.RTT_CONVERGENCE.items()):
            saw = sawtooth_interval_s(ref["p_loss"], 10e6)
            conv = runs[(flavor, rtt)][1]
            conv_txt = f"{conv:>9.0f}" if math.isfinite(conv) else f"{'inf':>9}"
            fh.write(f"{flavor} {rtt * 1e3:>4.0f} ms  {ref['p_loss']:>8.2g} "
                     f"{saw:>11.2f} {ref['sawtooth_s']:>10.2f} "
                     f"{conv_txt} {ref['conv50_s']:>10.0f}\n")
            comparison[f"{flavor}-{rtt:g}"] = {
                "p_loss": ref["p_loss"],
                "sawtooth_s": saw, "published_sawtooth_s": ref["sawtooth_s"],
                "conv50_s": conv, "published_conv50_s": ref["conv50_s"],
            }
    dur = FULL_DURATION_S if full else _CONV_DURATION_S
    notes = _desk_note(full, "duration per run", f"{dur:.0f} s", "43200 s")
    return [txt], notes, comparison


_TARGETS = {
    "fig2": (_fig2, "rate distribution under random drop"),
    "fig3": (_fig3, "window CDFs against the log-normal form, 5 decades"),
    "fig4": (_fig4, "bandwidth sharing distribution, 2 Reno flows"),
    "fig5": (_fig5, "rate stddev vs averaging interval"),
    "fig6": (_fig6, "convergence interval vs RTT"),
    "fig7": (_fig7, "last minutes of a long Cubic sharing run"),
    "fig8": (_fig8, "completion times of repeated 12 MB transfers"),
    "table1": (_table1, "rate quantiles, all scenarios"),
    "table2": (_table2, "sawtooth and convergence intervals vs RTT"),
}


def cmd_reproduce(args) -> int:
    out = _out_dir(args)
    names = list(_TARGETS) if args.target == "all" else [args.target]
    for name in names:
        func, desc = _TARGETS[name]
        t0 = time.time()
        files, notes, comparison = func(out, args.full, args.seed)
        cmp_path = out / f"{name}.comparison.json"
        _dump_json(cmp_path, comparison)
        print(f"{name}: {desc} ({time.time() - t0:.1f} s)", flush=True)
        for note in notes:
            print(f"  note: {note}")
        for f in [*files, cmp_path]:
            print(f"  wrote {f}")
    return 0


# ---------------------------------------------------------------------------
# verify

_FIDELITY_SENSITIVE = {5, 8, 9}
_QUICK = {1, 2, 3, 4, 7, 10}


def _within(measured: float, target: float, rel: float) -> bool:
    return abs(measured - target) <= rel * abs(target)


def _check_equilibrium():
    st = distribution_stats(rate_distribution(_chain(_RD_P_LOSS, 0.1)))
    want = reference.RATE_STATS["reno-random-drop-numeric"]
    got = (st["q05"], st["q50"], st["q95"], st["mean"])
    ok = all(_within(g, w, 0.05) for g, w in zip(got, want))
    detail = ("q05/q50/q95/mean " + "/".join(_mbps(g) for g in got) +
              " vs " + "/".join(_mbps(w) for w in want) + " Mbit/s (tol 5%)")
    return ok, detail


def _occupancy_ks(occ: np.ndarray, dist) -> float:
    n = max(occ.size, int(dist.states[-1]) + 1)
    emp = np.zeros(n)
    emp[:occ.size] = occ
    chain = np.zeros(n)
    chain[dist.states] = dist.probabilities
    return float(np.max(np.abs(np.cumsum(emp) - np.cumsum(chain))))


def _check_sim_vs_chain():
    p, rtt = _RD_P_LOSS, 0.01
    tr = _random_drop_trace("reno", p, rtt, 43200.0, 7, "per-loss")
    ks = _occupancy_ks(tr.metadata["occupancy"], _chain(p, rtt))
    return ks <= 0.01, f"occupancy ks {ks:.4f} vs chain (tol 0.01, 12 h run)"


def _check_lognormal():
    decades = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
    ks = [ks_distance(_chain(p, 0.1), reno_expected_cwnd(p)) for p in decades]
    ok = all(k <= 0.05 for k in ks)
    return ok, ("ks " + "/".join(f"{k:.3f}" for k in ks) +
                " at p 1e-5..1e-1 (tol 0.05 each)")


def _check_response():
    pr = reno_required_loss(10e6, TcpParams(rtt_s=0.1))
    pc = cubic_required_loss(10e6, TcpParams(rtt_s=0.1, flavor=Flavor.CUBIC))
    wr = reference.RESPONSE_TARGETS["reno"]
    wc = reference.RESPONSE_TARGETS["cubic"]
    ok = _within(pr, wr, 0.05) and _within(pc, wc, 0.05)
    return ok, (f"reno {pr:.3g} vs {wr:g}, cubic {pc:.3g} vs {wc:g} (tol 5%)")


def _check_sharing():
    tr = _shared_trace(("reno", "reno"), 20e6, 0.1, DESK_DURATION_S, 1, 4)
    st = summary(rate_samples(tr, 1.0))
    k0 = int(tr.config.warmup_s)
    util = (tr.bytes_per_interval[:, k0:].sum() * 8.0
            / (20e6 * (tr.n_intervals - k0)))
    want = reference.RATE_STATS["reno-1-of-2"]
    ok = (all(_within(g, w, 0.20) for g, w in
              zip((st["q05"], st["q50"], st["q95"]), want))
          and st["q05"] <= 0.65 * st["mean"]
          and st["q95"] >= 1.35 * st["mean"]
          and util > 0.99)
    detail = (f"q05/q50/q95 {_mbps(st['q05'])}/{_mbps(st['q50'])}/"
              f"{_mbps(st['q95'])} vs 5.0/10.0/15.0 Mbit/s (tol 20%), "
              f"spread x{st['q05'] / st['mean']:.2f}..x{st['q95'] / st['mean']:.2f}"
              f" (want <=0.65, >=1.35), utilization {util:.4f}")
    return ok, detail


def _check_slow_averaging():
    tr = _random_drop_trace("reno", _STDDEV_P_LOSS, 0.1, 43200.0, 7,
                            "per-window")
    curve = stddev_vs_interval(tr, (1.0, 16.0, 600.0))
    ratio = curve[16.0] / curve[1.0]
    s600 = curve[600.0]
    ok = (ratio >= reference.STDDEV_RATIO_16S_MIN
          and _within(s600, reference.STDDEV_600S_TARGET_BPS, 0.4))
    return ok, (f"stddev(16s)/stddev(1s) {ratio:.3f} (min 0.8), "
                f"stddev(600s) {_mbps(s600)} vs 1.00 Mbit/s (tol 40%)")


def _check_sawtooth():
    parts, ok = [], True
    for (flavor, rtt), ref in sorted(reference.RTT_CONVERGENCE.items()):
        saw = sawtooth_interval_s(ref["p_loss"], 10e6)
        ok = ok and _within(saw, ref["sawtooth_s"], 0.10)
        parts.append(f"{saw:.2f}/{ref['sawtooth_s']:.2f}")
    return ok, "measured/published s: " + ", ".join(parts) + " (tol 10%)"


def _check_rtt_shift():
    runs = _conv_runs(False, 1)
    conv = {k: v[1] for k, v in runs.items()}

    def txt(flavor, rtt):
        c = conv[(flavor, rtt)]
        return f"{c:.0f}s" if math.isfinite(c) else "not reached"

    reno_finite = all(math.isfinite(conv[("reno", r)]) for r in (0.1, 0.01))
    shift_r = (conv[("reno", 0.1)] / conv[("reno", 0.01)]
               if reno_finite else math.inf)
    cubic_finite = all(math.isfinite(conv[("cubic", r)]) for r in (0.1, 0.01))
    shift_c = (conv[("cubic", 0.1)] / conv[("cubic", 0.01)]
               if cubic_finite else math.inf)
    ok = reno_finite and 20.0 <= shift_r <= 120.0 and shift_c < shift_r
    cubic_txt = (f"shift x{shift_c:.0f}" if cubic_finite
                 else f"conv50 {txt('cubic', 0.1)}/{txt('cubic', 0.01)}")
    return ok, (f"reno conv50 {txt('reno', 0.1)}/{txt('reno', 0.01)} "
                f"shift x{shift_r:.0f} (want 20..120), cubic {cubic_txt} "
                f"(want shift < reno)")


def _check_completion():
    tr = _finite_trace(9, 100e6, 0.1, 12_000_000, 500, _FIN_DURATION_S, 1)
    comps = np.sort(np.array(tr.metadata["completions"], dtype=float))
    if comps.size < 500:
        return False, f"only {comps.size}/500 repetitions completed"
    med = nearest_rank(comps, 0.5)
    q05 = nearest_rank(comps, 0.05)
    q95 = nearest_rank(comps, 0.95)
    ok = _within(med, 10.0, 0.20) and q05 <= 9.0 and q95 >= 18.0
    return ok, (f"median {med:.1f}s (want 10 +-20%), q05 {q05:.1f}s (<= 9), "
                f"q95 {q95:.1f}s (>= 18), n {comps.size}")


def _mini_shared(seed: int) -> RateTrace:
    tcp = TcpParams(rtt_s=0.02)
    cfg = ScenarioConfig(
        scenario=Scenario.SHARED_BOTTLENECK,
        flows=[FlowConfig(tcp=tcp), FlowConfig(tcp=tcp)],
        duration_s=90.0, seed=seed, warmup_s=10.0,
        link=LinkSpec(capacity_bps=10e6, base_rtt_s=0.02))
    return run_shared_bottleneck(cfg)


def _check_invariants():
    parts, ok = [], True

    a, b = _mini_shared(11), _mini_shared(11)
    det = (np.array_equal(a.bytes_per_interval, b.bytes_per_interval)
           and np.array_equal(a.sent, b.sent)
           and np.array_equal(a.dropped, b.dropped))
    ok &= det
    parts.append(f"determinism {'ok' if det else 'BROKEN'}")

    residual = a.sent - a.delivered - a.dropped
    cons = bool(np.all(residual >= 0) and np.all(residual <= 4096))
    ok &= cons
    parts.append(f"conservation {'ok' if cons else 'BROKEN'}")

    qb = a.metadata["queue_peak_bytes"] <= a.config.link.buffer_bytes
    ok &= qb
    parts.append(f"queue<=buffer {'ok' if qb else 'BROKEN'}")

    spec = ChainSpec(p_loss=1e-3, rtt_s=0.1)
    dist = solve_chain(spec)
    tm = build_transition_matrix(spec)
    bal = float(np.max(np.abs(dist.probabilities - tm.matrix @ dist.probabilities)))
    ok &= bal <= 1e-10
    parts.append(f"balance {bal:.1e}")

    d1 = _chain(_RD_P_LOSS, 0.1)
    d2 = solve_chain(ChainSpec(p_loss=_RD_P_LOSS, rtt_s=0.1,
                               cwnd_max=int(d1.spec.cwnd_max * 1.5)))
    s1 = distribution_stats(rate_distribution(d1))
    s2 = distribution_stats(rate_distribution(d2))
    shift = max(abs(s2[k] / s1[k] - 1.0) for k in ("q05", "q50", "q95"))
    ok &= shift < 1e-3
    parts.append(f"truncation {shift * 100:.3f}%")

    with tempfile.TemporaryDirectory() as tmp:
        rec = write_trace(a, Path(tmp))
        back, rec2 = read_trace(rec.trace_path)
        rt = (np.array_equal(a.bytes_per_interval, back.bytes_per_interval)
              and config_to_dict(a.config) == config_to_dict(back.config)
              and rec2.run_id == rec.run_id)
    ok &= rt
    parts.append(f"round-trip {'ok' if rt else 'BROKEN'}")

    return bool(ok), ", ".join(parts)


_CHECKS = [
    (1, "equilibrium-quantiles", _check_equilibrium),
    (2, "sim-vs-chain", _check_sim_vs_chain),
    (3, "lognormal-window", _check_lognormal),
    (4, "response-function", _check_response),
    (5, "sharing-spread", _check_sharing),
    (6, "slow-averaging", _check_slow_averaging),
    (7, "sawtooth-interval", _check_sawtooth),
    (8, "rtt-shift", _check_rtt_shift),
    (9, "completion-spread", _check_completion),
    (10, "invariants", _check_invariants),
]


def cmd_verify(args) -> int:
    ran = passed = 0
    for num, name, func in _CHECKS:
        if args.quick and num not in _QUICK:
            continue
        t0 = time.time()
        ok, detail = func()
        wall = time.time() - t0
        tag = " [fidelity-sensitive]" if num in _FIDELITY_SENSITIVE else ""
        print(f"{num:>2} {'PASS' if ok else 'FAIL'} {name:<22}{wall:7.1f} s  "
              f"{detail}{tag}", flush=True)
        ran += 1
        passed += 1 if ok else 0
    print(f"{passed}/{ran} checks passed")
    return 0 if passed == ran else 2


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcpshare",
        description="TCP rate-fluctuation toolkit: chain solver, packet "
                    "simulator, trace statistics.")
    sub = parser.add_subparsers(dest="command")

    def add_outdir(p):
        p.add_argument("--outdir", metavar="DIR",
                       help="output directory (default $TCPSHARE_OUTDIR or .)")

    p = sub.add_parser("solve", help="equilibrium of the window chain")
    p.add_argument("--p-loss", dest="p_loss", type=float, required=True,
                   help="per-packet loss probability")
    p.add_argument("--a", type=float, default=DEFAULT_ACK_RATIO,
                   help="ACK ratio (default 2)")
    p.add_argument("--rtt", type=float, default=0.1,
                   help="round trip time in seconds (default 0.1)")
    p.add_argument("--mss", type=int, default=DEFAULT_MSS_BYTES,
                   help="segment size in bytes (default 1514)")
    p.add_argument("--cwnd-max", dest="cwnd_max", type=int,
                   help="chain truncation (default: auto)")
    p.add_argument("--sigma", type=float, default=LOGNORMAL_SIGMA,
                   help="log-normal spread for the comparison (default 0.41)")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")
    add_outdir(p)

    p = sub.add_parser("simulate", help="run a scenario, store its trace")
    p.add_argument("--scenario", choices=[s.value for s in Scenario],
                   help="default random-drop")
    p.add_argument("--flavor", choices=[f.value for f in Flavor],
                   help="flavor for random-drop / the finite flow")
    p.add_argument("--flows", metavar="SPEC",
                   help="flow list, e.g. 2xreno or 1xreno,1xcubic")
    p.add_argument("--capacity", type=float,
                   help="bottleneck bit/s (default 20e6; finite 100e6)")
    p.add_argument("--rtt", type=float, help="base RTT seconds (default 0.1)")
    p.add_argument("--buffer", type=float,
                   help="bottleneck buffer bytes (default BDP)")
    p.add_argument("--p-loss", dest="p_loss", type=float,
                   help="drop probability (random-drop only)")
    p.add_argument("--duration", type=float,
                   help="simulated seconds (default 7200)")
    p.add_argument("--seed", type=int, help="PRNG seed (default 1)")
    p.add_argument("--mode", choices=[m.value for m in LossReaction],
                   help="loss reaction (default per-window)")
    p.add_argument("--mss", type=int, help="segment size bytes (default 1514)")
    p.add_argument("--a", type=float, help="ACK ratio (default 2)")
    p.add_argument("--interval", type=float,
                   help="trace interval seconds (default 1)")
    p.add_argument("--warmup", type=float,
                   help="warm-up excluded from statistics (default 300)")
    p.add_argument("--burst", type=int,
                   help="segments per send burst (default 4)")
    p.add_argument("--initial-cwnd", dest="initial_cwnd", type=float,
                   help="random-drop start window (default: expected value)")
    p.add_argument("--volume", type=float,
                   help="finite-flow volume bytes (default 12e6)")
    p.add_argument("--repetitions", type=int,
                   help="finite-flow repetitions (default 500)")
    p.add_argument("--idle-gap", dest="idle_gap", type=float,
                   help="gap between repetitions seconds (default 5)")
    p.add_argument("--config", metavar="PATH",
                   help="config file instead of scenario flags")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")
    add_outdir(p)

    p = sub.add_parser("analyze", help="statistics of a stored trace")
    p.add_argument("trace", help="path to a .trace.csv file")
    p.add_argument("--intervals", metavar="LIST",
                   help="averaging intervals, e.g. 1,4,16,60 "
                        "(default 1,4,16,30,60,120,300,600)")
    p.add_argument("--bins", type=int, help="histogram bins (default 50)")
    p.add_argument("--quantiles", metavar="LIST",
                   help="percentiles, e.g. 5,50,95 (default)")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")
    add_outdir(p)

    p = sub.add_parser("reproduce",
                       help="regenerate a published figure or table")
    p.add_argument("target", choices=[*_TARGETS, "all"])
    p.add_argument("--full", action="store_true",
                   help="original durations instead of desk scale")
    p.add_argument("--seed", type=int, default=1)
    add_outdir(p)

    p = sub.add_parser("verify", help="check the published numbers")
    p.add_argument("--quick", action="store_true",
                   help="only the sub-minute checks")

    return parser


_HANDLERS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "reproduce": cmd_reproduce,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, EquilibriumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
