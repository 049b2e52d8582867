"""Trace persistence: CSV rate grids with a JSON sidecar.

A run is identified by a content hash over (config, seed, engine
version); rerunning the same config gives the same run id, so file
names double as cache keys.  The CSV holds one row per (interval,
flow) on the grid; everything else (config echo, counters, extra
metadata) lives in `<run-id>.trace.json` next to it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import warnings
from pathlib import Path

import numpy as np

from .flows import Flavor, FlowConfig
from .formulas import TcpParams
from .sim import (ENGINE_VERSION, LinkSpec, LossReaction, RateTrace,
                  Scenario, ScenarioConfig)

CSV_HEADER = "t_end_s,flow_id,bytes"


@dataclasses.dataclass(frozen=True)
class RunRecord:
    run_id: str
    config: ScenarioConfig
    engine: str
    trace_path: Path
    meta_path: Path


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """JSON-able echo of a ScenarioConfig (enums by value)."""
    d = {
        "scenario": cfg.scenario.value,
        "duration_s": cfg.duration_s,
        "seed": cfg.seed,
        "p_loss": cfg.p_loss,
        "loss_reaction": cfg.loss_reaction.value,
        "interval_s": cfg.interval_s,
        "warmup_s": cfg.warmup_s,
        "volume_bytes": cfg.volume_bytes,
        "repetitions": cfg.repetitions,
        "idle_gap_s": cfg.idle_gap_s,
        "flows": [
            {
                "flavor": fc.flavor.value,
                "mss_bytes": fc.tcp.mss_bytes,
                "rtt_s": fc.tcp.rtt_s,
                "ack_ratio_a": fc.tcp.ack_ratio_a,
                "initial_cwnd": fc.initial_cwnd,
            }
            for fc in cfg.flows
        ],
        "link": None,
    }
    if cfg.link is not None:
        d["link"] = {
            "capacity_bps": cfg.link.capacity_bps,
            "base_rtt_s": cfg.link.base_rtt_s,
            "buffer_bytes": cfg.link.buffer_bytes,
        }
    return d


def config_from_dict(d: dict) -> ScenarioConfig:
    link = None
    if d.get("link"):
        link = LinkSpec(capacity_bps=d["link"]["capacity_bps"],
                        base_rtt_s=d["link"]["base_rtt_s"],
                        buffer_bytes=d["link"]["buffer_bytes"])
    flow_cfgs = []
    for fd in d["flows"]:
        flavor = Flavor(fd["flavor"])
        tcp = TcpParams(mss_bytes=fd["mss_bytes"], rtt_s=fd["rtt_s"],
                        ack_ratio_a=fd["ack_ratio_a"], flavor=flavor)
        flow_cfgs.append(FlowConfig(flavor=flavor, tcp=tcp,
                                    initial_cwnd=fd["initial_cwnd"]))
    return ScenarioConfig(
        scenario=Scenario(d["scenario"]),
        flows=flow_cfgs,
        duration_s=d["duration_s"],
        seed=d["seed"],
        link=link,
        p_loss=d.get("p_loss"),
        loss_reaction=LossReaction(d["loss_reaction"]),
        interval_s=d["interval_s"],
        warmup_s=d["warmup_s"],
        volume_bytes=d.get("volume_bytes"),
        repetitions=d.get("repetitions"),
        idle_gap_s=d.get("idle_gap_s", 5.0),
    )


def run_id(cfg: ScenarioConfig, engine: str = ENGINE_VERSION) -> str:
    """Content hash of (config, engine version); 12 hex chars."""
    blob = json.dumps({"config": config_to_dict(cfg), "engine": engine},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _jsonable_metadata(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, dict):
            out[k] = {str(kk): vv for kk, vv in v.items()}
        elif isinstance(v, (list, tuple)):
            out[k] = [float(x) if isinstance(x, (np.floating, float)) else x
                      for x in v]
        else:
            out[k] = v
    return out


def write_trace(trace: RateTrace, directory, rid: str | None = None) -> RunRecord:
    """Write `<run-id>.trace.csv` and its JSON sidecar; returns the record."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if rid is None:
        rid = run_id(trace.config)
    trace_path = directory / f"{rid}.trace.csv"
    meta_path = directory / f"{rid}.trace.json"

    lines = [CSV_HEADER]
    dt = trace.interval_s
    for k in range(trace.n_intervals):
        t_end = (k + 1) * dt
        for i in range(trace.n_flows):
            lines.append(f"{t_end:.10g},{i},{int(trace.bytes_per_interval[i, k])}")
    trace_path.write_text("\n".join(lines) + "\n")

    meta = {
        "run_id": rid,
        "engine": ENGINE_VERSION,
        "config": config_to_dict(trace.config),
        "interval_s": trace.interval_s,
        "n_intervals": trace.n_intervals,
        "n_flows": trace.n_flows,
        "sent": trace.sent.tolist(),
        "dropped": trace.dropped.tolist(),
        "delivered": trace.delivered.tolist(),
        "metadata": _jsonable_metadata(trace.metadata),
    }
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return RunRecord(run_id=rid, config=trace.config, engine=ENGINE_VERSION,
                     trace_path=trace_path, meta_path=meta_path)


def read_trace(trace_path) -> tuple[RateTrace, RunRecord]:
    """Load a trace; validates counters against the grid.

    Raises ValueError with the line number on a malformed CSV row and
    FileNotFoundError naming the expected sidecar if it is missing.  An
    engine version mismatch is a warning, not an error.
    """
    trace_path = Path(trace_path)
    if trace_path.name.endswith(".csv"):
        meta_path = trace_path.parent / (trace_path.name[:-4] + ".json")
    else:
        meta_path = trace_path.with_suffix(".json")
    if not meta_path.exists():
        raise FileNotFoundError(
            f"missing sidecar {meta_path.name} next to {trace_path.name}")
    meta = json.loads(meta_path.read_text())
    if meta.get("engine") != ENGINE_VERSION:
        warnings.warn(f"trace written by {meta.get('engine')!r}, "
                      f"reading with {ENGINE_VERSION!r}", stacklevel=2)

    n_flows = meta["n_flows"]
    n_intervals = meta["n_intervals"]
    interval_s = meta["interval_s"]
    grid = np.zeros((n_flows, n_intervals))

    with trace_path.open() as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{trace_path.name} line 1: "
                             f"expected header {CSV_HEADER!r}, got {header!r}")
        prev = (-1.0, -1)
        for lineno, raw in enumerate(fh, 2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{trace_path.name} line {lineno}: "
                                 f"expected 3 fields, got {line!r}")
            try:
                t_end = float(parts[0])
                flow = int(parts[1])
                nbytes = int(parts[2])
            except ValueError as exc:
                raise ValueError(
                    f"{trace_path.name} line {lineno}: {line!r}") from exc
            key = (t_end, flow)
            if key <= prev:
                raise ValueError(f"{trace_path.name} line {lineno}: rows not "
                                 f"ascending by (t_end_s, flow_id)")
            prev = key
            k = int(round(t_end / interval_s)) - 1
            if not 0 <= k < n_intervals or not 0 <= flow < n_flows:
                raise ValueError(f"{trace_path.name} line {lineno}: "
                                 f"row off the declared grid: {line!r}")
            grid[flow, k] = nbytes

    cfg = config_from_dict(meta["config"])
    mss = cfg.flows[0].tcp.mss_bytes
    delivered = np.array(meta["delivered"])
    for i in range(n_flows):
        if int(grid[i].sum()) != int(delivered[i]) * mss:
            raise ValueError(
                f"{trace_path.name}: flow {i} bytes {int(grid[i].sum())} "
                f"!= delivered {int(delivered[i])} * mss {mss}")

    trace = RateTrace(
        interval_s=interval_s,
        bytes_per_interval=grid,
        config=cfg,
        sent=np.array(meta["sent"]),
        dropped=np.array(meta["dropped"]),
        delivered=delivered,
        metadata=meta.get("metadata", {}),
    )
    record = RunRecord(run_id=meta["run_id"], config=cfg,
                       engine=meta.get("engine", ""), trace_path=trace_path,
                       meta_path=meta_path)
    return trace, record
