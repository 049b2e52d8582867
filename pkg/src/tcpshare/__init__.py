"""TCP rate-fluctuation toolkit.

Numerical equilibrium of the congestion-window Markov chain under
random loss, packet-level simulation of Reno/Cubic flows through
random-drop and shared tail-drop bottlenecks, and the statistics to
show how slowly interval-average rates converge.
"""

from .flows import Flavor, FlowConfig, FlowState
from .formulas import (TcpParams, cubic_expected_rate, cubic_required_loss,
                       expected_cwnd, flow_rate, reno_expected_cwnd,
                       reno_expected_rate, reno_required_loss, required_loss)
from .markov import (ChainSpec, StateDistribution, distribution_stats,
                     ks_distance, lognormal_cdf, rate_distribution,
                     solve_chain)
from .sim import (LinkSpec, LossReaction, RateTrace, Scenario,
                  ScenarioConfig, measured_loss_ratio, parse_config,
                  run_finite_flow, run_random_drop, run_scenario,
                  run_shared_bottleneck)
from .stats import (convergence_interval_50, flow_mean_stddev_vs_interval,
                    histogram, reaggregate, sawtooth_interval_s,
                    stddev_vs_interval, strip_warmup, summary)
from .trace import RunRecord, read_trace, run_id, write_trace

__version__ = "0.1.0"

__all__ = [
    "Flavor", "FlowConfig", "FlowState", "TcpParams",
    "cubic_expected_rate", "cubic_required_loss", "expected_cwnd",
    "flow_rate", "reno_expected_cwnd", "reno_expected_rate",
    "reno_required_loss", "required_loss",
    "ChainSpec", "StateDistribution", "distribution_stats", "ks_distance",
    "lognormal_cdf", "rate_distribution", "solve_chain",
    "LinkSpec", "LossReaction", "RateTrace", "Scenario", "ScenarioConfig",
    "measured_loss_ratio", "parse_config", "run_finite_flow",
    "run_random_drop", "run_scenario", "run_shared_bottleneck",
    "convergence_interval_50", "flow_mean_stddev_vs_interval", "histogram",
    "reaggregate", "sawtooth_interval_s", "stddev_vs_interval",
    "strip_warmup", "summary",
    "RunRecord", "read_trace", "run_id", "write_trace",
    "__version__",
]
