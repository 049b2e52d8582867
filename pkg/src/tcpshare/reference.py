"""Published testbed measurements used as comparison targets.

The values below are the reference points the reproduce and verify
commands compare against.  All rates are bit/s, times are seconds.
The original measurements ran 12 h per configuration and 2500
repetitions of the finite-flow experiment; the desk-scale defaults
here cut that to 2 h and 500 without changing any target value.
"""

# flow-rate statistics at 10 Mbit/s nominal rate: (q05, q50, q95, mean)
RATE_STATS = {
    "reno-random-drop-numeric": (4.7e6, 10.0e6, 19.0e6, 10.7e6),
    "reno-random-drop-experiment": (4.9e6, 10.0e6, 18.7e6, 10.7e6),
    "reno-1-of-2": (5.0e6, 10.0e6, 15.0e6, 10.0e6),
    "reno-1-of-3": (4.7e6, 9.6e6, 16.0e6, 9.9e6),
    "reno-1-of-10": (4.5e6, 8.9e6, 16.6e6, 9.5e6),
    "cubic-random-drop-experiment": (5.0e6, 9.4e6, 20.0e6, 10.6e6),
    "cubic-1-of-2": (6.5e6, 10.0e6, 13.6e6, 10.0e6),
    "cubic-1-of-3": (6.3e6, 9.8e6, 14.6e6, 10.0e6),
    "cubic-1-of-10": (6.1e6, 9.8e6, 16.0e6, 10.3e6),
}

# loss ratios that hold one flow at 10 Mbit/s over a 100 ms path
RESPONSE_TARGETS = {
    "reno": 1.1e-4,
    "cubic": 3.4e-4,
}

# RTT dependence of convergence, per (flavor, rtt_s):
# p_loss measured, sawtooth interval, 50%-convergence interval
RTT_CONVERGENCE = {
    ("reno", 0.010): {"p_loss": 3.3e-3, "sawtooth_s": 0.37, "conv50_s": 4.0},
    ("reno", 0.100): {"p_loss": 4.0e-5, "sawtooth_s": 29.5, "conv50_s": 220.0},
    ("cubic", 0.010): {"p_loss": 2.8e-3, "sawtooth_s": 0.42, "conv50_s": 9.5},
    ("cubic", 0.100): {"p_loss": 2.5e-4, "sawtooth_s": 4.7, "conv50_s": 130.0},
}

# interval-average stddev of the 100 ms random-drop run
STDDEV_600S_TARGET_BPS = 1.0e6
STDDEV_RATIO_16S_MIN = 0.8

# 12 MB transfers among 9 long-lived flows on 100 Mbit/s: nominal
# fair-share duration and the measured tails
COMPLETION_NOMINAL_S = 9.6
COMPLETION_FAST_TAIL_S = 8.0   # 5% finish faster than this
COMPLETION_SLOW_TAIL_S = 22.0  # 5% take longer than this

LOGNORMAL_SIGMA = 0.41
