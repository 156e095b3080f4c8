"""Column indices of the per-path output matrices written by the kernels."""

HIT_TIME = 0
TERMINAL = 1
SUP = 2
INF = 3
SUP_ABS = 4
UNIFORM = 5
STATUS = 6
N_STEPS = 7
LT0 = 8
LT0_INTEGRAL = 9
EXIT_SIDE = 10
N_BASE = 11

BASE_NAMES = (
    "hit_time",
    "terminal_value",
    "sup",
    "inf",
    "sup_abs",
    "uniform_sample",
    "status",
    "n_steps",
    "local_time_zero",
    "local_time_zero_integral",
    "exit_side",
)
