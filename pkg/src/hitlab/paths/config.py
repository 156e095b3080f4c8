"""Simulation recipes and per-path results."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

SCHEMES = (
    "single_barrier",
    "two_barrier",
    "fixed_horizon",
    "inverse_local_time",
    "bessel3_fixed_horizon",
    "bridge_fixed_horizon",
    "meander",
    "excursion",
    "ray_knight_sde",
)

BESSEL_ENDPOINTS = ("chi3", "rayleigh", "half_normal", "fixed")
MEANDER_METHODS = ("last_zero", "bessel_bridge")
EXCURSION_METHODS = ("vervaat", "bessel_bridge")
LOCAL_TIME_METHODS = ("conditional", "sampled", "occupation")


@dataclass(frozen=True)
class PathConfig:
    """Full recipe for one simulation run.

    ``step`` is relative: hitting-type schemes (single and two barrier,
    inverse local time) use ``step * max(t, t_ref)`` at elapsed time ``t``;
    schemes on ``[0, horizon]`` use ``step * horizon``.  ``t_ref`` defaults to
    a tenth of the natural time scale of the scheme.

    ``local_time_bandwidth`` only matters for the occupation estimator; the
    default ``None`` means ``h ** 0.4`` with ``h`` the current step.
    """

    scheme: str = "single_barrier"
    step: float = 1e-4
    seed: int = 0
    stream_id: int = 0
    bridge_correction: bool = True
    moment_orders: tuple = (1.0,)
    local_time_levels: tuple = ()
    local_time_bandwidth: float | None = None
    local_time_method: str = "conditional"
    level: float = 1.0
    lower: float = 1.0
    horizon: float = 1.0
    ell: float = 1.0
    mu: float = 1.0
    t_ref: float | None = None
    max_time: float = 1e10
    exact_extrema: bool = False
    endpoint: str = "chi3"
    endpoint_value: float = 1.0
    meander_method: str = "bessel_bridge"
    excursion_method: str = "bessel_bridge"
    grid: tuple = (0.25, 0.5, 1.0)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not 0 <= self.seed < 2 ** 64 or not 0 <= self.stream_id < 2 ** 64:
            raise ValueError("seed and stream_id must fit in 64 unsigned bits")
        if any(m < 0 for m in self.moment_orders):
            raise ValueError("moment orders must be >= 0")
        if self.local_time_bandwidth is not None and not self.local_time_bandwidth > 0:
            raise ValueError("local_time_bandwidth must be positive")
        if self.local_time_method not in LOCAL_TIME_METHODS:
            raise ValueError(f"local_time_method must be one of {LOCAL_TIME_METHODS}")
        for name in ("level", "lower", "horizon", "ell", "mu", "max_time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_ref is not None and not self.t_ref > 0:
            raise ValueError("t_ref must be positive")
        if self.endpoint not in BESSEL_ENDPOINTS:
            raise ValueError(f"endpoint must be one of {BESSEL_ENDPOINTS}")
        if self.meander_method not in MEANDER_METHODS:
            raise ValueError(f"meander_method must be one of {MEANDER_METHODS}")
        if self.excursion_method not in EXCURSION_METHODS:
            raise ValueError(f"excursion_method must be one of {EXCURSION_METHODS}")
        if self.scheme in ("bessel3_fixed_horizon", "bridge_fixed_horizon", "meander",
                           "excursion") and self.horizon != 1.0:
            raise ValueError(f"{self.scheme} is defined on [0, 1]; horizon must be 1")
        object.__setattr__(self, "moment_orders", tuple(float(m) for m in self.moment_orders))
        object.__setattr__(self, "local_time_levels", tuple(float(x) for x in self.local_time_levels))
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))

    @property
    def n_grid(self) -> int:
        """Number of steps for the schemes on a fixed interval."""
        return max(1, int(round(1.0 / self.step)))

    def effective_t_ref(self) -> float:
        if self.t_ref is not None:
            return self.t_ref
        if self.scheme == "two_barrier":
            return 0.1 * min(self.level, self.lower) ** 2
        if self.scheme == "inverse_local_time":
            return 0.1 * self.ell ** 2
        return 0.1 * self.level ** 2

    def with_(self, **changes) -> "PathConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class PathFunctionals:
    """Per-path outputs.

    ``signed_power_integrals[m]`` is ``(int (B^+)^m ds, int (B^-)^m ds)`` over
    ``[0, hit_time]``; ``local_times`` maps a level to its estimate; ``aux``
    holds scheme-specific values (meander ``m1`` and ``m_U``, bridge ``l1``...).
    """

    hit_time: float
    terminal_value: float
    sup: float
    sup_abs: float
    uniform_sample: float
    signed_power_integrals: dict = field(default_factory=dict)
    local_times: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict)
    aborted: bool = False
