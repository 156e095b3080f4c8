"""Scenario registry: each closed-form claim paired with a Monte Carlo experiment.

A scenario simulates one or more batches and reduces them to checks (mean
z-tests, KS tests, chi-square tests).  Every batch of a scenario draws from
its own stream range, so scenarios never share random numbers and the
outcome depends only on ``(seed, n_paths, overrides)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .. import closedform as C
from .. import quadrature as Q
from ..paths import PathConfig, reversed_rescaled_path, sample_paths
from .stats import (
    Estimate,
    chi_square_test,
    estimate,
    ks_test,
    two_sample_z,
    z_test,
)

__all__ = [
    "Thresholds",
    "Check",
    "VerificationResult",
    "Scenario",
    "SCENARIOS",
    "CLAIMS",
    "scenario_ids",
    "run_scenario",
    "run_suite",
]

MIN_PATHS = 1000
# stream ranges: scenario k owns [k << 40, (k + 1) << 40), split into 16 sub-ranges
_SCENARIO_SHIFT = 40
_BATCH_SHIFT = 36

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Thresholds:
    z_max: float = 3.0
    p_min: float = 1e-3


@dataclass(frozen=True)
class Check:
    """One statistical comparison inside a scenario.

    ``kind`` is ``mean`` (z-test, ``statistic`` is z), ``ks`` or ``chi2``
    (``statistic`` is the p-value, ``estimate`` holds the test statistic), or
    ``sanity`` (z-test whose failure only makes the result inconclusive).
    """

    label: str
    kind: str
    expected: float | str
    estimate: Estimate | float
    statistic: float
    verdict: str

    @property
    def value(self) -> float:
        return self.estimate.mean if isinstance(self.estimate, Estimate) else float(self.estimate)

    @property
    def std_error(self) -> float:
        return self.estimate.std_error if isinstance(self.estimate, Estimate) else math.nan


@dataclass(frozen=True)
class VerificationResult:
    """Outcome of one scenario: every check, plus the worst one as a summary."""

    scenario_id: str
    claim_ref: str
    checks: tuple
    n_paths: int
    seed: int

    @property
    def verdict(self) -> str:
        verdicts = {c.verdict for c in self.checks}
        if FAIL in verdicts:
            return FAIL
        if INCONCLUSIVE in verdicts:
            return INCONCLUSIVE
        return PASS

    def _worst(self) -> Check:
        def badness(c):
            if c.kind in ("mean", "sanity"):
                return abs(c.statistic) if math.isfinite(c.statistic) else math.inf
            return -math.log10(max(c.statistic, 1e-300))
        return max(self.checks, key=badness)

    @property
    def expected(self):
        return self._worst().expected

    @property
    def estimate(self):
        return self._worst().estimate

    @property
    def z_or_p(self) -> float:
        return self._worst().statistic


@dataclass(frozen=True)
class Scenario:
    id: str
    claim_ref: str
    title: str
    default_n: int
    configs: dict
    params: dict = field(default_factory=dict)
    run: object = None


# claim anchors: short names of the statements each scenario tests
CLAIMS = {
    "S1": "centering of A_1^(1)",
    "S2": "moment formulas I+^(m), I-^(m)",
    "S3": "density h of alpha",
    "S4": "conditional density h(y,t) given T_1 = t",
    "S5": "local-time Laplace transforms at T_1",
    "S6": "two-barrier mean of A^(1)_(a,b) and psi(a,b,theta)",
    "S7": "Bessel-3 integral identity and E[R_1 exp(-a R_1^2/2)]",
    "S8": "meander integral identity",
    "S8b": "law of m_U given m_1 = y",
    "S9": "bridge identities with local time l_1",
    "S10": "excursion product identity",
    "S11": "Knight's identity",
    "S12": "law of zeta equals law of A_1^(1)",
    "S13": "beta is distributed as N/2",
    "S14": "Ray-Knight mean u(b)",
    "S15": "finite exponential moments",
    "S16": "absolute continuity of the reversed path",
}


class _Context:
    """Per-run helpers: batch simulation on disjoint streams and check building."""

    def __init__(self, scenario: Scenario, index: int, n: int, seed: int, workers,
                 overrides: dict, params: dict, thresholds: Thresholds):
        self.scenario = scenario
        self.index = index
        self.n = n
        self.seed = seed
        self.workers = workers
        self.overrides = overrides
        self.params = params
        self.th = thresholds
        self._batches = 0
        self.checks: list[Check] = []

    def config(self, key: str, **extra) -> PathConfig:
        cfg = self.scenario.configs[key].with_(**extra)
        allowed = {f.name for f in fields(PathConfig)}
        over = {k: v for k, v in self.overrides.items() if k in allowed}
        return cfg.with_(**over)

    def simulate(self, cfg: PathConfig, n: int | None = None):
        stream = (self.index << _SCENARIO_SHIFT) + (self._batches << _BATCH_SHIFT)
        self._batches += 1
        cfg = cfg.with_(seed=self.seed, stream_id=stream)
        return sample_paths(cfg, self.n if n is None else n, workers=self.workers)

    def mean(self, label, values, expected, *, excluded_fraction=0.0, kind="mean"):
        est = estimate(values, excluded_fraction)
        z = z_test(est, expected)
        ok = abs(z) <= self.th.z_max
        verdict = PASS if ok else (INCONCLUSIVE if kind == "sanity" else FAIL)
        self.checks.append(Check(label, kind, float(expected), est, z, verdict))

    def difference(self, label, a, b, *, kind="mean"):
        ea, eb = estimate(a), estimate(b)
        z = two_sample_z(ea, eb)
        diff = Estimate(ea.mean - eb.mean, math.hypot(ea.std_error, eb.std_error), min(ea.n, eb.n))
        ok = abs(z) <= self.th.z_max
        verdict = PASS if ok else (INCONCLUSIVE if kind == "sanity" else FAIL)
        self.checks.append(Check(label, kind, 0.0, diff, z, verdict))

    def ks(self, label, sample, other, law: str):
        d, p = ks_test(sample, other)
        self.checks.append(Check(label, "ks", law, d, p, PASS if p >= self.th.p_min else FAIL))

    def chi2(self, label, sample, edges, probs, law: str):
        stat, p = chi_square_test(sample, edges, probs)
        self.checks.append(Check(label, "chi2", law, stat, p, PASS if p >= self.th.p_min else FAIL))


def _kept(batch, values):
    keep = ~batch.excluded
    return values[keep], batch.excluded_fraction


# ---------------------------------------------------------------------------
# scenario bodies
# ---------------------------------------------------------------------------

def _s1(ctx):
    b = ctx.simulate(ctx.config("paths"))
    v, ex = _kept(b, b.functional("A1"))
    ctx.mean("E[A_1^(1)]", v, 0.0, excluded_fraction=ex)


def _s2(ctx):
    orders = ctx.params["orders"]
    b = ctx.simulate(ctx.config("paths", moment_orders=tuple(orders)))
    for m in orders:
        for sign, side, oracle in (("+", "plus", C.moment_i_plus), ("-", "minus", C.moment_i_minus)):
            v, ex = _kept(b, b.functional(f"A{sign}({m:g})"))
            ctx.mean(f"E[A{sign}^({m:g})]", v, oracle(m), excluded_fraction=ex)


def _s3(ctx):
    b = ctx.simulate(ctx.config("paths"))
    v, _ = _kept(b, b.functional("alpha"))
    ctx.ks("alpha ~ h", v, C.AlphaCDF(), "h")


def _window_cdf(t, half_width):
    # CDF of alpha given T_1 in [t - w, t + w], averaged with the density of T_1
    nodes, weights = np.polynomial.legendre.leggauss(16)
    s = t + half_width * nodes
    w = weights * np.array([C.hitting_time_density(x) for x in s])
    w = w / w.sum()

    def cdf(y):
        return float(sum(wk * C.alpha_cdf_conditional(y, sk) for wk, sk in zip(w, s)))

    upper = 1.0 / math.sqrt(s.min())
    return cdf, upper


def _equal_mass_edges(cdf, lo, hi, n_bins):
    edges = []
    for k in range(1, n_bins):
        q = k / n_bins
        edges.append(optimize.brentq(lambda y: cdf(y) - q, lo, hi, xtol=1e-12))
    edges = np.array(edges)
    probs = np.diff(np.concatenate(([0.0], [cdf(e) for e in edges], [1.0])))
    return edges, probs


def _s4(ctx):
    b = ctx.simulate(ctx.config("paths"))
    t_all = b["hit_time"]
    alpha = b.functional("alpha")
    rel = ctx.params["window"]
    for t in ctx.params["times"]:
        sel = (np.abs(t_all - t) <= rel * t) & ~b.excluded
        cdf, upper = _window_cdf(t, rel * t)
        edges, probs = _equal_mass_edges(cdf, -12.0, upper, ctx.params["bins"])
        ctx.chi2(f"alpha | T_1 ~ {t:g} ({int(sel.sum())} paths)", alpha[sel], edges, probs,
                 f"h(.,{t:g}) window-averaged")


def _s5(ctx):
    above = ctx.params["b_levels"]
    below = ctx.params["x_levels"]
    levels = tuple(above) + tuple(-x for x in below)
    b = ctx.simulate(ctx.config("paths", local_time_levels=levels))
    t = b["hit_time"]
    for mu in ctx.params["mus"]:
        damp = np.exp(-0.5 * mu * mu * t)
        # runaway paths carry weight exp(-mu^2 max_time / 2), i.e. 0: they stay in the sample
        for lev in above:
            ctx.mean(f"E[L^{lev:g} e^(-mu^2 T/2)], mu={mu:g}", b.local_time(lev) * damp,
                     C.local_time_laplace(mu, b=lev))
        for x in below:
            ctx.mean(f"E[L^-{x:g} e^(-mu^2 T/2)], mu={mu:g}", b.local_time(-x) * damp,
                     C.local_time_laplace(mu, x=x))


def _s6(ctx):
    for lam in ctx.params["lambdas"]:
        b = ctx.simulate(ctx.config("paths", lower=float(lam)))
        t = b["hit_time"]
        integral = b.power_integral("plus", 1) - b.power_integral("minus", 1)
        for theta in ctx.params["thetas"]:
            if theta == 1.5:
                target = Q.psi_three_half(1.0, lam)
            else:
                target = Q.psi(Q.TwoBarrier(1.0, float(lam), float(theta)))
            v, ex = _kept(b, integral / t ** theta)
            ctx.mean(f"E[int B / T^{theta:g}], lambda={lam:g}", v, target, excluded_fraction=ex)


def _s7(ctx):
    tilt = ctx.simulate(ctx.config("tilted"))
    # E[F / R_1^2] under the Bessel law equals E[F] with R_1 ~ |N|
    ctx.mean("E[(1/R_1^2) int R]", tilt["integral"], math.sqrt(2.0 / math.pi))
    a = ctx.params["a"]
    end = ctx.simulate(ctx.config("endpoint"))
    r = end["terminal_value"]
    ctx.mean(f"E[R_1 exp(-{a:g} R_1^2/2)]", r * np.exp(-0.5 * a * r * r), C.bessel_exp_moment(a))


def _s8(ctx):
    tilt = ctx.simulate(ctx.config("tilted"))
    # m_1 is Rayleigh; weighting by 1/m_1 turns it into |N| up to sqrt(pi/2)
    ctx.mean("E[(1/m_1) int m]", math.sqrt(0.5 * math.pi) * tilt["integral"], 1.0)


def _meander_uniform_cdf(y):
    t = 1.0 / (y * y)
    return lambda z: 1.0 - C.alpha_cdf_conditional(y - z, t)


def _s8b(ctx):
    for y in ctx.params["ends"]:
        b = ctx.simulate(ctx.config("pinned", endpoint_value=float(y)))
        cdf = _meander_uniform_cdf(y)
        edges, probs = _equal_mass_edges(cdf, 0.0, y + 12.0, ctx.params["bins"])
        ctx.chi2(f"m_U | m_1 = {y:g}", b["m_U"], edges, probs, f"meander kernel y={y:g}")


def _s9(ctx):
    b = ctx.simulate(ctx.config("paths"))
    l1 = b["l1"]
    ctx.mean("E[(1/l_1) int |b|]", b["abs_integral"] / l1, 0.5)
    ctx.mean("E[(1/l_1) int l]", b["local_time_integral"] / l1, 0.5)


def _s10(ctx):
    b = ctx.simulate(ctx.config("paths"))
    ctx.mean("E[int e * int 1/e]", b["product"], 1.5)


def _s11(ctx):
    inv = ctx.simulate(ctx.config("inverse"))
    v, _ = _kept(inv, inv.functional("knight"))
    bes = ctx.simulate(ctx.config("bessel"))
    ctx.ks("tau_1/sup|B|^2 vs 4/sup R^2", v, 4.0 / bes["sup"] ** 2, "two-sample")


def _s12(ctx):
    inv = ctx.simulate(ctx.config("inverse"))
    zeta, _ = _kept(inv, inv.functional("zeta"))
    hit = ctx.simulate(ctx.config("hitting"))
    a1, _ = _kept(hit, hit.functional("A1"))
    ctx.ks("zeta vs A_1^(1)", zeta, a1, "two-sample")


def _s13(ctx):
    b = ctx.simulate(ctx.config("paths"))
    beta, ex = _kept(b, b.functional("alpha"))
    ctx.mean("E[beta]", beta, 0.0, excluded_fraction=ex)
    ctx.mean("E[beta^2]", beta * beta, 0.25, excluded_fraction=ex)
    ctx.ks("beta ~ N(0, 1/4)", beta, stats.norm(0.0, 0.5).cdf, "N(0, 1/4)")


def _s14(ctx):
    grid = ctx.scenario.configs["paths"].grid
    for mu in ctx.params["mus"]:
        b = ctx.simulate(ctx.config("paths", mu=float(mu)))
        for x in grid:
            ctx.mean(f"E[X_{x:g}], mu={mu:g}", b[f"X[{x:g}]"], C.ray_knight_mean(x, mu))


@lru_cache(maxsize=None)
def alpha_plus_exp_moment(eps: float) -> float:
    """``E[exp(eps (alpha^+)^2)]`` by quadrature of the density of ``alpha``."""
    if not 0.0 <= eps < 0.5:
        raise ValueError("the moment is finite only for 0 <= eps < 1/2")

    def weighted(y):
        d = C.alpha_density(y)
        return math.exp(eps * y * y + math.log(d)) if d > 0.0 else 0.0

    # the density decays like exp(-y^2/2); cut where the integrand is negligible
    tail = Q.quad(weighted, 0.0, math.sqrt(200.0 / (0.5 - eps)), vectorized=False)
    return C.moment_i_minus(0.0) + tail


def _s15(ctx):
    b = ctx.simulate(ctx.config("paths"))
    a1, _ = _kept(b, b.functional("A1"))
    alpha, ex = _kept(b, b.functional("alpha"))
    eps_a, eps_alpha = ctx.params["eps_A1"], ctx.params["eps_alpha"]
    g = np.exp(eps_a * a1 * a1)
    half = g.size // 2
    ctx.difference(f"E[exp({eps_a:g} A_1^2)]: first half - second half", g[:half], g[half:],
                   kind="sanity")
    ctx.mean(f"E[exp({eps_alpha:g} (alpha^+)^2)]", np.exp(eps_alpha * np.maximum(alpha, 0.0) ** 2),
             alpha_plus_exp_moment(eps_alpha), excluded_fraction=ex, kind="sanity")


def _s16(ctx):
    b = ctx.simulate(ctx.config("hitting"))
    rev = reversed_rescaled_path(b)
    keep = ~b.excluded
    tilt = ctx.simulate(ctx.config("tilted"))
    # E[F(R) / R_1^2] equals E[F] with R_1 drawn from |N|
    ctx.difference("int path: reversed - weighted Bessel", rev["integral"][keep], tilt["integral"])
    ctx.difference("sup path: reversed - weighted Bessel", rev["sup"][keep], tilt["sup"])


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_H = 1e-3
_HIT = PathConfig(step=_H, moment_orders=(1.0,))


def _scn(id_, title, default_n, configs, run, **params):
    return Scenario(id_, CLAIMS[id_], title, default_n, configs, params, run)


SCENARIOS = {s.id: s for s in (
    _scn("S1", "A_1^(1) is centered", 100_000, {"paths": _HIT}, _s1),
    _scn("S2", "signed moments of alpha", 100_000, {"paths": _HIT}, _s2,
         orders=(0.0, 0.5, 1.0, 2.0, 3.0)),
    _scn("S3", "law of alpha", 200_000,
         {"paths": PathConfig(step=1e-4, t_ref=1.0, moment_orders=())}, _s3),
    _scn("S4", "conditional law of alpha", 100_000,
         {"paths": PathConfig(step=_H, moment_orders=())}, _s4,
         times=(0.5, 1.0, 2.0), window=0.05, bins=20),
    _scn("S5", "local times at T_1", 100_000,
         {"paths": PathConfig(step=_H, moment_orders=(), local_time_method="conditional")}, _s5,
         b_levels=(0.25, 0.5, 0.75), x_levels=(0.0, 0.5), mus=(0.5, 1.0, 2.0)),
    _scn("S6", "two-barrier means", 100_000,
         {"paths": PathConfig(scheme="two_barrier", step=_H, level=1.0, moment_orders=(1.0,))}, _s6,
         lambdas=(0.5, 2.0), thetas=(1.5, 2.0)),
    _scn("S7", "Bessel-3 identities", 50_000,
         {"tilted": PathConfig(scheme="bessel3_fixed_horizon", step=_H, endpoint="half_normal"),
          "endpoint": PathConfig(scheme="bessel3_fixed_horizon", step=1.0)}, _s7, a=1.0),
    _scn("S8", "meander identity", 50_000,
         {"tilted": PathConfig(scheme="meander", step=_H, meander_method="bessel_bridge",
                               endpoint="half_normal")}, _s8),
    _scn("S8b", "meander at uniform time given m_1", 20_000,
         {"pinned": PathConfig(scheme="meander", step=1e-2, meander_method="bessel_bridge",
                               endpoint="fixed")}, _s8b, ends=(0.5, 1.0, 2.0), bins=20),
    _scn("S9", "bridge identities", 100_000,
         {"paths": PathConfig(scheme="bridge_fixed_horizon", step=_H, local_time_method="sampled")},
         _s9),
    _scn("S10", "excursion identity", 50_000,
         {"paths": PathConfig(scheme="excursion", step=_H, excursion_method="bessel_bridge")}, _s10),
    _scn("S11", "Knight's identity", 100_000,
         {"inverse": PathConfig(scheme="inverse_local_time", step=_H, moment_orders=(),
                                local_time_method="sampled", exact_extrema=True),
          "bessel": PathConfig(scheme="bessel3_fixed_horizon", step=_H, exact_extrema=True)}, _s11),
    _scn("S12", "law of zeta", 100_000,
         {"inverse": PathConfig(scheme="inverse_local_time", step=_H, moment_orders=(1.0,),
                                local_time_method="sampled"),
          "hitting": _HIT}, _s12),
    _scn("S13", "law of beta", 100_000,
         {"paths": PathConfig(scheme="inverse_local_time", step=_H, moment_orders=(),
                              local_time_method="sampled")}, _s13),
    _scn("S14", "Ray-Knight SDE mean", 100_000,
         {"paths": PathConfig(scheme="ray_knight_sde", step=_H, grid=(0.25, 0.5, 1.0))}, _s14,
         mus=(0.5, 1.0)),
    _scn("S15", "exponential moments", 100_000, {"paths": _HIT}, _s15,
         eps_A1=0.1, eps_alpha=0.4),
    _scn("S16", "reversed path vs weighted Bessel-3", 100_000,
         {"hitting": PathConfig(step=_H, moment_orders=(1.0,), exact_extrema=True),
          "tilted": PathConfig(scheme="bessel3_fixed_horizon", step=_H, endpoint="half_normal",
                               exact_extrema=True)}, _s16),
)}


def scenario_ids() -> list[str]:
    return list(SCENARIOS)


def run_scenario(scenario_id: str, n_paths: int | None = None, config_overrides: dict | None = None,
                 *, seed: int = 0, workers: int | None = None,
                 thresholds: Thresholds = Thresholds()) -> VerificationResult:
    """Run one registered scenario.

    ``config_overrides`` may hold :class:`PathConfig` fields (applied to every
    batch of the scenario, e.g. ``step``) and scenario parameters such as
    ``lambdas`` for S6.  Unknown keys are an error.
    """
    if scenario_id not in SCENARIOS:
        raise KeyError(f"unknown scenario {scenario_id!r}; known: {', '.join(SCENARIOS)}")
    scn = SCENARIOS[scenario_id]
    n = scn.default_n if n_paths is None else int(n_paths)
    if n < MIN_PATHS:
        raise ValueError(f"n_paths must be >= {MIN_PATHS}, got {n}")
    overrides = dict(config_overrides or {})
    path_fields = {f.name for f in fields(PathConfig)}
    unknown = set(overrides) - path_fields - set(scn.params)
    if unknown:
        raise ValueError(f"{scenario_id} does not accept {sorted(unknown)}")
    if {"seed", "stream_id"} & set(overrides):
        raise ValueError("seed and stream_id are set by the runner")
    params = {**scn.params, **{k: v for k, v in overrides.items() if k in scn.params}}
    index = list(SCENARIOS).index(scenario_id) + 1
    ctx = _Context(scn, index, n, seed, workers, overrides, params, thresholds)
    scn.run(ctx)
    return VerificationResult(scn.id, scn.claim_ref, tuple(ctx.checks), n, seed)


def run_suite(ids=None, n_paths: int | None = None, *, seed: int = 0, workers: int | None = None,
              thresholds: Thresholds = Thresholds(), overrides: dict | None = None) -> list:
    ids = scenario_ids() if ids is None else list(ids)
    return [run_scenario(i, n_paths, overrides, seed=seed, workers=workers, thresholds=thresholds)
            for i in ids]
