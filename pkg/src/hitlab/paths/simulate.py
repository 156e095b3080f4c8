"""Batch simulation front end: configs in, named per-path arrays out."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..rng import RngStream
from . import kernels as K
from . import layout as L
from . import special as S
from .config import PathConfig, PathFunctionals
from .recorder import record_uniform_batch

__all__ = [
    "PathBatch",
    "sample_paths",
    "sample_path",
    "reversed_rescaled_path",
    "two_pass_uniform_sample",
    "write_csv",
    "default_workers",
]

_BROWNIAN_SCHEMES = {
    "single_barrier": K.SCHEME_SINGLE,
    "two_barrier": K.SCHEME_TWO,
    "fixed_horizon": K.SCHEME_FIXED,
    "inverse_local_time": K.SCHEME_INVLT,
}
_ENDPOINT_CODES = {
    "chi3": S.END_CHI3,
    "rayleigh": S.END_RAYLEIGH,
    "half_normal": S.END_HALF_NORMAL,
    "fixed": S.END_FIXED,
}
# Gauss-Legendre nodes on [0, 1] for the grid-conditional 1/|X| cell integrals
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_X + 1.0)
_GL_WEIGHTS = 0.5 * _GL_W


_LT_METHODS = {"conditional": K.LT_CONDITIONAL, "occupation": K.LT_OCCUPATION,
               "sampled": K.LT_SAMPLED}


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


@dataclass
class PathBatch:
    """Per-path outputs of ``n`` paths on streams ``stream_id .. stream_id+n-1``.

    ``columns`` maps a column name to a length-``n`` array.  ``excluded`` marks
    aborted paths (runaway hitting times).
    """

    config: PathConfig
    columns: dict

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def excluded(self) -> np.ndarray:
        status = self.columns.get("status")
        if status is None:
            return np.zeros(self.n, dtype=bool)
        return status > 0

    @property
    def excluded_fraction(self) -> float:
        return float(self.excluded.mean())

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def power_integral(self, side: str, m: float) -> np.ndarray:
        key = f"{'pos' if side == 'plus' else 'neg'}_int[{float(m):g}]"
        if key not in self.columns:
            raise KeyError(f"order {m} was not requested (moment_orders={self.config.moment_orders})")
        return self.columns[key]

    def local_time(self, level: float) -> np.ndarray:
        return self.columns[f"local_time[{float(level):g}]"]

    # scale-normalised functionals -------------------------------------------------
    def functional(self, name: str) -> np.ndarray:
        """Named functional per path.

        ``inv_sqrt_T``, ``A1`` (``int B / T^{3/2}``), ``A+(m)``/``A-(m)``,
        ``alpha`` (uniform-time value over ``sqrt T``), ``zeta`` and
        ``knight`` (``T / sup|B|^2``).
        """
        c = self.columns
        if self.config.scheme in _BROWNIAN_SCHEMES:
            t = c["hit_time"]
            if name == "inv_sqrt_T":
                return 1.0 / np.sqrt(t)
            if name == "A1":
                return (self.power_integral("plus", 1) - self.power_integral("minus", 1)) / t ** 1.5
            if name.startswith("A+(") or name.startswith("A-("):
                m = float(name[3:-1])
                side = "plus" if name[1] == "+" else "minus"
                return self.power_integral(side, m) / t ** (1.0 + 0.5 * m)
            if name == "alpha":
                return c["uniform_sample"] / np.sqrt(t)
            if name == "zeta":
                occ = self.power_integral("plus", 1) + self.power_integral("minus", 1)
                return (c["local_time_zero_integral"] - occ) / t ** 1.5
            if name == "knight":
                return t / c["sup_abs"] ** 2
        if name in c:
            return c[name]
        raise KeyError(f"unknown functional {name!r} for scheme {self.config.scheme}")

    def to_functionals(self, i: int) -> PathFunctionals:
        c = self.columns
        cfg = self.config
        spi = {}
        lts = {}
        aux = {}
        for key, arr in c.items():
            if key.startswith("pos_int["):
                m = float(key[8:-1])
                spi[m] = (float(arr[i]), float(c[f"neg_int[{key[8:-1]}]"][i]))
            elif key.startswith("local_time["):
                lts[float(key[11:-1])] = float(arr[i])
        base = {"hit_time", "terminal_value", "sup", "sup_abs", "uniform_sample", "status"}
        for key, arr in c.items():
            if key not in base and not key.startswith(("pos_int[", "neg_int[", "local_time[")):
                aux[key] = float(arr[i])

        def get(name, default=math.nan):
            return float(c[name][i]) if name in c else default

        return PathFunctionals(
            hit_time=get("hit_time", cfg.horizon),
            terminal_value=get("terminal_value"),
            sup=get("sup"),
            sup_abs=get("sup_abs"),
            uniform_sample=get("uniform_sample"),
            signed_power_integrals=spi,
            local_times=lts,
            aux=aux,
            aborted=bool(get("status", 0.0) > 0),
        )


def _split(n: int, workers: int):
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    return [(int(bounds[k]), int(bounds[k + 1])) for k in range(workers) if bounds[k + 1] > bounds[k]]


def _run_chunks(fn, n: int, ncols: int, workers: int) -> np.ndarray:
    out = np.zeros((n, ncols))
    chunks = _split(n, workers)
    if len(chunks) == 1:
        fn(0, out)
        return out
    # each chunk writes a disjoint row range; merge order is fixed by index
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [pool.submit(fn, lo, out[lo:hi]) for lo, hi in chunks]
        for f in futures:
            f.result()
    return out


def _brownian(cfg: PathConfig, n: int, workers: int) -> dict:
    orders = np.array(cfg.moment_orders, dtype=float)
    codes = K.power_codes(orders)
    levels = np.array(cfg.local_time_levels, dtype=float)
    lt_method = _LT_METHODS[cfg.local_time_method]
    # positive exponent: bandwidth h**exponent; negative value: fixed bandwidth
    lt_param = 0.4 if cfg.local_time_bandwidth is None else -cfg.local_time_bandwidth
    ncols = L.N_BASE + 2 * orders.size + levels.size
    scheme = _BROWNIAN_SCHEMES[cfg.scheme]

    def fn(lo, out):
        K.brownian_batch(scheme, cfg.level, cfg.lower, cfg.horizon, cfg.ell, cfg.step,
                         cfg.effective_t_ref(), cfg.max_time, cfg.bridge_correction,
                         cfg.exact_extrema, orders, codes, levels, lt_method, lt_param,
                         np.uint64(cfg.seed), np.uint64(cfg.stream_id + lo), out)

    out = _run_chunks(fn, n, ncols, workers)
    cols = {name: out[:, k] for k, name in enumerate(L.BASE_NAMES)}
    for k, m in enumerate(orders):
        cols[f"pos_int[{m:g}]"] = out[:, L.N_BASE + k]
        cols[f"neg_int[{m:g}]"] = out[:, L.N_BASE + orders.size + k]
    for j, x in enumerate(levels):
        cols[f"local_time[{x:g}]"] = out[:, L.N_BASE + 2 * orders.size + j]
    return cols


def _bes3(cfg: PathConfig, n: int, workers: int, mode: int, value: float, with_inverse: bool) -> np.ndarray:
    nodes = _GL_NODES if with_inverse else np.zeros(0)
    weights = _GL_WEIGHTS if with_inverse else np.zeros(0)

    def fn(lo, out):
        S.bes3_batch(mode, value, cfg.n_grid, cfg.exact_extrema, nodes, weights,
                     np.uint64(cfg.seed), np.uint64(cfg.stream_id + lo), out)

    return _run_chunks(fn, n, S.B3_NCOLS, workers)


def sample_paths(config: PathConfig, n: int, workers: int | None = None) -> PathBatch:
    """Simulate ``n`` paths of ``config`` on streams ``stream_id + i``.

    The result does not depend on ``workers``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    workers = default_workers() if workers is None else max(1, int(workers))
    cfg = config
    scheme = cfg.scheme
    if scheme in _BROWNIAN_SCHEMES:
        return PathBatch(cfg, _brownian(cfg, n, workers))
    if scheme == "bessel3_fixed_horizon":
        out = _bes3(cfg, n, workers, _ENDPOINT_CODES[cfg.endpoint], cfg.endpoint_value, False)
        return PathBatch(cfg, {
            "terminal_value": out[:, S.B3_END],
            "integral": out[:, S.B3_INTEGRAL],
            "sup": out[:, S.B3_SUP],
            "uniform_sample": out[:, S.B3_UNIFORM],
        })
    if scheme == "meander":
        if cfg.meander_method == "bessel_bridge":
            mode = S.END_FIXED if cfg.endpoint == "fixed" else S.END_RAYLEIGH
            if cfg.endpoint == "half_normal":
                mode = S.END_HALF_NORMAL
            out = _bes3(cfg, n, workers, mode, cfg.endpoint_value, False)
            return PathBatch(cfg, {
                "m1": out[:, S.B3_END],
                "integral": out[:, S.B3_INTEGRAL],
                "m_U": out[:, S.B3_UNIFORM],
                "sup": out[:, S.B3_SUP],
            })

        def fn(lo, out):
            S.meander_last_zero_batch(cfg.n_grid, np.uint64(cfg.seed), np.uint64(cfg.stream_id + lo), out)

        out = _run_chunks(fn, n, S.ME_NCOLS, workers)
        return PathBatch(cfg, {
            "m1": out[:, S.ME_END],
            "integral": out[:, S.ME_INTEGRAL],
            "m_U": out[:, S.ME_UNIFORM],
            "last_zero": out[:, S.ME_LAST_ZERO],
        })
    if scheme == "bridge_fixed_horizon":
        def fn(lo, out):
            S.bridge_batch(cfg.n_grid, cfg.local_time_method == "sampled", np.uint64(cfg.seed), np.uint64(cfg.stream_id + lo), out)

        out = _run_chunks(fn, n, S.BR_NCOLS, workers)
        return PathBatch(cfg, {
            "abs_integral": out[:, S.BR_ABS_INTEGRAL],
            "l1": out[:, S.BR_LOCAL_TIME],
            "local_time_integral": out[:, S.BR_LOCAL_TIME_INTEGRAL],
            "sup_abs": out[:, S.BR_SUP],
            "terminal_value": out[:, S.BR_TERMINAL],
        })
    if scheme == "excursion":
        if cfg.excursion_method == "bessel_bridge":
            out = _bes3(cfg, n, workers, S.END_FIXED, 0.0, True)
            return PathBatch(cfg, {
                "integral": out[:, S.B3_INTEGRAL],
                "inv_integral": out[:, S.B3_INV_INTEGRAL],
                "product": out[:, S.B3_INTEGRAL] * out[:, S.B3_INV_INTEGRAL],
                "sup": out[:, S.B3_SUP],
            })
        if cfg.n_grid % 4:
            raise ValueError("the Vervaat excursion needs a grid size divisible by 4")

        def fn(lo, out):
            S.excursion_vervaat_batch(cfg.n_grid, np.uint64(cfg.seed), np.uint64(cfg.stream_id + lo), out)

        out = _run_chunks(fn, n, S.EX_NCOLS, workers)
        return PathBatch(cfg, {
            "integral": out[:, S.EX_INTEGRAL],
            "inv_integral": out[:, S.EX_INV_INTEGRAL],
            "inv_integral_coarse": out[:, S.EX_INV_INTEGRAL_COARSE],
            "product": out[:, S.EX_PRODUCT],
            "product_coarse": out[:, S.EX_PRODUCT_COARSE],
            "product_extrapolated": out[:, S.EX_PRODUCT_EXTRAPOLATED],
        })
    if scheme == "ray_knight_sde":
        grid = np.array(cfg.grid, dtype=float)
        b_max = float(grid.max())
        n_steps = max(1, int(round(b_max / cfg.step)))

        def fn(lo, out):
            S.ray_knight_batch(cfg.mu, n_steps, b_max, grid, np.uint64(cfg.seed),
                               np.uint64(cfg.stream_id + lo), out)

        out = _run_chunks(fn, n, grid.size, workers)
        return PathBatch(cfg, {f"X[{b:g}]": out[:, j] for j, b in enumerate(grid)})
    raise ValueError(f"unhandled scheme {scheme!r}")


def sample_path(config: PathConfig, stream: RngStream | None = None) -> PathFunctionals:
    """One path; ``stream`` overrides the config's seed and stream id."""
    if stream is not None:
        config = config.with_(seed=stream.seed, stream_id=stream.stream_id)
    return sample_paths(config, 1, workers=1).to_functionals(0)


def reversed_rescaled_path(batch: PathBatch) -> dict:
    """Functionals of ``u -> (1 - B_{T(1-u)}) / sqrt(T)`` on ``[0, 1]``.

    Needs a single-barrier batch at level 1 with order 1 requested; ``sup``
    additionally needs ``exact_extrema`` for the within-step minimum.
    """
    cfg = batch.config
    if cfg.scheme != "single_barrier" or cfg.level != 1.0:
        raise ValueError("reversed_rescaled_path needs a single-barrier batch at level 1")
    t = batch["hit_time"]
    inv = 1.0 / np.sqrt(t)
    return {
        "terminal": inv,
        "integral": inv - batch.functional("A1"),
        "sup": (1.0 - batch["inf"]) * inv,
    }


def two_pass_uniform_sample(config: PathConfig, n: int) -> np.ndarray:
    """Oracle for the one-pass sampler: store each path, then read it at ``U T``.

    Returns ``alpha = B_{UT} / sqrt(T)`` per path.  Paths match the one-pass
    kernel in law only; the kernel consumes its random numbers differently.
    """
    if config.scheme != "single_barrier":
        raise ValueError("two-pass oracle is implemented for the single barrier")
    out = np.empty(n)
    record_uniform_batch(config.level, config.step, config.effective_t_ref(), config.max_time,
                         config.bridge_correction, np.uint64(config.seed),
                         np.uint64(config.stream_id), out)
    return out


def write_csv(batch: PathBatch, path_or_file, *, header_lines=()) -> None:
    """One line per path: scheme, seed, stream, then every column."""
    names = list(batch.columns)
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "seed", "stream"] + names)
        cfg = batch.config
        for i in range(batch.n):
            w.writerow([cfg.scheme, cfg.seed, cfg.stream_id + i]
                       + [repr(float(batch.columns[k][i])) for k in names])
    finally:
        if own:
            fh.close()
