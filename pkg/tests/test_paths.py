import io
import math

import numba as nb
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as si
from scipy import stats

from hitlab.paths import (
    SCHEMES,
    PathConfig,
    reversed_rescaled_path,
    sample_path,
    sample_paths,
    two_pass_uniform_sample,
    write_csv,
)
from hitlab.paths.kernels import bridge_local_time, sample_bridge_local_time
from hitlab.rng import RngStream, new_state

COARSE = 1e-2


def _batch(n=200, workers=1, **kw):
    kw.setdefault("step", COARSE)
    return sample_paths(PathConfig(**kw), n, workers=workers)


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("scheme", SCHEMES)
def test_rerun_is_bit_identical(scheme):
    a = _batch(64, scheme=scheme, seed=5)
    b = _batch(64, scheme=scheme, seed=5)
    assert a.columns.keys() == b.columns.keys()
    for key in a.columns:
        assert a[key].tobytes() == b[key].tobytes(), key


@pytest.mark.parametrize("scheme", ["single_barrier", "inverse_local_time", "excursion", "ray_knight_sde"])
def test_worker_count_does_not_change_results(scheme):
    a = _batch(50, workers=1, scheme=scheme)
    b = _batch(50, workers=3, scheme=scheme)
    for key in a.columns:
        assert a[key].tobytes() == b[key].tobytes(), key


def test_paths_depend_only_on_their_stream():
    full = _batch(40, seed=2)
    tail = sample_paths(PathConfig(step=COARSE, seed=2, stream_id=25), 15, workers=1)
    assert np.array_equal(full["hit_time"][25:], tail["hit_time"])


def test_seed_changes_paths():
    assert not np.array_equal(_batch(20, seed=1)["hit_time"], _batch(20, seed=2)["hit_time"])


def test_sample_path_matches_batch_row():
    cfg = PathConfig(step=COARSE, seed=4, moment_orders=(0.0, 1.0))
    batch = sample_paths(cfg, 10, workers=1)
    one = sample_path(cfg, RngStream(4, 7))
    assert one.hit_time == batch["hit_time"][7]
    assert one.signed_power_integrals[1.0] == (batch["pos_int[1]"][7], batch["neg_int[1]"][7])
    assert not one.aborted


# ---------------------------------------------------------------------------
# per-path invariants
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("scheme", ["single_barrier", "two_barrier", "fixed_horizon", "inverse_local_time"])
def test_occupation_identity(scheme):
    b = _batch(300, scheme=scheme, moment_orders=(0.0, 2.0))
    total = b.power_integral("plus", 0) + b.power_integral("minus", 0)
    np.testing.assert_allclose(total, b["hit_time"], rtol=1e-12, atol=0)


def test_single_barrier_stops_on_the_level():
    b = _batch(300, level=1.5)
    assert np.all(b["terminal_value"] == 1.5)
    assert np.all(b["sup"] == 1.5)
    assert np.all(b["inf"] <= 0.0)
    # the uniform-time value is drawn inside a step, so only the barrier bounds it
    assert np.all(b["uniform_sample"] <= 1.5)


def test_two_barrier_exit_side_matches_terminal():
    b = _batch(300, scheme="two_barrier", level=1.0, lower=0.5)
    up = b["exit_side"] > 0
    assert np.all(b["terminal_value"][up] == 1.0)
    assert np.all(b["terminal_value"][~up] == -0.5)
    assert np.all(b["exit_side"] != 0)


def test_fixed_horizon_runs_to_the_horizon():
    b = _batch(100, scheme="fixed_horizon", horizon=2.0)
    np.testing.assert_allclose(b["hit_time"], 2.0, rtol=1e-14)
    assert np.all(b["sup_abs"] == np.maximum(b["sup"], -b["inf"]))


def test_inverse_local_time_stops_at_zero():
    for method in ("conditional", "sampled"):
        b = _batch(200, scheme="inverse_local_time", ell=0.5, local_time_method=method)
        assert np.all(b["terminal_value"] == 0.0)
        np.testing.assert_allclose(b["local_time_zero"], 0.5, rtol=1e-12)


def test_bridge_ends_at_zero():
    b = _batch(200, scheme="bridge_fixed_horizon")
    assert np.all(b["terminal_value"] == 0.0)
    assert np.all(b["l1"] >= 0.0)
    assert np.all(b["abs_integral"] >= 0.0)


def test_excursion_and_meander_are_nonnegative():
    ex = _batch(200, scheme="excursion")
    assert np.all(ex["integral"] > 0.0) and np.all(ex["inv_integral"] > 0.0)
    me = _batch(200, scheme="meander")
    assert np.all(me["m1"] > 0.0) and np.all(me["m_U"] >= 0.0)
    assert np.all(me["m_U"] <= me["sup"] + 1e-12)


def test_ray_knight_is_nonnegative():
    b = _batch(200, scheme="ray_knight_sde", grid=(0.5, 1.0))
    assert set(b.columns) == {"X[0.5]", "X[1]"}
    assert all(np.all(v >= 0.0) for v in b.columns.values())


def test_max_time_marks_runaway_paths():
    b = _batch(400, max_time=0.5)
    assert 0.0 < b.excluded_fraction < 1.0
    assert np.all(b["hit_time"][b.excluded] >= 0.5)


def test_scale_invariant_functionals():
    b = _batch(100, moment_orders=(1.0,))
    t = b["hit_time"]
    np.testing.assert_allclose(b.functional("inv_sqrt_T"), 1 / np.sqrt(t))
    np.testing.assert_allclose(b.functional("A+(1)") - b.functional("A-(1)"), b.functional("A1"), atol=1e-14)
    with pytest.raises(KeyError):
        b.power_integral("plus", 3.0)
    with pytest.raises(KeyError):
        b.functional("nonsense")


def test_reversed_path_needs_unit_level():
    rev = reversed_rescaled_path(_batch(50))
    assert np.all(rev["sup"] >= rev["terminal"])
    with pytest.raises(ValueError):
        reversed_rescaled_path(_batch(10, level=2.0))


def test_two_pass_oracle_shape():
    x = two_pass_uniform_sample(PathConfig(step=COARSE), 300)
    assert x.shape == (300,) and np.all(np.isfinite(x))
    with pytest.raises(ValueError):
        two_pass_uniform_sample(PathConfig(scheme="two_barrier"), 10)


def test_write_csv_has_one_row_per_path():
    b = _batch(5, seed=3)
    buf = io.StringIO()
    write_csv(b, buf, header_lines=["hitlab test"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# hitlab test"
    assert lines[1].startswith("scheme,seed,stream,hit_time")
    assert len(lines) == 2 + 5
    assert lines[2].split(",")[:3] == ["single_barrier", "3", "0"]
    assert float(lines[4].split(",")[3]) == b["hit_time"][2]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"scheme": "brownian"},
    {"step": 0.0},
    {"seed": -1},
    {"moment_orders": (-1.0,)},
    {"local_time_method": "kde"},
    {"local_time_bandwidth": 0.0},
    {"level": 0.0},
    {"t_ref": -1.0},
    {"endpoint": "uniform"},
    {"meander_method": "x"},
    {"excursion_method": "x"},
    {"scheme": "meander", "horizon": 2.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        PathConfig(**kwargs)


def test_config_normalises_tuples_and_t_ref():
    cfg = PathConfig(moment_orders=[1, 2], level=2.0)
    assert cfg.moment_orders == (1.0, 2.0)
    assert cfg.effective_t_ref() == pytest.approx(0.4)
    assert PathConfig(scheme="two_barrier", level=2.0, lower=0.5).effective_t_ref() == pytest.approx(0.025)
    assert PathConfig(t_ref=3.0).effective_t_ref() == 3.0
    assert PathConfig(step=1e-3).n_grid == 1000


def test_sample_paths_rejects_empty():
    with pytest.raises(ValueError):
        sample_paths(PathConfig(), 0)


# ---------------------------------------------------------------------------
# bridge local time
# ---------------------------------------------------------------------------

@nb.njit(cache=True)
def _draw_local_times(seed, d0, d1, h, n):
    st = new_state(np.uint64(seed), np.uint64(0))
    out = np.empty(n)
    for i in range(n):
        out[i] = sample_bridge_local_time(st, d0, d1, h)
    return out


def _survival(ell, d0, d1, h):
    return math.exp(-((abs(d0) + abs(d1) + ell) ** 2 - (d1 - d0) ** 2) / (2 * h))


@pytest.mark.parametrize("d0, d1, h", [(0.0, 0.0, 1.0), (0.3, -0.2, 0.5), (0.1, 0.25, 0.2), (-0.4, -0.1, 1.0)])
def test_expected_bridge_local_time_is_integrated_survival(d0, d1, h):
    # E L = int_0^inf P(L > l) dl, with the atom at zero removed for same-sign ends
    atom = 1.0 - math.exp(-2 * d0 * d1 / h) if d0 * d1 > 0 else 0.0
    tail = si.quad(_survival, 0, np.inf, args=(d0, d1, h), epsabs=1e-13)[0]
    assert bridge_local_time(d0, d1, h) == pytest.approx(tail, rel=1e-9)
    assert _survival(0.0, d0, d1, h) == pytest.approx(1.0 - atom, rel=1e-12)


@pytest.mark.parametrize("d0, d1, h", [(0.0, 0.0, 1.0), (0.3, -0.2, 0.5), (0.1, 0.25, 0.2)])
def test_sampled_bridge_local_time_law(d0, d1, h):
    draws = _draw_local_times(11, d0, d1, h, 100_000)
    mean = bridge_local_time(d0, d1, h)
    assert abs(draws.mean() - mean) < 4 * draws.std() / math.sqrt(draws.size)
    positive = draws[draws > 0]
    p0 = _survival(0.0, d0, d1, h)
    assert abs(positive.size / draws.size - p0) < 4 * math.sqrt(p0 * (1 - p0) / draws.size + 1e-12)

    def cdf(ell):
        return 1.0 - np.exp(-((abs(d0) + abs(d1) + ell) ** 2 - (d1 - d0) ** 2) / (2 * h)) / p0

    assert stats.kstest(positive, cdf).pvalue > 1e-3


def test_far_same_sign_bridge_has_no_local_time():
    assert bridge_local_time(3.0, 3.0, 0.01) == 0.0
    assert np.all(_draw_local_times(1, 3.0, 3.0, 0.01, 100) == 0.0)


@settings(max_examples=50, deadline=None)
@given(d0=st.floats(-2, 2), d1=st.floats(-2, 2), h=st.floats(1e-4, 2.0))
def test_bridge_local_time_symmetries(d0, d1, h):
    v = bridge_local_time(d0, d1, h)
    assert v >= 0.0
    assert v == pytest.approx(bridge_local_time(d1, d0, h), rel=1e-12, abs=1e-300)
    assert v == pytest.approx(bridge_local_time(-d0, -d1, h), rel=1e-12, abs=1e-300)
    assert v <= bridge_local_time(0.0, 0.0, h) * (1 + 1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32), level=st.floats(0.25, 3.0))
def test_occupation_identity_property(seed, level):
    b = sample_paths(PathConfig(step=5e-2, seed=seed, level=level, moment_orders=(0.0,)), 20, workers=1)
    total = b.power_integral("plus", 0) + b.power_integral("minus", 0)
    np.testing.assert_allclose(total, b["hit_time"], rtol=1e-12)
