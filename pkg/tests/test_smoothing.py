import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import clipped_window, cubic_normal_equations_exact, refit_interior, refit_point
from tedpeak import SmoothingConfig, StreamingSmoother, fit_window, smooth
from tedpeak.errors import DegenerateWindow
from tedpeak.smoothing import edge_window, filter_coeffs


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))) if a.size else 0.0


# -- fit_window ---------------------------------------------------------------

def test_fit_constant():
    p = fit_window([2.0] * 10)
    assert p.as_tuple() == pytest.approx((2.0, 0.0, 0.0, 0.0), abs=1e-12)


def test_fit_exact_cubic():
    xs = np.arange(-3, 4, dtype=float)
    p = fit_window(xs**3, xs)
    assert p.as_tuple() == pytest.approx((0.0, 0.0, 0.0, 1.0), abs=1e-12)


def test_fit_too_few_points():
    with pytest.raises(DegenerateWindow):
        fit_window([1.0, 2.0, 3.0, 4.0])


def test_fit_repeated_x_rejected():
    with pytest.raises(DegenerateWindow):
        fit_window([1.0] * 6, [0, 1, 1, 2, 3, 4])


def test_fit_matches_exact_normal_equations():
    # exact rational solve on 600 pseudorandom points; values frozen from the oracle
    rng = np.random.default_rng(11)
    xs = np.arange(600, dtype=float)
    ys = rng.normal(1.0, 0.2, 600)
    exact = cubic_normal_equations_exact(xs, ys)
    got = fit_window(ys, xs)
    # compare the evaluated curves; raw monomial coefficients are ill-scaled
    ref = np.polyval(exact[::-1], xs)
    assert rel_err([got(x) for x in xs], ref) < 1e-9


def test_fit_on_offset_coordinates():
    xs = np.arange(100.0, 120.0)
    ys = 0.5 * (xs - 110.0) ** 2 + 3.0
    got = fit_window(ys, xs)
    assert rel_err([got(x) for x in xs], ys) < 1e-9


def test_filter_coeffs_sum_to_one():
    for length, pos in [(5, 0), (5, 2), (600, 300), (17, 16)]:
        assert float(np.sum(filter_coeffs(length, pos))) == pytest.approx(1.0, abs=1e-12)


def test_filter_coeffs_read_only():
    h = filter_coeffs(600, 300)
    with pytest.raises(ValueError):
        h[0] = 1.0


# -- batch smoothing ----------------------------------------------------------

def test_constant_reproduced():
    out = smooth(np.full(2000, 3.5)).values
    assert rel_err(out, np.full(2000, 3.5)) < 1e-12


def test_ramp_reproduced_everywhere():
    x = np.linspace(1.0, 5.0, 1500)
    out = smooth(x).values
    assert rel_err(out, x) < 1e-9


def test_output_length_matches():
    for n in [0, 1, 4, 5, 6, 599, 600, 601, 1200]:
        assert len(smooth(np.ones(n))) == n


def test_short_series_falls_back_to_raw():
    res = smooth([1.0, 5.0, 2.0])
    assert res.fallback
    assert res.values.tolist() == [1.0, 5.0, 2.0]
    assert not smooth(np.ones(5)).fallback


def test_hold_boundary_passes_raw_at_edges():
    rng = np.random.default_rng(0)
    x = rng.normal(size=1000)
    out = smooth(x, SmoothingConfig(boundary="hold")).values
    assert out[:300].tolist() == x[:300].tolist()
    assert out[-299:].tolist() == x[-299:].tolist()
    assert out[300:701].tolist() == smooth(x).values[300:701].tolist()


def test_interior_matches_refit_oracle():
    rng = np.random.default_rng(5)
    x = 1.0 + 0.3 * rng.standard_normal(5000) + np.sin(np.arange(5000) / 300.0)
    first, ref = refit_interior(x, 600)
    out = smooth(x).values
    assert rel_err(out[first:first + ref.shape[0]], ref) < 1e-9


def test_every_index_matches_fit_window():
    # noisy plateaus rising above the baseline; fit_window at every index
    rng = np.random.default_rng(9)
    n = 1400
    x = 1.0 + 0.05 * rng.standard_normal(n)
    for s in range(100, n, 250):
        x[s:s + 20] += 0.8
    cfg = SmoothingConfig()
    out = smooth(x, cfg).values
    ref = []
    for i in range(n):
        lo, hi = clipped_window(i, n, cfg.window)
        p = fit_window(x[lo:hi + 1], np.arange(lo, hi + 1, dtype=float))
        ref.append(p(float(i)))
    assert rel_err(out, ref) < 1e-9


@pytest.mark.parametrize("window", [5, 6, 7, 50, 51, 600])
def test_edges_match_clipped_refit(window):
    rng = np.random.default_rng(window)
    n = 3 * window + 7
    x = 2.0 + rng.standard_normal(n)
    out = smooth(x, SmoothingConfig(window=window)).values
    for i in list(range(window)) + list(range(n - window, n)):
        lo, hi = clipped_window(i, n, window)
        assert out[i] == pytest.approx(refit_point(x, lo, hi, i), rel=1e-9)


def test_series_shorter_than_window():
    rng = np.random.default_rng(1)
    x = 1.0 + rng.standard_normal(40)
    out = smooth(x, SmoothingConfig(window=600)).values
    ref = [refit_point(x, 0, 39, i) for i in range(40)]
    assert rel_err(out, ref) < 1e-9


def test_edge_window_widens_to_five_points():
    cfg = SmoothingConfig(window=6)
    assert edge_window(0, 100, cfg) == (0, 4)
    assert edge_window(99, 100, cfg) == (95, 99)
    assert edge_window(50, 100, cfg) == (47, 52)


def test_config_validation():
    with pytest.raises(ValueError):
        SmoothingConfig(window=4)
    with pytest.raises(ValueError):
        SmoothingConfig(degree=2)
    with pytest.raises(ValueError):
        SmoothingConfig(boundary="mirror")


# -- properties -----------------------------------------------------------------

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 80), st.integers(0, 200), finite, finite, st.integers(0, 2**31))
def test_linearity(window, n, a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, n))
    cfg = SmoothingConfig(window=window)
    lhs = smooth(a * x + b * y, cfg).values
    rhs = a * smooth(x, cfg).values + b * smooth(y, cfg).values
    scale = abs(a) + abs(b) + 1.0
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * scale * 10)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 60), st.integers(0, 50), st.integers(0, 2**31))
def test_shift_equivariance(window, k, seed):
    rng = np.random.default_rng(seed)
    cfg = SmoothingConfig(window=window)
    x = rng.standard_normal(3 * window + 2 * k + 10)
    full = smooth(x, cfg).values
    shifted = smooth(x[k:], cfg).values
    c, r = cfg.center, cfg.lookahead
    # interior outputs away from both ends are identical bit for bit
    lo, hi = c + k, x.shape[0] - r
    assert shifted[lo - k:hi - k].tolist() == full[lo:hi].tolist()


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 120), st.integers(5, 400),
       st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_polynomial_reproduction(window, n, coef):
    u = np.linspace(-1.0, 1.0, n)
    x = 5.0 + np.polyval(coef, u)
    out = smooth(x, SmoothingConfig(window=window)).values
    assert rel_err(out, x) < 1e-9


# -- streaming ---------------------------------------------------------------

def test_first_emission_on_301st_push():
    sm = StreamingSmoother(SmoothingConfig(window=600))
    assert sm.latency == 300
    for k in range(300):
        assert sm.push(1.0) is None
    idx, val = sm.push(1.0)
    assert idx == 0 and val == pytest.approx(1.0)


def test_short_stream_flush():
    sm = StreamingSmoother()
    for v in (1.0, 2.0, 3.0):
        assert sm.push(v) is None
    lo, out = sm.flush()
    assert lo == 0 and out.tolist() == [1.0, 2.0, 3.0]


def test_push_after_flush_raises():
    sm = StreamingSmoother()
    sm.flush()
    with pytest.raises(RuntimeError):
        sm.push(1.0)


@pytest.mark.parametrize("window,n,boundary", [
    (600, 5000, "shrink"), (600, 700, "hold"), (7, 100, "shrink"), (8, 9, "shrink"),
    (600, 250, "shrink"), (5, 5, "hold"), (31, 30_000, "shrink"),
])
def test_streaming_equals_batch(window, n, boundary):
    cfg = SmoothingConfig(window=window, boundary=boundary)
    rng = np.random.default_rng(n)
    x = 1.0 + rng.standard_normal(n)
    sm = StreamingSmoother(cfg, capacity=64)
    parts = []
    pos = 0
    while pos < n:
        step = int(rng.integers(1, 700))
        lo, out = sm.push_many(x[pos:pos + step])
        assert lo == sum(p.shape[0] for p in parts)
        parts.append(out)
        pos += step
    parts.append(sm.flush()[1])
    streamed = np.concatenate(parts)
    assert streamed.view(np.uint64).tolist() == smooth(x, cfg).values.view(np.uint64).tolist()


def test_streaming_latency_bound():
    cfg = SmoothingConfig(window=101)
    sm = StreamingSmoother(cfg)
    emitted = 0
    for k in range(1000):
        res = sm.push(float(k % 7))
        if res is not None:
            assert res[0] == k - sm.latency
            emitted += 1
    assert emitted == 1000 - sm.latency


def test_fit_cubic_example_coefficients():
    xs = np.arange(-3, 4, dtype=float)
    p = fit_window(2 * xs**3 - xs + 5, xs)
    assert p.as_tuple() == pytest.approx((5.0, -1.0, 0.0, 2.0), abs=1e-9)


def test_constant_10k_ones():
    out = smooth(np.ones(10_000)).values
    assert np.abs(out - 1.0).max() < 1e-12
