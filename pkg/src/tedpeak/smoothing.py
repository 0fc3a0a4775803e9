"""Sliding-window cubic least-squares (Savitzky-Golay) smoothing.

The window for index ``i`` spans ``[i - center, i + lookahead]`` with
``center = window // 2`` (zero-based offset 300 for the default 600) and
``lookahead = window - 1 - center``. Interior outputs are a fixed FIR
filter; near the edges the window is clipped to the data (``shrink``) or
the raw value is passed through (``hold``).

Batch and streaming paths evaluate every output with the same kernel call
on the same window values, which is what makes them bitwise identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import _backend
from .errors import DegenerateWindow

DEGREE = 3
MIN_POINTS = DEGREE + 2
BOUNDARIES = ("shrink", "hold")


@dataclass(frozen=True)
class SmoothingConfig:
    window: int = 600
    degree: int = DEGREE
    boundary: str = "shrink"

    def __post_init__(self):
        if self.degree != DEGREE:
            raise ValueError(f"only degree {DEGREE} is supported, got {self.degree}")
        if int(self.window) != self.window or self.window < MIN_POINTS:
            raise ValueError(f"window must be an integer >= {MIN_POINTS}, got {self.window}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    @property
    def center(self):
        return self.window // 2

    @property
    def lookahead(self):
        return self.window - 1 - self.center


@dataclass(frozen=True)
class PolyCoeffs:
    """``P(x) = a3 x^3 + a2 x^2 + a1 x + a0`` in the caller's coordinates."""

    a0: float
    a1: float
    a2: float
    a3: float

    def __call__(self, x):
        return ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0

    def as_tuple(self):
        return (self.a0, self.a1, self.a2, self.a3)


def _scaled_vander(xs):
    mid = 0.5 * (xs[0] + xs[-1])
    half = 0.5 * (xs[-1] - xs[0])
    return np.vander((xs - mid) / half, DEGREE + 1, increasing=True), mid, half


def fit_window(ys, xs=None):
    """Least-squares cubic through ``(xs, ys)``.

    The solve runs on coordinates mapped to [-1, 1] and the result is
    expanded back to powers of the original ``xs``. That expansion loses
    digits when ``xs`` sit far from zero relative to their spread; evaluate
    near the origin or use :func:`filter_coeffs` for sample-exact work.

    Raises
    ------
    DegenerateWindow
        Fewer than five points, unsorted ``xs``, or a rank-deficient system.
    """
    ys = np.asarray(ys, dtype=np.float64)
    xs = np.arange(ys.shape[0], dtype=np.float64) if xs is None else np.asarray(xs, dtype=np.float64)
    if ys.ndim != 1 or ys.shape != xs.shape:
        raise DegenerateWindow(f"xs and ys must be 1-D of equal length, got {xs.shape} and {ys.shape}")
    if ys.shape[0] < MIN_POINTS:
        raise DegenerateWindow(f"need at least {MIN_POINTS} points, got {ys.shape[0]}")
    if not (np.diff(xs) > 0).all():
        raise DegenerateWindow("xs must be strictly increasing")
    V, mid, half = _scaled_vander(xs)
    Q, R = np.linalg.qr(V)
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * 1e-12:
        raise DegenerateWindow("singular least-squares system")
    b = np.linalg.solve(R, Q.T @ ys)
    # expand sum_k b_k ((x - mid) / half)^k into powers of x
    a = np.zeros(DEGREE + 1)
    for k in range(DEGREE + 1):
        scale = b[k] / half**k
        for j in range(k + 1):
            a[j] += scale * comb(k, j) * (-mid) ** (k - j)
    return PolyCoeffs(*map(float, a))


@lru_cache(maxsize=8192)
def _filter_coeffs(length, pos):
    t = np.arange(length, dtype=np.float64)
    V, mid, half = _scaled_vander(t)
    Q, R = np.linalg.qr(V)
    v = ((pos - mid) / half) ** np.arange(DEGREE + 1)
    h = Q @ np.linalg.solve(R.T, v)
    h.setflags(write=False)
    return h


def filter_coeffs(length, pos):
    """Weights ``h`` with ``sum(h * y)`` = cubic fit over ``length`` points evaluated at ``pos``."""
    if length < MIN_POINTS:
        raise DegenerateWindow(f"need at least {MIN_POINTS} points, got {length}")
    if not 0 <= pos < length:
        raise ValueError(f"pos {pos} outside window of length {length}")
    return _filter_coeffs(int(length), int(pos))


def edge_window(i, n, cfg):
    """Inclusive ``(start, end)`` of the clipped window for index ``i``.

    ``n`` is the series length, or None when only ``n > i + lookahead + 4``
    is known (streaming). Windows clipped below five points are widened on
    the side that still has data.
    """
    s = max(0, i - cfg.center)
    e = i + cfg.lookahead if n is None else min(n - 1, i + cfg.lookahead)
    short = MIN_POINTS - (e - s + 1)
    if short > 0 and s == 0:
        e = e + short if n is None else min(n - 1, e + short)
        short = MIN_POINTS - (e - s + 1)
    if short > 0:
        s = max(0, s - short)
    return s, e


def _smooth_span(buf, buf_start, n, lo, hi, cfg):
    """Smoothed values for global indices ``[lo, hi)``.

    ``buf`` holds global samples ``buf_start ..``; ``n`` is the total series
    length or None if not yet known.
    """
    k = _backend.kernels()
    out = np.empty(hi - lo)
    if hi <= lo:
        return out
    if n is not None and n < MIN_POINTS:
        out[:] = buf[lo - buf_start:hi - buf_start]
        return out
    c, r = cfg.center, cfg.lookahead
    first = max(lo, c)
    last = hi if n is None else min(hi, n - r)
    if last > first:
        seg = buf[first - c - buf_start:last + r - buf_start]
        out[first - lo:last - lo] = k.sg_valid(seg, _filter_coeffs(cfg.window, c))
        edges = [*range(lo, first), *range(last, hi)]
    else:
        edges = range(lo, hi)
    hold = cfg.boundary == "hold"
    for i in edges:
        if hold:
            out[i - lo] = buf[i - buf_start]
            continue
        s, e = edge_window(i, n, cfg)
        h = _filter_coeffs(e - s + 1, i - s)
        out[i - lo] = k.dot_seq(buf[s - buf_start:e + 1 - buf_start], h)
    return out


@dataclass(frozen=True)
class SmoothResult:
    values: np.ndarray
    fallback: bool = False  # series shorter than five points: raw values returned

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def smooth(series, cfg=None):
    """Smooth a 1-D TED series; output has the input's length."""
    cfg = cfg or SmoothingConfig()
    x = np.ascontiguousarray(series, dtype=np.float64)
    n = x.shape[0]
    values = _smooth_span(x, 0, n, 0, n, cfg)
    return SmoothResult(values, fallback=n < MIN_POINTS)


class StreamingSmoother:
    """Bounded-latency smoother; emits index ``k - latency`` when sample ``k`` arrives.

    ``latency`` is ``ceil(window / 2)`` (at least four, so that clipped
    edge windows can always be widened to five points). Call :meth:`flush`
    at end of stream to drain the last ``latency`` outputs.
    """

    def __init__(self, cfg=None, capacity=1 << 16):
        self.cfg = cfg or SmoothingConfig()
        self.latency = max(self.cfg.window - self.cfg.center, MIN_POINTS - 1)
        self._buf = np.empty(max(capacity, 4 * self.cfg.window))
        self._len = 0
        self._start = 0
        self._next = 0
        self._closed = False

    @property
    def total(self):
        """Samples pushed so far."""
        return self._start + self._len

    def _append(self, values):
        m = values.shape[0]
        if self._len + m > self._buf.shape[0]:
            keep = max(self._start, self._next - self.cfg.center - MIN_POINTS)
            drop = keep - self._start
            if drop:
                self._buf[: self._len - drop] = self._buf[drop:self._len]
                self._len -= drop
                self._start = keep
            if self._len + m > self._buf.shape[0]:
                grown = np.empty(max(2 * self._buf.shape[0], self._len + m))
                grown[: self._len] = self._buf[: self._len]
                self._buf = grown
        self._buf[self._len:self._len + m] = values
        self._len += m

    def push_many(self, values):
        """Append samples; returns ``(first_index, smoothed)`` for what became ready."""
        if self._closed:
            raise RuntimeError("push after flush")
        values = np.asarray(values, dtype=np.float64).ravel()
        self._append(values)
        lo = self._next
        hi = max(lo, self.total - self.latency)
        out = _smooth_span(self._buf[: self._len], self._start, None, lo, hi, self.cfg)
        self._next = hi
        return lo, out

    def push(self, value):
        """Push one sample; returns ``(index, smoothed)`` or None during warm-up."""
        lo, out = self.push_many((value,))
        if out.shape[0]:
            return lo, float(out[0])
        return None

    def flush(self):
        """Drain the tail with the batch boundary policy; returns ``(first_index, smoothed)``."""
        if self._closed:
            return self.total, np.empty(0)
        self._closed = True
        lo = self._next
        out = _smooth_span(self._buf[: self._len], self._start, self.total, lo, self.total, self.cfg)
        self._next = self.total
        return lo, out

    def raw(self, lo, hi):
        """Raw samples ``[lo, hi)`` still held in the buffer."""
        if lo < self._start:
            raise IndexError(f"sample {lo} already dropped from the buffer")
        return self._buf[lo - self._start:hi - self._start]
