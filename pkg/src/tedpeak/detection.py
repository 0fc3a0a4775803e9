"""TED peak detection: flag positive deviations, group them into runs, count.

A sample is flagged when ``d = raw - smoothed`` exceeds ``h_abs`` or
``smoothed * m_rel`` (the relative test only where ``smoothed > 0``). A
peak is a maximal run of at least ``min_run`` flagged samples.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .errors import ConfigError
from .signal import TedSample, TedStream
from .smoothing import SmoothingConfig, StreamingSmoother, smooth

SCHEMA_VERSION = 1

PRESETS = {
    "part": (0.335, 0.2),
    "aps": (0.03, 0.02),
}


@dataclass(frozen=True)
class DetectorConfig:
    h_abs: float = 0.335
    m_rel: float = 0.2
    min_run: int = 15
    preset: str | None = None

    def __post_init__(self):
        if not self.h_abs > 0:
            raise ConfigError(f"h_abs must be > 0, got {self.h_abs}")
        if not self.m_rel > 0:
            raise ConfigError(f"m_rel must be > 0, got {self.m_rel}")
        if int(self.min_run) != self.min_run or self.min_run < 1:
            raise ConfigError(f"min_run must be an integer >= 1, got {self.min_run}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")

    @classmethod
    def from_preset(cls, name, min_run=15):
        try:
            h, m = PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(h, m, min_run, preset=name)


@dataclass(frozen=True)
class PeakInterval:
    start: int
    end: int  # inclusive
    length: int
    max_deviation: float
    layer: int | None = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DetectionResult:
    intervals: tuple
    samples_processed: int
    config: DetectorConfig
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    sample_id: str = ""

    @property
    def peak_count(self):
        return len(self.intervals)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "sample_id": self.sample_id,
            "config": {
                "h_abs": self.config.h_abs,
                "m_rel": self.config.m_rel,
                "min_run": self.config.min_run,
                "window": self.smoothing.window,
                "boundary": self.smoothing.boundary,
            },
            "peak_count": self.peak_count,
            "samples_processed": self.samples_processed,
            "intervals": [iv.to_dict() for iv in self.intervals],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj):
        cfg = obj["config"]
        intervals = tuple(PeakInterval(**iv) for iv in obj.get("intervals", ()))
        if obj.get("peak_count", len(intervals)) != len(intervals):
            raise ValueError("peak_count does not match the number of intervals")
        return cls(
            intervals=intervals,
            samples_processed=obj.get("samples_processed", 0),
            config=DetectorConfig(cfg["h_abs"], cfg["m_rel"], cfg["min_run"]),
            smoothing=SmoothingConfig(window=cfg["window"], boundary=cfg.get("boundary", "shrink")),
            sample_id=obj.get("sample_id", ""),
        )


def flag(raw, smoothed, cfg=None):
    """True iff ``raw`` deviates upward from ``smoothed`` past either threshold."""
    cfg = cfg or DetectorConfig()
    d = raw - smoothed
    return bool(d > cfg.h_abs or (smoothed > 0 and d > smoothed * cfg.m_rel))


def flag_mask(raw, smoothed, cfg=None):
    """Vectorised :func:`flag`."""
    cfg = cfg or DetectorConfig()
    raw = np.asarray(raw, dtype=np.float64)
    smoothed = np.asarray(smoothed, dtype=np.float64)
    d = raw - smoothed
    return (d > cfg.h_abs) | ((smoothed > 0) & (d > smoothed * cfg.m_rel))


def _runs(mask):
    m = np.ascontiguousarray(mask, dtype=bool).view(np.uint8)
    return _backend.kernels().find_runs(m)


def _intervals(starts, ends, deviation, layers, offset=0):
    k = _backend.kernels()
    if deviation is None:
        peak = np.full(starts.shape[0], np.nan)
    else:
        peak = k.run_max(np.ascontiguousarray(deviation, dtype=np.float64), starts, ends)
    out = []
    for s, e, p in zip(starts.tolist(), ends.tolist(), peak.tolist()):
        lay = None if layers is None else int(layers[s])
        out.append(PeakInterval(offset + s, offset + e - 1, e - s, p, lay))
    return out


def find_peak_intervals(flags, min_run=15, deviation=None, layers=None):
    """All maximal runs of True with length >= ``min_run``, in index order.

    ``deviation`` (same length as ``flags``) fills ``max_deviation``;
    ``layers`` assigns each interval the layer of its first sample.
    """
    starts, ends = _runs(flags)
    keep = (ends - starts) >= min_run
    return _intervals(starts[keep], ends[keep], deviation, layers)


def count_peaks(flagged_indices, min_run=15):
    """Number of runs of consecutive integers of length >= ``min_run``.

    Takes the list of flagged row numbers rather than a mask.
    """
    idx = np.asarray(flagged_indices, dtype=np.int64)
    if idx.size == 0:
        return 0
    step = np.diff(idx)
    if (step <= 0).any():
        raise ValueError("flagged_indices must be strictly increasing")
    breaks = np.flatnonzero(step != 1)
    bounds = np.concatenate(([0], breaks + 1, [idx.size]))
    return int(np.count_nonzero(np.diff(bounds) >= min_run))


def _as_columns(samples):
    if isinstance(samples, TedStream):
        return samples.ted, samples.layer, samples.sample_id
    ted = np.asarray(samples, dtype=np.float64)
    if not np.isfinite(ted).all():
        raise ValueError("TED values must be finite")
    return ted, np.ones(ted.shape[0], np.int64), ""


def detect_smoothed(ted, smoothed, layers, d_cfg):
    """Detection on a precomputed smoothed curve (shared by detect and the sweep)."""
    d = ted - smoothed
    mask = (d > d_cfg.h_abs) | ((smoothed > 0) & (d > smoothed * d_cfg.m_rel))
    return find_peak_intervals(mask, d_cfg.min_run, d, layers)


def detect(samples, s_cfg=None, d_cfg=None):
    """Smooth, flag and group one stream.

    Parameters
    ----------
    samples : TedStream or array_like
        A bare array is treated as layer-1 TED values.
    """
    s_cfg = s_cfg or SmoothingConfig()
    d_cfg = d_cfg or DetectorConfig()
    ted, layers, sample_id = _as_columns(samples)
    smoothed = smooth(ted, s_cfg).values
    intervals = detect_smoothed(ted, smoothed, layers, d_cfg)
    return DetectionResult(tuple(intervals), int(ted.shape[0]), d_cfg, s_cfg, sample_id)


class _LayerBuffer:
    def __init__(self):
        self._buf = np.empty(1 << 12, np.int64)
        self._start = 0
        self._len = 0

    def append(self, values, keep_from):
        m = values.shape[0]
        drop = max(0, keep_from - self._start)
        if drop:
            self._buf[: self._len - drop] = self._buf[drop:self._len]
            self._len -= drop
            self._start += drop
        if self._len + m > self._buf.shape[0]:
            grown = np.empty(max(2 * self._buf.shape[0], self._len + m), np.int64)
            grown[: self._len] = self._buf[: self._len]
            self._buf = grown
        self._buf[self._len:self._len + m] = values
        self._len += m

    def at(self, i):
        return int(self._buf[i - self._start])


class StreamingDetector:
    """Incremental :func:`detect`; intervals are emitted once they close.

    An interval closes on its first non-flagged successor or at
    :meth:`flush`. The union of everything emitted equals the batch result.
    """

    def __init__(self, s_cfg=None, d_cfg=None, sample_id=""):
        self.s_cfg = s_cfg or SmoothingConfig()
        self.d_cfg = d_cfg or DetectorConfig()
        self.sample_id = sample_id
        self._smoother = StreamingSmoother(self.s_cfg)
        self._layers = _LayerBuffer()
        self._open = None  # (start, running max, layer) of a run touching the frontier
        self._emitted = []
        self._flushed = False

    @property
    def intervals(self):
        return tuple(self._emitted)

    def push(self, sample, layer=1):
        """Push one sample (a :class:`TedSample` or a bare TED value)."""
        if isinstance(sample, TedSample):
            sample, layer = sample.ted, sample.layer
        return self.push_many(np.array([sample], dtype=np.float64), np.array([layer], np.int64))

    def push_many(self, ted, layers=None):
        ted = np.asarray(ted, dtype=np.float64)
        if not np.isfinite(ted).all():
            raise ValueError("TED values must be finite")
        layers = np.ones(ted.shape[0], np.int64) if layers is None else np.asarray(layers, np.int64)
        self._layers.append(layers, self._open[0] if self._open else self._smoother._next)
        lo, sm = self._smoother.push_many(ted)
        return self._consume(lo, sm)

    def flush(self):
        if self._flushed:
            return []
        self._flushed = True
        lo, sm = self._smoother.flush()
        out = self._consume(lo, sm)
        if self._open is not None:
            out.append(self._close(self._smoother.total))
        return [iv for iv in out if iv is not None]

    def result(self):
        if not self._flushed:
            raise RuntimeError("flush() before asking for the result")
        return DetectionResult(tuple(self._emitted), self._smoother.total, self.d_cfg, self.s_cfg, self.sample_id)

    def _close(self, end):
        start, peak, layer = self._open
        self._open = None
        if end - start < self.d_cfg.min_run:
            return None
        iv = PeakInterval(start, end - 1, end - start, peak, layer)
        self._emitted.append(iv)
        return iv

    def _consume(self, lo, smoothed):
        n = smoothed.shape[0]
        if n == 0:
            return []
        raw = self._smoother.raw(lo, lo + n)
        d = raw - smoothed
        mask = (d > self.d_cfg.h_abs) | ((smoothed > 0) & (d > smoothed * self.d_cfg.m_rel))
        starts, ends = _runs(mask)
        peaks = _backend.kernels().run_max(d, starts, ends).tolist()
        runs = list(zip(starts.tolist(), ends.tolist(), peaks))
        out = []
        if self._open is not None:
            if runs and runs[0][0] == 0:
                _, e, p = runs.pop(0)
                o_start, o_peak, o_layer = self._open
                self._open = (o_start, max(o_peak, p), o_layer)
                if e < n:
                    out.append(self._close(lo + e))
            else:
                out.append(self._close(lo))
        for s, e, p in runs:
            self._open = (lo + s, p, self._layers.at(lo + s))
            if e < n:
                out.append(self._close(lo + e))
        return [iv for iv in out if iv is not None]


def write_intervals_csv(result, sink):
    lines = ["start,end,length,max_deviation,layer"]
    for iv in result.intervals:
        lay = "" if iv.layer is None else iv.layer
        lines.append(f"{iv.start},{iv.end},{iv.length},{iv.max_deviation!r},{lay}")
    with open(sink, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
