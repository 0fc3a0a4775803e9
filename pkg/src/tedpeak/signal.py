"""TED sample records, the columnar stream container and CSV interchange.

TED CSV dialect::

    row,layer,x_mm,y_mm,ted
    0,1,,,1.02

``x_mm``/``y_mm`` may be empty. Floats are written with the shortest
repr that round-trips, so ``read_samples(write_samples(s)) == s`` bitwise.
"""
from __future__ import annotations

import io
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    InputError,
    IoFailure,
    MalformedRow,
    NonFiniteTed,
    NonMonotoneIndex,
    NonMonotoneLayer,
)

TED_HEADER = "row,layer,x_mm,y_mm,ted"
PORE_HEADER = "sample_id,pore_count"
DEFAULT_SAMPLE_RATE = 200_000.0

_FIRST_DATA_LINE = 2  # header occupies line 1


@dataclass(frozen=True)
class TedSample:
    index: int
    layer: int
    ted: float
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class StreamMeta:
    sample_rate: float = DEFAULT_SAMPLE_RATE
    sample_id: str = ""
    total_rows: int = 0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def time_of(self, row):
        """Seconds since stream start for row ``row``."""
        return row / self.sample_rate


@dataclass(frozen=True)
class PoreRecord:
    sample_id: str
    pore_count: int

    def __post_init__(self):
        if self.pore_count < 0:
            raise ValueError(f"pore_count must be >= 0, got {self.pore_count}")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class TedStream(Sequence):
    """Immutable columnar sequence of :class:`TedSample`.

    Columns are read-only numpy arrays; ``x``/``y`` use NaN for "absent".
    Indexing with an int yields a :class:`TedSample`, with a slice a new
    ``TedStream``.
    """

    def __init__(self, index, layer, ted, x=None, y=None, meta=None, validate=True):
        self.index = _frozen(index, np.int64)
        n = self.index.shape[0]
        self.layer = _frozen(layer, np.int64)
        self.ted = _frozen(ted, np.float64)
        self.x = _frozen(np.full(n, np.nan) if x is None else x, np.float64)
        self.y = _frozen(np.full(n, np.nan) if y is None else y, np.float64)
        for name in ("layer", "ted", "x", "y"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name!r} has shape {getattr(self, name).shape}, expected ({n},)")
        if meta is None:
            meta = StreamMeta(total_rows=n)
        elif meta.total_rows != n:
            meta = replace(meta, total_rows=n)
        self.meta = meta
        if validate:
            check_invariants(self.index, self.layer, self.ted)

    @classmethod
    def from_ted(cls, ted, layer=None, meta=None, start=0):
        """Wrap a bare TED array; rows are numbered from ``start``, layer defaults to 1."""
        ted = np.asarray(ted, dtype=np.float64)
        n = ted.shape[0]
        layer = np.ones(n, np.int64) if layer is None else layer
        return cls(np.arange(start, start + n), layer, ted, meta=meta)

    @classmethod
    def from_samples(cls, samples, meta=None):
        samples = list(samples)
        nan = float("nan")
        return cls(
            [s.index for s in samples],
            [s.layer for s in samples],
            [s.ted for s in samples],
            [nan if s.x is None else s.x for s in samples],
            [nan if s.y is None else s.y for s in samples],
            meta=meta,
        )

    @property
    def sample_id(self):
        return self.meta.sample_id

    def __len__(self):
        return self.index.shape[0]

    def __getitem__(self, item):
        if isinstance(item, slice):
            return TedStream(
                self.index[item], self.layer[item], self.ted[item],
                self.x[item], self.y[item], meta=self.meta, validate=False,
            )
        x = float(self.x[item])
        y = float(self.y[item])
        return TedSample(
            int(self.index[item]), int(self.layer[item]), float(self.ted[item]),
            None if math.isnan(x) else x, None if math.isnan(y) else y,
        )

    def equals(self, other):
        """Bitwise column equality (NaN positions must coincide)."""
        return all(
            np.array_equal(getattr(self, c), getattr(other, c), equal_nan=c in ("x", "y"))
            for c in ("index", "layer", "ted", "x", "y")
        )

    def __repr__(self):
        return f"TedStream(n={len(self)}, sample_id={self.meta.sample_id!r})"


def check_invariants(index, layer, ted, first_line=_FIRST_DATA_LINE):
    """Raise on the first row violating the TedSample invariants.

    Line numbers assume row ``k`` sits on file line ``first_line + k``.
    """
    bad = ~np.isfinite(ted)
    if bad.any():
        k = int(np.argmax(bad))
        raise NonFiniteTed(first_line + k, f"non-finite ted value {ted[k]!r}")
    if index.size:
        if index[0] < 0:
            raise MalformedRow(first_line, "negative row index")
        k = np.flatnonzero(np.diff(index) <= 0)
        if k.size:
            raise NonMonotoneIndex(first_line + int(k[0]) + 1, "row index is not strictly increasing")
        if layer.min() < 0:
            raise MalformedRow(first_line + int(np.argmax(layer < 0)), "negative layer")
        k = np.flatnonzero(np.diff(layer) < 0)
        if k.size:
            raise NonMonotoneLayer(first_line + int(k[0]) + 1, "layer decreases")


# -- reading -------------------------------------------------------------------

def _slurp(source):
    """Return (text, label) for a path or a binary/text file object."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise IoFailure(f"cannot read {source}: {exc}") from exc
        label = Path(source).name
    else:
        data = source.read()
        label = getattr(source, "name", "<stream>")
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InputError(f"{label}: not UTF-8 ({exc})") from exc
    return data, label


def _parse_float(field, line, name):
    try:
        return float(field)
    except ValueError:
        raise MalformedRow(line, f"{name}: cannot parse {field!r} as a number") from None


def _parse_int(field, line, name):
    try:
        return int(field)
    except ValueError:
        raise MalformedRow(line, f"{name}: cannot parse {field!r} as an integer") from None


def _parse_slow(lines):
    """Row-by-row parse with precise diagnostics. ``lines`` excludes the header."""
    n = len(lines)
    index = np.empty(n, np.int64)
    layer = np.empty(n, np.int64)
    x = np.full(n, np.nan)
    y = np.full(n, np.nan)
    ted = np.empty(n)
    for k, raw in enumerate(lines):
        line = _FIRST_DATA_LINE + k
        fields = raw.split(",")
        if len(fields) != 5:
            raise MalformedRow(line, f"expected 5 fields, got {len(fields)}")
        index[k] = _parse_int(fields[0], line, "row")
        layer[k] = _parse_int(fields[1], line, "layer")
        if fields[2]:
            x[k] = _parse_float(fields[2], line, "x_mm")
        if fields[3]:
            y[k] = _parse_float(fields[3], line, "y_mm")
        if not fields[4]:
            raise MalformedRow(line, "ted is empty")
        ted[k] = _parse_float(fields[4], line, "ted")
        if not math.isfinite(ted[k]):
            raise NonFiniteTed(line, f"non-finite ted value {fields[4]!r}")
    return index, layer, x, y, ted


def _parse_fast(body):
    import pandas as pd

    df = pd.read_csv(
        io.StringIO(body),
        header=None,
        names=["row", "layer", "x_mm", "y_mm", "ted"],
        dtype={"row": np.int64, "layer": np.int64, "x_mm": np.float64, "y_mm": np.float64, "ted": np.float64},
        keep_default_na=False,
        na_values={"x_mm": [""], "y_mm": [""]},
        float_precision="round_trip",
        engine="c",
        skip_blank_lines=False,
    )
    cols = [df[c].to_numpy() for c in ("row", "layer", "x_mm", "y_mm", "ted")]
    if not np.isfinite(cols[4]).all():
        return None  # let the slow path classify it
    return cols


def read_samples(source, sample_id=None, sample_rate=DEFAULT_SAMPLE_RATE):
    """Parse a TED CSV into a validated :class:`TedStream`.

    Parameters
    ----------
    source : path or file object
        UTF-8 CSV with header ``row,layer,x_mm,y_mm,ted``.
    sample_id : str, optional
        Defaults to the file stem.
    """
    text, label = _slurp(source)
    if sample_id is None:
        sample_id = Path(label).stem if label != "<stream>" else ""
    head, sep, body = text.partition("\n")
    if head.rstrip("\r") != TED_HEADER:
        raise MalformedRow(1, f"expected header {TED_HEADER!r}, got {head[:60]!r}")
    if body.endswith("\n"):
        body = body[:-1]
    cols = None
    if body:
        try:
            cols = _parse_fast(body)
        except (ValueError, TypeError, ImportError):
            cols = None
        if cols is None:
            cols = _parse_slow(body.split("\n"))
        index, layer, x, y, ted = cols
    else:
        index = layer = np.empty(0, np.int64)
        x = y = ted = np.empty(0)
    check_invariants(index, layer, ted)
    meta = StreamMeta(sample_rate=sample_rate, sample_id=sample_id, total_rows=len(index))
    return TedStream(index, layer, ted, x, y, meta=meta, validate=False)


# -- writing -------------------------------------------------------------------

def _fmt_opt(values):
    return ["" if v != v else repr(v) for v in values]


def _sink_write(sink, payload):
    if isinstance(sink, (str, os.PathLike)):
        try:
            with open(sink, "wb") as fh:
                fh.write(payload)
        except OSError as exc:
            raise IoFailure(f"cannot write {sink}: {exc}") from exc
        return len(payload)
    try:
        if isinstance(sink, io.TextIOBase):
            sink.write(payload.decode("utf-8"))
        else:
            sink.write(payload)
    except OSError as exc:
        raise IoFailure(f"write failed: {exc}") from exc
    return len(payload)


def write_samples(samples, sink, chunk=200_000):
    """Write samples in the TED CSV dialect; returns the number of bytes written."""
    if not isinstance(samples, TedStream):
        samples = TedStream.from_samples(samples)
    parts = [TED_HEADER + "\n"]
    n = len(samples)
    for a in range(0, n, chunk):
        b = min(n, a + chunk)
        rows = zip(
            samples.index[a:b].tolist(),
            samples.layer[a:b].tolist(),
            _fmt_opt(samples.x[a:b].tolist()),
            _fmt_opt(samples.y[a:b].tolist()),
            map(repr, samples.ted[a:b].tolist()),
        )
        parts.append("".join(f"{i},{l},{x},{y},{t}\n" for i, l, x, y, t in rows))
    return _sink_write(sink, "".join(parts).encode("utf-8"))


# -- pore counts ---------------------------------------------------------------

def read_pores(source):
    text, _ = _slurp(source)
    lines = text.split("\n")
    if lines[0].rstrip("\r") != PORE_HEADER:
        raise MalformedRow(1, f"expected header {PORE_HEADER!r}")
    records = []
    seen = set()
    for k, raw in enumerate(lines[1:], start=_FIRST_DATA_LINE):
        raw = raw.rstrip("\r")
        if not raw:
            continue
        fields = raw.split(",")
        if len(fields) != 2 or not fields[0]:
            raise MalformedRow(k, "expected sample_id,pore_count")
        count = _parse_int(fields[1], k, "pore_count")
        if count < 0:
            raise MalformedRow(k, "pore_count must be >= 0")
        if fields[0] in seen:
            raise MalformedRow(k, f"duplicate sample_id {fields[0]!r}")
        seen.add(fields[0])
        records.append(PoreRecord(fields[0], count))
    return records


def write_pores(records, sink):
    body = PORE_HEADER + "\n" + "".join(f"{r.sample_id},{r.pore_count}\n" for r in records)
    return _sink_write(sink, body.encode("utf-8"))
