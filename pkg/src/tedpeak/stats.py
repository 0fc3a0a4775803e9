"""Peak-count vs pore-count regression and the (H, M) sensitivity sweep."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .detection import DetectorConfig, detect_smoothed
from .errors import ConfigError, DegenerateVariance, ZeroReference
from .signal import TedStream
from .smoothing import SmoothingConfig, smooth

REFERENCE_PORE_TOTAL = 293868


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self):
        return asdict(self)


def ols_fit(xs, ys):
    """Least-squares line ``y = slope * x + intercept`` with its R^2.

    Raises
    ------
    DegenerateVariance
        ``xs`` or ``ys`` is constant.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"xs and ys must be 1-D and equally long, got {x.shape} and {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0:
        raise DegenerateVariance("xs are all identical")
    if syy == 0.0:
        raise DegenerateVariance("ys are all identical")
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = dy - slope * dx
    r2 = 1.0 - float(resid @ resid) / syy
    return RegressionResult(slope, intercept, min(1.0, max(0.0, r2)), n)


def normalize_total(total_peaks, reference_pores=REFERENCE_PORE_TOTAL):
    if not reference_pores > 0:
        raise ZeroReference(f"reference pore total must be > 0, got {reference_pores}")
    return total_peaks / reference_pores


@dataclass(frozen=True)
class SweepSpec:
    h_center: float = 0.335
    m_center: float = 0.2
    h_step: float = 0.055
    m_step: float = 0.05

    def __post_init__(self):
        if min(self.h_values()) <= 0 or min(self.m_values()) <= 0:
            raise ConfigError(f"sweep grid has a non-positive threshold: {self}")

    @staticmethod
    def _axis(center, step):
        # rounding keeps 0.335 - 0.055 at 0.28 rather than 0.28000000000000003
        return (round(center - step, 12), center, round(center + step, 12))

    def h_values(self):
        return self._axis(self.h_center, self.h_step)

    def m_values(self):
        return self._axis(self.m_center, self.m_step)

    def cells(self):
        return [(h, m) for h in self.h_values() for m in self.m_values()]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepCell:
    h: float
    m: float
    r_squared: float
    total_peaks: int
    normalized_peaks: float
    peaks: tuple = ()  # per-sample counts, in input order

    def to_dict(self):
        return {
            "h": self.h,
            "m": self.m,
            "r_squared": self.r_squared,
            "total_peaks": self.total_peaks,
            "normalized_peaks": self.normalized_peaks,
            "peaks": list(self.peaks),
        }


def align_pores(sample_ids, pores):
    """Pore counts reordered to ``sample_ids``; raises ConfigError naming any mismatch."""
    by_id = {p.sample_id: p.pore_count for p in pores}
    missing = [s for s in sample_ids if s not in by_id]
    extra = sorted(set(by_id) - set(sample_ids))
    if missing or extra or len(set(sample_ids)) != len(sample_ids):
        raise ConfigError(
            f"sample_ids do not align: no pore count for {missing}, no stream for {extra}"
        )
    return [by_id[s] for s in sample_ids]


def sensitivity_sweep(streams, pores, spec=None, s_cfg=None, min_run=15,
                      reference_total=None, workers=1):
    """Detect on every stream at each of the nine (H, M) cells and regress vs pores.

    Each stream is smoothed once; smoothing does not depend on (H, M), so
    every cell sees exactly the curve a standalone :func:`detect` would.

    Parameters
    ----------
    streams : sequence of TedStream
        Matched to ``pores`` by ``sample_id``.
    reference_total : int, optional
        Normaliser for ``normalized_peaks``; defaults to the pore total.
    workers : int
        Thread count for the nine cells. Output order is fixed by the grid.
    """
    spec = spec or SweepSpec()
    s_cfg = s_cfg or SmoothingConfig()
    streams = list(streams)
    for s in streams:
        if not isinstance(s, TedStream):
            raise TypeError("sensitivity_sweep needs TedStream inputs (for sample_id alignment)")
    ys = align_pores([s.sample_id for s in streams], pores)
    if reference_total is None:
        reference_total = sum(ys)
    curves = [smooth(s.ted, s_cfg).values for s in streams]

    def run(cell):
        h, m = cell
        cfg = DetectorConfig(h, m, min_run)
        counts = [len(detect_smoothed(s.ted, c, s.layer, cfg)) for s, c in zip(streams, curves)]
        fit = ols_fit(counts, ys)
        total = sum(counts)
        return SweepCell(h, m, fit.r_squared, total, normalize_total(total, reference_total), tuple(counts))

    grid = spec.cells()
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            done = dict(zip(grid, pool.map(run, grid)))
    else:
        done = {cell: run(cell) for cell in grid}
    return [done[cell] for cell in grid]


def sweep_report(spec, cells, reference_total):
    return {
        "schema_version": 1,
        "spec": spec.to_dict(),
        "reference_total": reference_total,
        "cells": [c.to_dict() for c in cells],
    }


def regression_report(fit, sample_ids, peaks, pores):
    out = {"schema_version": 1, **fit.to_dict()}
    out["points"] = [
        {"sample_id": s, "peaks": int(p), "pores": int(q)} for s, p, q in zip(sample_ids, peaks, pores)
    ]
    return out
