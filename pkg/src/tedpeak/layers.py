"""Per-layer peak histograms and the before/after summary around a pattern change."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSplit, LayerOutOfRange

TOTAL_LAYERS = 573
TRANSITION_LAYER = 400


@dataclass(frozen=True)
class LayerHistogram:
    counts: dict  # layer -> peak count, dense over 1..total_layers
    total_layers: int = TOTAL_LAYERS

    @property
    def total(self):
        return sum(self.counts.values())

    def as_array(self):
        """Counts for layers ``1..total_layers`` as an int array."""
        return np.array([self.counts[k] for k in range(1, self.total_layers + 1)], dtype=np.int64)

    def __add__(self, other):
        if other.total_layers != self.total_layers:
            raise ValueError("histograms cover different layer ranges")
        return LayerHistogram(
            {k: self.counts[k] + other.counts[k] for k in self.counts}, self.total_layers
        )

    def to_csv(self):
        return "layer,peak_count\n" + "".join(f"{k},{v}\n" for k, v in sorted(self.counts.items()))


@dataclass(frozen=True)
class TransitionSummary:
    transition_layer: int
    mean_before: float
    mean_after: float
    ratio: float | None  # None when mean_before == 0

    def to_dict(self):
        return {
            "transition_layer": self.transition_layer,
            "mean_before": self.mean_before,
            "mean_after": self.mean_after,
            "ratio": self.ratio,
        }


def per_layer_counts(result, total_layers=TOTAL_LAYERS):
    """Bin a detection result's intervals by layer.

    Every layer in ``1..total_layers`` appears, empty ones with count 0.

    Raises
    ------
    LayerOutOfRange
        An interval has no layer or one outside ``[1, total_layers]``.
    """
    counts = dict.fromkeys(range(1, total_layers + 1), 0)
    for iv in result.intervals:
        if iv.layer is None or not 1 <= iv.layer <= total_layers:
            raise LayerOutOfRange(
                f"interval at {iv.start} has layer {iv.layer}, outside 1..{total_layers}"
            )
        counts[iv.layer] += 1
    return LayerHistogram(counts, total_layers)


def transition_summary(hist, transition_layer=TRANSITION_LAYER):
    """Mean peaks per layer below ``transition_layer`` vs at and above it."""
    if not 1 < transition_layer <= hist.total_layers:
        raise DegenerateSplit(
            f"transition_layer must lie in (1, {hist.total_layers}], got {transition_layer}"
        )
    arr = hist.as_array()
    before = float(arr[: transition_layer - 1].mean())
    after = float(arr[transition_layer - 1:].mean())
    return TransitionSummary(transition_layer, before, after, after / before if before > 0 else None)
