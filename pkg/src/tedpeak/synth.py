"""Synthetic TED streams with injected collapse plateaus, and detector scoring.

A stream is ``baseline + drift + noise + envelope``. The noise is white
Gaussian smoothed by an 8-tap Hann kernel (correlation of about four rows,
the scale of ordinary TED fluctuation) and rescaled so its peak magnitude
is exactly ``noise_amplitude``. Each event is a flat plateau of
``amplitude`` over ``[start, start + duration)`` with two-sample ramps
(1/3, 2/3 of the amplitude) just outside it.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError, EventPastEnd, OverlappingEvents
from .signal import PoreRecord, StreamMeta, TedStream
from .stats import ols_fit

MIN_EVENT_DURATION = 15
RAMP = (1 / 3, 2 / 3)
NOISE_TAPS = 8


@dataclass(frozen=True)
class Event:
    start: int
    duration: int
    amplitude: float
    layer: int | None = None

    @property
    def end(self):
        """Last row of the plateau (inclusive)."""
        return self.start + self.duration - 1


@dataclass(frozen=True)
class SynthSpec:
    length: int
    baseline_mean: float = 1.0
    drift_amplitude: float = 0.0
    drift_period: float = 50_000.0
    noise_amplitude: float = 0.0
    events: tuple = ()
    layer_starts: tuple = (0,)  # first row of layers 1, 2, ...
    seed: int = 0
    sample_id: str = "synthetic"

    def validate(self):
        if self.length < 0:
            raise ConfigError("length must be >= 0")
        if not self.layer_starts or self.layer_starts[0] != 0 or any(
            b <= a for a, b in zip(self.layer_starts, self.layer_starts[1:])
        ):
            raise ConfigError("layer_starts must begin at 0 and strictly increase")
        floor = self.baseline_mean - abs(self.drift_amplitude) - self.noise_amplitude
        if not floor > 0:
            raise ConfigError("baseline_mean must exceed drift + noise so every value stays positive")
        if self.noise_amplitude < 0:
            raise ConfigError("noise_amplitude must be >= 0")
        prev_end = -1
        for ev in self.events:
            if ev.duration < MIN_EVENT_DURATION:
                raise ConfigError(f"event at {ev.start}: duration {ev.duration} < {MIN_EVENT_DURATION}")
            if not ev.amplitude > 0:
                raise ConfigError(f"event at {ev.start}: amplitude must be > 0")
            if ev.start < 0 or ev.start + ev.duration > self.length:
                raise EventPastEnd(f"event [{ev.start}, {ev.end}] outside stream of length {self.length}")
            if ev.start <= prev_end:
                raise OverlappingEvents(f"event at {ev.start} overlaps or precedes the previous one")
            prev_end = ev.end

    def layer_of(self, rows):
        return np.searchsorted(np.asarray(self.layer_starts), rows, side="right")

    def to_dict(self):
        d = asdict(self)
        d["events"] = [{k: v for k, v in asdict(e).items() if k != "layer"} for e in self.events]
        d["layer_starts"] = list(self.layer_starts)
        return d

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        obj["events"] = tuple(Event(e["start"], e["duration"], e["amplitude"]) for e in obj.get("events", ()))
        if "samples_per_layer" in obj:
            spl = obj.pop("samples_per_layer")
            obj["layer_starts"] = tuple(range(0, max(obj["length"], 1), spl))
        obj["layer_starts"] = tuple(obj.get("layer_starts", (0,)))
        return cls(**obj)


def envelope(length, events):
    env = np.zeros(length)
    for ev in events:
        env[ev.start:ev.end + 1] = ev.amplitude
        for off, frac in zip((-2, -1), RAMP):
            i = ev.start + off
            if 0 <= i < length:
                env[i] = max(env[i], frac * ev.amplitude)
        for off, frac in zip((2, 1), RAMP):
            i = ev.end + off
            if 0 <= i < length:
                env[i] = max(env[i], frac * ev.amplitude)
    return env


def generate(spec):
    """Build the stream and its ground truth.

    Returns
    -------
    (TedStream, tuple of Event)
        Ground truth is ``spec.events`` with each event's layer filled in.
    """
    spec.validate()
    n = spec.length
    rng = np.random.default_rng(spec.seed)
    t = np.arange(n, dtype=np.float64)
    ted = np.full(n, float(spec.baseline_mean))
    phase = rng.uniform(0, 2 * np.pi)
    if spec.drift_amplitude:
        ted += spec.drift_amplitude * np.sin(2 * np.pi * t / spec.drift_period + phase)
    white = rng.standard_normal(n + NOISE_TAPS - 1)
    if spec.noise_amplitude and n:
        kernel = np.hanning(NOISE_TAPS + 2)[1:-1]
        noise = np.convolve(white, kernel / kernel.sum(), mode="valid")
        ted += spec.noise_amplitude * noise / np.abs(noise).max()
    ted += envelope(n, spec.events)
    layers = spec.layer_of(np.arange(n))
    truth = tuple(replace(ev, layer=int(spec.layer_of(ev.start))) for ev in spec.events)
    meta = StreamMeta(sample_id=spec.sample_id, total_rows=n)
    return TedStream(np.arange(n), layers, ted, meta=meta), truth


def truth_to_dict(truth):
    return {"events": [asdict(ev) for ev in truth]}


def truth_from_dict(obj):
    return tuple(Event(**e) for e in obj["events"])


# -- scoring -------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float | None
    recall: float | None
    count_error: int

    def to_dict(self):
        return asdict(self)


def _gap(det, ev):
    """Rows between the two intervals; <= 0 means they overlap."""
    return max(det.start, ev.start) - min(det.end, ev.end)


def matches(det, ev, tolerance):
    return _gap(det, ev) <= tolerance


def score(detected, truth, match_tolerance=5):
    """Greedy one-to-one matching of detections to truth events in index order."""
    detected = list(detected)
    truth = list(truth)
    i = j = tp = 0
    while i < len(detected) and j < len(truth):
        d, t = detected[i], truth[j]
        if matches(d, t, match_tolerance):
            tp += 1
            i += 1
            j += 1
        elif d.end < t.end:
            i += 1
        else:
            j += 1
    fp = len(detected) - tp
    fn = len(truth) - tp
    precision = tp / len(detected) if detected else None
    recall = tp / len(truth) if truth else None
    return ScoreReport(tp, fp, fn, precision, recall, len(detected) - len(truth))


# -- suites --------------------------------------------------------------------

def place_in_layers(per_layer, samples_per_layer, duration, amplitudes, rng, margin=5):
    """Events with ``per_layer[L-1]`` plateaus inside layer ``L``, one per equal slot.

    Each slot keeps ``margin`` rows clear at both ends, so ramps and
    detection slack never cross a layer boundary.
    """
    events = []
    a = 0
    for layer_idx, k in enumerate(per_layer):
        if k == 0:
            continue
        slot = samples_per_layer // k
        room = slot - duration - 2 * margin
        if room < 0:
            raise ConfigError(f"{k} events of {duration} rows do not fit a {samples_per_layer}-row layer")
        base = layer_idx * samples_per_layer
        for s in range(k):
            start = base + s * slot + margin + int(rng.integers(0, room + 1))
            events.append(Event(start, duration, float(amplitudes[a])))
            a += 1
    return tuple(events)


def layered_spec(rate_before=1, rate_after=3, transition_layer=400, total_layers=573,
                 samples_per_layer=400, duration=20, amplitude=(0.8, 1.2),
                 noise_amplitude=0.1, drift_amplitude=0.02, seed=0, sample_id="layered"):
    """Fixed events per layer before / from ``transition_layer``."""
    rng = np.random.default_rng(seed)
    per_layer = [rate_before if L < transition_layer else rate_after for L in range(1, total_layers + 1)]
    amps = rng.uniform(*amplitude, size=sum(per_layer))
    events = place_in_layers(per_layer, samples_per_layer, duration, amps, rng)
    return SynthSpec(
        length=total_layers * samples_per_layer,
        drift_amplitude=drift_amplitude,
        drift_period=80_000.0,
        noise_amplitude=noise_amplitude,
        events=events,
        layer_starts=tuple(range(0, total_layers * samples_per_layer, samples_per_layer)),
        seed=int(rng.integers(2**63)),
        sample_id=sample_id,
    )


def spaced_spec(n_events=100, spacing=1000, duration=20, amplitude=1.0, noise_amplitude=0.1,
                baseline_mean=1.0, drift_amplitude=0.0, seed=0, sample_id="spaced", jitter=200):
    """``n_events`` plateaus roughly ``spacing`` rows apart, one layer per event slot."""
    rng = np.random.default_rng(seed)
    # keep each plateau plus its ramps inside its own slot
    jitter = min(jitter, spacing - duration - 10)
    if jitter < 0:
        raise ConfigError(f"spacing {spacing} too small for {duration}-row events")
    lead = spacing
    starts = lead + spacing * np.arange(n_events) + rng.integers(0, jitter + 1, n_events)
    amps = np.broadcast_to(np.asarray(amplitude, dtype=np.float64), (n_events,))
    events = tuple(Event(int(s), duration, float(a)) for s, a in zip(starts, amps))
    length = lead + spacing * (n_events + 1)
    return SynthSpec(
        length=length,
        baseline_mean=baseline_mean,
        drift_amplitude=drift_amplitude,
        drift_period=50_000.0,
        noise_amplitude=noise_amplitude,
        events=events,
        layer_starts=tuple(range(0, length, spacing)),
        seed=int(rng.integers(2**63)),
        sample_id=sample_id,
    )


@dataclass(frozen=True)
class ReplaySuite:
    """Eight-sample suite shaped like the whole-part validation experiment."""

    specs: tuple
    event_counts: tuple
    pores: tuple  # PoreRecord
    target_r2: float
    truth_fit: object = field(default=None)  # RegressionResult on (event_counts, pores)

    def build(self):
        return [generate(s) for s in self.specs]


def calibrate_pores(counts, r2_target, slope, intercept, rng):
    """Integer pore counts whose OLS fit against ``counts`` has R^2 close to ``r2_target``.

    The noise is projected orthogonal to ``[1, counts]`` so the fitted line
    is exactly ``slope * x + intercept`` before rounding, then scaled to hit
    the target R^2.
    """
    x = np.asarray(counts, dtype=np.float64)
    e = rng.standard_normal(x.shape[0])
    basis = np.column_stack([np.ones_like(x), x])
    e -= basis @ np.linalg.lstsq(basis, e, rcond=None)[0]
    sxx = float(((x - x.mean()) ** 2).sum())
    sigma = np.sqrt(slope**2 * sxx * (1 - r2_target) / r2_target / float(e @ e))
    pores = np.rint(slope * x + intercept + sigma * e)
    return np.maximum(pores, 0).astype(np.int64)


def replay_suite(seed=2024, n_samples=8, r2_target=0.94, min_events=60, max_events=600,
                 slope=2.5, intercept=400.0, total_layers=573, samples_per_layer=400,
                 transition_layer=400, amplitude=(0.8, 1.4), noise_amplitude=0.1,
                 drift_amplitude=0.02, duration=20):
    """Peak counts spanning an order of magnitude, pore counts calibrated to ``r2_target``.

    Events fall three times as often per layer from ``transition_layer`` on.
    """
    rng = np.random.default_rng(seed)
    counts = np.rint(np.geomspace(min_events, max_events, n_samples)).astype(np.int64)
    rng.shuffle(counts)
    weights = np.array([1.0 if L < transition_layer else 3.0 for L in range(1, total_layers + 1)])
    cap = samples_per_layer // (duration + 20)
    specs = []
    for i, k in enumerate(counts.tolist()):
        per_layer = _capped_multinomial(k, weights / weights.sum(), cap, rng)
        amps = rng.uniform(*amplitude, size=k)
        events = place_in_layers(per_layer, samples_per_layer, duration, amps, rng)
        specs.append(SynthSpec(
            length=total_layers * samples_per_layer,
            drift_amplitude=drift_amplitude,
            drift_period=80_000.0,
            noise_amplitude=noise_amplitude,
            events=events,
            layer_starts=tuple(range(0, total_layers * samples_per_layer, samples_per_layer)),
            seed=int(rng.integers(2**63)),
            sample_id=f"sample{i + 1}",
        ))
    pores = calibrate_pores(counts, r2_target, slope, intercept, rng)
    records = tuple(PoreRecord(s.sample_id, int(p)) for s, p in zip(specs, pores))
    return ReplaySuite(tuple(specs), tuple(counts.tolist()), records, r2_target, ols_fit(counts, pores))


def _capped_multinomial(k, p, cap, rng):
    counts = rng.multinomial(k, p)
    over = np.flatnonzero(counts > cap)
    spill = int((counts[over] - cap).sum())
    counts[over] = cap
    while spill:
        free = np.flatnonzero(counts < cap)
        if free.size == 0:
            raise ConfigError(f"{k} events exceed the layer capacity")
        j = rng.choice(free, p=p[free] / p[free].sum())
        counts[j] += 1
        spill -= 1
    return counts.tolist()


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
