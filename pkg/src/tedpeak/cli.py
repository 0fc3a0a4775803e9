"""``tedpeak`` command line: detect, layers, regress, sweep, synth, bench.

Settings resolve as built-in defaults < ``--config`` file < flags. A
``--preset`` sets H and M within its own layer; an explicit ``--h-abs`` or
``--m-rel`` in the same or a later layer wins over it.

Exit codes: 0 ok, 2 input error, 3 config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _backend
from .detection import PRESETS, DetectionResult, DetectorConfig, StreamingDetector, detect, write_intervals_csv
from .errors import ConfigError, InputError, TedPeakError
from .layers import per_layer_counts, transition_summary
from .signal import TedStream, read_pores, read_samples, write_pores, write_samples
from .smoothing import SmoothingConfig
from .stats import (
    SweepSpec,
    align_pores,
    ols_fit,
    regression_report,
    sensitivity_sweep,
    sweep_report,
)
from .synth import SynthSpec, generate, layered_spec, replay_suite, spaced_spec, truth_to_dict

SCHEMA_VERSION = 1

# key -> (converter, default); keys mirror the long flag names
SETTINGS = {
    "window": (int, 600),
    "boundary": (str, "shrink"),
    "preset": (str, "part"),
    "h-abs": (float, PRESETS["part"][0]),
    "m-rel": (float, PRESETS["part"][1]),
    "min-run": (int, 15),
    "transition-layer": (int, 400),
    "total-layers": (int, 573),
    "h-step": (float, 0.055),
    "m-step": (float, 0.05),
    "normalize-by": (int, None),
    "seed": (int, None),
    "output-dir": (str, "."),
    "workers": (int, 1),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _convert(key, value):
    conv, _ = SETTINGS[key]
    if value is None or value == "":
        return None
    try:
        return conv(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {conv.__name__}") from None


def read_config_file(path):
    layer = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep:
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        if key not in SETTINGS:
            raise ConfigError(f"{path}:{no}: unknown setting {key!r}")
        layer[key] = _convert(key, value.strip())
    return layer


def _apply(effective, layer):
    if "preset" in layer and layer["preset"] is not None:
        if layer["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {layer['preset']!r}; choose from {sorted(PRESETS)}")
        effective["h-abs"], effective["m-rel"] = PRESETS[layer["preset"]]
    effective.update(layer)


def resolve(args):
    """Effective settings from defaults, ``--config`` and explicit flags."""
    effective = {k: d for k, (_, d) in SETTINGS.items()}
    if getattr(args, "config", None):
        _apply(effective, read_config_file(args.config))
    flags = {}
    for key in SETTINGS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            flags[key] = _convert(key, value)
    _apply(effective, flags)
    return effective


def format_config(effective):
    return "".join(f"{k} = {'' if v is None else v}\n" for k, v in effective.items())


def _configs(eff):
    try:
        s_cfg = SmoothingConfig(window=eff["window"], boundary=eff["boundary"])
        d_cfg = DetectorConfig(eff["h-abs"], eff["m-rel"], eff["min-run"], preset=eff["preset"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return s_cfg, d_cfg


def _write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_json(path, obj):
    _write_atomic(path, json.dumps(obj, indent=2) + "\n")


def _stem(path):
    name = Path(path).name
    for suffix in (".detect.json", ".json", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


# -- commands ------------------------------------------------------------------

def _detect_file(path, eff):
    s_cfg, d_cfg = _configs(eff)
    stream = read_samples(path)
    return detect(stream, s_cfg, d_cfg)


def cmd_detect(args, eff):
    out_dir = Path(eff["output-dir"])
    path = args.input[0]
    result = _detect_file(path, eff)
    report = {**result.to_dict(), "effective_config": eff}
    stem = _stem(path)
    _write_json(out_dir / f"{stem}.detect.json", report)
    tmp = out_dir / f".{stem}.intervals.csv.tmp"
    write_intervals_csv(result, tmp)
    os.replace(tmp, out_dir / f"{stem}.intervals.csv")
    print(json.dumps({"sample_id": result.sample_id, "peak_count": result.peak_count,
                      "samples_processed": result.samples_processed}))
    return 0


def _load_result(path, eff):
    if str(path).endswith(".json"):
        try:
            with open(path, encoding="utf-8") as fh:
                return DetectionResult.from_dict(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: not a detection report ({exc})") from exc
    return _detect_file(path, eff)


def cmd_layers(args, eff):
    out_dir = Path(eff["output-dir"])
    path = args.input[0]
    result = _load_result(path, eff)
    hist = per_layer_counts(result, eff["total-layers"])
    summary = transition_summary(hist, eff["transition-layer"])
    stem = _stem(path)
    _write_atomic(out_dir / f"{stem}.layers.csv", hist.to_csv())
    _write_json(out_dir / f"{stem}.transition.json", {
        "schema_version": SCHEMA_VERSION,
        "sample_id": result.sample_id,
        "total_layers": hist.total_layers,
        "peak_count": result.peak_count,
        "transition": summary.to_dict(),
        "effective_config": eff,
    })
    print(json.dumps(summary.to_dict()))
    return 0


def cmd_regress(args, eff):
    if not args.pores:
        raise ConfigError("regress needs --pores")
    results = [_load_result(p, eff) for p in args.input]
    ids = [r.sample_id for r in results]
    pores = align_pores(ids, read_pores(args.pores))
    peaks = [r.peak_count for r in results]
    fit = ols_fit(peaks, pores)
    report = {**regression_report(fit, ids, peaks, pores), "effective_config": eff}
    _write_json(Path(eff["output-dir"]) / "regression.json", report)
    print(json.dumps(fit.to_dict()))
    return 0


def cmd_sweep(args, eff):
    if not args.pores:
        raise ConfigError("sweep needs --pores")
    s_cfg, d_cfg = _configs(eff)
    try:
        spec = SweepSpec(eff["h-abs"], eff["m-rel"], eff["h-step"], eff["m-step"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    streams = [read_samples(p) for p in args.input]
    pores = read_pores(args.pores)
    reference = eff["normalize-by"]
    if reference is None:
        reference = sum(align_pores([s.sample_id for s in streams], pores))
    cells = sensitivity_sweep(streams, pores, spec, s_cfg, d_cfg.min_run, reference, eff["workers"])
    report = {**sweep_report(spec, cells, reference), "effective_config": eff}
    _write_json(Path(eff["output-dir"]) / "sweep.json", report)
    for c in cells:
        print(f"H={c.h:<6} M={c.m:<5} R2={c.r_squared:.4f} total={c.total_peaks} "
              f"normalized={c.normalized_peaks:.4f}")
    return 0


def _emit_stream(out_dir, stream, truth):
    write_samples(stream, out_dir / f"{stream.sample_id}.csv")
    _write_json(out_dir / f"{stream.sample_id}.truth.json", truth_to_dict(truth))


def cmd_synth(args, eff):
    out_dir = Path(eff["output-dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = eff["seed"]
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                spec = SynthSpec.from_dict(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{args.spec}: bad synth spec ({exc})") from exc
        if seed is not None:
            spec = replace(spec, seed=seed)
        _emit_stream(out_dir, *generate(spec))
        print(json.dumps({"sample_id": spec.sample_id, "events": len(spec.events), "rows": spec.length}))
        return 0
    seed = 0 if seed is None else seed
    if args.suite == "replay":
        suite = replay_suite(seed=seed, total_layers=eff["total-layers"],
                             transition_layer=eff["transition-layer"])
        for stream, truth in suite.build():
            _emit_stream(out_dir, stream, truth)
        write_pores(suite.pores, out_dir / "pores.csv")
        _write_json(out_dir / "suite.json", {
            "schema_version": SCHEMA_VERSION,
            "event_counts": dict(zip((s.sample_id for s in suite.specs), suite.event_counts)),
            "target_r2": suite.target_r2,
            "truth_fit": suite.truth_fit.to_dict(),
            "effective_config": eff,
        })
        print(json.dumps({"samples": len(suite.specs), "truth_r2": suite.truth_fit.r_squared}))
        return 0
    if args.suite == "layered":
        spec = layered_spec(seed=seed, total_layers=eff["total-layers"],
                            transition_layer=eff["transition-layer"])
        _emit_stream(out_dir, *generate(spec))
        print(json.dumps({"sample_id": spec.sample_id, "events": len(spec.events)}))
        return 0
    raise ConfigError("synth needs --spec FILE or --suite {replay,layered}")


def _bench_once(ted, layers, s_cfg, d_cfg, mode, chunk):
    t0 = time.perf_counter()
    if mode == "batch":
        stream = TedStream(np.arange(ted.shape[0]), layers, ted, validate=False)
        count = detect(stream, s_cfg, d_cfg).peak_count
    else:
        sd = StreamingDetector(s_cfg, d_cfg)
        for a in range(0, ted.shape[0], chunk):
            sd.push_many(ted[a:a + chunk], layers[a:a + chunk])
        sd.flush()
        count = len(sd.intervals)
    return time.perf_counter() - t0, count


def cmd_bench(args, eff):
    s_cfg, d_cfg = _configs(eff)
    t0 = time.perf_counter()
    if args.input:
        stream = read_samples(args.input[0])
        source = str(args.input[0])
    else:
        n = args.generate or 10_000_000
        spec = spaced_spec(n_events=max(1, n // 2000), spacing=2000, amplitude=1.0,
                           seed=0 if eff["seed"] is None else eff["seed"])
        spec = replace(spec, length=n, events=tuple(e for e in spec.events if e.start + e.duration <= n))
        stream, _ = generate(spec)
        source = f"generated:{n}"
    prep = time.perf_counter() - t0
    ted, layers = stream.ted, stream.layer
    wanted = _backend.available_backends() if args.backend == "both" else [
        _backend.backend_name() if args.backend == "auto" else args.backend
    ]
    runs = []
    for name in wanted:
        if name not in _backend.available_backends():
            raise ConfigError(f"backend {name!r} not available; have {_backend.available_backends()}")
        with _backend.use_backend(name):
            for mode in args.mode:
                wall, count = _bench_once(ted, layers, s_cfg, d_cfg, mode, args.chunk)
                runs.append({
                    "backend": name,
                    "mode": mode,
                    "samples": int(ted.shape[0]),
                    "wall_s": wall,
                    "samples_per_s": ted.shape[0] / wall if wall > 0 else float("inf"),
                    "realtime_factor": ted.shape[0] / wall / stream.meta.sample_rate if wall > 0 else float("inf"),
                    "peak_count": count,
                })
    report = {"schema_version": SCHEMA_VERSION, "source": source, "prepare_s": prep,
              "runs": runs, "effective_config": eff}
    print(json.dumps(report, indent=2))
    if args.output:
        _write_json(args.output, report)
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "layers": cmd_layers,
    "regress": cmd_regress,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", nargs="+", help="TED CSV file(s) or detection reports")
    common.add_argument("--config", help="flat 'key = value' settings file")
    common.add_argument("--print-config", action="store_true", help="print effective settings and exit")
    for key in SETTINGS:
        kw = {"choices": sorted(PRESETS)} if key == "preset" else {}
        common.add_argument(f"--{key}", default=None, **kw)

    parser = _Parser(prog="tedpeak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("detect", parents=[common], help="detect peaks in one TED CSV")
    sub.add_parser("layers", parents=[common], help="per-layer histogram and transition summary")
    p = sub.add_parser("regress", parents=[common], help="regress peak counts against pore counts")
    p.add_argument("--pores", help="CSV with sample_id,pore_count")
    p = sub.add_parser("sweep", parents=[common], help="3x3 (H, M) sensitivity sweep")
    p.add_argument("--pores", help="CSV with sample_id,pore_count")
    p = sub.add_parser("synth", parents=[common], help="generate synthetic streams with ground truth")
    p.add_argument("--spec", help="JSON synth spec")
    p.add_argument("--suite", choices=["replay", "layered"])
    p = sub.add_parser("bench", parents=[common], help="throughput of compiled and/or numpy kernels")
    p.add_argument("--generate", type=int, help="benchmark on N generated samples")
    p.add_argument("--backend", choices=["auto", "compiled", "python", "both"], default="both")
    p.add_argument("--mode", nargs="+", choices=["batch", "stream"], default=["batch", "stream"])
    p.add_argument("--chunk", type=int, default=20_000, help="samples per push in stream mode")
    p.add_argument("--output", help="also write the report here")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors exit 3, --help exits 0
        return exc.code
    try:
        eff = resolve(args)
        if args.print_config:
            sys.stdout.write(format_config(eff))
            return 0
        needs_input = args.command in ("detect", "layers", "regress", "sweep")
        if needs_input and not args.input:
            raise ConfigError(f"{args.command} needs --input")
        return COMMANDS[args.command](args, eff)
    except ConfigError as exc:
        print(f"tedpeak {args.command}: config error: {exc}", file=sys.stderr)
        return 3
    except (InputError, TedPeakError, OSError) as exc:
        print(f"tedpeak {args.command}: input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
