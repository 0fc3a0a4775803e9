"""Compare the compiled kernels against the numpy fallback.

Times each hot kernel in isolation and the full batch and streaming
pipelines, and checks that both backends give bit-identical output.

    python benchmarks/bench_backends.py --samples 5000000
"""
import argparse
import json
import time

import numpy as np

from tedpeak import StreamingDetector, available_backends, detect, use_backend
from tedpeak.smoothing import filter_coeffs
from tedpeak.synth import generate, spaced_spec


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def stream_detect(stream, chunk):
    det = StreamingDetector()
    for a in range(0, len(stream), chunk):
        det.push_many(stream.ted[a:a + chunk], stream.layer[a:a + chunk])
    det.flush()
    return det.intervals


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=5_000_000)
    ap.add_argument("--window", type=int, default=600)
    ap.add_argument("--chunk", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print the raw table as JSON")
    args = ap.parse_args(argv)

    spec = spaced_spec(n_events=max(1, args.samples // 2000 - 1), spacing=2000, noise_amplitude=0.1, seed=0)
    stream, _ = generate(spec)
    n = len(stream)
    h = filter_coeffs(args.window, args.window // 2)
    mask = np.random.default_rng(0).random(n) < 0.9

    rows = []
    outputs = {}
    for name in available_backends():
        with use_backend(name) as k:
            cases = {
                "sg_valid": lambda: k.sg_valid(stream.ted, h),
                "find_runs": lambda: k.find_runs(mask.view(np.uint8)),
                "detect (batch)": lambda: detect(stream).intervals,
                "detect (stream)": lambda: stream_detect(stream, args.chunk),
            }
            for case, fn in cases.items():
                wall, out = best_of(fn, args.repeat)
                outputs[name, case] = out
                rows.append({"backend": name, "case": case, "wall_s": wall, "samples_per_s": n / wall})

    same = True
    if len(available_backends()) == 2:
        for case in ("sg_valid", "detect (batch)", "detect (stream)"):
            a, b = outputs["compiled", case], outputs["python", case]
            same &= a.tobytes() == b.tobytes() if isinstance(a, np.ndarray) else a == b

    if args.json:
        print(json.dumps({"samples": n, "identical": same, "rows": rows}, indent=2))
        return 0
    print(f"{n:,} samples, window {args.window}, best of {args.repeat}")
    print(f"{'case':<18}{'backend':<10}{'wall s':>9}{'Msamples/s':>12}")
    for r in rows:
        print(f"{r['case']:<18}{r['backend']:<10}{r['wall_s']:>9.3f}{r['samples_per_s'] / 1e6:>12.2f}")
    if len(available_backends()) == 2:
        print(f"outputs bit-identical across backends: {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
