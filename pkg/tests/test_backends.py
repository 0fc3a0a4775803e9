import os
import subprocess
import sys

import numpy as np
import pytest

import tedpeak
from tedpeak import DetectorConfig, SmoothingConfig, StreamingDetector, available_backends, detect, smooth, use_backend
from tedpeak import _kernels_py
from tedpeak.smoothing import filter_coeffs
from tedpeak.synth import generate, spaced_spec

compiled_only = pytest.mark.skipif("compiled" not in available_backends(), reason="extension not built")


def test_fallback_always_available():
    assert "python" in available_backends()


def test_use_backend_restores():
    before = tedpeak.backend_name()
    with use_backend("python"):
        assert tedpeak.backend_name() == "python"
    assert tedpeak.backend_name() == before


def test_unknown_backend():
    with pytest.raises(ValueError):
        tedpeak.set_backend("fortran")


def test_env_var_forces_fallback():
    code = "import tedpeak; print(tedpeak.backend_name())"
    env = {**os.environ, "TEDPEAK_BACKEND": "python"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@compiled_only
def test_kernels_bitwise_equal():
    from tedpeak import _kernels
    rng = np.random.default_rng(0)
    for n, w in [(600, 600), (5000, 600), (40_000, 600), (100, 5), (20_000, 31)]:
        x = 1.0 + rng.standard_normal(n)
        h = filter_coeffs(w, w // 2)
        a = _kernels.sg_valid(x, h)
        b = _kernels_py.sg_valid(x, h)
        assert a.view(np.uint64).tolist() == b.view(np.uint64).tolist()
        assert _kernels.dot_seq(x[:w], h) == _kernels_py.dot_seq(x[:w], h)
    for _ in range(200):
        m = rng.random(int(rng.integers(0, 300))) < rng.random()
        sa, ea = _kernels.find_runs(m.view(np.uint8))
        sb, eb = _kernels_py.find_runs(m.view(np.uint8))
        assert sa.tolist() == sb.tolist() and ea.tolist() == eb.tolist()
        d = rng.standard_normal(m.shape[0])
        assert _kernels.run_max(d, sa, ea).tolist() == _kernels_py.run_max(d, sb, eb).tolist()


@compiled_only
@pytest.mark.parametrize("boundary", ["shrink", "hold"])
def test_pipeline_identical_across_backends(boundary):
    s, _ = generate(spaced_spec(n_events=60, amplitude=0.5, noise_amplitude=0.1, drift_amplitude=0.05, seed=1))
    cfg = SmoothingConfig(boundary=boundary)
    with use_backend("compiled"):
        sa = smooth(s.ted, cfg).values
        ra = detect(s, cfg)
    with use_backend("python"):
        sb = smooth(s.ted, cfg).values
        rb = detect(s, cfg)
        det = StreamingDetector(cfg, DetectorConfig())
        det.push_many(s.ted, s.layer)
        det.flush()
    assert sa.view(np.uint64).tolist() == sb.view(np.uint64).tolist()
    assert ra == rb
    assert det.result().intervals == ra.intervals
