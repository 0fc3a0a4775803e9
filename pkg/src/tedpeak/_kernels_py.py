"""Pure numpy versions of the compiled kernels (same evaluation order)."""
import numpy as np

TILE = 16384


def sg_valid(x, c):
    w = c.shape[0]
    n = x.shape[0] - w + 1
    if n <= 0:
        return np.empty(0)
    out = np.empty(n)
    tmp = np.empty(min(TILE, n))
    for t0 in range(0, n, TILE):
        t1 = min(t0 + TILE, n)
        o = out[t0:t1]
        t = tmp[: t1 - t0]
        np.multiply(x[t0:t1], c[0], out=o)
        for k in range(1, w):
            np.multiply(x[t0 + k:t1 + k], c[k], out=t)
            np.add(o, t, out=o)
    return out


def dot_seq(x, c):
    xs = x.tolist()
    cs = c.tolist()
    acc = cs[0] * xs[0]
    for k in range(1, len(cs)):
        acc = acc + cs[k] * xs[k]
    return acc


def find_runs(mask):
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    edges = np.diff(m.astype(np.int8), prepend=0, append=0)
    starts = np.flatnonzero(edges == 1).astype(np.int64)
    ends = np.flatnonzero(edges == -1).astype(np.int64)
    return starts, ends


def run_max(d, starts, ends):
    if starts.size == 0:
        return np.empty(0)
    padded = np.append(d, -np.inf)
    idx = np.empty(2 * starts.size, dtype=np.int64)
    idx[0::2] = starts
    idx[1::2] = ends
    return np.maximum.reduceat(padded, idx)[0::2]
