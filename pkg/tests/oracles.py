"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code: these are the naive or
exact versions the optimized paths are checked against.
"""
from fractions import Fraction
from itertools import permutations

import numpy as np


def run_scan(mask, min_run):
    """Naive linear scan: list of (start, end_inclusive) runs of True with length >= min_run."""
    runs = []
    start = None
    for i, v in enumerate(list(mask) + [False]):
        if v and start is None:
            start = i
        elif not v and start is not None:
            if i - start >= min_run:
                runs.append((start, i - 1))
            start = None
    return runs


def count_index_runs(indices, min_run):
    """Loop over a sorted index list, counting consecutive groups (the index-list procedure)."""
    count = 0
    i = 0
    while i < len(indices):
        j = i
        while j + 1 < len(indices) and indices[j + 1] == indices[j] + 1:
            j += 1
        if j - i + 1 >= min_run:
            count += 1
        i = j + 1
    return count


def _solve_exact(A, b):
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def cubic_normal_equations_exact(xs, ys):
    """Exact rational least-squares cubic coefficients (a0, a1, a2, a3)."""
    X = [Fraction(float(x)) for x in xs]
    Y = [Fraction(float(y)) for y in ys]
    powers = [[x**k for k in range(7)] for x in X]
    A = [[sum(p[i + j] for p in powers) for j in range(4)] for i in range(4)]
    b = [sum(p[i] * y for p, y in zip(powers, Y)) for i in range(4)]
    return [float(v) for v in _solve_exact(A, b)]


def _local_basis(length):
    t = np.arange(length, dtype=np.float64)
    u = (t - (length - 1) / 2.0) / ((length - 1) / 2.0)
    return np.stack([u**k for k in range(4)], axis=1), u


def refit_interior(x, window):
    """Per-window normal-equations refit at every interior index.

    Returns (first_index, values) where values[j] is the fitted cubic over
    ``x[first + j - c : first + j - c + window]`` evaluated at the window's
    centre offset ``c = window // 2``.
    """
    x = np.asarray(x, dtype=np.float64)
    c = window // 2
    if x.shape[0] < window:
        return c, np.empty(0)
    V, u = _local_basis(window)
    A = V.T @ V
    windows = np.lib.stride_tricks.sliding_window_view(x, window)
    # V^T y for every window, in blocks to bound the copy matmul makes
    B = np.concatenate([windows[a:a + 4096] @ V for a in range(0, windows.shape[0], 4096)])
    coefs = np.linalg.solve(A, B.T).T
    at = u[c] ** np.arange(4)
    return c, coefs @ at


def refit_point(x, start, end, pos):
    """Normal-equations cubic over ``x[start:end+1]`` evaluated at absolute index ``pos``."""
    y = np.asarray(x[start:end + 1], dtype=np.float64)
    V, u = _local_basis(y.shape[0])
    coef = np.linalg.solve(V.T @ V, V.T @ y)
    return float((u[pos - start] ** np.arange(4)) @ coef)


def clipped_window(i, n, window):
    """Edge rule restated: nominal window clipped to the data, widened to five points."""
    c = window // 2
    lo = max(0, i - c)
    hi = min(n - 1, i + window - 1 - c)
    while hi - lo + 1 < 5:
        if lo == 0 and hi < n - 1:
            hi += 1
        elif lo > 0:
            lo -= 1
        else:
            break
    return lo, hi


def ols_exact(xs, ys):
    """Closed-form two-variable OLS in exact rationals: (slope, intercept, r_squared)."""
    X = [Fraction(float(v)) for v in xs]
    Y = [Fraction(float(v)) for v in ys]
    n = len(X)
    sx, sy = sum(X), sum(Y)
    sxx = sum(x * x for x in X)
    sxy = sum(x * y for x, y in zip(X, Y))
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    my = sy / n
    ss_res = sum((y - slope * x - intercept) ** 2 for x, y in zip(X, Y))
    ss_tot = sum((y - my) ** 2 for y in Y)
    return float(slope), float(intercept), float(1 - ss_res / ss_tot)


def max_matching(detected, truth, tolerance):
    """Exhaustive maximum one-to-one matching size (small inputs only)."""
    def ok(d, t):
        t_end = t.start + t.duration - 1
        return max(d.start, t.start) - min(d.end, t_end) <= tolerance

    det = list(detected)
    tru = list(truth)
    adj = [[j for j, t in enumerate(tru) if ok(d, t)] for d in det]
    best = 0

    def search(i, used, size):
        nonlocal best
        if size + (len(det) - i) <= best:
            return
        if i == len(det):
            best = max(best, size)
            return
        for j in adj[i]:
            if not used >> j & 1:
                search(i + 1, used | (1 << j), size + 1)
        search(i + 1, used, size)

    search(0, 0, 0)
    return best


def brute_matching_small(detected, truth, tolerance):
    """Permutation brute force for very small inputs; cross-checks :func:`max_matching`."""
    det = list(detected)
    tru = list(truth)
    best = 0
    k = min(len(det), len(tru))
    for perm in permutations(range(len(tru)), k):
        hits = 0
        for d, j in zip(det, perm):
            t = tru[j]
            if max(d.start, t.start) - min(d.end, t.start + t.duration - 1) <= tolerance:
                hits += 1
        best = max(best, hits)
    return best
