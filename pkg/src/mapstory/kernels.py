"""Hot numeric kernels: image featurization, text n-gram hashing, cosine similarity.

Each kernel has a numba @njit implementation and a pure-numpy fallback.
Set MAPSTORY_DISABLE_NUMBA=1 to force the numpy path (the default uses numba
when importable). The two paths are kept observably equivalent: histogram and
n-gram counts are integer-exact, intensity sums are exact in float64, so the
feature kernels agree bitwise; cosine_matrix may differ in the last ulp only.

`benchmarks/bench_kernels.py` times both paths side by side.
"""
from __future__ import annotations

import os

import numpy as np

_FNV_OFFSET = np.uint64(14695981039346656037)
_FNV_PRIME = np.uint64(1099511628211)

_DISABLED = os.environ.get("MAPSTORY_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

if not _DISABLED:
    try:
        from numba import njit
    except ImportError:
        _DISABLED = True

if _DISABLED:

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


def backend() -> str:
    """Name of the active kernel path ("numba" or "numpy")."""
    return "numpy" if _DISABLED else "numba"


# ---------------------------------------------------------------------------
# image featurization: per-channel histogram fractions + mean-intensity grid
# ---------------------------------------------------------------------------


@njit(cache=True)
def _image_raw_features_loops(rgb, n_bins, grid):
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.zeros(3 * n_bins + grid * grid, dtype=np.float64)
    cell_sum = np.zeros(grid * grid, dtype=np.float64)
    cell_cnt = np.zeros(grid * grid, dtype=np.int64)
    for y in range(h):
        gy = y * grid // h
        for x in range(w):
            gx = x * grid // w
            intensity = 0
            for c in range(3):
                v = int(rgb[y, x, c])
                out[c * n_bins + v * n_bins // 256] += 1.0
                intensity += v
            cell = gy * grid + gx
            cell_sum[cell] += intensity
            cell_cnt[cell] += 1
    n_px = float(h * w)
    for i in range(3 * n_bins):
        out[i] /= n_px
    for cell in range(grid * grid):
        if cell_cnt[cell] > 0:
            out[3 * n_bins + cell] = cell_sum[cell] / (765.0 * cell_cnt[cell])
    return out


def _image_raw_features_numpy(rgb, n_bins, grid):
    h, w = rgb.shape[0], rgb.shape[1]
    px = rgb.reshape(-1, 3).astype(np.int64)
    out = np.empty(3 * n_bins + grid * grid, dtype=np.float64)
    n_px = float(h * w)
    for c in range(3):
        bins = px[:, c] * n_bins // 256
        out[c * n_bins : (c + 1) * n_bins] = np.bincount(bins, minlength=n_bins) / n_px
    gy = np.arange(h, dtype=np.int64) * grid // h
    gx = np.arange(w, dtype=np.int64) * grid // w
    cell = (gy[:, None] * grid + gx[None, :]).ravel()
    intensity = px.sum(axis=1).astype(np.float64)
    cell_sum = np.bincount(cell, weights=intensity, minlength=grid * grid)
    cell_cnt = np.bincount(cell, minlength=grid * grid)
    grid_feats = np.zeros(grid * grid, dtype=np.float64)
    nz = cell_cnt > 0
    grid_feats[nz] = cell_sum[nz] / (765.0 * cell_cnt[nz])
    out[3 * n_bins :] = grid_feats
    return out


def image_raw_features(rgb: np.ndarray, n_bins: int = 8, grid: int = 6) -> np.ndarray:
    """Raw (un-normalized) features for an HxWx3 uint8 image."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError(f"expected HxWx3 uint8 array, got {rgb.shape} {rgb.dtype}")
    if _DISABLED:
        return _image_raw_features_numpy(rgb, n_bins, grid)
    return _image_raw_features_loops(rgb, n_bins, grid)


# ---------------------------------------------------------------------------
# text featurization: FNV-1a hashed byte n-gram counts
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ngram_counts_loops(data, n_min, n_max, n_buckets):
    counts = np.zeros(n_buckets, dtype=np.float64)
    length = data.shape[0]
    for n in range(n_min, n_max + 1):
        for i in range(length - n + 1):
            h = _FNV_OFFSET
            for k in range(n):
                h = (h ^ np.uint64(data[i + k])) * _FNV_PRIME
            counts[h % np.uint64(n_buckets)] += 1.0
    return counts


def _ngram_counts_numpy(data, n_min, n_max, n_buckets):
    counts = np.zeros(n_buckets, dtype=np.float64)
    wide = data.astype(np.uint64)
    length = wide.shape[0]
    for n in range(n_min, n_max + 1):
        m = length - n + 1
        if m <= 0:
            continue
        h = np.full(m, _FNV_OFFSET, dtype=np.uint64)
        for k in range(n):
            h = (h ^ wide[k : k + m]) * _FNV_PRIME
        buckets = (h % np.uint64(n_buckets)).astype(np.int64)
        counts += np.bincount(buckets, minlength=n_buckets)
    return counts


def ngram_counts(data: np.ndarray, n_min: int = 1, n_max: int = 3, n_buckets: int = 256) -> np.ndarray:
    """Hashed byte n-gram counts for a uint8 byte sequence."""
    if data.dtype != np.uint8:
        raise ValueError(f"expected uint8 byte array, got {data.dtype}")
    if _DISABLED:
        return _ngram_counts_numpy(data, n_min, n_max, n_buckets)
    return _ngram_counts_loops(data, n_min, n_max, n_buckets)


# ---------------------------------------------------------------------------
# cosine similarity
# ---------------------------------------------------------------------------


@njit(cache=True)
def _cosine_matrix_loops(a, b):
    n, d = a.shape
    m = b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    nb = np.zeros(m, dtype=np.float64)
    for j in range(m):
        s = 0.0
        for k in range(d):
            s += b[j, k] * b[j, k]
        nb[j] = np.sqrt(s)
    for i in range(n):
        s = 0.0
        for k in range(d):
            s += a[i, k] * a[i, k]
        na = np.sqrt(s)
        if na == 0.0:
            continue
        for j in range(m):
            if nb[j] == 0.0:
                continue
            dot = 0.0
            for k in range(d):
                dot += a[i, k] * b[j, k]
            out[i, j] = dot / (na * nb[j])
    return out


def _cosine_matrix_numpy(a, b):
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(na, nb)
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    np.divide(a @ b.T, denom, out=out, where=denom > 0.0)
    return out


# Below this much work the njit loops beat BLAS dispatch overhead (measured
# crossover ~3e4 multiply-accumulates); above it the numpy matmul path wins.
_COSINE_LOOP_CUTOFF = 32768


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between rows of a (n,d) and b (m,d).

    Rows with zero norm get similarity 0 instead of NaN. Small problems (the
    single-image prediction path) run through the njit loops; large batches
    go to BLAS.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if _DISABLED or a.shape[0] * b.shape[0] * a.shape[1] > _COSINE_LOOP_CUTOFF:
        return _cosine_matrix_numpy(a, b)
    return _cosine_matrix_loops(a, b)
