"""Tile-wise clipped-histogram equalization kernels.

Two interchangeable backends compute the identical result:

* a numba ``@njit`` fast path (default when numba is importable), and
* a vectorized pure-numpy fallback, selected by setting the environment
  variable ``FUNDUS_SCREEN_NO_NUMBA`` to anything other than ``0``.

All arithmetic is integer-exact so the backends (and any independent
re-implementation of the documented algorithm) agree bit-for-bit:

1. The image is padded on the bottom/right with symmetric reflection so
   every tile has the same pixel count ``n = tp_y * tp_x`` where
   ``tp = ceil(dim / tiles)``.
2. Per tile, a 256-bin histogram is clipped at
   ``clip_count = max(1, floor(clip_limit * n / 256))``; the clipped
   excess is redistributed as ``excess // 256`` to every bin plus one
   extra count to each of the first ``excess % 256`` bins.
3. The tile mapping is ``map[v] = round(255 * cdf[v] / n)`` computed as
   ``(510 * cdf[v] + n) // (2 * n)``.
4. Each output pixel blends the mappings of its four neighbouring tiles
   bilinearly.  Doubled tile centers ``c2[i] = (2i + 1) * tp - 1`` keep
   the weights rational; the blend is rounded half-up with integer ops.
"""

from __future__ import annotations

import os

import numpy as np

ENV_DISABLE_NUMBA = "FUNDUS_SCREEN_NO_NUMBA"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def active_backend() -> str:
    """Backend the next call will use: 'numba' or 'numpy'."""
    disabled = os.environ.get(ENV_DISABLE_NUMBA, "0").strip() not in ("", "0")
    if disabled or not HAS_NUMBA:
        return "numpy"
    return "numba"


def _axis_interp(n_px: int, tiles: int, tp: int):
    """Per-pixel tile index pairs and rational blend weights along one axis.

    Returns (i0, i1, num, den) int64 arrays of length n_px such that the
    blend weight of tile i1 at pixel p is num[p] / den[p].  Pixels beyond
    the first/last tile center use that edge tile alone (num = 0).
    """
    c2 = (2 * np.arange(tiles, dtype=np.int64) + 1) * tp - 1
    pos = 2 * np.arange(n_px, dtype=np.int64)
    idx = np.searchsorted(c2, pos, side="right")
    i0 = np.clip(idx - 1, 0, tiles - 1)
    i1 = np.clip(idx, 0, tiles - 1)
    num = np.where(i0 == i1, 0, pos - c2[i0])
    den = np.where(i0 == i1, 1, c2[i1] - c2[i0])
    return i0, i1, num, den


def _build_maps_numpy(padded, tiles_y, tiles_x, tp_y, tp_x, clip_count):
    n = tp_y * tp_x
    maps = np.empty((tiles_y, tiles_x, 256), np.uint8)
    bins = np.arange(256, dtype=np.int64)
    for ti in range(tiles_y):
        band = padded[ti * tp_y : (ti + 1) * tp_y, :]
        cells = band.reshape(tp_y, tiles_x, tp_x).transpose(1, 0, 2)
        offsets = np.arange(tiles_x, dtype=np.int64)[:, None, None] * 256
        hist = np.bincount(
            (cells.astype(np.int64) + offsets).ravel(), minlength=tiles_x * 256
        ).reshape(tiles_x, 256)
        clipped = np.minimum(hist, clip_count)
        excess = n - clipped.sum(axis=1)
        clipped += excess[:, None] // 256
        clipped += bins[None, :] < (excess[:, None] % 256)
        cdf = np.cumsum(clipped, axis=1)
        maps[ti] = ((510 * cdf + n) // (2 * n)).astype(np.uint8)
    return maps


def _apply_maps_numpy(img, maps, iy0, iy1, ny, dy, ix0, ix1, nx, dx):
    m00 = maps[iy0[:, None], ix0[None, :], img].astype(np.int64)
    m01 = maps[iy0[:, None], ix1[None, :], img].astype(np.int64)
    m10 = maps[iy1[:, None], ix0[None, :], img].astype(np.int64)
    m11 = maps[iy1[:, None], ix1[None, :], img].astype(np.int64)
    wy, sy = ny[:, None], dy[:, None]
    wx, sx = nx[None, :], dx[None, :]
    num = (sy - wy) * ((sx - wx) * m00 + wx * m01) + wy * ((sx - wx) * m10 + wx * m11)
    den = sy * sx
    return ((2 * num + den) // (2 * den)).astype(np.uint8)


@njit(cache=True)
def _build_maps_numba(padded, tiles_y, tiles_x, tp_y, tp_x, clip_count):  # pragma: no cover - numba
    n = tp_y * tp_x
    maps = np.empty((tiles_y, tiles_x, 256), np.uint8)
    hist = np.empty(256, np.int64)
    for ti in range(tiles_y):
        for tj in range(tiles_x):
            hist[:] = 0
            for y in range(ti * tp_y, (ti + 1) * tp_y):
                for x in range(tj * tp_x, (tj + 1) * tp_x):
                    hist[padded[y, x]] += 1
            excess = np.int64(0)
            for b in range(256):
                if hist[b] > clip_count:
                    excess += hist[b] - clip_count
                    hist[b] = clip_count
            share = excess // 256
            rem = excess % 256
            for b in range(256):
                hist[b] += share
                if b < rem:
                    hist[b] += 1
            cdf = np.int64(0)
            for b in range(256):
                cdf += hist[b]
                maps[ti, tj, b] = np.uint8((510 * cdf + n) // (2 * n))
    return maps


@njit(cache=True)
def _apply_maps_numba(img, maps, iy0, iy1, ny, dy, ix0, ix1, nx, dx):  # pragma: no cover - numba
    h, w = img.shape
    out = np.empty((h, w), np.uint8)
    for y in range(h):
        a0 = iy0[y]
        a1 = iy1[y]
        wy = ny[y]
        sy = dy[y]
        for x in range(w):
            v = img[y, x]
            m00 = np.int64(maps[a0, ix0[x], v])
            m01 = np.int64(maps[a0, ix1[x], v])
            m10 = np.int64(maps[a1, ix0[x], v])
            m11 = np.int64(maps[a1, ix1[x], v])
            sx = dx[x]
            wx = nx[x]
            num = (sy - wy) * ((sx - wx) * m00 + wx * m01) + wy * (
                (sx - wx) * m10 + wx * m11
            )
            den = sy * sx
            out[y, x] = np.uint8((2 * num + den) // (2 * den))
    return out


def equalize_tiles(img: np.ndarray, tiles_x: int, tiles_y: int,
                   clip_limit: float, backend: str | None = None) -> np.ndarray:
    """Run the documented CLAHE algorithm on a single uint8 channel."""
    if backend is None:
        backend = active_backend()
    h, w = img.shape
    tp_y = -(-h // tiles_y)
    tp_x = -(-w // tiles_x)
    pad_y = tp_y * tiles_y - h
    pad_x = tp_x * tiles_x - w
    if pad_y or pad_x:
        padded = np.pad(img, ((0, pad_y), (0, pad_x)), mode="symmetric")
    else:
        padded = img
    n = tp_y * tp_x
    clip_count = max(1, int(clip_limit * n / 256))

    iy0, iy1, ny, dy = _axis_interp(h, tiles_y, tp_y)
    ix0, ix1, nx, dx = _axis_interp(w, tiles_x, tp_x)

    if backend == "numba":
        maps = _build_maps_numba(padded, tiles_y, tiles_x, tp_y, tp_x, clip_count)
        return _apply_maps_numba(np.ascontiguousarray(img), maps,
                                 iy0, iy1, ny, dy, ix0, ix1, nx, dx)
    maps = _build_maps_numpy(padded, tiles_y, tiles_x, tp_y, tp_x, clip_count)
    return _apply_maps_numpy(img, maps, iy0, iy1, ny, dy, ix0, ix1, nx, dx)
