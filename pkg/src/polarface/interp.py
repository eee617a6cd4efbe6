"""Bilinear sampling with zero padding outside the raster."""

import numpy as np


def bilinear(pixels, xs, ys):
    """Sample ``pixels`` at fractional column ``xs`` and row ``ys``.

    Pixel (row j, column i) sits at coordinate (x=i, y=j). Neighbours that
    fall outside the raster contribute 0, so points more than one pixel
    outside the image sample to exactly 0.
    """
    pixels = np.asarray(pixels, dtype=float)
    h, w = pixels.shape
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = np.zeros(np.broadcast(xs, ys).shape, dtype=float)
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            xi = x0 + dx
            yi = y0 + dy
            inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            vals = np.zeros_like(out)
            vals[inside] = pixels[yi[inside], xi[inside]]
            out += wy * wx * vals
    return out
