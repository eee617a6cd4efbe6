"""Bessel functions of the first kind and their positive zeros.

``bessel_j`` evaluates J_n by Miller's downward recurrence normalised with
the identity ``J_0(x) + 2 * sum_k J_2k(x) = 1``. The recurrence is stable in
the downward direction for every argument, so one code path covers both the
small-argument regime (where J_n decays like x**n) and the oscillatory one.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 64

# Rescale the recurrence once magnitudes pass this; keeps small x from
# overflowing when the start order is far above x.
_BIG = 1e150
_SMALL = 1e-150


def _start_order(n: int, x: float) -> int:
    # Start well beyond both n and x so the truncation error is below 1e-16.
    top = max(n, math.ceil(x))
    m = top + 30 + int(math.sqrt(60.0 * top))
    return m + (m % 2)


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    """J_n(x) for strictly positive x via normalised downward recurrence."""
    m = _start_order(n, float(x.max()))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, _SMALL)
    norm = np.zeros_like(x)
    result = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        # j_cur holds J_k, j_next holds J_{k+1}
        if k == n:
            result = j_cur.copy()
        if k % 2 == 0:
            norm += 2.0 * j_cur
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if np.abs(j_cur).max() > _BIG:
            scale = np.where(np.abs(j_cur) > _BIG, 1.0 / _BIG, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            result *= scale
    # j_cur is now J_0
    if n == 0:
        result = j_cur.copy()
    norm += j_cur
    return result / norm


def _miller_scalar(n: int, x: float) -> tuple[float, float]:
    """(J_n(x), J_{n+1}(x)) for a single x > 0, in plain floats."""
    m = _start_order(n, x)
    j_next = 0.0
    j_cur = _SMALL
    norm = 0.0
    jn = jn1 = 0.0
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        if k == n:
            jn = j_cur
        elif k == n + 1:
            jn1 = j_cur
        if k % 2 == 0:
            norm += 2.0 * j_cur
        j_next, j_cur = j_cur, k * two_over_x * j_cur - j_next
        if abs(j_cur) > _BIG:
            j_cur /= _BIG
            j_next /= _BIG
            norm /= _BIG
            jn /= _BIG
            jn1 /= _BIG
    if n == 0:
        jn = j_cur
    norm += j_cur
    return jn / norm, jn1 / norm


def _check_order(n) -> int:
    if isinstance(n, (bool, np.bool_)) or int(n) != n:
        raise ValueError(f"Bessel order must be an integer, got {n!r}")
    n = int(n)
    if n < 0 or n > MAX_ORDER:
        raise ValueError(f"Bessel order must lie in [0, {MAX_ORDER}], got {n}")
    return n


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x).

    Parameters
    ----------
    n : int
        Order, ``0 <= n <= 64``.
    x : float or array_like
        Non-negative finite argument(s).

    Returns
    -------
    float or ndarray
        Same shape as ``x``. Absolute error is below 1e-12 for x <= 100.
    """
    n = _check_order(n)
    if np.ndim(x) == 0:
        xf = float(x)
        if not math.isfinite(xf) or xf < 0:
            raise ValueError(f"Bessel argument must be finite and non-negative, got {x!r}")
        if xf == 0.0:
            return 1.0 if n == 0 else 0.0
        return _miller_scalar(n, xf)[0]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise ValueError("Bessel argument must be finite")
    if np.any(xs < 0):
        raise ValueError("Bessel argument must be non-negative")
    out = np.zeros_like(xs)
    zero = xs == 0.0
    out[zero] = 1.0 if n == 0 else 0.0
    pos = ~zero
    if pos.any():
        out[pos] = _miller(n, xs[pos])
    return out.reshape(np.shape(x))


def bessel_j_derivative(n, x):
    """dJ_n/dx via J_n' = (J_{n-1} - J_{n+1}) / 2, with J_{-1} = -J_1."""
    lower = -bessel_j(1, x) if n == 0 else bessel_j(n - 1, x)
    return 0.5 * (lower - bessel_j(n + 1, x))


@dataclass(frozen=True)
class BesselZeroTable:
    """Positive zeros alpha[n, i-1] of J_n for n <= max_order, i <= count.

    Roots are numbered from 1, so ``table.root(0, 1)`` is the first positive
    zero of J_0.
    """

    max_order: int
    roots_per_order: int
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha.setflags(write=False)

    def root(self, n: int, i: int) -> float:
        if not 1 <= i <= self.roots_per_order:
            raise IndexError(f"root index {i} outside 1..{self.roots_per_order}")
        return float(self.alpha[n, i - 1])

    def covers(self, max_order: int, count: int) -> bool:
        return self.max_order >= max_order and self.roots_per_order >= count


def _mcmahon_j0(k: int) -> float:
    # McMahon expansion for the k-th zero of J_0 (mu = 0).
    beta = (k - 0.25) * math.pi
    b8 = 8.0 * beta
    return beta + 1.0 / b8 + 124.0 / (3.0 * b8**3) + 120928.0 / (15.0 * b8**5)


def _value_and_slope(n: int, x: float) -> tuple[float, float]:
    jn, jn1 = _miller_scalar(n, x)
    # J_n'(x) = (n / x) J_n(x) - J_{n+1}(x)
    return jn, n / x * jn - jn1


def _polish(n: int, lo: float, hi: float) -> float:
    """Root of J_n inside the sign-change bracket [lo, hi], 0 < lo < hi."""
    f_lo, _ = _value_and_slope(n, lo)
    # bisect until Newton is safely in its quadratic basin
    while hi - lo > 0.05:
        mid = 0.5 * (lo + hi)
        f_mid, _ = _value_and_slope(n, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(50):
        f, slope = _value_and_slope(n, x)
        if f == 0.0:
            return x
        if (f > 0) == (f_lo > 0):
            lo, f_lo = x, f
        else:
            hi = x
        x_new = x - f / slope
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-13:
            return x_new
        x = x_new
    return x


def bessel_zeros(max_order: int, count: int) -> BesselZeroTable:
    """Tabulate the first ``count`` positive zeros of J_0 .. J_max_order.

    Zeros of J_0 start from McMahon's asymptotic estimate. Higher orders use
    interlacing: exactly one zero of J_{n+1} lies between consecutive zeros
    of J_n, which gives a guaranteed bracket for every root.
    """
    if max_order < 0 or count < 1:
        raise ValueError("need max_order >= 0 and count >= 1")
    if max_order + 1 > MAX_ORDER:
        raise ValueError(f"max_order must be below {MAX_ORDER}")
    needed = count + max_order
    prev = []
    for k in range(1, needed + 1):
        guess = _mcmahon_j0(k)
        prev.append(_polish(0, guess - 0.5, guess + 0.5))
    rows = [prev[:count]]
    for n in range(1, max_order + 1):
        cur = [_polish(n, prev[i], prev[i + 1]) for i in range(len(prev) - 1)]
        rows.append(cur[:count])
        prev = cur
    return BesselZeroTable(max_order, count, np.array(rows, dtype=float))


@functools.lru_cache(maxsize=None)
def zero_table(max_order: int = 30, count: int = 6) -> BesselZeroTable:
    """Shared, immutable zero table (computed once per band)."""
    return bessel_zeros(max_order, count)
