"""Dynamic time warping over 1-D current snippets.

The accumulated distance follows the usual recursion

    D(i, j) = d(i, j) + min(D(i-1, j), D(i, j-1), D(i-1, j-1))

with D(1, 1) = d(1, 1) and the first row/column accumulated along their
only admissible direction.  The local cost d is the absolute difference
by default (``squared=True`` switches to squared differences).  Vertical
moves stretch the time axis of the first sequence, horizontal moves
compress it, diagonal moves match one-to-one.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError, DomainError
from .validation import as_float_series


@dataclass(frozen=True)
class DtwResult:
    """Alignment outcome.

    ``path`` is a list of 1-based (i, j) index pairs from (1, 1) to
    (len(x), len(y)); it is None when the caller asked for the distance
    only (two-row buffer, no table kept).
    """

    distance: float
    path: list | None = None


@njit(cache=True)
def _distance_rolling(x, y, squared, band):
    """Accumulated distance with a two-row rolling buffer."""
    n, m = len(x), len(y)
    inf = np.inf
    prev = np.full(m, inf)
    cur = np.full(m, inf)
    for j in range(m):
        if band >= 0 and abs(j) > band:
            break
        d = abs(x[0] - y[j])
        if squared:
            d = d * d
        prev[j] = d if j == 0 else prev[j - 1] + d
    for i in range(1, n):
        for j in range(m):
            cur[j] = inf
        lo = 0 if band < 0 else max(0, i - band)
        hi = m if band < 0 else min(m, i + band + 1)
        for j in range(lo, hi):
            d = abs(x[i] - y[j])
            if squared:
                d = d * d
            best = prev[j]
            if j > 0:
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
            cur[j] = d + best
        prev, cur = cur, prev
    return prev[m - 1]


@njit(cache=True)
def _accumulate_table(x, y, squared, band):
    """Full (n, m) accumulated-cost table for path backtracking."""
    n, m = len(x), len(y)
    D = np.full((n, m), np.inf)
    for i in range(n):
        lo = 0 if band < 0 else max(0, i - band)
        hi = m if band < 0 else min(m, i + band + 1)
        for j in range(lo, hi):
            d = abs(x[i] - y[j])
            if squared:
                d = d * d
            if i == 0 and j == 0:
                D[i, j] = d
            elif i == 0:
                D[i, j] = D[i, j - 1] + d
            elif j == 0:
                D[i, j] = D[i - 1, j] + d
            else:
                best = D[i - 1, j - 1]
                if D[i - 1, j] < best:
                    best = D[i - 1, j]
                if D[i, j - 1] < best:
                    best = D[i, j - 1]
                D[i, j] = d + best
    return D


def _backtrack(D):
    """Walk the table from the corner; ties prefer diagonal, then vertical."""
    i, j = D.shape[0] - 1, D.shape[1] - 1
    path = [(i + 1, j + 1)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, vert, horiz = D[i - 1, j - 1], D[i - 1, j], D[i, j - 1]
            best = min(diag, vert, horiz)
            if diag == best:
                i -= 1
                j -= 1
            elif vert == best:
                i -= 1
            else:
                j -= 1
        path.append((i + 1, j + 1))
    path.reverse()
    return path


def dtw_distance(x, y, compute_path=True, squared=False, band=None):
    """DTW distance (and optimal path) between two sequences.

    Args:
        x, y: 1-D real sequences, both non-empty.
        compute_path: keep the full table and backtrack the optimal path.
            With False only a two-row buffer is used.
        squared: use squared local cost instead of absolute difference.
        band: optional Sakoe-Chiba band half-width (|i - j| <= band);
            None disables the constraint.

    Returns:
        DtwResult with the accumulated distance and, when requested, a
        monotone, contiguous 1-based path.
    """
    xs = as_float_series(x, "x")
    ys = as_float_series(y, "y")
    if band is None:
        b = -1
    else:
        b = int(band)
        if b < abs(len(xs) - len(ys)):
            raise ConfigurationError(
                f"band {b} narrower than length difference {abs(len(xs) - len(ys))}"
            )
    if compute_path:
        D = _accumulate_table(xs, ys, squared, b)
        return DtwResult(float(D[-1, -1]), _backtrack(D))
    return DtwResult(float(_distance_rolling(xs, ys, squared, b)), None)


def dp_table(x, y, squared=False, band=None):
    """Expose the accumulated-cost table (debug/inspection aid)."""
    xs = as_float_series(x, "x")
    ys = as_float_series(y, "y")
    b = -1 if band is None else int(band)
    return _accumulate_table(xs, ys, squared, b)


# Signature layout: post-event snippets crossed with pre-event snippets,
# post-major order (j+1, j+10, j+20) x (j, j-10, j-20).
_POST_SLOTS = (3, 4, 5)
_PRE_SLOTS = (2, 1, 0)


def dtw_signature(cycle_set, squared=False):
    """Nine DTW distances between the post- and pre-event cycles.

    Accepts an events.CycleSet (or anything with a ``cycles`` attribute
    holding six equal-length snippets in offset order -20, -10, 0, +1,
    +10, +20).  Returns a length-9 float array ordered post-major.
    """
    cycles = np.asarray(getattr(cycle_set, "cycles", cycle_set), dtype=np.float64)
    if cycles.shape[0] != 6:
        raise DomainError(f"expected 6 cycles, got {cycles.shape[0]}")
    out = np.empty(9)
    k = 0
    for p in _POST_SLOTS:
        for q in _PRE_SLOTS:
            out[k] = _distance_rolling(cycles[p], cycles[q], squared, -1)
            k += 1
    return out
