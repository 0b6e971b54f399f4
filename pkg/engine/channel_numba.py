"""
Numba-compiled kernels for channel analysis
Hot loops over edge pairs and matrix columns; callers do the final reduction
"""
import numpy as np
from numba import jit, prange


@jit(nopython=True, parallel=True, cache=True)
def pair_log_ratios(entries, rows_a, rows_b):
    """
    Largest log-ratio between two rows, for every row pair in parallel

    Args:
        entries: 2D float array (rows x columns), row-stochastic
        rows_a: 1D int array, first row of each pair
        rows_b: 1D int array, second row of each pair

    Returns:
        best: per-pair max over columns and both directions of ln(m[x][z] / m[x'][z])
              (0/0 ignored, c/0 with c > 0 gives +inf)
        column: column attaining it (-1 if every column is 0/0)
        forward: True when the max is ln(m[a][z] / m[b][z]), False for the reverse
    """
    n_pairs = rows_a.shape[0]
    n_cols = entries.shape[1]
    best = np.full(n_pairs, -np.inf)
    column = np.full(n_pairs, -1, dtype=np.int64)
    forward = np.ones(n_pairs, dtype=np.bool_)

    for e in prange(n_pairs):
        a = rows_a[e]
        b = rows_b[e]
        for z in range(n_cols):
            x = entries[a, z]
            y = entries[b, z]
            if x == 0.0 and y == 0.0:
                continue

            if y == 0.0:
                ratio = np.inf
                fwd = True
            elif x == 0.0:
                ratio = np.inf
                fwd = False
            else:
                diff = np.log(x) - np.log(y)
                if diff >= 0.0:
                    ratio = diff
                    fwd = True
                else:
                    ratio = -diff
                    fwd = False

            # strict '>' keeps the lowest column on ties
            if ratio > best[e]:
                best[e] = ratio
                column[e] = z
                forward[e] = fwd

    return best, column, forward


@jit(nopython=True, cache=True)
def distance_class_sums(entries, distances, max_distance):
    """
    Sum matrix entries grouped by the distance between row and column label

    Returns:
        1D array s where s[d] = sum of entries[i, j] over dist(i, j) == d
    """
    sums = np.zeros(max_distance + 1)
    n_rows, n_cols = entries.shape
    for i in range(n_rows):
        for j in range(n_cols):
            d = distances[i, j]
            if d >= 0:
                sums[d] += entries[i, j]
    return sums
