"""
Matrix Transforms
Column surgery that keeps a channel eps-DP and keeps its uniform-prior
vulnerability: collapse, square-with-diagonal-maxima, averaging over
Hamming distance classes or automorphism orbits, and range reduction
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from engine.channel import Alphabet, ChannelMatrix, drop_zero_columns
from engine.channel_numba import distance_class_sums
from engine.errors import (AlphabetMismatch, HypothesisViolated, InvalidParameter,
                           MatrixFormatError, MoreRowsThanColumns)
from engine.graphs import Automorphism, relabel
from engine.queries import DatabaseUniverse
from analysis.privacy import floor_log, min_epsilon

DIAGONAL_TOL = 1e-12


@dataclass(frozen=True)
class CollapseTrace:
    """Audit record of a collapse run: row -> column assignment and merges in order"""
    assignment: Tuple[Optional[int], ...]
    merges: Tuple[Tuple[int, int], ...] = ()

    def to_lines(self) -> List[str]:
        lines = [f"merge {l} -> {k}" for l, k in self.merges]
        lines += [f"assign {row} -> {col}" for row, col in enumerate(self.assignment) if col is not None]
        return lines

    @classmethod
    def from_lines(cls, lines) -> 'CollapseTrace':
        merges, assigned = [], {}
        for line in lines:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4 or parts[2] != "->" or parts[0] not in ("merge", "assign"):
                raise MatrixFormatError(f"bad trace line '{line}'")
            a, b = int(parts[1]), int(parts[3])
            if parts[0] == "merge":
                merges.append((a, b))
            else:
                assigned[a] = b
        n_rows = max(assigned) + 1 if assigned else 0
        return cls(tuple(assigned.get(i) for i in range(n_rows)), tuple(merges))


def _collapse(entries: np.ndarray, l: int, k: int) -> np.ndarray:
    out = entries.copy()
    out[:, k] += out[:, l]
    out[:, l] = 0.0
    return out


def collapse_column(m: ChannelMatrix, l: int, k: int) -> ChannelMatrix:
    """M[l -> k]: column k becomes the sum of columns k and l, column l becomes zero"""
    n_cols = m.output.size
    if not (0 <= l < n_cols and 0 <= k < n_cols):
        raise IndexError(f"columns ({l}, {k}) outside 0..{n_cols - 1}")
    if l == k:
        raise InvalidParameter("cannot collapse a column into itself")
    return m.with_entries(_collapse(m.entries, l, k))


def _collapse_by_argmax(entries: np.ndarray):
    """Walk columns left to right; give each nonzero column the lowest row holding its
    maximum, or merge it into the column that row already owns"""
    n_rows, n_cols = entries.shape
    work = entries.copy()
    owner = [None] * n_rows
    merges = []
    for j in range(n_cols):
        column = entries[:, j]
        if column.max() <= 0.0:
            continue
        i = int(np.argmax(column))
        if owner[i] is None:
            owner[i] = j
        else:
            work = _collapse(work, j, owner[i])
            merges.append((j, owner[i]))
    return work, owner, merges


def to_square_diagonal_max(m: ChannelMatrix, square: bool = True) -> Tuple[ChannelMatrix, CollapseTrace]:
    """n x n matrix whose diagonal holds the column maxima, same column-max sum

    With square=False the intermediate matrix is returned instead: merged
    columns are left in place as zero columns, in the original column order.
    """
    n_rows, n_cols = m.shape
    if n_rows > n_cols:
        raise MoreRowsThanColumns(
            f"{n_rows} rows > {n_cols} columns; pad with zero columns first")

    work, owner, merges = _collapse_by_argmax(m.entries)
    owned = {c for c in owner if c is not None}
    free = [j for j in range(n_cols) if j not in owned]
    for i in range(n_rows):
        if owner[i] is None:
            owner[i] = free.pop(0)
    trace = CollapseTrace(tuple(owner), tuple(merges))

    if not square:
        return m.with_entries(work), trace
    output = Alphabet(tuple(m.output.labels[j] for j in owner))
    return ChannelMatrix(m.input, output, work[:, owner]), trace


def diagonalize_rows(m: ChannelMatrix) -> Tuple[ChannelMatrix, CollapseTrace]:
    """Square matrix on the rows that end up owning a column; other rows are dropped

    The row-side variant of to_square_diagonal_max, for matrices with fewer
    nonzero columns than rows.
    """
    work, owner, merges = _collapse_by_argmax(m.entries)
    rows = [i for i in range(m.input.size) if owner[i] is not None]
    cols = [owner[i] for i in rows]
    trace = CollapseTrace(tuple(owner), tuple(merges))
    inp = Alphabet(tuple(m.input.labels[i] for i in rows))
    out = Alphabet(tuple(m.output.labels[j] for j in cols))
    return ChannelMatrix(inp, out, work[np.ix_(rows, cols)]), trace


def _require_diagonal_max(entries: np.ndarray, what: str):
    n_rows, n_cols = entries.shape
    if n_rows != n_cols:
        raise HypothesisViolated(f"{what} needs a square matrix, got {n_rows}x{n_cols}",
                                 {"check": "square", "shape": [n_rows, n_cols]})
    gap = entries.max(axis=0) - np.diag(entries)
    worst = int(np.argmax(gap))
    if gap[worst] > DIAGONAL_TOL:
        raise HypothesisViolated(
            f"{what}: diagonal entry {worst} is not its column maximum",
            {"check": "diagonal_max", "column": worst, "gap": float(gap[worst])})


def _require_dp(m: ChannelMatrix, graph, eps: Optional[float], what: str):
    value, witness = min_epsilon(m, graph)
    if not np.isfinite(value) or (eps is not None and value > eps + 1e-9):
        raise HypothesisViolated(
            f"{what}: matrix is not eps-DP (min eps {value:.6g})",
            {"check": "dp", "min_epsilon": value, "eps": eps,
             "witness": list(witness) if witness else None})


def hamming_symmetrize(m: ChannelMatrix, universe: DatabaseUniverse,
                       eps: Optional[float] = None) -> ChannelMatrix:
    """Average every entry over its Hamming distance class

    Entry (h, k) becomes S_d / (n |Border_d|) where d = dist(h, k) and S_d sums
    all entries at distance d. Needs maxima on the diagonal and finite DP
    (at most eps when given).
    """
    n = universe.size
    if m.shape != (n, n):
        raise AlphabetMismatch(f"matrix is {m.shape}, universe needs ({n}, {n})")
    _require_diagonal_max(m.entries, "hamming_symmetrize")
    graph = universe.graph()
    if graph.nodes != m.input:
        graph = relabel(graph, m.input)
    _require_dp(m, graph, eps, "hamming_symmetrize")

    distances = np.ascontiguousarray(graph.distances)
    sums = distance_class_sums(np.ascontiguousarray(m.entries), distances, universe.u)
    sizes = np.array([math.comb(universe.u, d) * (universe.v - 1) ** d
                      for d in range(universe.u + 1)], dtype=np.float64)
    per_class = sums / (n * sizes)
    return m.with_entries(per_class[distances])


def automorphism_symmetrize(m: ChannelMatrix, auto: Automorphism,
                            eps: Optional[float] = None) -> ChannelMatrix:
    """M'[h][k] = (1/n) sum_i M[s^i h][s^i k] for a single-orbit automorphism s"""
    n = auto.graph.n
    if m.shape != (n, n):
        raise AlphabetMismatch(f"matrix is {m.shape}, automorphism acts on {n} nodes")
    if not auto.single_orbit:
        raise HypothesisViolated("automorphism does not have a single orbit",
                                 {"check": "single_orbit", "orbit": auto.orbit(0)})
    _require_diagonal_max(m.entries, "automorphism_symmetrize")
    graph = auto.graph
    if graph.nodes != m.input:
        graph = relabel(graph, m.input)
    _require_dp(m, graph, eps, "automorphism_symmetrize")

    step = np.array(auto.perm, dtype=np.int64)
    index = np.arange(n)
    total = np.zeros((n, n))
    for _ in range(n):
        total += m.entries[np.ix_(index, index)]
        index = step[index]
    return m.with_entries(total / n)


def reduce_range(m: ChannelMatrix, r: int, drop_zero: bool = False) -> ChannelMatrix:
    """Collapse the smallest-max columns into the largest-max ones until r remain

    Columns are ranked by (maximum, index). The t-th smallest goes into the
    t-th largest, wrapping around the r survivors when more than r columns
    must go.
    """
    nonzero = [int(j) for j in m.nonzero_columns()]
    if not 1 <= r <= len(nonzero):
        raise InvalidParameter(f"r must lie in 1..{len(nonzero)} (nonzero columns), got {r}")

    maxima = m.column_maxima()
    ranked = sorted(nonzero, key=lambda j: (maxima[j], j))
    n_merge = len(nonzero) - r
    sources = ranked[:n_merge]
    targets = ranked[n_merge:][::-1]

    entries = m.entries
    for t, source in enumerate(sources):
        entries = _collapse(entries, source, targets[t % r])
    reduced = m.with_entries(entries)
    return drop_zero_columns(reduced) if drop_zero else reduced


def reduce_to_power_range(m: ChannelMatrix, v: int) -> Tuple[ChannelMatrix, int]:
    """Reduce to v^l columns (l = floor(log_v r)), then square up on the owning rows

    Returns the square matrix and l. Its column-max sum equals that of the
    v^l-column reduction.
    """
    if v < 2:
        raise InvalidParameter(f"v must be >= 2, got {v}")
    ell = floor_log(len(m.nonzero_columns()), v)
    reduced = reduce_range(m, v ** ell, drop_zero=True)
    square, _ = diagonalize_rows(reduced)
    return square, ell
