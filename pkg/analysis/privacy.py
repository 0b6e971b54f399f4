"""
Privacy Analysis
Differential-privacy verification of channel matrices and the leakage bounds
that follow from it
"""
import math
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from engine.channel import (Alphabet, ChannelMatrix, PriorDistribution,
                            min_entropy_leakage, require_same_alphabet, uniform_prior)
from engine.channel_numba import pair_log_ratios
from engine.errors import AlphabetMismatch, InvalidParameter, QuerySpecError
from engine.graphs import AdjacencyGraph, border_profile
from engine.queries import DatabaseUniverse
from mechanisms.factory import alpha_from_borders

DP_TOL = 1e-9
LOG2_E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class DpVerdict:
    """eps-DP verdict; witness = (x, x', z) with m[x][z] / m[x'][z] maximal"""
    satisfies: bool
    min_epsilon: float
    eps: float
    witness: Optional[Tuple[int, int, int]] = None


def _max_ratio(entries: np.ndarray, rows_a: np.ndarray, rows_b: np.ndarray):
    if rows_a.size == 0:
        return 0.0, None
    best, column, forward = pair_log_ratios(np.ascontiguousarray(entries), rows_a, rows_b)
    k = int(np.argmax(best))
    if column[k] < 0:
        return 0.0, None
    a, b = int(rows_a[k]), int(rows_b[k])
    if not forward[k]:
        a, b = b, a
    return max(float(best[k]), 0.0), (a, b, int(column[k]))


def min_epsilon(m: ChannelMatrix, g: AdjacencyGraph) -> Tuple[float, Optional[Tuple[int, int, int]]]:
    """Smallest eps (nats) for which m is eps-DP w.r.t. g, with its witness"""
    require_same_alphabet(g.nodes, m.input, "verify_dp")
    rows_a, rows_b = g.edge_arrays()
    return _max_ratio(m.entries, rows_a, rows_b)


def verify_dp(m: ChannelMatrix, g: AdjacencyGraph, eps: float) -> DpVerdict:
    if eps < 0:
        raise InvalidParameter(f"eps must be >= 0, got {eps!r}")
    value, witness = min_epsilon(m, g)
    return DpVerdict(eps >= value - DP_TOL, value, eps, witness)


# --- leakage bounds ---

@dataclass(frozen=True)
class BoundReport:
    bound_bits: float
    formula: str  # whole_database | range_restricted | individual
    params: dict = field(default_factory=dict)


def _check_uve(u: int, v: int, eps: float):
    if u < 1:
        raise InvalidParameter(f"u must be >= 1, got {u}")
    if v < 2:
        raise InvalidParameter(f"v must be >= 2, got {v}")
    if eps < 0 or math.isnan(eps):
        raise InvalidParameter(f"eps must be >= 0, got {eps!r}")


def bound_whole_database(u: int, v: int, eps: float) -> BoundReport:
    """u log2(v e^eps / (v - 1 + e^eps))"""
    _check_uve(u, v, eps)
    if math.isinf(eps):
        bits = u * math.log2(v)
    else:
        bits = u * (math.log2(v) + (eps - np.logaddexp(math.log(v - 1), eps)) * LOG2_E)
    return BoundReport(max(bits, 0.0), "whole_database", {"u": u, "v": v, "eps": eps})


def floor_log(r: int, v: int) -> int:
    """floor(log_v r) without floating-point rounding"""
    ell, power = 0, v
    while power <= r:
        ell += 1
        power *= v
    return ell


def bound_range_restricted(u: int, v: int, eps: float, r: int) -> BoundReport:
    """log2(r e^(eps u) / ((v - 1 + e^eps)^l - e^(eps l) + e^(eps u))), l = floor(log_v r)

    Evaluated after dividing through by e^(eps u) so large u and eps stay finite.
    """
    _check_uve(u, v, eps)
    if not 1 <= r <= v ** u:
        raise InvalidParameter(f"r must lie in 1..v^u = {v ** u}, got {r}")
    ell = floor_log(r, v)
    if math.isinf(eps):
        return BoundReport(math.log2(r), "range_restricted",
                           {"u": u, "v": v, "eps": eps, "r": r, "l": ell})
    # ((v-1+e^eps)^l - e^(eps l)) / e^(eps u)
    excess = math.exp(eps * (ell - u)) * math.expm1(ell * math.log1p((v - 1) * math.exp(-eps)))
    bits = math.log2(r) - math.log1p(excess) * LOG2_E
    return BoundReport(max(bits, 0.0), "range_restricted",
                       {"u": u, "v": v, "eps": eps, "r": r, "l": ell})


def bound_individual(eps: float) -> BoundReport:
    """log2 e^eps"""
    if eps < 0:
        raise InvalidParameter(f"eps must be >= 0, got {eps!r}")
    return BoundReport(eps * LOG2_E, "individual", {"eps": eps})


def utility_bound(g: AdjacencyGraph, eps: float, y=0) -> float:
    """Best binary-gain utility any eps-DP mechanism on g can reach, uniform prior

    1 / sum_d |Border_d(y)| e^(-eps d). Holds for graphs with a single-orbit
    automorphism; with every nonzero border of size c it is the closed form
    in n and c.
    """
    profile = border_profile(g, y)
    if len(profile) == 1 or math.isinf(eps):
        return 1.0
    return alpha_from_borders(profile, eps)


# --- individual channels ---

def _value_indices(universe: DatabaseUniverse, values: Sequence) -> List[int]:
    return [universe.value_index(x) for x in values]


def individual_channel(m: ChannelMatrix, universe: DatabaseUniverse, target: int,
                       d_minus: Sequence) -> ChannelMatrix:
    """Rows of m where everyone but `target` holds the values in d_minus"""
    if m.input.size != universe.size:
        raise AlphabetMismatch(f"matrix has {m.input.size} rows, universe has {universe.size} databases")
    if not 0 <= target < universe.u:
        raise QuerySpecError(f"target {target} outside individuals 0..{universe.u - 1}")
    if len(d_minus) != universe.u - 1:
        raise QuerySpecError(f"d_minus needs {universe.u - 1} values, got {len(d_minus)}")

    rest = _value_indices(universe, d_minus)
    rows = []
    for value in range(universe.v):
        db = rest[:target] + [value] + rest[target:]
        rows.append(universe.encode(db))
    labels = Alphabet(tuple(m.input.labels[i] for i in rows))
    return ChannelMatrix(labels, m.output, m.entries[rows])


def individual_channels(m: ChannelMatrix, universe: DatabaseUniverse,
                        target: int) -> List[Tuple[Tuple[int, ...], ChannelMatrix]]:
    """Every (d_minus, channel) pair for one target individual"""
    return [(rest, individual_channel(m, universe, target, rest))
            for rest in product(range(universe.v), repeat=universe.u - 1)]


# --- ratio bound on all pairs ---

@dataclass(frozen=True)
class RatioBoundVerdict:
    """All-pairs ratio hypothesis and the leakage conclusion it licenses"""
    hypothesis_holds: bool
    pairwise_epsilon: float
    leakage: float
    bound_bits: float
    conclusion_holds: bool


def check_epsilon_ratio_bound(m: ChannelMatrix, p: PriorDistribution, eps: float) -> RatioBoundVerdict:
    require_same_alphabet(p.alphabet, m.input, "check_epsilon_ratio_bound")
    rows_a, rows_b = np.triu_indices(m.input.size, k=1)
    pairwise, _ = _max_ratio(m.entries, rows_a.astype(np.int64), rows_b.astype(np.int64))
    leakage = min_entropy_leakage(p, m).leakage
    bound = bound_individual(eps).bound_bits
    return RatioBoundVerdict(
        hypothesis_holds=eps >= pairwise - DP_TOL,
        pairwise_epsilon=pairwise,
        leakage=leakage,
        bound_bits=bound,
        conclusion_holds=leakage <= bound + DP_TOL,
    )


def individual_leakage_check(m: ChannelMatrix, universe: DatabaseUniverse, target: int,
                             eps: float) -> pd.DataFrame:
    """Uniform-prior leakage of every individual channel against log2 e^eps"""
    bound = bound_individual(eps).bound_bits
    records = []
    for rest, channel in individual_channels(m, universe, target):
        leakage = min_entropy_leakage(uniform_prior(channel.input), channel).leakage
        records.append({
            'd_minus': "".join(universe.values[x] for x in rest) if rest else "-",
            'leakage_bits': leakage,
            'bound_bits': bound,
            'within_bound': leakage <= bound + DP_TOL,
        })
    return pd.DataFrame(records)


# --- curves ---

def curve_bound(u: int, v_list: Sequence[int], eps_grid: Sequence[float]) -> pd.DataFrame:
    """Whole-database bound over an eps grid, one row per (v, eps)"""
    grid = np.asarray(eps_grid, dtype=np.float64)
    if grid.size and (np.any(grid < 0) or np.any(np.diff(grid) < 0)):
        raise InvalidParameter("eps grid must be ascending and >= 0")
    records = [{'v': int(v), 'eps': float(eps), 'bound_bits': bound_whole_database(u, v, eps).bound_bits}
               for v in v_list for eps in grid]
    return pd.DataFrame(records, columns=['v', 'eps', 'bound_bits'])
