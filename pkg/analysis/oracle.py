"""
Brute-Force Oracles
Slow first-principles versions of the fast paths, and a seeded sampler of
eps-DP channels for soundness checks
"""
import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Optional, Tuple

import numpy as np

from engine.channel import Alphabet, ChannelMatrix, PriorDistribution, require_same_alphabet
from engine.errors import InvalidParameter, SamplerError, SearchTooLarge
from engine.graphs import AdjacencyGraph
from engine.settings import DEFAULT_SETTINGS, AnalysisSettings

from .privacy import DP_TOL, DpVerdict, min_epsilon


def leakage_by_enumeration(p: PriorDistribution, m: ChannelMatrix,
                           settings: AnalysisSettings = DEFAULT_SETTINGS) -> float:
    """H(X) - H(X|Z) via Bayes inversion, one output at a time"""
    require_same_alphabet(p.alphabet, m.input, "leakage_by_enumeration")
    n_rows, n_cols = m.shape
    if n_rows * n_cols > settings.enumeration_max_entries:
        raise SearchTooLarge(f"{n_rows}x{n_cols} exceeds {settings.enumeration_max_entries} entries")

    prior_h = -math.log2(max(p.probs))
    success = 0.0
    for z in range(n_cols):
        p_z = sum(p.probs[x] * m.entries[x, z] for x in range(n_rows))
        if p_z == 0.0:
            continue
        best_posterior = max(p.probs[x] * m.entries[x, z] / p_z for x in range(n_rows))
        success += p_z * best_posterior
    return prior_h + math.log2(success)


def _ratio_exceeds(top: float, bottom: float, bound: float) -> bool:
    if top == 0.0:
        return False
    if bottom == 0.0:
        return True
    return top > bound * bottom


def dp_by_enumeration(m: ChannelMatrix, g: AdjacencyGraph, eps: float,
                      settings: AnalysisSettings = DEFAULT_SETTINGS) -> DpVerdict:
    """Check p(S|x) <= e^eps p(S|x') on every edge, both directions

    Singletons always; every subset S too when there are few columns. A subset
    violation without a singleton violation raises AssertionError.
    """
    require_same_alphabet(g.nodes, m.input, "dp_by_enumeration")
    n_rows, n_cols = m.shape
    if n_rows * n_cols > settings.enumeration_max_entries:
        raise SearchTooLarge(f"{n_rows}x{n_cols} exceeds {settings.enumeration_max_entries} entries")

    limit = math.exp(eps) * (1 + DP_TOL)
    worst, witness = 0.0, None
    singleton_ok = True
    for a, b in sorted(g.edges):
        for x, y in ((a, b), (b, a)):
            for z in range(n_cols):
                top, bottom = m.entries[x, z], m.entries[y, z]
                if top == 0.0:
                    continue
                ratio = math.inf if bottom == 0.0 else math.log(top / bottom)
                if ratio > worst:
                    worst, witness = ratio, (x, y, z)
                if _ratio_exceeds(top, bottom, limit):
                    singleton_ok = False

    if n_cols <= settings.subset_check_max_cols:
        subset_ok = True
        for a, b in sorted(g.edges):
            for x, y in ((a, b), (b, a)):
                for size in range(1, n_cols + 1):
                    for subset in combinations(range(n_cols), size):
                        cols = list(subset)
                        if _ratio_exceeds(m.entries[x, cols].sum(), m.entries[y, cols].sum(), limit):
                            subset_ok = False
        if subset_ok != singleton_ok:
            raise AssertionError("subset check and singleton check disagree")

    return DpVerdict(singleton_ok, worst, eps, witness)


def best_remap_by_search(p: PriorDistribution, h: ChannelMatrix, gain,
                         settings: AnalysisSettings = DEFAULT_SETTINGS) -> Tuple[Tuple[int, ...], float]:
    """Try every remap Z -> Y; returns the first best one in lexicographic order"""
    require_same_alphabet(p.alphabet, h.input, "best_remap_by_search")
    gain = np.asarray(gain, dtype=np.float64)
    n_y, n_z = h.input.size, h.output.size
    if gain.shape != (n_y, n_y):
        raise InvalidParameter(f"gain table is {gain.shape}, expected ({n_y}, {n_y})")
    if n_y ** n_z > settings.remap_search_max:
        raise SearchTooLarge(f"{n_y}^{n_z} remaps exceed {settings.remap_search_max}")

    joint = p.probs[:, None] * h.entries
    best_value, best_remap = -math.inf, None
    for remap in product(range(n_y), repeat=n_z):
        value = 0.0
        for z, guess in enumerate(remap):
            for y in range(n_y):
                value += joint[y, z] * gain[y, guess]
        if best_remap is None or value > best_value + 1e-12:
            best_value, best_remap = value, remap
    return tuple(best_remap), best_value


@dataclass(frozen=True)
class SamplerConfig:
    """Everything that determines a sampled channel

    Rows are Dirichlet draws from numpy's PCG64 generator seeded with `seed`.
    """
    seed: int
    target_eps: float
    graph: AdjacencyGraph
    cols: Optional[int] = None
    concentration: float = 1.0
    bisection_tol: float = DEFAULT_SETTINGS.bisection_tol
    max_iter: int = DEFAULT_SETTINGS.bisection_max_iter

    def __post_init__(self):
        if not self.target_eps > 0:
            raise InvalidParameter(f"target_eps must be > 0, got {self.target_eps!r}")
        if self.cols is not None and self.cols < 1:
            raise InvalidParameter(f"cols must be >= 1, got {self.cols}")

    @property
    def rows(self) -> int:
        return self.graph.n


def _mix(entries: np.ndarray, t: float) -> np.ndarray:
    return (1.0 - t) * entries + t / entries.shape[1]


def sample_dp_channel(cfg: SamplerConfig) -> ChannelMatrix:
    """Random stochastic matrix mixed with the uniform row just enough to be eps-DP"""
    cols = cfg.cols if cfg.cols is not None else cfg.rows
    rng = np.random.default_rng(cfg.seed)
    raw = rng.dirichlet(np.full(cols, cfg.concentration), size=cfg.rows)
    output = Alphabet.range(cols, prefix="z")

    def eps_of(t: float) -> float:
        mixed = ChannelMatrix(cfg.graph.nodes, output, _mix(raw, t))
        return min_epsilon(mixed, cfg.graph)[0]

    if eps_of(0.0) <= cfg.target_eps:
        t = 0.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(cfg.max_iter):
            if hi - lo <= cfg.bisection_tol:
                break
            mid = 0.5 * (lo + hi)
            if eps_of(mid) <= cfg.target_eps:
                hi = mid
            else:
                lo = mid
        else:
            raise SamplerError(f"bisection did not converge in {cfg.max_iter} steps (seed {cfg.seed})")
        t = hi

    result = ChannelMatrix(cfg.graph.nodes, output, _mix(raw, t))
    measured = min_epsilon(result, cfg.graph)[0]
    if measured > cfg.target_eps + DP_TOL:
        raise SamplerError(f"sampled matrix has min eps {measured:.6g} > {cfg.target_eps:.6g} (seed {cfg.seed})")
    return result
