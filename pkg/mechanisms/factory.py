"""
Mechanism Factory
Tight-leakage matrices over Val^u, optimal-utility mechanisms over
border-regular answer graphs, and the truncated geometric mechanism
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from engine.channel import Alphabet, ChannelMatrix
from engine.errors import (DisconnectedGraph, HypothesisViolated, InvalidParameter,
                           Remark1Inapplicable)
from engine.graphs import (AdjacencyGraph, GraphKind, augment_to_regular_borders,
                           border_profile, canonical_single_orbit_automorphism,
                           check_automorphism, hamming_graph, is_border_regular)


@dataclass(frozen=True)
class OptimalMechanismParams:
    """How an optimal-utility matrix was built

    `graph` is the structure the distances were taken in; it differs from
    `source_graph` only when artificial adjacencies were added.
    """
    graph: AdjacencyGraph
    eps: float
    alpha: float
    n: int
    c: Optional[int]
    remark1_applied: bool = False
    remark2_supergraph: Optional[AdjacencyGraph] = None
    source_graph: Optional[AdjacencyGraph] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0 + 1e-12:
            raise InvalidParameter(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.remark1_applied and np.exp(2 * self.eps) < 2.0:
            raise Remark1Inapplicable("antipodal doubling needs (e^eps)^2 >= 2",
                                      {"check": "remark1", "e_2eps": float(np.exp(2 * self.eps))})

    @property
    def guaranteed_optimal(self) -> bool:
        return self.remark2_supergraph is None


def _check_eps(eps: float):
    if not np.isfinite(eps) or eps < 0:
        raise InvalidParameter(f"eps must be a finite value >= 0, got {eps!r}")


def alpha_from_borders(sizes: Sequence[int], eps: float) -> float:
    """1 / sum_d |Border_d| e^(-eps d); the normalization that makes a row sum to 1"""
    d = np.arange(len(sizes))
    return float(1.0 / np.sum(np.asarray(sizes, dtype=np.float64) * np.exp(-eps * d)))


def alpha_closed_form(n: int, c: int, eps: float) -> float:
    """Diagonal of the optimal matrix when every nonzero border has size c"""
    if eps <= 0:
        raise InvalidParameter("closed-form alpha needs eps > 0 (use alpha_from_borders at eps = 0)")
    if n < 1 or c < 1:
        raise InvalidParameter(f"need n >= 1 and c >= 1, got n={n}, c={c}")
    e = np.exp(eps)
    top = e ** n * (1 - e)
    return float(top / (top + c * (1 - e ** n)))


def build_tight_leakage(u: int, v: int, eps: float) -> ChannelMatrix:
    """v^u square matrix alpha / e^(eps d) with d the Hamming distance

    alpha = (e^eps / (v - 1 + e^eps))^u, so rows sum to 1 and uniform-prior
    leakage meets the whole-database bound exactly.
    """
    if u < 1 or v < 2:
        raise InvalidParameter(f"need u >= 1 and v >= 2, got u={u}, v={v}")
    _check_eps(eps)
    g = hamming_graph(u, v)
    log_alpha = u * (eps - np.logaddexp(np.log(v - 1), eps))
    entries = np.exp(log_alpha - eps * g.distances)
    return ChannelMatrix(g.nodes, g.nodes, entries)


def _ring_with_antipodes(g: AdjacencyGraph, eps: float) -> Tuple[np.ndarray, OptimalMechanismParams]:
    e2 = float(np.exp(2 * eps))
    if e2 < 2.0:
        raise Remark1Inapplicable(
            f"even ring needs (e^eps)^2 >= 2 for antipodal doubling, got {e2:.6g}",
            {"check": "remark1", "ring": g.n, "e_2eps": e2})
    half = g.n // 2
    # antipodal border has one node; doubling it makes every border count 2
    alpha = alpha_from_borders([1] + [2] * half, eps)
    entries = alpha * np.exp(-eps * g.distances)
    entries[g.distances == half] *= 2.0
    return entries, OptimalMechanismParams(g, eps, alpha, half, 2, remark1_applied=True)


def build_optimal_utility(g: AdjacencyGraph, eps: float, augment: bool = False,
                          automorphism: Optional[Sequence[int]] = None,
                          supergraph: Optional[AdjacencyGraph] = None
                          ) -> Tuple[ChannelMatrix, OptimalMechanismParams]:
    """Square matrix alpha / e^(eps dist(y, z)) over the answer graph

    Even rings take the antipodal-doubling route. Other graphs must have
    constant nonzero borders around every node and a single-orbit
    automorphism (built in for rings and cliques). `augment` adds artificial
    adjacencies first; the result stays eps-DP but may not be optimal.
    """
    _check_eps(eps)
    source = g
    added = None
    if augment or supergraph is not None:
        g = augment_to_regular_borders(g, supergraph)
        if g.edges != source.edges:
            added = g

    if not g.is_connected():
        raise DisconnectedGraph(f"{g!r} is disconnected; the optimal construction needs one component")

    if eps == 0:
        # only identical rows are 0-DP on a connected graph
        alpha = 1.0 / g.n
        params = OptimalMechanismParams(g, eps, alpha, int(g.distances.max()), None,
                                        remark2_supergraph=added, source_graph=source)
        return ChannelMatrix(g.nodes, g.nodes, np.full((g.n, g.n), alpha)), params

    if g.kind == GraphKind.RING and g.n >= 4 and g.n % 2 == 0:
        entries, params = _ring_with_antipodes(g, eps)
    else:
        check = is_border_regular(g)
        if not check.regular:
            raise HypothesisViolated(
                f"borders are not regular ({check.reason})", check.reason)

        if automorphism is not None:
            auto = check_automorphism(g, automorphism)
        else:
            auto = canonical_single_orbit_automorphism(g)
        if auto is None or not auto.single_orbit:
            raise HypothesisViolated(
                f"no single-orbit automorphism for {g!r}; supply one",
                {"check": "automorphism", "kind": g.kind.value})

        alpha = alpha_from_borders(border_profile(g, 0), eps)
        entries = alpha * np.exp(-eps * g.distances)
        params = OptimalMechanismParams(g, eps, alpha, check.n, check.c)

    params = OptimalMechanismParams(params.graph, eps, params.alpha, params.n, params.c,
                                    params.remark1_applied, added, source)
    return ChannelMatrix(g.nodes, g.nodes, entries), params


def build_geometric(n_max: int, lam: float) -> ChannelMatrix:
    """Truncated geometric mechanism on answers 0..n_max

    Interior cells are (1-lam)/(1+lam) lam^|z-y|; the mass beyond each end is
    folded into z = 0 and z = n_max.
    """
    if n_max < 1:
        raise InvalidParameter(f"n_max must be >= 1, got {n_max}")
    if not 0.0 < lam < 1.0:
        raise InvalidParameter(f"lambda must lie in (0, 1), got {lam!r}")
    y = np.arange(n_max + 1)[:, None]
    z = np.arange(n_max + 1)[None, :]
    entries = (1 - lam) / (1 + lam) * lam ** np.abs(z - y)
    entries[:, 0] = lam ** y[:, 0] / (1 + lam)
    entries[:, n_max] = lam ** (n_max - y[:, 0]) / (1 + lam)
    labels = Alphabet.range(n_max + 1)
    return ChannelMatrix(labels, labels, entries)
