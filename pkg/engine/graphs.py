"""
Adjacency Graphs
Finite undirected graphs carrying the adjacency relation, with distances,
borders and single-orbit automorphisms
"""
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .channel import Alphabet
from .errors import DisconnectedGraph, GraphSpecError, NotAutomorphism

UNREACHABLE = -1


class GraphKind(Enum):
    """Predefined graph families"""
    HAMMING = "hamming"
    RING = "ring"
    CLIQUE = "clique"
    LINE = "line"
    CUSTOM = "custom"


def base_digits(indices, u: int, v: int) -> np.ndarray:
    """Base-v digits of each index, individual 0 = least significant digit

    Returns an int array of shape (len(indices), u).
    """
    indices = np.asarray(indices, dtype=np.int64)
    powers = v ** np.arange(u, dtype=np.int64)
    return (indices[:, None] // powers[None, :]) % v


def tuple_labels(u: int, v: int, values: Optional[Sequence[str]] = None) -> Tuple[str, ...]:
    """Labels of all v^u tuples in canonical order, written individual 0 first"""
    values = [str(x) for x in values] if values is not None else [str(x) for x in range(v)]
    sep = "" if all(len(x) == 1 for x in values) else "|"
    digits = base_digits(np.arange(v ** u), u, v)
    return tuple(sep.join(values[d] for d in row) for row in digits)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected simple graph over a labelled node set

    Distances are computed once at construction (BFS, or digit comparison for
    Hamming graphs) and stored read-only, so queries are safe from any thread.
    """
    nodes: Alphabet
    edges: FrozenSet[Tuple[int, int]]
    kind: GraphKind = GraphKind.CUSTOM
    params: Tuple[int, ...] = ()
    _distances: np.ndarray = field(init=False, repr=False, compare=False)
    _graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.nodes.size
        normalized = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise GraphSpecError(f"self-loop on node {self.nodes.labels[a]}")
            if not (0 <= a < n and 0 <= b < n):
                raise GraphSpecError(f"edge ({a}, {b}) outside {n} nodes")
            normalized.add((min(a, b), max(a, b)))
        object.__setattr__(self, 'edges', frozenset(normalized))

        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from(normalized)
        object.__setattr__(self, '_graph', graph)

        if self.kind == GraphKind.HAMMING:
            u, v = self.params
            digits = base_digits(np.arange(n), u, v)
            distances = (digits[:, None, :] != digits[None, :, :]).sum(axis=2)
        else:
            distances = np.full((n, n), UNREACHABLE, dtype=np.int64)
            for source, lengths in nx.all_pairs_shortest_path_length(graph):
                for target, length in lengths.items():
                    distances[source, target] = length
        distances = np.asarray(distances, dtype=np.int64)
        distances.setflags(write=False)
        object.__setattr__(self, '_distances', distances)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def distances(self) -> np.ndarray:
        """n x n hop counts, UNREACHABLE (-1) across components"""
        return self._distances

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def degree(self, a: int) -> int:
        return self._graph.degree(a)

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Edges as two index arrays in sorted order"""
        ordered = sorted(self.edges)
        if not ordered:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.array(ordered, dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def is_connected(self) -> bool:
        return bool(np.all(self._distances >= 0))

    def node(self, label_or_index) -> int:
        if isinstance(label_or_index, (int, np.integer)):
            return int(label_or_index)
        return self.nodes.index(label_or_index)

    def __repr__(self):
        tag = self.kind.value
        if self.params:
            tag += ":" + ":".join(str(p) for p in self.params)
        return f"AdjacencyGraph({tag}, {self.n} nodes, {len(self.edges)} edges)"


# --- constructors ---

def ring_graph(n: int, labels=None) -> AdjacencyGraph:
    nodes = Alphabet(tuple(labels)) if labels is not None else Alphabet.range(n)
    edges = {(i, (i + 1) % n) for i in range(n) if n > 1 and i != (i + 1) % n}
    return AdjacencyGraph(nodes, frozenset(edges), GraphKind.RING, (n,))


def clique_graph(n: int, labels=None) -> AdjacencyGraph:
    nodes = Alphabet(tuple(labels)) if labels is not None else Alphabet.range(n)
    edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    return AdjacencyGraph(nodes, frozenset(edges), GraphKind.CLIQUE, (n,))


def line_graph(n: int, labels=None) -> AdjacencyGraph:
    nodes = Alphabet(tuple(labels)) if labels is not None else Alphabet.range(n)
    edges = {(i, i + 1) for i in range(n - 1)}
    return AdjacencyGraph(nodes, frozenset(edges), GraphKind.LINE, (n,))


def hamming_graph(u: int, v: int, values: Optional[Sequence[str]] = None) -> AdjacencyGraph:
    """Val^u with tuples adjacent iff they differ in exactly one position"""
    if u < 1:
        raise GraphSpecError(f"hamming graph needs u >= 1 (got {u})")
    if v < 2:
        raise GraphSpecError(f"hamming graph needs v >= 2 (got {v})")
    n = v ** u
    digits = base_digits(np.arange(n), u, v)
    edges = set()
    for i in range(u):
        place = v ** i
        for value in range(1, v):
            # raise digit i by `value` (mod v); each unordered pair is hit twice
            src = np.arange(n)
            dst = src + (((digits[:, i] + value) % v) - digits[:, i]) * place
            edges.update(zip(np.minimum(src, dst).tolist(), np.maximum(src, dst).tolist()))
    return AdjacencyGraph(Alphabet(tuple_labels(u, v, values)), frozenset(edges),
                          GraphKind.HAMMING, (u, v))


def custom_graph(labels: Sequence[str], edges) -> AdjacencyGraph:
    return AdjacencyGraph(Alphabet(tuple(labels)), frozenset(edges), GraphKind.CUSTOM, ())


def recognize_family(g: AdjacencyGraph) -> AdjacencyGraph:
    """Retag a custom graph as clique, ring or line when its edges (in index order) match"""
    if g.kind != GraphKind.CUSTOM:
        return g
    labels = g.nodes.labels
    for builder in (clique_graph, ring_graph, line_graph):
        candidate = builder(g.n, labels)
        if candidate.edges == g.edges:
            return candidate
    return g


def load_edge_list(path) -> AdjacencyGraph:
    """'nodes: l1,l2,...' header, then one 'a -- b' line per edge"""
    try:
        lines = [line.strip() for line in Path(path).read_text().splitlines()]
    except OSError as e:
        raise GraphSpecError(f"cannot read graph file '{path}': {e}") from None
    lines = [line for line in lines if line and not line.startswith('#')]
    if not lines or not lines[0].startswith("nodes:"):
        raise GraphSpecError(f"{path}: first line must be 'nodes: l1,l2,...'")

    labels = [label.strip() for label in lines[0][len("nodes:"):].split(',') if label.strip()]
    nodes = Alphabet(tuple(labels))
    edges = set()
    for line in lines[1:]:
        if "--" not in line:
            raise GraphSpecError(f"{path}: expected 'a -- b', got '{line}'")
        a, b = (part.strip() for part in line.split("--", 1))
        try:
            edges.add((nodes.index(a), nodes.index(b)))
        except KeyError as e:
            raise GraphSpecError(f"{path}: {e.args[0]}") from None
    return AdjacencyGraph(nodes, frozenset(edges), GraphKind.CUSTOM, ())


def save_edge_list(g: AdjacencyGraph, path):
    lines = ["nodes: " + ",".join(g.nodes.labels)]
    lines += [f"{g.nodes.labels[a]} -- {g.nodes.labels[b]}" for a, b in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise GraphSpecError(f"{what} must be an integer, got '{text}'") from None


def build_graph(spec: str) -> AdjacencyGraph:
    """hamming:U:V | ring:N | clique:N | line:N | file:PATH"""
    spec = spec.strip()
    if spec.startswith("file:"):
        return recognize_family(load_edge_list(spec[len("file:"):]))

    parts = spec.split(":")
    family = parts[0]
    if family == "hamming":
        if len(parts) != 3:
            raise GraphSpecError(f"expected hamming:U:V, got '{spec}'")
        u, v = _parse_int(parts[1], "U"), _parse_int(parts[2], "V")
        if u < 1:
            raise GraphSpecError(f"U must be >= 1 in '{spec}'")
        if v < 2:
            raise GraphSpecError(f"V must be >= 2 in '{spec}'")
        return hamming_graph(u, v)

    builders = {"ring": ring_graph, "clique": clique_graph, "line": line_graph}
    if family not in builders or len(parts) != 2:
        raise GraphSpecError(
            f"malformed graph spec '{spec}' (use hamming:U:V, ring:N, clique:N, line:N, file:PATH)")
    n = _parse_int(parts[1], "N")
    if n < 1:
        raise GraphSpecError(f"N must be >= 1 in '{spec}'")
    return builders[family](n)


# --- distance queries ---

def dist(g: AdjacencyGraph, a, b) -> Optional[int]:
    """Shortest-path edge count, None when unreachable"""
    d = int(g.distances[g.node(a), g.node(b)])
    return None if d == UNREACHABLE else d


def border(g: AdjacencyGraph, y, d: int) -> FrozenSet[int]:
    """Nodes at distance exactly d from y"""
    return frozenset(np.flatnonzero(g.distances[g.node(y)] == d).tolist())


def eccentricity(g: AdjacencyGraph, y) -> int:
    row = g.distances[g.node(y)]
    if np.any(row == UNREACHABLE):
        raise DisconnectedGraph(f"node {g.nodes.labels[g.node(y)]} cannot reach every node")
    return int(row.max())


def diameter(g: AdjacencyGraph) -> int:
    if not g.is_connected():
        raise DisconnectedGraph(f"{g!r} is disconnected")
    return int(g.distances.max())


def border_profile(g: AdjacencyGraph, y) -> List[int]:
    """|Border_d(y)| for d = 0 .. eccentricity(y)"""
    ecc = eccentricity(g, y)
    counts = np.bincount(g.distances[g.node(y)], minlength=ecc + 1)
    return [int(c) for c in counts]


@dataclass(frozen=True)
class BorderCheck:
    """Outcome of a border-regularity check"""
    regular: bool
    c: Optional[int]
    n: int
    reason: dict = field(default_factory=dict)


def node_border_check(g: AdjacencyGraph, y) -> BorderCheck:
    """Is |Border_d(y)| the same nonzero constant for every realized d > 0?"""
    y = g.node(y)
    profile = border_profile(g, y)
    n = len(profile) - 1
    if n == 0:
        return BorderCheck(True, None, 0)
    c = profile[1]
    for d, size in enumerate(profile[1:], start=1):
        if size != c:
            return BorderCheck(False, c, n, {"check": "border_regularity", "node": y,
                                             "distance": d, "size": size, "expected": c})
    return BorderCheck(True, c, n)


def is_border_regular(g: AdjacencyGraph, y=None) -> BorderCheck:
    """Per-node check when y is given, otherwise every node must share one c"""
    if y is not None:
        return node_border_check(g, y)

    first = node_border_check(g, 0)
    if not first.regular:
        return first
    for node in range(1, g.n):
        check = node_border_check(g, node)
        if not check.regular:
            return check
        if check.c != first.c or check.n != first.n:
            return BorderCheck(False, first.c, first.n,
                               {"check": "border_constant", "node": node,
                                "c": check.c, "expected": first.c})
    return first


# --- automorphisms ---

@dataclass(frozen=True)
class Automorphism:
    """Edge-preserving vertex permutation of a graph"""
    graph: AdjacencyGraph
    perm: Tuple[int, ...]
    single_orbit: bool

    def power(self, i: int) -> np.ndarray:
        """sigma^i as an index array"""
        result = np.arange(self.graph.n)
        step = np.array(self.perm, dtype=np.int64)
        for _ in range(i % self.graph.n if self.single_orbit else i):
            result = step[result]
        return result

    def orbit(self, start: int) -> List[int]:
        seen = [start]
        node = self.perm[start]
        while node != start:
            seen.append(node)
            node = self.perm[node]
        return seen


def check_automorphism(g: AdjacencyGraph, perm: Sequence[int]) -> Automorphism:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(g.n)):
        raise NotAutomorphism(f"{perm} is not a permutation of {g.n} nodes")

    # a permutation is a bijection on pairs, so edges -> edges also gives non-edges -> non-edges
    for a, b in sorted(g.edges):
        if not g.has_edge(perm[a], perm[b]):
            raise NotAutomorphism(
                f"edge ({g.nodes.labels[a]}, {g.nodes.labels[b]}) maps to non-edge "
                f"({g.nodes.labels[perm[a]]}, {g.nodes.labels[perm[b]]})")

    auto = Automorphism(g, perm, False)
    single = len(auto.orbit(0)) == g.n
    return Automorphism(g, perm, single)


def rotation(n: int) -> Tuple[int, ...]:
    return tuple((i + 1) % n for i in range(n))


def canonical_single_orbit_automorphism(g: AdjacencyGraph) -> Optional[Automorphism]:
    """Rotation i -> i+1 mod n for rings and cliques, None for anything else"""
    if g.kind not in (GraphKind.RING, GraphKind.CLIQUE):
        return None
    return check_automorphism(g, rotation(g.n))


def augment_to_regular_borders(g: AdjacencyGraph,
                               supergraph: Optional[AdjacencyGraph] = None) -> AdjacencyGraph:
    """Add artificial adjacencies so the optimal construction applies

    line:N becomes ring:N, rings and cliques are kept, anything else becomes the
    clique on the same nodes. An explicit supergraph is accepted after checking
    it contains every edge of g.
    """
    if supergraph is not None:
        if supergraph.nodes != g.nodes:
            raise GraphSpecError("supergraph must have the same nodes")
        missing = g.edges - supergraph.edges
        if missing:
            a, b = sorted(missing)[0]
            raise GraphSpecError(
                f"supergraph drops edge ({g.nodes.labels[a]}, {g.nodes.labels[b]})")
        return supergraph

    if g.kind == GraphKind.LINE:
        return ring_graph(g.n, g.nodes.labels)
    if g.kind in (GraphKind.RING, GraphKind.CLIQUE):
        return g
    return clique_graph(g.n, g.nodes.labels)


def relabel(g: AdjacencyGraph, nodes: Alphabet) -> AdjacencyGraph:
    """Same edges and kind, node labels replaced position by position"""
    if nodes.size != g.n:
        raise GraphSpecError(f"cannot relabel {g.n} nodes with {nodes.size} labels")
    return AdjacencyGraph(nodes, g.edges, g.kind, g.params)
