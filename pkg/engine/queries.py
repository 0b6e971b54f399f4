"""
Query Model
Databases Val^u, deterministic queries on them, the adjacency they induce on
answers, composition with an oblivious mechanism and binary-gain utility
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import (Alphabet, ChannelMatrix, PriorDistribution, require_same_alphabet,
                      conditional_min_entropy, joint)
from .errors import AlphabetMismatch, QuerySpecError, UniverseTooLarge
from .graphs import AdjacencyGraph, base_digits, custom_graph, hamming_graph, recognize_family, tuple_labels
from .settings import DEFAULT_SETTINGS

DUALITY_TOL = 1e-9


@dataclass(frozen=True)
class DatabaseUniverse:
    """All u-tuples over v values, indexed by base-v encoding (individual 0 least significant)"""
    u: int
    v: int
    values: Tuple[str, ...]
    alphabet: Alphabet = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.u < 1:
            raise QuerySpecError(f"universe needs u >= 1 (got {self.u})")
        if self.v < 2:
            raise QuerySpecError(f"universe needs v >= 2 (got {self.v})")
        values = tuple(str(x) for x in self.values)
        if len(values) != self.v:
            raise QuerySpecError(f"{len(values)} value labels given for v = {self.v}")
        object.__setattr__(self, 'values', Alphabet(values).labels)
        object.__setattr__(self, 'alphabet', Alphabet(tuple_labels(self.u, self.v, values)))

    @property
    def size(self) -> int:
        return self.v ** self.u

    def encode(self, db: Sequence[int]) -> int:
        """Value indices of individuals 0..u-1 -> database index"""
        if len(db) != self.u:
            raise QuerySpecError(f"database has {len(db)} individuals, universe has {self.u}")
        index = 0
        for position in reversed(range(self.u)):
            value = int(db[position])
            if not 0 <= value < self.v:
                raise QuerySpecError(f"value index {value} outside 0..{self.v - 1}")
            index = index * self.v + value
        return index

    def decode(self, index: int) -> Tuple[int, ...]:
        if not 0 <= index < self.size:
            raise QuerySpecError(f"database index {index} outside 0..{self.size - 1}")
        return tuple(int(d) for d in base_digits([index], self.u, self.v)[0])

    def digits(self) -> np.ndarray:
        """(v^u, u) array of value indices, row = database"""
        return base_digits(np.arange(self.size), self.u, self.v)

    def value_index(self, value) -> int:
        """Index of a value given by label, or by position when no label matches"""
        if str(value) in self.values:
            return self.values.index(str(value))
        if isinstance(value, (int, np.integer)) and 0 <= value < self.v:
            return int(value)
        raise QuerySpecError(f"unknown value '{value}' (values: {', '.join(self.values)})")

    def graph(self) -> AdjacencyGraph:
        """Hamming adjacency: databases differing in exactly one individual"""
        return hamming_graph(self.u, self.v, self.values)


def build_universe(u: int, v: int, labels: Optional[Sequence[str]] = None) -> DatabaseUniverse:
    if labels is None:
        labels = [str(i) for i in range(v)]
    return DatabaseUniverse(u, v, tuple(labels))


@dataclass(frozen=True)
class QueryModel:
    """Deterministic query f: database index -> answer index, total and onto"""
    universe: DatabaseUniverse
    answers: Alphabet
    mapping: np.ndarray

    def __post_init__(self):
        mapping = np.array(self.mapping, dtype=np.int64)
        mapping.setflags(write=False)
        object.__setattr__(self, 'mapping', mapping)
        if mapping.shape != (self.universe.size,):
            raise QuerySpecError(
                f"query maps {mapping.size} databases, universe has {self.universe.size}")
        if mapping.min() < 0 or mapping.max() >= self.answers.size:
            raise QuerySpecError("query maps a database outside the answer alphabet")
        used = np.unique(mapping)
        if used.size != self.answers.size:
            missing = sorted(set(range(self.answers.size)) - set(used.tolist()))
            raise QuerySpecError(
                "answers never produced: " + ", ".join(self.answers.labels[i] for i in missing))

    def answer(self, db_index: int) -> str:
        return self.answers.labels[self.mapping[db_index]]


def make_query(universe: DatabaseUniverse, raw_answers: Sequence, order: Optional[Sequence] = None) -> QueryModel:
    """Query from one answer label per database; unused labels in `order` are dropped"""
    raw = [str(a) for a in raw_answers]
    if order is None:
        order = list(dict.fromkeys(raw))
    realized = set(raw)
    labels = [str(a) for a in order if str(a) in realized]
    unknown = realized - set(labels)
    if unknown:
        raise QuerySpecError(f"answers missing from order: {', '.join(sorted(unknown))}")
    position = {label: i for i, label in enumerate(labels)}
    return QueryModel(universe, Alphabet(tuple(labels)), [position[a] for a in raw])


def counting_query(universe: DatabaseUniverse, target) -> QueryModel:
    """Number of individuals holding `target`; answers 0..u"""
    t = universe.value_index(target)
    counts = (universe.digits() == t).sum(axis=1)
    return QueryModel(universe, Alphabet.range(universe.u + 1), counts)


def identity_query(universe: DatabaseUniverse) -> QueryModel:
    return QueryModel(universe, universe.alphabet, np.arange(universe.size))


def constant_query(universe: DatabaseUniverse, answer: str = "c") -> QueryModel:
    return QueryModel(universe, Alphabet((answer,)), np.zeros(universe.size, dtype=np.int64))


def city_candidate_universe(u: int, cities: Sequence[str], candidates: Sequence[str]) -> DatabaseUniverse:
    """Each individual votes (city, candidate); value labels are 'city/candidate'"""
    values = [f"{city}/{cand}" for city in cities for cand in candidates]
    return build_universe(u, len(values), values)


def argmax_query(universe: DatabaseUniverse, candidate: str) -> QueryModel:
    """City with the most votes for `candidate`, ties to the lowest city label

    Value labels must read 'city/candidate'.
    """
    pairs = []
    for value in universe.values:
        if "/" not in value:
            raise QuerySpecError(f"value '{value}' is not of the form city/candidate")
        pairs.append(tuple(value.split("/", 1)))
    cities = sorted({city for city, _ in pairs})
    if not cities:
        raise QuerySpecError("universe has no cities")
    if candidate not in {cand for _, cand in pairs}:
        raise QuerySpecError(f"unknown candidate '{candidate}'")

    # votes[value_index] -> city column hit when that value is for `candidate`
    city_of_value = np.array([cities.index(city) if cand == candidate else -1
                              for city, cand in pairs], dtype=np.int64)
    digits = universe.digits()
    counts = np.zeros((universe.size, len(cities)), dtype=np.int64)
    for position in range(universe.u):
        hit = city_of_value[digits[:, position]]
        rows = np.flatnonzero(hit >= 0)
        np.add.at(counts, (rows, hit[rows]), 1)

    winners = counts.argmax(axis=1)  # first maximum = lowest city label
    return make_query(universe, [cities[w] for w in winners], cities)


def load_query_file(path, universe: DatabaseUniverse) -> QueryModel:
    """One 'db_label,answer_label' line per database"""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise QuerySpecError(f"cannot read query '{path}': {e}") from None

    raw = [None] * universe.size
    for line_no, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        parts = [part.strip() for part in line.split(',')]
        if len(parts) != 2:
            raise QuerySpecError(f"{path}:{line_no}: expected 'db_label,answer_label'")
        try:
            raw[universe.alphabet.index(parts[0])] = parts[1]
        except KeyError as e:
            raise QuerySpecError(f"{path}:{line_no}: {e.args[0]}") from None

    missing = [universe.alphabet.labels[i] for i, a in enumerate(raw) if a is None]
    if missing:
        raise QuerySpecError(f"query file has no answer for: {', '.join(missing[:5])}")
    return make_query(universe, raw)


def query_from_spec(spec: str, universe: Optional[DatabaseUniverse] = None) -> QueryModel:
    """count:U:V:TARGET | argmax:U:CITY,CITY..:CAND,CAND..:CAND | file:PATH (needs universe)"""
    spec = spec.strip()
    if spec.startswith("file:"):
        if universe is None:
            raise QuerySpecError("file: queries need the universe (--u/--v)")
        return load_query_file(spec[len("file:"):], universe)

    parts = spec.split(":")
    try:
        if parts[0] == "count" and len(parts) == 4:
            return counting_query(build_universe(int(parts[1]), int(parts[2])), parts[3])
        if parts[0] == "argmax" and len(parts) == 5:
            cities = [c for c in parts[2].split(",") if c]
            candidates = [c for c in parts[3].split(",") if c]
            return argmax_query(city_candidate_universe(int(parts[1]), cities, candidates), parts[4])
    except ValueError:
        pass
    raise QuerySpecError(f"malformed query spec '{spec}' (use count:U:V:T, argmax:U:CITIES:CANDS:C, file:PATH)")


def induced_adjacency(q: QueryModel, max_universe: Optional[int] = None) -> AdjacencyGraph:
    """Answers y ~ y' iff some pair of adjacent databases maps to (y, y')"""
    limit = max_universe if max_universe is not None else DEFAULT_SETTINGS.universe_max
    universe = q.universe
    if universe.size > limit:
        raise UniverseTooLarge(f"v^u = {universe.size} exceeds the enumeration guard {limit}")

    digits = universe.digits()
    src = np.arange(universe.size)
    edges = set()
    for position in range(universe.u):
        place = universe.v ** position
        for shift in range(1, universe.v):
            dst = src + (((digits[:, position] + shift) % universe.v) - digits[:, position]) * place
            a, b = q.mapping[src], q.mapping[dst]
            differ = a != b
            if not differ.any():
                continue
            pairs = np.stack([np.minimum(a[differ], b[differ]),
                              np.maximum(a[differ], b[differ])], axis=1)
            edges.update(map(tuple, np.unique(pairs, axis=0).tolist()))
    return recognize_family(custom_graph(q.answers.labels, edges))


def compose(q: QueryModel, h: ChannelMatrix) -> ChannelMatrix:
    """K = H o f: K[x][z] = h[f(x)][z]"""
    require_same_alphabet(q.answers, h.input, "compose")
    return ChannelMatrix(q.universe.alphabet, h.output, h.entries[q.mapping])


def push_prior(q: QueryModel, prior_x: PriorDistribution) -> PriorDistribution:
    """Prior on answers induced by a prior on databases"""
    require_same_alphabet(q.universe.alphabet, prior_x.alphabet, "push_prior")
    probs = np.bincount(q.mapping, weights=prior_x.probs, minlength=q.answers.size)
    return PriorDistribution(q.answers, probs / probs.sum())


# --- utility ---

@dataclass(frozen=True)
class UtilityFigures:
    utility: float
    remap: Tuple[int, ...]  # column -> answer index
    h_inf_posterior: float
    duality_gap: float

    @property
    def duality_ok(self) -> bool:
        return self.duality_gap <= DUALITY_TOL


def utility_binary(p: PriorDistribution, h: ChannelMatrix) -> UtilityFigures:
    """Expected success of guessing Y exactly, with the best remap per column"""
    table = joint(p, h)
    remap = tuple(int(i) for i in table.argmax(axis=0))
    utility = float(table.max(axis=0).sum())
    posterior = conditional_min_entropy(p, h)
    return UtilityFigures(utility, remap, posterior, abs(-np.log2(utility) - posterior))


def binary_gain(n: int) -> np.ndarray:
    return np.eye(n)


def distance_gain(n: int) -> np.ndarray:
    """g(y, y') = 1 - |y - y'| / (n - 1) on answers 0..n-1"""
    idx = np.arange(n)
    return 1.0 - np.abs(idx[:, None] - idx[None, :]) / max(n - 1, 1)


def _check_gain(h: ChannelMatrix, gain) -> np.ndarray:
    gain = np.asarray(gain, dtype=np.float64)
    n = h.input.size
    if gain.shape != (n, n):
        raise AlphabetMismatch(f"gain table is {gain.shape}, expected ({n}, {n})")
    return gain


def optimal_remap(p: PriorDistribution, h: ChannelMatrix, gain) -> Tuple[int, ...]:
    """Per column, the guess maximizing sum_y p(y, z) g(y, guess); ties to lowest index"""
    scores = joint(p, h).T @ _check_gain(h, gain)
    return tuple(int(i) for i in scores.argmax(axis=1))


def utility_general_gain(p: PriorDistribution, h: ChannelMatrix, gain,
                         remap: Optional[Sequence[int]] = None) -> float:
    """sum_{y,z} p(y, z) g(y, remap(z))"""
    gain = _check_gain(h, gain)
    if remap is None:
        remap = optimal_remap(p, h, gain)
    remap = np.asarray(remap, dtype=np.int64)
    if remap.shape != (h.output.size,):
        raise AlphabetMismatch(f"remap has {remap.size} entries for {h.output.size} columns")
    table = joint(p, h)
    return float((table * gain[:, remap]).sum())
