"""
Tests for the query model: database universes, queries, induced adjacency,
composition with a mechanism and utility
"""
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from engine.channel import (Alphabet, ChannelMatrix, PriorDistribution, capacity, load_matrix,
                            min_entropy_leakage, uniform_prior)
from engine.errors import QuerySpecError, UniverseTooLarge
from engine.graphs import GraphKind, clique_graph, line_graph
from engine.queries import (QueryModel, argmax_query, binary_gain, build_universe, city_candidate_universe,
                            compose, constant_query, counting_query, distance_gain, identity_query,
                            induced_adjacency, optimal_remap, push_prior, query_from_spec,
                            utility_binary, utility_general_gain)
from mechanisms.factory import build_geometric
from analysis.privacy import min_epsilon

FIXTURES = Path(__file__).parent / "fixtures"


def expect(error, fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except error as e:
        return e
    raise AssertionError(f"{fn.__name__} should raise {error.__name__}")


def test_universe_encoding():
    print("\n=== Test: Universe Encoding ===")
    universe = build_universe(3, 2)
    assert universe.size == 8
    assert universe.encode([1, 0, 1]) == 5
    assert universe.decode(5) == (1, 0, 1)
    assert universe.alphabet.labels[5] == "101"
    assert universe.value_index("1") == 1
    expect(QuerySpecError, universe.encode, [1, 0])
    expect(QuerySpecError, universe.decode, 8)
    expect(QuerySpecError, universe.value_index, "7")
    expect(QuerySpecError, build_universe, 0, 2)
    print("✓ Individual 0 is the least significant digit")


def test_counting_query_induces_line():
    """Changing one individual moves the count by at most one"""
    print("\n=== Test: Counting Query ===")
    q = counting_query(build_universe(5, 2), "1")
    assert q.answers.labels == ("0", "1", "2", "3", "4", "5")
    assert q.answer(0) == "0" and q.answer(31) == "5"
    g = induced_adjacency(q)
    print(f"  induced: {g!r}")
    assert g.kind == GraphKind.LINE
    assert len(g.edges) == 5
    print("✓ Counting query induces the line graph")


def test_identity_and_constant_queries():
    print("\n=== Test: Identity / Constant Queries ===")
    universe = build_universe(2, 3)
    induced = induced_adjacency(identity_query(universe))
    assert induced.edges == universe.graph().edges

    constant = induced_adjacency(constant_query(universe))
    assert constant.n == 1 and not constant.edges
    print("✓ Identity induces Hamming adjacency, constant induces none")


def test_argmax_query():
    """City with most votes for x; ties go to the lowest city"""
    print("\n=== Test: Argmax Query ===")
    universe = city_candidate_universe(2, ["A", "B"], ["x", "y"])
    assert universe.values == ("A/x", "A/y", "B/x", "B/y")
    q = argmax_query(universe, "x")
    ax, ay, bx, by = range(4)
    assert q.answer(universe.encode([ax, bx])) == "A"
    assert q.answer(universe.encode([bx, by])) == "B"
    assert q.answer(universe.encode([ay, ay])) == "A"
    assert q.answer(universe.encode([bx, bx])) == "B"
    assert induced_adjacency(q).edges == frozenset({(0, 1)})
    expect(QuerySpecError, argmax_query, universe, "z")

    same = query_from_spec("argmax:2:A,B:x,y:x")
    assert np.array_equal(same.mapping, q.mapping)
    print("✓ Argmax answers and adjacency")


def test_query_specs_and_files():
    print("\n=== Test: Query Specs ===")
    q = query_from_spec("count:3:2:1")
    assert q.answers.size == 4
    for bad in ("count:3:2", "sum:3:2:1", "count:x:2:1", "count:3:2:9"):
        expect(QuerySpecError, query_from_spec, bad)

    universe = build_universe(1, 3)
    expect(QuerySpecError, query_from_spec, "file:whatever.txt")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "parity.txt"
        path.write_text("0,even\n1,odd\n2,even\n")
        parity = query_from_spec(f"file:{path}", universe)
        assert parity.answers.labels == ("even", "odd")
        assert list(parity.mapping) == [0, 1, 0]
        path.write_text("0,even\n1,odd\n")
        expect(QuerySpecError, query_from_spec, f"file:{path}", universe)
    print("✓ count / argmax / file specs")


def test_query_must_be_onto():
    print("\n=== Test: Onto Check ===")
    universe = build_universe(1, 2)
    expect(QuerySpecError, QueryModel, universe, ChannelMatrix.from_rows(np.eye(3)).input, [0, 1])
    expect(QuerySpecError, QueryModel, universe, ChannelMatrix.from_rows(np.eye(2)).input, [0, 2])
    print("✓ Every answer must be produced")


def test_universe_guard():
    print("\n=== Test: Universe Guard ===")
    q = counting_query(build_universe(4, 2), "1")
    expect(UniverseTooLarge, induced_adjacency, q, 8)
    assert induced_adjacency(q, 16).n == 5
    print("✓ Enumeration guard enforced")


def test_compose_and_push_prior():
    """Mechanism DP on the induced graph makes the composed channel DP on databases"""
    print("\n=== Test: Composition ===")
    universe = build_universe(3, 2)
    q = counting_query(universe, "1")
    h = build_geometric(3, 0.5)
    k = compose(q, h)
    assert k.shape == (8, 4)
    assert np.array_equal(k.entries[universe.encode([1, 1, 0])], h.entries[2])

    eps_h, _ = min_epsilon(h, induced_adjacency(q))
    eps_k, _ = min_epsilon(k, universe.graph())
    print(f"  eps(H) = {eps_h:.6f}, eps(K) = {eps_k:.6f}")
    assert eps_k <= eps_h + 1e-9

    p = push_prior(q, uniform_prior(universe.alphabet))
    assert np.allclose(p.probs, [1 / 8, 3 / 8, 3 / 8, 1 / 8])
    print("✓ K = H o f keeps eps")


def test_binary_utility():
    """table2b.csv under the uniform prior: 4/11"""
    print("\n=== Test: Binary Utility ===")
    m = load_matrix(FIXTURES / "table2b.csv")
    p = uniform_prior(m.input)
    figures = utility_binary(p, m)
    print(f"  utility = {figures.utility:.6f}")
    assert abs(figures.utility - 4 / 11) < 1e-12
    assert figures.remap == (0, 1, 2, 3, 4, 5)
    assert figures.duality_ok
    assert abs(figures.h_inf_posterior + math.log2(4 / 11)) < 1e-12
    assert abs(utility_general_gain(p, m, binary_gain(6)) - figures.utility) < 1e-12
    print("✓ Utility equals 2^-H(Y|Z)")


def test_distance_gain():
    print("\n=== Test: Distance Gain ===")
    gain = distance_gain(5)
    assert gain[0, 0] == 1.0 and gain[0, 4] == 0.0 and abs(gain[1, 3] - 0.5) < 1e-15

    m = build_geometric(4, 0.5)
    p = uniform_prior(m.input)
    remap = optimal_remap(p, m, gain)
    best = utility_general_gain(p, m, gain, remap)
    assert best >= utility_general_gain(p, m, gain, list(range(5))) - 1e-12
    assert best >= utility_binary(p, m).utility - 1e-12
    print(f"✓ Distance-gain utility {best:.6f}")


def test_compose_leakage_below_capacity():
    """Post-processing a query answer cannot leak more than the mechanism's capacity"""
    print("\n=== Test: Composed Leakage ===")
    rng = np.random.default_rng(11)
    for u in range(1, 5):
        q = counting_query(build_universe(u, 2), "1")
        for k in (2, 3, 5):
            h = ChannelMatrix(q.answers, Alphabet.range(k, prefix="z"),
                              rng.dirichlet(np.ones(k), size=q.answers.size))
            bound = capacity(h)
            k_matrix = compose(q, h)
            assert abs(capacity(k_matrix) - bound) < 1e-12
            for _ in range(5):
                p = PriorDistribution(q.universe.alphabet, rng.dirichlet(np.ones(q.universe.size)))
                assert min_entropy_leakage(p, k_matrix).leakage <= bound + 1e-9
    print("✓ leakage(H o f) <= capacity(H) for random H and priors")


def test_counting_query_line_exhaustive():
    print("\n=== Test: Counting Query Adjacency (exhaustive) ===")
    cases = [(u, 2) for u in range(1, 11)] + [(u, 3) for u in range(1, 7)]
    for u, v in cases:
        g = induced_adjacency(counting_query(build_universe(u, v), "1"))
        assert g.edges == line_graph(u + 1).edges, (u, v)
    print("✓ Counting queries induce line:u+1 for u <= 10")


def test_argmax_six_cities_clique():
    print("\n=== Test: Argmax Over Six Cities ===")
    for u in (1, 2):
        universe = city_candidate_universe(u, list("ABCDEF"), ["x", "y"])
        g = induced_adjacency(argmax_query(universe, "x"))
        assert g.nodes.labels == tuple("ABCDEF")
        assert g.kind == GraphKind.CLIQUE
        assert g.edges == clique_graph(6).edges
    print("✓ Any winning city can flip to any other: clique:6")


if __name__ == "__main__":
    print("=" * 60)
    print("QUERY MODEL TESTS")
    print("=" * 60)

    test_universe_encoding()
    test_counting_query_induces_line()
    test_identity_and_constant_queries()
    test_argmax_query()
    test_query_specs_and_files()
    test_query_must_be_onto()
    test_universe_guard()
    test_compose_and_push_prior()
    test_binary_utility()
    test_distance_gain()
    test_compose_leakage_below_capacity()
    test_counting_query_line_exhaustive()
    test_argmax_six_cities_clique()

    print("\n" + "=" * 60)
    print("✓✓✓ ALL TESTS PASSED ✓✓✓")
    print("=" * 60)
