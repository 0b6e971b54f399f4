"""
Tests for DP verification, the leakage bounds, the utility bound and
individual channels
"""
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from engine.channel import ChannelMatrix, load_matrix, min_entropy_leakage, uniform_prior
from engine.errors import AlphabetMismatch, InvalidParameter, QuerySpecError
from engine.graphs import build_graph, clique_graph, line_graph, relabel, ring_graph
from engine.queries import build_universe
from mechanisms.factory import alpha_closed_form, build_tight_leakage
from analysis.privacy import (bound_individual, bound_range_restricted, bound_whole_database,
                              check_epsilon_ratio_bound, curve_bound, floor_log, individual_channel,
                              individual_channels, individual_leakage_check, min_epsilon,
                              utility_bound, verify_dp)

FIXTURES = Path(__file__).parent / "fixtures"
LN2 = math.log(2)


def expect(error, fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except error as e:
        return e
    raise AssertionError(f"{fn.__name__} should raise {error.__name__}")


def on_graph(spec, m):
    return relabel(build_graph(spec), m.input)


def test_min_epsilon_fixtures():
    print("\n=== Test: Minimal Epsilon ===")
    cases = [("table1b.csv", "clique:6"), ("table2a.csv", "line:6"),
             ("table2b.csv", "ring:6"), ("table2b.csv", "line:6")]
    for name, spec in cases:
        m = load_matrix(FIXTURES / name)
        value, witness = min_epsilon(m, on_graph(spec, m))
        print(f"  {name} on {spec}: eps* = {value:.9f}, witness {witness}")
        assert abs(value - LN2) < 1e-9
        x, x2, z = witness
        assert abs(math.log(m.entries[x, z] / m.entries[x2, z]) - value) < 1e-12
    print("✓ Every fixture is exactly ln 2-DP")


def test_verify_dp_threshold():
    print("\n=== Test: DP Verdict ===")
    m = load_matrix(FIXTURES / "table2a.csv")
    g = on_graph("line:6", m)
    assert verify_dp(m, g, LN2).satisfies
    assert verify_dp(m, g, LN2 + 1e-12).satisfies
    assert not verify_dp(m, g, 0.69).satisfies
    expect(InvalidParameter, verify_dp, m, g, -1.0)
    expect(AlphabetMismatch, verify_dp, m, line_graph(6, labels="abcdef"), LN2)
    print("✓ eps-DP holds at ln 2 and fails just below")


def test_no_converse():
    """Tiny leakage does not imply DP"""
    print("\n=== Test: No Converse ===")
    m = load_matrix(FIXTURES / "no_converse.csv")
    leakage = min_entropy_leakage(uniform_prior(m.input), m).leakage
    value, witness = min_epsilon(m, on_graph("clique:2", m))
    print(f"  leakage = {leakage:.3g} bits, eps* = {value}")
    assert leakage < 0.01
    assert math.isinf(value)
    assert witness == (0, 1, 2)
    print("✓ Negligible leakage with infinite eps")


def test_whole_database_bound():
    print("\n=== Test: Whole-Database Bound ===")
    assert abs(bound_whole_database(1, 2, LN2).bound_bits - math.log2(4 / 3)) < 1e-12
    assert abs(bound_whole_database(1, 3, LN2).bound_bits - 0.584963) < 1e-5
    assert abs(bound_whole_database(5, 4, 0.0).bound_bits) < 1e-12
    assert bound_whole_database(3, 4, math.inf).bound_bits == 3 * math.log2(4)
    expect(InvalidParameter, bound_whole_database, 0, 2, 1.0)
    expect(InvalidParameter, bound_whole_database, 1, 1, 1.0)
    expect(InvalidParameter, bound_whole_database, 1, 2, -0.5)
    print("✓ B(u, v, eps) values and domain")


def test_range_restricted_bound():
    print("\n=== Test: Range-Restricted Bound ===")
    assert floor_log(8, 2) == 3 and floor_log(7, 2) == 2 and floor_log(1, 5) == 0
    assert floor_log(1000, 10) == 3

    for u, v, eps in [(3, 2, 1.0), (2, 3, LN2), (1, 4, 0.1)]:
        full = bound_range_restricted(u, v, eps, v ** u).bound_bits
        assert abs(full - bound_whole_database(u, v, eps).bound_bits) < 1e-9
    assert bound_range_restricted(3, 2, 1.0, 1).bound_bits == 0.0

    values = [bound_range_restricted(3, 2, 1.0, r).bound_bits for r in range(1, 9)]
    assert all(0.0 <= b <= math.log2(r) + 1e-12 for r, b in enumerate(values, start=1))
    # within one l the bound grows with r
    assert values[1] < values[2] and values[3] < values[4] < values[5] < values[6]
    report = bound_range_restricted(3, 2, 1.0, 5)
    assert report.params["l"] == 2
    # large u and eps stay finite
    assert math.isfinite(bound_range_restricted(200, 10, 50.0, 10 ** 5).bound_bits)
    expect(InvalidParameter, bound_range_restricted, 2, 2, 1.0, 5)
    expect(InvalidParameter, bound_range_restricted, 2, 2, 1.0, 0)
    print(f"✓ Range bound per r: {[round(b, 4) for b in values]}")


def test_individual_bound_and_ratio_check():
    print("\n=== Test: Individual Bound ===")
    assert abs(bound_individual(LN2).bound_bits - 1.0) < 1e-12

    m = load_matrix(FIXTURES / "table1b.csv")
    verdict = check_epsilon_ratio_bound(m, uniform_prior(m.input), LN2)
    assert verdict.hypothesis_holds and verdict.conclusion_holds
    assert abs(verdict.pairwise_epsilon - LN2) < 1e-12
    assert abs(verdict.leakage - math.log2(12 / 7)) < 1e-12

    weak = check_epsilon_ratio_bound(m, uniform_prior(m.input), 0.5)
    assert not weak.hypothesis_holds
    print("✓ Pairwise ratio bound licenses the leakage bound")


def test_utility_bound():
    """Evaluated on the border profile of node 0"""
    print("\n=== Test: Utility Bound ===")
    assert abs(utility_bound(clique_graph(6), LN2) - 2 / 7) < 1e-12
    assert abs(utility_bound(ring_graph(5), LN2) - 0.4) < 1e-12
    assert abs(utility_bound(ring_graph(6), LN2) - 8 / 21) < 1e-12
    assert abs(utility_bound(clique_graph(4), 1.0) - alpha_closed_form(1, 3, 1.0)) < 1e-12
    assert abs(utility_bound(ring_graph(5), 2.0) - alpha_closed_form(2, 2, 2.0)) < 1e-12
    assert utility_bound(clique_graph(1), 1.0) == 1.0
    assert utility_bound(ring_graph(6), math.inf) == 1.0
    assert abs(utility_bound(ring_graph(6), 0.0) - 1 / 6) < 1e-12
    print("✓ Closed form on border-regular graphs")


def test_individual_channels():
    print("\n=== Test: Individual Channels ===")
    universe = build_universe(2, 3)
    m = build_tight_leakage(2, 3, LN2)
    channel = individual_channel(m, universe, 0, ["1"])
    assert channel.input.labels == ("01", "11", "21")
    assert np.array_equal(channel.entries, m.entries[[3, 4, 5]])
    other = individual_channel(m, universe, 1, [2])
    assert other.input.labels == ("20", "21", "22")

    assert len(individual_channels(m, universe, 1)) == 3
    table = individual_leakage_check(m, universe, 0, LN2)
    print(table.to_string(index=False))
    assert list(table.columns) == ["d_minus", "leakage_bits", "bound_bits", "within_bound"]
    assert len(table) == 3 and table["within_bound"].all()

    expect(QuerySpecError, individual_channel, m, universe, 2, ["0"])
    expect(QuerySpecError, individual_channel, m, universe, 0, ["0", "1"])
    expect(AlphabetMismatch, individual_channel, ChannelMatrix.from_rows(np.eye(4)), universe, 0, ["0"])
    print("✓ Every individual channel is within log2 e^eps")


def test_curve_bound():
    print("\n=== Test: Curve Data ===")
    df = curve_bound(10, [2, 10], np.linspace(0, 5, 6))
    assert list(df.columns) == ["v", "eps", "bound_bits"]
    assert len(df) == 12
    for v, group in df.groupby("v"):
        bits = group["bound_bits"].to_numpy()
        assert abs(bits[0]) < 1e-12 and np.all(np.diff(bits) > 0)
        assert np.all(bits < 10 * math.log2(v))
    expect(InvalidParameter, curve_bound, 10, [2], [1.0, 0.5])
    print("✓ Curves start at 0 and increase")


if __name__ == "__main__":
    print("=" * 60)
    print("DP ANALYSIS TESTS")
    print("=" * 60)

    test_min_epsilon_fixtures()
    test_verify_dp_threshold()
    test_no_converse()
    test_whole_database_bound()
    test_range_restricted_bound()
    test_individual_bound_and_ratio_check()
    test_utility_bound()
    test_individual_channels()
    test_curve_bound()

    print("\n" + "=" * 60)
    print("✓✓✓ ALL TESTS PASSED ✓✓✓")
    print("=" * 60)
