"""
Tests for the command-line entry point: subcommands, presets, JSON output
and exit codes
"""
import argparse
import io
import json
import math
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from engine.channel import load_matrix
from engine.errors import UniverseTooLarge
from engine.settings import AnalysisSettings
from main import EXIT_INVALID, EXIT_OK, EXIT_USAGE, graph_for, run

FIXTURES = Path(__file__).parent / "fixtures"
EPS = "0.6931471805599453"


def call(*argv):
    """Run the CLI in-process; returns (exit code, stdout, stderr)"""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv, "--json")
    assert code == EXIT_OK, f"exit {code}: {err}"
    return json.loads(out)


def test_bound_command():
    print("\n=== Test: bound ===")
    code, out, _ = call("bound", "--u", 1, "--v", 3, "--eps", "0.693147")
    assert code == EXIT_OK
    line = next(l for l in out.splitlines() if l.startswith("B = "))
    print(f"  {line}")
    assert abs(float(line.split()[2]) - 0.584963) < 1e-5

    doc = call_json("bound", "--u", 3, "--v", 2, "--eps", 1.0, "--r", 5)
    assert doc["values"]["l"] == 2
    assert doc["units"]["B"] == "bits"
    assert doc["values"]["B_range"] <= math.log2(5)

    eyes = call_json("bound", "--preset", "eyes")
    assert abs(eyes["values"]["B_individual"] - 1.0) < 1e-9
    print("✓ Bounds printed in bits")


def test_usage_errors():
    print("\n=== Test: Usage Errors ===")
    assert call("bound")[0] == EXIT_USAGE
    assert call("bound", "--u", 1, "--v", 1, "--eps", 1)[0] == EXIT_USAGE
    assert call("frobnicate")[0] == EXIT_USAGE
    assert call("bound", "--preset", "nope")[0] == EXIT_USAGE
    code, _, err = call("analyze", "--matrix", FIXTURES / "table1b.csv", "--graph", "ring")
    assert code == EXIT_USAGE and "error" in err
    assert call("analyze", "--matrix", FIXTURES / "table1b.csv")[0] == EXIT_USAGE
    print("✓ Usage errors exit 1")


def test_validation_errors():
    print("\n=== Test: Validation Errors ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bad.csv"
        path.write_text(",a,b\nx,0.5,0.6\ny,0.5,0.5\n")
        code, out, err = call("analyze", "--matrix", path, "--graph", "clique:2")
        assert code == EXIT_INVALID and out == ""
        assert "row 0" in err

    code, _, err = call("build", "optimal", "--graph", "ring:6", "--eps", 0.3)
    assert code == EXIT_INVALID and "remark1" in err
    code, _, err = call("build", "optimal", "--graph", "line:6", "--eps", EPS)
    assert code == EXIT_INVALID and "border_regularity" in err
    print("✓ Validation failures exit 2 with a listing on stderr")


def test_analyze_fixtures():
    print("\n=== Test: analyze ===")
    doc = call_json("analyze", "--matrix", FIXTURES / "table2b.csv", "--graph", "ring:6")
    values = doc["values"]
    assert abs(values["min_epsilon"] - math.log(2)) < 1e-9
    assert abs(values["utility"] - 4 / 11) < 1e-9
    assert abs(values["utility_bound"] - 8 / 21) < 1e-9
    assert all(doc["checks"].values())

    # printed decimals put one column ratio at 0.535/0.267 > 2, so strict ln 2-DP fails
    code, out, err = call("analyze", "--matrix", FIXTURES / "table1a.csv", "--preset", "table1_skewed",
                          "--json")
    doc = json.loads(out)
    assert code == EXIT_INVALID
    assert abs(doc["values"]["utility"] - 0.2412) < 5e-4
    assert not doc["checks"]["0.693147-DP"]
    assert "check failed: 0.693147-DP" in err

    code, out, _ = call("analyze", "--matrix", FIXTURES / "no_converse.csv", "--graph", "clique:2")
    assert code == EXIT_OK
    assert "min_epsilon = inf nats" in out
    print("✓ analyze reports eps, leakage, utility and checks")


def test_analyze_hamming_bounds():
    print("\n=== Test: analyze on Val^u ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "tight.csv"
        assert call("build", "tight", "--u", 2, "--v", 3, "--eps", EPS, "-o", path)[0] == EXIT_OK
        doc = call_json("analyze", "--matrix", path, "--graph", "hamming:2:3", "--eps", EPS)
        values = doc["values"]
        assert abs(values["capacity"] - values["bound_whole_database"]) < 1e-9
        assert values["individual_leakage_max"] <= values["bound_individual"] + 1e-9
        assert all(doc["checks"].values())

        export = Path(tmp) / "figures.csv"
        code, _, err = call("analyze", "--matrix", path, "--graph", "hamming:2:3", "--export", export)
        assert code == EXIT_OK and export.exists()
        assert "Exported" in err
    print("✓ Tight matrix meets the whole-database bound")


def test_analyze_with_query():
    """A counting query induces the line graph on 0..n"""
    print("\n=== Test: analyze --query ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "geo.csv"
        assert call("build", "geometric", "--n", 4, "--lambda", 0.5, "-o", path)[0] == EXIT_OK
        doc = call_json("analyze", "--matrix", path, "--query", "count:4:2:1")
        assert "line" in doc["values"]["graph"]
        assert abs(doc["values"]["min_epsilon"] - math.log(2)) < 1e-9
    print("✓ Induced adjacency used for DP")


def test_build_and_reanalyze():
    """build then analyze reports min eps <= requested eps"""
    print("\n=== Test: build round trip ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "m.csv"
        code, _, _ = call("build", "optimal", "--graph", "clique:6", "--eps", "0.693147", "-o", path)
        assert code == EXIT_OK
        doc = call_json("analyze", "--matrix", path, "--graph", "clique:6", "--prior", "uniform")
        assert abs(doc["values"]["utility"] - 2 / 7) < 1e-6
        assert doc["values"]["min_epsilon"] <= 0.693147 + 1e-9

        code, _, err = call("build", "optimal", "--preset", "table2", "-o", path)
        assert code == EXIT_OK and "not guaranteed optimal" in err
        assert np.allclose(load_matrix(path).entries, load_matrix(FIXTURES / "table2b.csv").entries)

        padded = Path(tmp) / "padded.csv"
        assert call("build", "geometric", "--n", 2, "--lambda", 0.5, "--pad-columns", 5, "-o", padded)[0] == EXIT_OK
        assert load_matrix(padded).shape == (3, 5)

    code, out, _ = call("build", "tight", "--u", 1, "--v", 2, "--eps", EPS)
    assert code == EXIT_OK
    assert out.splitlines()[0] == ",0,1"
    assert len(out.splitlines()) == 3
    print("✓ Built matrices are eps-DP")


def test_compare():
    print("\n=== Test: compare ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "g.csv"
        assert call("build", "geometric", "--n", 5, "--lambda", 0.5, "-o", path)[0] == EXIT_OK
        doc = call_json("compare", "--matrix", path, "--matrix", FIXTURES / "table2b.csv",
                        "--prior", "uniform")
    values = doc["values"]
    print(f"  g.csv {values['g.csv.utility']:.6f} vs table2b {values['table2b.csv.utility']:.6f}")
    assert abs(values["g.csv.utility"] - 4 / 9) < 1e-9
    assert abs(values["table2b.csv.utility"] - 4 / 11) < 1e-9

    doc = call_json("compare", "--preset", "table1")
    assert abs(doc["values"]["table1a.csv.utility"] - 0.2243) < 5e-4
    assert abs(doc["values"]["table1b.csv.utility"] - 2 / 7) < 1e-6
    assert "table1b.csv.min_epsilon" in doc["values"]
    print("✓ 4/9 vs 4/11 and 0.2243 vs 2/7")


def test_individual():
    print("\n=== Test: individual ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "tight.csv"
        assert call("build", "tight", "--u", 2, "--v", 3, "--eps", EPS, "-o", path)[0] == EXIT_OK
        doc = call_json("individual", "--matrix", path, "--u", 2, "--v", 3, "--target", 0, "--all")
        assert doc["values"]["channels"] == 3
        assert all(doc["checks"].values())

        doc = call_json("individual", "--matrix", path, "--u", 2, "--v", 3, "--target", 1, "--rest", "2")
        assert doc["values"]["rows"] == ["20", "21", "22"]
        assert doc["values"]["leakage"] <= 1.0 + 1e-9

        assert call("individual", "--matrix", path, "--u", 2, "--v", 3, "--target", 0)[0] == EXIT_USAGE
    print("✓ Individual leakage within log2 e^eps")


def test_curve():
    print("\n=== Test: curve ===")
    doc = call_json("curve", "--u", 10, "--v", 2, 10, "--eps-max", 5, "--points", 11)
    assert len(doc["points"]) == 22
    first = doc["points"][0]
    assert first["v"] == 2 and first["eps"] == 0.0 and abs(first["bound_bits"]) < 1e-12

    code, out, _ = call("curve", "--preset", "fig3")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "v,eps,bound_bits" and len(lines) == 301
    print("✓ Curve data as CSV and JSON")


def test_failed_check_exit_code():
    """The report is still written, but a failed check exits 2"""
    print("\n=== Test: Failed Check ===")
    code, out, err = call("analyze", "--matrix", FIXTURES / "table2a.csv", "--graph", "line:6",
                          "--eps", 0.1)
    assert code == EXIT_INVALID
    assert "✗ 0.1-DP" in out
    assert "check failed: 0.1-DP" in err

    code, _, _ = call("analyze", "--matrix", FIXTURES / "table2a.csv", "--graph", "line:6",
                      "--eps", EPS)
    assert code == EXIT_OK
    print("✓ Exit 2 when a check fails, 0 when all pass")


def test_query_universe_guard():
    print("\n=== Test: Query Universe Guard ===")
    args = argparse.Namespace(query="count:5:2:1", graph=None)
    try:
        graph_for(args, settings=AnalysisSettings({"universe_max": 4}))
    except UniverseTooLarge:
        pass
    else:
        raise AssertionError("2^5 databases should exceed universe_max = 4")
    assert graph_for(args).n == 6
    print("✓ --query honours universe_max from the settings")


if __name__ == "__main__":
    print("=" * 60)
    print("CLI TESTS")
    print("=" * 60)

    test_bound_command()
    test_usage_errors()
    test_validation_errors()
    test_analyze_fixtures()
    test_analyze_hamming_bounds()
    test_analyze_with_query()
    test_build_and_reanalyze()
    test_compare()
    test_individual()
    test_curve()
    test_failed_check_exit_code()
    test_query_universe_guard()

    print("\n" + "=" * 60)
    print("✓✓✓ ALL TESTS PASSED ✓✓✓")
    print("=" * 60)
