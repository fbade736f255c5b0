import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from coset_chains import chains, mixing, spectral, stats, tables
from coset_chains.cli import main

ROWS, COLS = "3,2", "2,2,1"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_exit(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    capsys.readouterr()
    return exc.value.code


def test_spectrum_matches_library(capsys):
    code, out, _ = run(["spectrum", "--rows", "3,1,1", "--cols", "2,2,1"], capsys)
    assert code == 0
    got = {tuple(e["partition"]): (Fraction(e["beta"]), e["multiplicity"]) for e in json.loads(out)}
    assert got == spectral.spectrum((3, 1, 1), (2, 2, 1)).as_dict()


def test_spectrum_csv(capsys):
    code, out, _ = run(["spectrum", "--rows", "3,1,1", "--cols", "2,2,1", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["multiplicity"] for r in rows] == ["1", "4", "2", "1"]
    assert [Fraction(r["beta"]) for r in rows] == [1, Fraction(3, 5), Fraction(9, 25), Fraction(1, 5)]


def test_enumerate_and_count(capsys):
    _, out, _ = run(["enumerate", "--rows", ROWS, "--cols", COLS, "--format", "json"], capsys)
    assert [tuple(map(tuple, t)) for t in json.loads(out)] == [t.entries for t in tables.enumerate_tables((3, 2), (2, 2, 1))]
    _, out, _ = run(["enumerate", "--rows", "4,4,4", "--cols", "3,3,3,3", "--count-only"], capsys)
    assert int(out) == tables.count_tables((4, 4, 4), (3, 3, 3, 3))
    _, out, _ = run(["enumerate", "--rows", ROWS, "--cols", COLS, "--format", "csv"], capsys)
    assert out.splitlines()[0] == "index,x11,x12,x13,x21,x22,x23" and len(out.splitlines()) == 6


def test_pmf_exact(capsys):
    _, out, _ = run(["pmf", "--rows", ROWS, "--cols", COLS, "--exact", "--format", "json"], capsys)
    data = json.loads(out)
    assert sum(Fraction(d["pmf"]) for d in data) == 1
    assert [d["coset_size"] for d in data] == [tables.coset_size(t) for t in tables.enumerate_tables((3, 2), (2, 2, 1))]


def test_sample_deterministic(capsys):
    argv = ["sample", "--rows", ROWS, "--cols", COLS, "--n", "50", "--seed", "7", "--format", "json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    expected = tables.sample_fisher_yates_many((3, 2), (2, 2, 1), 50, tables.make_rng(7))
    assert np.array_equal(np.array(json.loads(a)), expected)


def test_evolve_matches_library(capsys):
    _, out, _ = run(["evolve", "--rows", ROWS, "--cols", COLS, "--t", "3", "--exact", "--start", "1"], capsys)
    data = json.loads(out)
    k = chains.rt_kernel((3, 2), (2, 2, 1))
    ev = mixing.evolve(k, k.states[1], 3)
    assert [Fraction(d["p"]) for d in data["distribution"]] == list(ev.dist)


def test_mix_profile_and_paths(capsys, tmp_path):
    out_file = tmp_path / "mix.csv"
    argv = ["mix", "--rows", ROWS, "--cols", COLS, "--t-max", "4", "--paths", "2000", "--seed", "5",
            "--out", str(out_file)]
    assert main(argv) == 0
    first = out_file.read_text()
    assert main(argv) == 0
    assert out_file.read_text() == first
    rows = list(csv.DictReader(io.StringIO(first)))
    assert [int(r["t"]) for r in rows] == [0, 1, 2, 3, 4]
    k = chains.rt_kernel((3, 2), (2, 2, 1))
    prof = mixing.distance_profile(k, k.states[0], 4)
    for r, tv, c2 in zip(rows, prof.tv, prof.chi2):
        assert float(r["tv"]) == pytest.approx(tv) and float(r["chi2"]) == pytest.approx(c2)
        assert float(r["ci_low"]) <= float(r["tv_mc"]) <= float(r["ci_high"])
    assert usage_exit(["mix", "--rows", ROWS, "--cols", COLS, "--chain", "uniform", "--paths", "10"], capsys) == 2


def test_wilson_one_based_cell(capsys):
    _, out, _ = run(["wilson", "--rows", "6,4", "--cols", "5,5", "--cell", "2,1", "--c", "0.5"], capsys)
    b = mixing.wilson_lower_bound((6, 4), (5, 5), 1, 0, 0.5)
    assert json.loads(out)["t_lower"] == b.t_lower and json.loads(out)["case"] == b.case


def test_bounds(capsys):
    _, out, _ = run(["bounds", "--k", "1", "--cols", "38,2", "--j", "1", "--c", "1"], capsys)
    b = mixing.extreme_state_bounds(1, (38, 2), 0, 1.0)
    assert json.loads(out)["t_upper"] == b.t_upper and json.loads(out)["t_lower"] == b.t_lower
    code, out, _ = run(["bounds", "--kind", "avg-upper", "--k", "2", "--l", "3", "--n", "6", "--c", "1"], capsys)
    assert code == 0 and json.loads(out)["holds"] is True
    code, _, err = run(["bounds", "--kind", "avg-upper", "--k", "2", "--l", "5", "--n", "7", "--c", "1"], capsys)
    assert code == 1 and "k <= l" in err


def test_compare(capsys):
    _, out, _ = run(["compare", "--rows", "2,2,2", "--cols", "2,2,2"], capsys)
    data = json.loads(out)
    assert data["holds_a"] and data["holds_b"]
    assert data["tau"]["FY"] == pytest.approx(mixing.relaxation_comparison((2, 2, 2), (2, 2, 2)).tau["FY"])


def test_analyze_text_and_json(capsys):
    _, out, _ = run(["analyze", "--dataset", "midtown"], capsys)
    assert "chi2 = 45.9853 on 15 df" in out
    assert "2.233" in out and "3.462" in out
    _, out, _ = run(["analyze", "--dataset", "hair_eye", "--panel", "--format", "json"], capsys)
    data = json.loads(out)
    assert len(data["quadratic_panel"]) == 136
    assert data["quadratic_panel"][0]["cells"] == [[1, 1], [1, 1]]
    assert data["chi2"] == pytest.approx(float(tables.chi_square_statistic(stats.builtin("hair_eye").table)))


def test_analyze_table_file(capsys, tmp_path):
    path = tmp_path / "t.csv"
    tables.save_table(stats.builtin("midtown").table, path)
    _, from_file, _ = run(["analyze", "--table", str(path), "--format", "json"], capsys)
    _, builtin_out, _ = run(["analyze", "--dataset", "midtown", "--format", "json"], capsys)
    assert json.loads(from_file) == json.loads(builtin_out)


def test_three_way(capsys):
    _, out, _ = run(["three-way", "--lam", "2,1", "--mu", "2,1", "--rho", "1,1,1"], capsys)
    data = json.loads(out)
    assert data["rows_sum_to_one"] and data["detailed_balance"] and data["components"] == 1


@pytest.mark.parametrize("argv", [
    ["spectrum", "--rows", "3,2", "--cols", "2,2"],
    ["spectrum", "--rows", "3,x", "--cols", "2,2,1"],
    ["spectrum", "--rows", "3,-1", "--cols", "2"],
    ["spectrum", "--cols", "2,2,1"],
    ["wilson", "--rows", ROWS, "--cols", COLS, "--cell", "0,1"],
    ["sample", "--rows", ROWS, "--cols", COLS, "--n", "0"],
    ["bounds", "--kind", "avg-lower"],
    ["bounds", "--k", "1"],
    ["analyze"],
    ["three-way", "--lam", "2,1", "--mu", "2,1", "--rho", "1,1"],
    ["nonsense"],
    [],
])
def test_usage_errors(argv, capsys):
    assert usage_exit(argv, capsys) == 2


def test_computation_errors(capsys, tmp_path, monkeypatch):
    code, _, err = run(["analyze", "--table", str(tmp_path / "missing.json")], capsys)
    assert code == 1 and err
    monkeypatch.setenv("COSET_CHAINS_MAX_STATES", "10")
    code, _, err = run(["enumerate", "--rows", "4,4", "--cols", "2,2,2,2"], capsys)
    assert code == 1 and "10" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([[1, -2], [0, 1]]))
    code, _, _ = run(["analyze", "--table", str(bad)], capsys)
    assert code == 1


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "coset_chains.cli", "spectrum", "--rows", "2,1", "--cols", "2,1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)[0]["beta"] == "1"
