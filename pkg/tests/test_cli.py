import math

import numpy as np
import pytest

from cli.main import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from fitgrowth_core.ingest_io import load_table, read_table, write_table
from fitgrowth_core.panel_model import DetrendedObservation, TradeFlows
from tests.helpers import flows_from_matrix, staircase

MACRO_HEADER = "year,country,gdp_pc,capital_pc,employment_rate,human_capital,labor_share,population"
CONSTANT_PARAMS = "A = 1\nalpha = 0.5\nL = 1\ndelta = 0.1\ns_max = 0.2\n"
SIGMOID_PARAMS = CONSTANT_PARAMS.replace("delta = 0.1", "delta = 0.05").replace("0.2", "0.4") + (
    "K_F = 10\nsaving_mode = sigmoid\n"
)


@pytest.fixture
def trade_file(tmp_path):
    def _make(x, years=(2000,), name="trade.csv"):
        records = []
        for year in years:
            records.extend(flows_from_matrix(x, year=year).records)
        path = tmp_path / name
        write_table(path, TradeFlows(tuple(sorted(records))))
        return path
    return _make


@pytest.fixture
def macro_file(write_text):
    def _make(rows):
        return write_text("macro.csv", "\n".join([MACRO_HEADER] + rows) + "\n")
    return _make


def _run(*argv) -> int:
    return main([str(a) for a in argv])


def test_rca_happy_path(trade_file, tmp_path):
    out = tmp_path / "out"
    code = _run("rca", "--trade", trade_file([[10, 0], [0, 10]]), "--year", 2000, "--out", out)
    assert code == EXIT_OK
    rca = read_table(out / "rca.csv", "rca")
    assert rca["rca"].tolist() == [2.0, 0.0, 0.0, 2.0]
    assert read_table(out / "matrix.csv", "matrix")["m"].tolist() == [1, 0, 0, 1]
    assert (out / "run_manifest.txt").exists()


def test_missing_required_flag_is_a_usage_error(tmp_path, capsys):
    assert _run("rca", "--year", 2000, "--out", tmp_path) == EXIT_VALIDATION
    assert "usage" in capsys.readouterr().err


def test_absent_year_is_a_validation_error(trade_file, tmp_path, capsys):
    code = _run("rca", "--trade", trade_file([[1, 2]]), "--year", 1999, "--out", tmp_path / "out")
    assert code == EXIT_VALIDATION
    assert "1999" in capsys.readouterr().err


def test_missing_input_file_is_an_io_error(tmp_path):
    assert _run("rca", "--trade", tmp_path / "nope.csv", "--year", 2000, "--out", tmp_path) == EXIT_IO


def test_missing_config_file_is_an_io_error(trade_file, tmp_path):
    code = _run("--config", tmp_path / "missing.yaml", "rca", "--trade", trade_file([[1]]),
                "--year", 2000, "--out", tmp_path / "out")
    assert code == EXIT_IO


def test_version_and_conflicting_verbosity(capsys):
    assert _run("--version") == EXIT_OK
    assert "fitgrowth" in capsys.readouterr().out
    assert _run("-v", "-q", "synth", "--out", "x") == EXIT_VALIDATION


def test_uniform_trade_gives_unit_fitness(trade_file, tmp_path):
    out = tmp_path / "out"
    path = trade_file(np.full((3, 4), 5.0), years=(2000, 2001))
    assert _run("fitness", "--trade", path, "--years", "2000..2001", "--out", out) == EXIT_OK

    fitness = read_table(out / "fitness.csv", "fitness")
    assert fitness["fitness"].tolist() == [1.0] * 6
    assert fitness["rank"].tolist() == [1] * 6
    assert read_table(out / "complexity.csv", "complexity")["complexity"].tolist() == [1.0] * 8
    log = read_table(out / "convergence.csv", "convergence")
    assert log["iterations"].tolist() == [1, 1]
    assert log["converged"].all()


def _nested_with_private_products() -> np.ndarray:
    """Staircase over p0..p3 plus one private product per country; every country exports 100 in total.

    Equal totals put every staircase cell at RCA 5/ubiquity >= 1.25, so M_cp
    is the staircase with a diagonal block and diversification is 5, 4, 3, 2, 1.
    """
    x = np.zeros((5, 9))
    x[:4, :4] = staircase(4)
    for c in range(5):
        x[c, 4 + c] = 100.0 - x[c, :4].sum()
    return x


def test_nested_trade_ranks_by_diversification(trade_file, tmp_path):
    out = tmp_path / "out"
    assert _run("fitness", "--trade", trade_file(_nested_with_private_products()), "--out", out) == EXIT_OK
    assert read_table(out / "fitness.csv", "fitness")["country"].tolist() == ["A", "B", "C", "D", "E"]

    degrees = read_table(out / "diversification.csv", "diversification")
    assert degrees.set_index("country")["diversification"][list("ABCDE")].tolist() == [5, 4, 3, 2, 1]
    ubiquity = read_table(out / "ubiquity.csv", "ubiquity").set_index("product")["ubiquity"]
    assert ubiquity[["p0", "p1", "p2", "p3", "p4"]].tolist() == [4, 3, 2, 1, 1]

    assert _run("rca", "--trade", trade_file(_nested_with_private_products()), "--year", 2000,
                "--out", tmp_path / "rca") == EXIT_OK
    matrix = read_table(tmp_path / "rca" / "matrix.csv", "matrix")
    assert matrix.groupby("country", sort=True)["m"].sum().tolist() == [5, 4, 3, 2, 1]


def test_ordered_matrix_follows_fitness(trade_file, tmp_path):
    rng = np.random.default_rng(5)
    x = _nested_with_private_products()
    rows, cols = rng.permutation(5), rng.permutation(9)
    shuffled = trade_file(x[np.ix_(rows, cols)], name="shuffled.csv")
    out = tmp_path / "out"
    assert _run("fitness", "--trade", shuffled, "--out", out) == EXIT_OK

    fitness = read_table(out / "fitness.csv", "fitness")
    ordered = load_table(out / "matrix_ordered.csv", "matrix")
    assert list(ordered.countries) == fitness["country"].tolist()
    values = fitness.set_index("country")["fitness"]
    assert values[list(ordered.countries)].is_monotonic_decreasing
    assert ordered.m.sum(axis=1).tolist() == [5, 4, 3, 2, 1]


def test_budget_exhaustion_is_not_fatal(trade_file, tmp_path):
    out = tmp_path / "out"
    path = trade_file(_nested_with_private_products())
    assert _run("fitness", "--trade", path, "--max-iter", 1, "--out", out) == EXIT_OK
    assert read_table(out / "convergence.csv", "convergence")["converged"].tolist() == [False]


def test_decompose_with_alpha_override(macro_file, tmp_path):
    path = macro_file([
        "2000,A,1000,3000,0.5,2.0,0.6,1000000",
        f"2001,A,{1000 * math.exp(0.11)},{3000 * math.exp(0.2)},0.5,2.0,0.6,1000000",
        "2000,B,2000,3000,0.5,2.0,0.6,1000000",
        f"2001,B,{2000 * math.exp(0.02)},3000,0.5,2.0,0.6,1000000",
    ])
    out = tmp_path / "out"
    assert _run("decompose", "--macro", path, "--alpha", 0.3, "--out", out) == EXIT_OK

    table = read_table(out / "decomposition.csv", "decomposition")
    assert table["alpha"].tolist() == [0.3, 0.3]
    a = table.set_index("country").loc["A"]
    assert a["term_k"] == pytest.approx(0.06, abs=1e-12)
    assert a["a"] == pytest.approx(0.05, abs=1e-12)
    assert (table["y"] == table["a"] + table["term_k"] + table["term_e"] + table["term_h"]).all()

    detrended = read_table(out / "detrended.csv", "detrended")
    assert detrended["relative_gdp"].sum() == pytest.approx(2.0)


def test_decompose_lists_violations(macro_file, tmp_path, capsys):
    path = macro_file([
        "2000,A,1000,3000,0.5,2.0,0.6,1000000",
        "2001,A,1000,3000,0.5,2.0,0.6,1000000",
        "2000,B,1000,3000,0.5,2.0,0.6,1000000",
    ])
    assert _run("decompose", "--macro", path, "--out", tmp_path / "out") == EXIT_VALIDATION
    assert "insufficient consecutive years" in capsys.readouterr().err


def test_pipeline_rejects_the_panel_decompose_rejects(macro_file, trade_file, tmp_path, capsys):
    macro_file([
        "2000,A,1000,3000,0.5,2.0,0.6,1000000",
        "2001,A,1100,3000,0.5,2.0,0.6,1000000",
        "2000,B,1000,3000,0.5,2.0,0.6,1000000",
    ])
    trade_file([[1, 2], [3, 1]], years=(2000, 2001))
    assert _run("pipeline", "--in", tmp_path, "--bootstrap-b", 100, "--out", tmp_path / "out") == EXIT_VALIDATION
    assert "insufficient consecutive years" in capsys.readouterr().err
    assert not (tmp_path / "out" / "fitness.csv").exists()


def test_equilibria_and_simulation(write_text, tmp_path):
    constant = write_text("constant.txt", CONSTANT_PARAMS)
    out = tmp_path / "out"
    assert _run("equilibria", "--params", constant, "--out", out) == EXIT_OK
    eqs = read_table(out / "equilibria.csv", "equilibria")
    assert eqs["stability"].tolist() == ["unstable", "stable"]
    assert eqs["k_star"].iloc[1] == pytest.approx(4.0, rel=1e-9)

    assert _run("simulate", "--params", constant, "--k0", 4.0, "--steps", 20, "--out", out) == EXIT_OK
    path = read_table(out / "trajectory.csv", "trajectory")
    assert len(path) == 21
    assert np.allclose(path["k"], 4.0, rtol=0, atol=1e-12)


def test_sigmoid_equilibria_alternate(write_text, tmp_path):
    sigmoid = write_text("sigmoid.txt", SIGMOID_PARAMS)
    out = tmp_path / "out"
    assert _run("equilibria", "--params", sigmoid, "--out", out) == EXIT_OK
    eqs = read_table(out / "equilibria.csv", "equilibria")
    assert eqs["stability"].tolist() == ["unstable", "stable", "unstable", "stable"]
    assert eqs["k_star"].iloc[-1] == pytest.approx(64.0, abs=1e-6)


def _write_detrended(path, input_growth):
    rng = np.random.default_rng(0)
    rows = [
        DetrendedObservation(f"C{i}", 2000 + i % 5, float(rng.uniform(0.2, 3.0)), g, 0.0, g)
        for i, g in enumerate(input_growth)
    ]
    write_table(path, rows, "detrended")
    return path


def test_kernel_on_constant_response(tmp_path):
    detrended = _write_detrended(tmp_path / "detrended.csv", [0.01] * 40)
    out = tmp_path / "out"
    code = _run("kernel", "--detrended", detrended, "--grid-n", 7, "--bootstrap-b", 100, "--out", out)
    assert code == EXIT_OK

    curve = read_table(out / "kernel_1d.csv", "kernel1d")
    assert len(curve) == 7
    assert (curve["estimate"] == 0.01).all()
    assert (curve["ci_low"] == 0.01).all() and (curve["ci_high"] == 0.01).all()


def test_kernel_is_deterministic_for_a_seed(tmp_path):
    rng = np.random.default_rng(1)
    detrended = _write_detrended(tmp_path / "detrended.csv", rng.normal(0, 0.02, 40).tolist())
    args = ["kernel", "--detrended", detrended, "--grid-n", 9, "--bootstrap-b", 100, "--seed", 5]
    assert _run(*args, "--out", tmp_path / "one") == EXIT_OK
    assert _run(*args, "--out", tmp_path / "two") == EXIT_OK
    for name in ("kernel_1d.csv", "run_manifest.txt"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_kernel_flag_combinations(tmp_path):
    detrended = _write_detrended(tmp_path / "detrended.csv", [0.01] * 10)
    out = tmp_path / "out"
    assert _run("kernel", "--detrended", detrended, "--dim", 2, "--out", out) == EXIT_VALIDATION
    assert _run("kernel", "--detrended", detrended, "--bandwidth", 0.1, 0.2, "--out", out) == EXIT_VALIDATION
    assert _run("kernel", "--detrended", detrended, "--dim", 3, "--out", out) == EXIT_VALIDATION


def test_manifest_records_effective_parameters(trade_file, tmp_path):
    out = tmp_path / "out"
    assert _run("fitness", "--trade", trade_file([[1, 1], [0, 1]]), "--tol", 1e-6, "--out", out) == EXIT_OK
    text = (out / "run_manifest.txt").read_text(encoding="utf-8")
    assert "command: fitness" in text
    assert "tol = 1e-06" in text
    assert "max_iter = 1000" in text
    assert "kernel.bootstrap_b = 1000" in text
    assert "kernel.level = 0.9" in text
    assert "fitness.csv" in text
