import pytest

from cli.main import EXIT_OK, EXIT_VALIDATION, main
from fitgrowth_core.ingest_io import load_table, read_table, write_table
from fitgrowth_core.panel_model import DataValidationError, FitnessResult, Tertile
from fitgrowth_core.pipeline import Pipeline, fitness_recovery, parse_years, select_years, tertile_labels
from fitgrowth_core.poverty_trap_sim import synth_world

FIGURE_TABLES = (
    "cleaning.csv", "rca.csv", "matrix.csv", "matrix_ordered.csv", "diversification.csv", "ubiquity.csv",
    "fitness.csv", "complexity.csv", "convergence.csv",
    "decomposition.csv", "detrended.csv", "kernel_1d.csv", "kernel_1d_low.csv", "kernel_1d_mid.csv",
    "kernel_1d_high.csv", "kernel_2d.csv", "thresholds.csv",
)


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    world = synth_world(n_countries=12, T=50, seed=7)
    write_table(out / "trade.csv", world.flows)
    write_table(out / "macro.csv", world.panel)
    write_table(out / "true_fitness.csv", world.true_fitness, "true_fitness")
    return out


def test_parse_years():
    assert parse_years(None) is None
    assert parse_years("1990..1995") == (1990, 1995)
    assert parse_years("2001") == (2001, 2001)
    with pytest.raises(DataValidationError):
        parse_years("1995..1990")
    with pytest.raises(DataValidationError):
        parse_years("abc")


def test_select_years():
    assert select_years([1999, 2000, 2001], (2000, 2005)) == [2000, 2001]
    with pytest.raises(DataValidationError, match="1990..1991"):
        select_years([2000], (1990, 1991))


def test_recovery_uses_time_averaged_fitness():
    fits = [
        FitnessResult(2000, {"A": 1.0, "B": 2.0, "C": 3.0}, {"p": 1.0}, 1, True, 0),
        FitnessResult(2001, {"A": 1.2, "B": 1.1, "C": 3.0}, {"p": 1.0}, 1, True, 0),
    ]
    assert fitness_recovery(fits, {"A": 1.0, "B": 2.0, "C": 3.0}) == pytest.approx(1.0)


def test_synthetic_world_shows_falling_threshold(world_dir, tmp_path):
    result = Pipeline(world_dir, tmp_path / "out").run(B=100, seed=0, grid_n=100, grid_n_2d=10)

    assert sorted(p.name for p in result.outputs) == sorted(FIGURE_TABLES)
    for name in FIGURE_TABLES:
        assert (tmp_path / "out" / name).exists()

    high, low = result.thresholds[Tertile.HIGH], result.thresholds[Tertile.LOW]
    assert high is not None and low is not None
    assert high < low
    assert result.recovery >= 0.8

    thresholds = load_table(tmp_path / "out" / "thresholds.csv", "thresholds")
    assert thresholds["high"] == high and thresholds["low"] == low


def test_pipeline_command_is_byte_identical_across_runs(world_dir, tmp_path):
    argv = ["pipeline", "--in", str(world_dir), "--bootstrap-b", "100", "--grid-n", "40",
            "--grid-n-2d", "8", "--seed", "3"]
    assert main(argv + ["--out", str(tmp_path / "one")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "two")]) == EXIT_OK

    for name in FIGURE_TABLES + ("run_manifest.txt",):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes(), name

    manifest = (tmp_path / "one" / "run_manifest.txt").read_text(encoding="utf-8")
    assert "command: pipeline" in manifest
    assert "recovery = " in manifest
    assert "alpha = labor_share" in manifest


def test_pipeline_matches_the_subcommands(world_dir, tmp_path):
    """The pipeline's fitness and detrended tables equal the standalone commands' output."""
    assert main(["pipeline", "--in", str(world_dir), "--years", "1963..1965", "--bootstrap-b", "100",
                 "--grid-n", "20", "--grid-n-2d", "5", "--out", str(tmp_path / "pipe")]) == EXIT_OK
    assert main(["fitness", "--trade", str(world_dir / "trade.csv"), "--years", "1963..1965",
                 "--out", str(tmp_path / "fit")]) == EXIT_OK
    assert main(["decompose", "--macro", str(world_dir / "macro.csv"), "--out", str(tmp_path / "dec")]) == EXIT_OK

    same = {
        "fit": ("fitness.csv", "complexity.csv", "convergence.csv", "matrix_ordered.csv",
                "diversification.csv", "ubiquity.csv"),
        "dec": ("decomposition.csv", "detrended.csv"),
    }
    for where, names in same.items():
        for name in names:
            assert (tmp_path / "pipe" / name).read_bytes() == (tmp_path / where / name).read_bytes(), name

    fitness = read_table(tmp_path / "pipe" / "fitness.csv", "fitness")
    assert sorted(fitness["year"].unique()) == [1963, 1964, 1965]


def test_ordered_matrices_follow_fitness_each_year(world_dir, tmp_path):
    Pipeline(world_dir, tmp_path).run(years=(1970, 1971), B=100, grid_n=10, grid_n_2d=4)
    fitness = load_table(tmp_path / "fitness.csv", "fitness")
    for ordered in load_table(tmp_path / "matrix_ordered.csv", "matrix"):
        values = [fitness[ordered.year][c] for c in ordered.countries]
        assert values == sorted(values, reverse=True)


def test_first_year_alone_has_no_growth_to_pair(world_dir, tmp_path, capsys):
    code = main(["pipeline", "--in", str(world_dir), "--years", "1963", "--bootstrap-b", "100",
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "previous year" in err
    assert "growth starts in 1964" in err


def test_tertile_labels_key_on_country_and_year():
    labels = tertile_labels({
        2000: {"A": 3.0, "B": 2.0, "C": 1.0},
        2001: {"A": 1.0, "B": 2.0, "C": 3.0},
    })
    assert labels[("A", 2000)] is Tertile.HIGH
    assert labels[("A", 2001)] is Tertile.LOW
    assert labels[("B", 2001)] is Tertile.MID
