"""End-to-end analysis chain shared by the CLI subcommands."""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from fitgrowth_core.concurrency_controller import get_concurrency_controller
from fitgrowth_core.config import get_config
from fitgrowth_core.fitness_complexity import iterate_fitness
from fitgrowth_core.growth_accounting import decompose_panel, detrend, spearman, tertile_split
from fitgrowth_core.ingest_io import load_table, parse_macro_csv, parse_trade_csv, write_table
from fitgrowth_core.kernel_regression import (
    bandwidth_default,
    bootstrap_band,
    make_grid,
    make_grid_2d,
    threshold_crossing,
)
from fitgrowth_core.panel_model import (
    CountryProductMatrix,
    DataValidationError,
    DetrendedObservation,
    FitnessResult,
    GrowthDecomposition,
    KernelEstimate,
    MacroPanel,
    Tertile,
    TradeFlows,
    validate_panel,
)
from fitgrowth_core.rca_binarize import RcaMatrix, binarize, compute_rca, order_matrix

logger = logging.getLogger(__name__)

RESPONSES = ("input_growth", "a", "y")
FitnessMap = Mapping[int, Mapping[str, float]]


class YearFitness(NamedTuple):
    rca: RcaMatrix
    matrix: CountryProductMatrix
    fitness: FitnessResult

    @property
    def ordered(self) -> CountryProductMatrix:
        """M_cp with rows by descending fitness and columns by ascending complexity."""
        return order_matrix(self.matrix, self.fitness)


def parse_years(text: Optional[str]) -> Optional[Tuple[int, int]]:
    """``A..B`` (inclusive) or a single year; None means every year."""
    if not text:
        return None
    first, sep, last = text.partition("..")
    try:
        years = (int(first), int(last) if sep else int(first))
    except ValueError as e:
        raise DataValidationError(f"invalid year range {text!r}, expected A..B") from e
    if years[0] > years[1]:
        raise DataValidationError(f"empty year range {text!r}")
    return years


def select_years(available: Sequence[int], span: Optional[Tuple[int, int]]) -> List[int]:
    if span is None:
        return list(available)
    years = [y for y in available if span[0] <= y <= span[1]]
    if not years:
        raise DataValidationError(f"no trade data for years {span[0]}..{span[1]}")
    return years


def fitness_for_year(flows: TradeFlows, year: int, threshold: Optional[float] = None, **fitness_kwargs) -> YearFitness:
    threshold = get_config().rca.threshold if threshold is None else threshold
    rca = compute_rca(flows, year)
    matrix = binarize(rca, threshold)
    return YearFitness(rca, matrix, iterate_fitness(matrix, **fitness_kwargs))


def fitness_by_year(
    flows: TradeFlows,
    years: Optional[Sequence[int]] = None,
    threshold: Optional[float] = None,
    **fitness_kwargs,
) -> List[YearFitness]:
    """RCA, binarization and fitness for each year, run concurrently and returned in year order."""
    years = flows.years() if years is None else list(years)
    with get_concurrency_controller().executor() as pool:
        futures = [pool.submit(fitness_for_year, flows, y, threshold, **fitness_kwargs) for y in years]
        results = [f.result() for f in futures]

    not_converged = [r.fitness.year for r in results if not r.fitness.converged]
    if not_converged:
        logger.warning(f"Fitness did not converge for years {not_converged}")
    logger.info(f"Fitness computed for {len(results)} years")
    return results


def fitness_map(results: Sequence[FitnessResult]) -> Dict[int, Dict[str, float]]:
    return {fit.year: dict(fit.fitness) for fit in results}


def write_fitness_tables(out_dir: Path, per_year: Sequence[YearFitness]) -> List[Path]:
    """Fitness, complexity, convergence, the ordered matrix and degree tables for every year."""
    out_dir = Path(out_dir)
    results = [r.fitness for r in per_year]
    matrices = [r.matrix for r in per_year]
    return [
        write_table(out_dir / "fitness.csv", results, "fitness"),
        write_table(out_dir / "complexity.csv", results, "complexity"),
        write_table(out_dir / "convergence.csv", results, "convergence"),
        write_table(out_dir / "matrix_ordered.csv", [r.ordered for r in per_year], "matrix"),
        write_table(out_dir / "diversification.csv", matrices, "diversification"),
        write_table(out_dir / "ubiquity.csv", matrices, "ubiquity"),
    ]


def check_panel(panel: MacroPanel) -> None:
    violations = validate_panel(panel)
    if violations:
        listed = "; ".join(f"{v.country} {v.year} {v.field}: {v.reason}" for v in violations)
        raise DataValidationError(f"macro panel failed validation: {listed}")


def growth_tables(panel: MacroPanel, alpha: Optional[float] = None) -> Tuple[List[GrowthDecomposition], List[DetrendedObservation]]:
    """Validated decomposition and detrended tables for a macro panel."""
    check_panel(panel)
    decompositions = decompose_panel(panel, alpha=alpha)
    if not decompositions:
        raise DataValidationError("no country-year could be decomposed")
    return decompositions, detrend(decompositions, panel)


def tertile_labels(fitness: FitnessMap) -> Dict[Tuple[str, int], Tertile]:
    labels = {}
    for year, values in fitness.items():
        for country, tertile in tertile_split(values, year).items():
            labels[(country, year)] = tertile
    return labels


def _response(rows: Sequence[DetrendedObservation], response: str) -> np.ndarray:
    if response not in RESPONSES:
        raise DataValidationError(f"unknown response {response!r}, expected one of {RESPONSES}")
    return np.array([getattr(r, response) for r in rows])


def kernel_1d(
    detrended: Sequence[DetrendedObservation],
    response: str = "input_growth",
    fitness: Optional[FitnessMap] = None,
    tertile: Optional[Tertile] = None,
    grid_n: Optional[int] = None,
    bandwidth: Optional[float] = None,
    B: Optional[int] = None,
    level: Optional[float] = None,
    seed: Optional[int] = None,
) -> KernelEstimate:
    """Expected response against relative GDP, optionally for one fitness tertile.

    Grid and bandwidth always come from the full pooled sample, so curves
    for different tertiles share one axis.
    """
    if not detrended:
        raise DataValidationError("no detrended observations")
    all_x = np.array([r.relative_gdp for r in detrended])
    grid = make_grid(all_x, grid_n)
    h = bandwidth_default(all_x) if bandwidth is None else bandwidth

    rows = list(detrended)
    if tertile is not None:
        if fitness is None:
            raise DataValidationError("a tertile curve needs fitness values")
        labels = tertile_labels(fitness)
        rows = [r for r in rows if labels.get((r.country, r.year)) is Tertile(tertile)]
        if not rows:
            raise DataValidationError(f"no observations in the {Tertile(tertile).value} tertile")

    xs = np.array([r.relative_gdp for r in rows])
    return bootstrap_band(xs, _response(rows, response), grid, h, B=B, level=level, seed=seed)


def kernel_2d(
    detrended: Sequence[DetrendedObservation],
    fitness: FitnessMap,
    response: str = "input_growth",
    grid_n: Optional[int] = None,
    bandwidth: Optional[Tuple[float, float]] = None,
    B: Optional[int] = None,
    level: Optional[float] = None,
    seed: Optional[int] = None,
    log_fitness: Optional[bool] = None,
) -> KernelEstimate:
    """Expected response over (relative GDP, fitness); fitness is log10 by default."""
    cfg = get_config()
    log_fitness = cfg.kernel.log_fitness if log_fitness is None else log_fitness

    rows = [r for r in detrended if r.country in fitness.get(r.year, {})]
    if not rows:
        raise DataValidationError("no detrended observation has a fitness value")

    x1 = np.array([r.relative_gdp for r in rows])
    x2 = np.array([fitness[r.year][r.country] for r in rows])
    if log_fitness:
        x2 = np.log10(np.maximum(x2, cfg.fitness.floor))

    grid = make_grid_2d(x1, x2, grid_n)
    h = (bandwidth_default(x1), bandwidth_default(x2)) if bandwidth is None else bandwidth
    return bootstrap_band(np.column_stack([x1, x2]), _response(rows, response), grid, h, B=B, level=level, seed=seed)


def fitness_recovery(results: Sequence[FitnessResult], truth: Mapping[str, float]) -> float:
    """Spearman correlation between time-averaged recovered fitness and the known truth."""
    totals: Dict[str, List[float]] = {}
    for fit in results:
        for country, value in fit.fitness.items():
            totals.setdefault(country, []).append(value)
    countries = sorted(c for c in totals if c in truth)
    return spearman([float(np.mean(totals[c])) for c in countries], [truth[c] for c in countries])


@dataclass
class PipelineResult:
    fitness: List[YearFitness]
    decompositions: List[GrowthDecomposition]
    detrended: List[DetrendedObservation]
    curves: Dict[Optional[Tertile], KernelEstimate]
    surface: KernelEstimate
    thresholds: Dict[Tertile, Optional[float]]
    recovery: Optional[float] = None
    outputs: List[Path] = field(default_factory=list)


class Pipeline:
    """Chains fitness, growth accounting and kernel estimation over one data directory."""

    TRADE_FILE = "trade.csv"
    MACRO_FILE = "macro.csv"
    TRUTH_FILE = "true_fitness.csv"

    def __init__(self, in_dir: Path, out_dir: Path):
        self.in_dir = Path(in_dir)
        self.out_dir = Path(out_dir)

    def _write(self, outputs: List[Path], name: str, table, kind: Optional[str] = None) -> None:
        outputs.append(write_table(self.out_dir / name, table, kind))

    def run(
        self,
        years: Optional[Tuple[int, int]] = None,
        alpha: Optional[float] = None,
        response: str = "input_growth",
        B: Optional[int] = None,
        level: Optional[float] = None,
        seed: Optional[int] = None,
        grid_n: Optional[int] = None,
        grid_n_2d: Optional[int] = None,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> PipelineResult:
        flows = parse_trade_csv(self.in_dir / self.TRADE_FILE)
        panel = parse_macro_csv(self.in_dir / self.MACRO_FILE)
        outputs: List[Path] = []
        self._write(outputs, "cleaning.csv", [r for r in (flows.report, panel.report) if r is not None], "cleaning")
        decompositions, detrended = growth_tables(panel, alpha)

        per_year = fitness_by_year(flows, select_years(flows.years(), years), tol=tol, max_iter=max_iter)
        results = [r.fitness for r in per_year]
        self._write(outputs, "rca.csv", [r.rca for r in per_year], "rca")
        self._write(outputs, "matrix.csv", [r.matrix for r in per_year], "matrix")
        outputs.extend(write_fitness_tables(self.out_dir, per_year))

        self._write(outputs, "decomposition.csv", decompositions, "decomposition")
        self._write(outputs, "detrended.csv", detrended, "detrended")

        fitness = fitness_map(results)
        growth_years = sorted({r.year for r in detrended})
        if detrended and not any(r.country in fitness.get(r.year, {}) for r in detrended):
            raise DataValidationError(
                f"no growth observation falls in the fitness years {min(fitness)}..{max(fitness)}: "
                f"each growth rate needs the previous year, so growth starts in {growth_years[0]}"
            )
        options = dict(B=B, level=level, seed=seed)
        curves: Dict[Optional[Tertile], KernelEstimate] = {
            None: kernel_1d(detrended, response, grid_n=grid_n, **options)
        }
        self._write(outputs, "kernel_1d.csv", curves[None], "kernel1d")
        for tertile in Tertile:
            curves[tertile] = kernel_1d(detrended, response, fitness, tertile, grid_n=grid_n, **options)
            self._write(outputs, f"kernel_1d_{tertile.value}.csv", curves[tertile], "kernel1d")

        surface = kernel_2d(detrended, fitness, response, grid_n=grid_n_2d, **options)
        self._write(outputs, "kernel_2d.csv", surface, "kernel2d")

        thresholds = {tertile: threshold_crossing(curves[tertile]) for tertile in Tertile}
        self._write(outputs, "thresholds.csv", thresholds, "thresholds")
        for tertile, value in thresholds.items():
            logger.info(f"Threshold for {tertile.value} tertile: {value}")

        recovery = None
        truth_path = self.in_dir / self.TRUTH_FILE
        if truth_path.exists():
            recovery = fitness_recovery(results, load_table(truth_path, "true_fitness"))
            logger.info(f"Recovered fitness ranking vs truth: Spearman {recovery:.3f}")

        return PipelineResult(
            fitness=per_year,
            decompositions=decompositions,
            detrended=detrended,
            curves=curves,
            surface=surface,
            thresholds=thresholds,
            recovery=None if recovery is None or math.isnan(recovery) else recovery,
            outputs=outputs,
        )
