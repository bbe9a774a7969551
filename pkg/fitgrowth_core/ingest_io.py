"""CSV ingestion with cleaning reports, and the writers for every output table.

Every table has a fixed header. Floats are written with 17 significant
digits and read back with pandas' round-trip parser, so a written table
parses to the same values.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from fitgrowth_core.fitness_complexity import rank_of
from fitgrowth_core.panel_model import (
    MACRO_COLUMNS,
    MACRO_FIELDS,
    TRADE_COLUMNS,
    CleaningReport,
    CountryProductMatrix,
    DataValidationError,
    DetrendedObservation,
    Equilibrium,
    EquilibriumSet,
    FitnessResult,
    FitnessSpec,
    GrowthDecomposition,
    KernelEstimate,
    MacroObservation,
    MacroPanel,
    SolowParams,
    TradeFlows,
    TrajectoryPoint,
    observation_violations,
)
from fitgrowth_core.rca_binarize import RcaMatrix, diversification, ubiquity

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
TEXT_COLUMNS = ("country", "product", "stability", "tertile", "source", "category")


# ---------------------------------------------------------------------------
# Low-level CSV access
# ---------------------------------------------------------------------------

def _read_csv(path: PathLike, columns: Tuple[str, ...]) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            float_precision="round_trip",
            dtype={c: str for c in TEXT_COLUMNS if c in columns},
            keep_default_na=False,
            na_values=[""],
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path}: missing header, expected {','.join(columns)}") from e

    if tuple(frame.columns) != tuple(columns):
        raise DataValidationError(
            f"{path}: expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}"
        )
    return frame


def _write_csv(path: PathLike, frame: pd.DataFrame) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(
            path,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def _report(source: PathLike, total: int, kept: int, dropped: Mapping[str, int]) -> CleaningReport:
    report = CleaningReport(str(source), total, kept, {k: int(v) for k, v in dropped.items() if v})
    if not report.is_clean():
        logger.warning(f"{source}: kept {kept} of {total} rows, dropped {dict(report.dropped)}")
    return report


# ---------------------------------------------------------------------------
# Input parsers
# ---------------------------------------------------------------------------

def parse_trade_csv(path: PathLike) -> TradeFlows:
    """Read ``year,country,product,value`` rows.

    Malformed rows, non-positive values and repeated keys are dropped
    (the first occurrence of a key is kept) and counted in ``report``.
    """
    frame = _read_csv(path, TRADE_COLUMNS)
    total = len(frame)

    year = pd.to_numeric(frame["year"], errors="coerce")
    value = pd.to_numeric(frame["value"], errors="coerce")
    malformed = (
        year.isna()
        | (year % 1 != 0)
        | value.isna()
        | ~np.isfinite(value.fillna(0.0))
        | frame["country"].isna()
        | frame["product"].isna()
    )
    non_positive = ~malformed & (value <= 0)

    clean = frame.loc[~malformed & ~non_positive, ["country", "product"]].copy()
    clean.insert(0, "year", year[clean.index].astype("int64"))
    clean["value"] = value[clean.index].astype("float64")
    duplicate = clean.duplicated(subset=["year", "country", "product"], keep="first")
    clean = clean[~duplicate]

    if clean.empty:
        raise DataValidationError(f"{path}: no valid trade rows out of {total}")

    report = _report(
        path, total, len(clean),
        {"malformed": malformed.sum(), "non_positive": non_positive.sum(), "duplicate": duplicate.sum()},
    )
    records = tuple(clean.itertuples(index=False, name=None))
    logger.info(f"Loaded {len(records)} trade records from {path}")
    return TradeFlows(records, report)


def parse_macro_csv(path: PathLike) -> MacroPanel:
    """Read the macro panel; malformed, out-of-range and repeated rows are dropped."""
    frame = _read_csv(path, MACRO_COLUMNS)
    total = len(frame)

    numeric = {col: pd.to_numeric(frame[col], errors="coerce") for col in ("year",) + MACRO_FIELDS}
    malformed = frame["country"].isna() | numeric["year"].isna() | (numeric["year"] % 1 != 0)
    for col in MACRO_FIELDS:
        malformed |= numeric[col].isna() & frame[col].notna()

    counts = {"malformed": int(malformed.sum()), "out_of_range": 0, "duplicate": 0}
    observations: Dict[Tuple[str, int], MacroObservation] = {}

    for i in frame.index[~malformed]:
        row = {"year": int(numeric["year"][i]), "country": frame["country"][i]}
        for col in MACRO_FIELDS:
            value = numeric[col][i]
            row[col] = None if pd.isna(value) else float(value)
        try:
            obs = MacroObservation.model_validate(row)
        except ValidationError:
            counts["malformed"] += 1
            continue
        if observation_violations(obs):
            counts["out_of_range"] += 1
            continue
        key = (obs.country, obs.year)
        if key in observations:
            counts["duplicate"] += 1
            continue
        observations[key] = obs

    if not observations:
        raise DataValidationError(f"{path}: no valid macro rows out of {total}")

    report = _report(path, total, len(observations), counts)
    logger.info(f"Loaded {len(observations)} macro observations from {path}")
    return MacroPanel(observations, report)


def _read_key_values(path: PathLike) -> Dict[str, str]:
    path = Path(path)
    entries: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise DataValidationError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            if key in entries:
                raise DataValidationError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return entries


def parse_params_file(path: PathLike) -> SolowParams:
    """Simulator parameters from ``key = value`` lines; '#' starts a comment."""
    return SolowParams.model_validate(_read_key_values(path))


def parse_fitness_spec(path: PathLike) -> FitnessSpec:
    return FitnessSpec.model_validate(_read_key_values(path))


# ---------------------------------------------------------------------------
# Table registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableFormat:
    kind: str
    columns: Tuple[str, ...]
    to_frame: Callable[[Any], pd.DataFrame]
    from_frame: Optional[Callable[[pd.DataFrame], Any]] = None


def _cells_frame(year: int, countries, products, values: np.ndarray, column: str) -> pd.DataFrame:
    return pd.DataFrame({
        "year": np.full(values.size, year, dtype="int64"),
        "country": np.repeat(countries, len(products)),
        "product": np.tile(products, len(countries)),
        column: values.ravel(),
    })


def _cells_from_frame(frame: pd.DataFrame, column: str):
    for year, group in frame.groupby("year", sort=True):
        countries = tuple(pd.unique(group["country"]))
        products = tuple(pd.unique(group["product"]))
        values = group[column].to_numpy().reshape(len(countries), len(products))
        yield int(year), countries, products, values


def _one_or_many(items: List[Any]) -> Any:
    """A one-year table loads as the object itself, several years as a list."""
    return items[0] if len(items) == 1 else items


def _rca_frame(rca: RcaMatrix) -> pd.DataFrame:
    return _cells_frame(rca.year, rca.countries, rca.products, rca.rca.astype(float), "rca")


def _rca_from(frame: pd.DataFrame) -> Union[RcaMatrix, List[RcaMatrix]]:
    return _one_or_many([RcaMatrix(y, c, p, v) for y, c, p, v in _cells_from_frame(frame, "rca")])


def _matrix_frame(m: CountryProductMatrix) -> pd.DataFrame:
    return _cells_frame(m.year, m.countries, m.products, m.m.astype("int64"), "m")


def _matrix_from(frame: pd.DataFrame) -> Union[CountryProductMatrix, List[CountryProductMatrix]]:
    return _one_or_many([CountryProductMatrix(y, c, p, v) for y, c, p, v in _cells_from_frame(frame, "m")])


def _counts_frame(year: int, counts: Mapping[str, int], key: str, column: str) -> pd.DataFrame:
    return pd.DataFrame({
        "year": np.full(len(counts), year, dtype="int64"),
        key: list(counts),
        column: np.array(list(counts.values()), dtype="int64"),
    })


def _counts_by_year(frame: pd.DataFrame, key: str, column: str) -> Dict[int, Dict[str, int]]:
    return {
        int(year): dict(zip(group[key], (int(v) for v in group[column])))
        for year, group in frame.groupby("year", sort=True)
    }


def _fitness_frame(fit: FitnessResult) -> pd.DataFrame:
    ranks = rank_of(fit)
    countries = sorted(fit.fitness, key=lambda c: (ranks[c], c))
    return pd.DataFrame({
        "year": np.full(len(countries), fit.year, dtype="int64"),
        "country": countries,
        "fitness": [fit.fitness[c] for c in countries],
        "rank": np.array([ranks[c] for c in countries], dtype="int64"),
    })


def _by_year(frame: pd.DataFrame, key: str, value: str) -> Dict[int, Dict[str, float]]:
    return {
        int(year): dict(zip(group[key], (float(v) for v in group[value])))
        for year, group in frame.groupby("year", sort=True)
    }


def _complexity_frame(fit: FitnessResult) -> pd.DataFrame:
    products = sorted(fit.complexity, key=lambda p: (-fit.complexity[p], p))
    return pd.DataFrame({
        "year": np.full(len(products), fit.year, dtype="int64"),
        "product": products,
        "complexity": [fit.complexity[p] for p in products],
    })


def _convergence_frame(fit: FitnessResult) -> pd.DataFrame:
    return pd.DataFrame([{
        "year": fit.year,
        "iterations": fit.iterations,
        "rank_stable_at": fit.rank_stable_at,
        "converged": fit.converged,
        "floored": fit.floored,
        "n_components": fit.n_components,
    }])


DECOMPOSITION_COLUMNS = ("year", "country", "y", "a", "alpha", "term_k", "term_e", "term_h", "input_growth")
DETRENDED_COLUMNS = ("year", "country", "relative_gdp", "input_growth", "a", "y")


def _decomposition_frame(d: GrowthDecomposition) -> pd.DataFrame:
    return pd.DataFrame([{c: getattr(d, c) for c in DECOMPOSITION_COLUMNS}])


def _decomposition_from(frame: pd.DataFrame) -> List[GrowthDecomposition]:
    return [
        GrowthDecomposition(
            country=row["country"], year=int(row["year"]), y=row["y"], a=row["a"], alpha=row["alpha"],
            term_k=row["term_k"], term_e=row["term_e"], term_h=row["term_h"],
            input_growth=row["input_growth"],
        )
        for row in frame.to_dict("records")
    ]


def _detrended_frame(d: DetrendedObservation) -> pd.DataFrame:
    return pd.DataFrame([{c: getattr(d, c) for c in DETRENDED_COLUMNS}])


def _detrended_from(frame: pd.DataFrame) -> List[DetrendedObservation]:
    return [
        DetrendedObservation(
            country=row["country"], year=int(row["year"]), relative_gdp=row["relative_gdp"],
            input_growth=row["input_growth"], a=row["a"], y=row["y"],
        )
        for row in frame.to_dict("records")
    ]


def _kernel_columns(est: KernelEstimate) -> Dict[str, np.ndarray]:
    nan = np.full(est.estimate.shape, np.nan)
    return {
        "estimate": est.estimate,
        "ci_low": est.ci_low if est.has_bands else nan,
        "ci_high": est.ci_high if est.has_bands else nan,
        "n_effective": est.n_effective,
        "supported": est.supported,
    }


def _kernel1d_frame(est: KernelEstimate) -> pd.DataFrame:
    if est.dim != 1:
        raise DataValidationError(f"expected a 1D kernel estimate, got dim {est.dim}")
    return pd.DataFrame({"x": est.grid, **_kernel_columns(est)})


def _kernel2d_frame(est: KernelEstimate) -> pd.DataFrame:
    if est.dim != 2:
        raise DataValidationError(f"expected a 2D kernel estimate, got dim {est.dim}")
    return pd.DataFrame({"x1": est.grid[:, 0], "x2": est.grid[:, 1], **_kernel_columns(est)})


def _equilibria_frame(eqs: EquilibriumSet) -> pd.DataFrame:
    return pd.DataFrame({
        "k_star": [float(e.k_star) for e in eqs.equilibria],
        "stability": [e.stability.value for e in eqs.equilibria],
    })


def _equilibria_from(frame: pd.DataFrame) -> EquilibriumSet:
    return EquilibriumSet(tuple(Equilibrium(row["k_star"], row["stability"]) for row in frame.to_dict("records")))


def _trajectory_frame(point: TrajectoryPoint) -> pd.DataFrame:
    return pd.DataFrame([point._asdict()])


def _trajectory_from(frame: pd.DataFrame) -> List[TrajectoryPoint]:
    return [TrajectoryPoint(int(r["t"]), r["k"], r["y"], r["s"]) for r in frame.to_dict("records")]


def _cleaning_frame(report: CleaningReport) -> pd.DataFrame:
    categories = [("total", report.total_rows), ("kept", report.kept_rows)] + sorted(report.dropped.items())
    return pd.DataFrame({
        "source": [report.source] * len(categories),
        "category": [name for name, _ in categories],
        "rows": np.array([n for _, n in categories], dtype="int64"),
    })


def _true_fitness_frame(fitness: Mapping[str, float]) -> pd.DataFrame:
    countries = sorted(fitness)
    return pd.DataFrame({"country": countries, "fitness": [float(fitness[c]) for c in countries]})


def _thresholds_frame(thresholds: Mapping[Any, Optional[float]]) -> pd.DataFrame:
    labels = [getattr(t, "value", t) for t in thresholds]
    values = [np.nan if v is None else float(v) for v in thresholds.values()]
    return pd.DataFrame({"tertile": labels, "threshold": np.array(values, dtype=float)})


def _thresholds_from(frame: pd.DataFrame) -> Dict[str, Optional[float]]:
    return {
        row["tertile"]: None if pd.isna(row["threshold"]) else float(row["threshold"])
        for row in frame.to_dict("records")
    }


TABLES: Dict[str, TableFormat] = {
    fmt.kind: fmt
    for fmt in (
        TableFormat("trade", TRADE_COLUMNS, TradeFlows.to_frame),
        TableFormat("macro", MACRO_COLUMNS, MacroPanel.to_frame),
        TableFormat("rca", ("year", "country", "product", "rca"), _rca_frame, _rca_from),
        TableFormat("matrix", ("year", "country", "product", "m"), _matrix_frame, _matrix_from),
        TableFormat("diversification", ("year", "country", "diversification"),
                    lambda m: _counts_frame(m.year, diversification(m), "country", "diversification"),
                    lambda f: _counts_by_year(f, "country", "diversification")),
        TableFormat("ubiquity", ("year", "product", "ubiquity"),
                    lambda m: _counts_frame(m.year, ubiquity(m), "product", "ubiquity"),
                    lambda f: _counts_by_year(f, "product", "ubiquity")),
        TableFormat("fitness", ("year", "country", "fitness", "rank"), _fitness_frame,
                    lambda f: _by_year(f, "country", "fitness")),
        TableFormat("complexity", ("year", "product", "complexity"), _complexity_frame,
                    lambda f: _by_year(f, "product", "complexity")),
        TableFormat("convergence",
                    ("year", "iterations", "rank_stable_at", "converged", "floored", "n_components"),
                    _convergence_frame),
        TableFormat("decomposition", DECOMPOSITION_COLUMNS, _decomposition_frame, _decomposition_from),
        TableFormat("detrended", DETRENDED_COLUMNS, _detrended_frame, _detrended_from),
        TableFormat("kernel1d", ("x", "estimate", "ci_low", "ci_high", "n_effective", "supported"),
                    _kernel1d_frame),
        TableFormat("kernel2d", ("x1", "x2", "estimate", "ci_low", "ci_high", "n_effective", "supported"),
                    _kernel2d_frame),
        TableFormat("equilibria", ("k_star", "stability"), _equilibria_frame, _equilibria_from),
        TableFormat("trajectory", TrajectoryPoint._fields, _trajectory_frame, _trajectory_from),
        TableFormat("true_fitness", ("country", "fitness"), _true_fitness_frame,
                    lambda f: dict(zip(f["country"], (float(v) for v in f["fitness"])))),
        TableFormat("thresholds", ("tertile", "threshold"), _thresholds_frame, _thresholds_from),
        TableFormat("cleaning", ("source", "category", "rows"), _cleaning_frame),
    )
}

_KIND_BY_TYPE = {
    CleaningReport: "cleaning",
    TradeFlows: "trade",
    MacroPanel: "macro",
    RcaMatrix: "rca",
    CountryProductMatrix: "matrix",
    FitnessResult: "fitness",
    GrowthDecomposition: "decomposition",
    DetrendedObservation: "detrended",
    EquilibriumSet: "equilibria",
    TrajectoryPoint: "trajectory",
}


def _infer_kind(table: Any) -> str:
    sample = table
    if isinstance(table, list):
        if not table:
            raise DataValidationError("cannot infer table kind of an empty list; pass kind=")
        sample = table[0]
    if isinstance(sample, KernelEstimate):
        return "kernel1d" if sample.dim == 1 else "kernel2d"
    for cls, kind in _KIND_BY_TYPE.items():
        if isinstance(sample, cls):
            return kind
    raise DataValidationError(f"cannot infer table kind for {type(sample).__name__}; pass kind=")


def to_frame(table: Any, kind: Optional[str] = None) -> pd.DataFrame:
    """Render a result, or a list of results of one type, as its output table."""
    kind = kind or _infer_kind(table)
    if kind not in TABLES:
        raise DataValidationError(f"unknown table kind {kind!r}")
    fmt = TABLES[kind]

    items = table if isinstance(table, list) else [table]
    frames = [fmt.to_frame(item) for item in items]
    if not frames:
        return pd.DataFrame(columns=list(fmt.columns))
    frame = pd.concat(frames, ignore_index=True) if len(frames) > 1 else frames[0]
    return frame[list(fmt.columns)].reset_index(drop=True)


def write_table(path: PathLike, table: Any, kind: Optional[str] = None) -> Path:
    path = Path(path)
    _write_csv(path, to_frame(table, kind))
    return path


def read_table(path: PathLike, kind: str) -> pd.DataFrame:
    """Parse an output table back into a frame, checking its header."""
    if kind not in TABLES:
        raise DataValidationError(f"unknown table kind {kind!r}")
    return _read_csv(path, TABLES[kind].columns)


def load_table(path: PathLike, kind: str) -> Any:
    """Parse an output table back into domain objects."""
    if kind == "trade":
        return parse_trade_csv(path)
    if kind == "macro":
        return parse_macro_csv(path)
    fmt = TABLES.get(kind)
    if fmt is None or fmt.from_frame is None:
        raise DataValidationError(f"table kind {kind!r} has no object form")
    return fmt.from_frame(read_table(path, kind))


def load_fitness_results(
    fitness_path: PathLike,
    complexity_path: PathLike,
    convergence_path: PathLike,
) -> Union[FitnessResult, List[FitnessResult]]:
    """Reassemble fitness results from the fitness, complexity and convergence tables."""
    fitness = load_table(fitness_path, "fitness")
    complexity = load_table(complexity_path, "complexity")
    log = read_table(convergence_path, "convergence")

    logged = [int(y) for y in log["year"]]
    if set(logged) != set(fitness) or set(logged) != set(complexity):
        raise DataValidationError(
            f"fitness tables cover different years: convergence {sorted(logged)}, "
            f"fitness {sorted(fitness)}, complexity {sorted(complexity)}"
        )

    results = [
        FitnessResult(
            year=int(row["year"]),
            fitness=fitness[int(row["year"])],
            complexity=complexity[int(row["year"])],
            iterations=int(row["iterations"]),
            converged=bool(row["converged"]),
            rank_stable_at=int(row["rank_stable_at"]),
            floored=bool(row["floored"]),
            n_components=int(row["n_components"]),
        )
        for row in log.to_dict("records")
    ]
    return _one_or_many(results)
