"""Core domain types shared by every analysis module.

Everything here is immutable once built. Boundary records that are parsed
from text (macro rows, simulator parameters) are pydantic models; computed
results are dataclasses. Country and product codes are opaque strings.
"""
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator


class DataValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class SavingMode(str, Enum):
    CONSTANT = "constant"
    SIGMOID = "sigmoid"


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class Tertile(str, Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


class UpdateScheme(str, Enum):
    SEQUENTIAL = "sequential"
    SIMULTANEOUS = "simultaneous"


# ---------------------------------------------------------------------------
# Ingestion bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CleaningReport:
    """Row accounting for one parsed file: kept + dropped == total."""

    source: str
    total_rows: int
    kept_rows: int
    dropped: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "dropped", MappingProxyType(dict(self.dropped)))
        if self.kept_rows + self.dropped_rows != self.total_rows:
            raise DataValidationError(
                f"cleaning report for {self.source} does not balance: "
                f"{self.kept_rows} kept + {self.dropped_rows} dropped != {self.total_rows}"
            )

    @property
    def dropped_rows(self) -> int:
        return sum(self.dropped.values())

    def is_clean(self) -> bool:
        return self.dropped_rows == 0


# ---------------------------------------------------------------------------
# Trade flows
# ---------------------------------------------------------------------------

class TradeRecord(NamedTuple):
    year: int
    country: str
    product: str
    value: float


TRADE_COLUMNS = ("year", "country", "product", "value")


@dataclass(frozen=True)
class TradeFlows:
    """Export flows keyed by unique (year, country, product)."""

    records: Tuple[TradeRecord, ...]
    report: Optional[CleaningReport] = field(default=None, compare=False)

    def __post_init__(self):
        records = tuple(TradeRecord(int(r[0]), str(r[1]), str(r[2]), float(r[3])) for r in self.records)
        object.__setattr__(self, "records", records)

        bad = [r for r in records if not (math.isfinite(r.value) and r.value > 0)]
        if bad:
            first = bad[0]
            raise DataValidationError(
                f"non-positive export value {first.value} for "
                f"({first.year}, {first.country}, {first.product})"
            )
        counts = Counter((r.year, r.country, r.product) for r in records)
        duplicates = [key for key, n in counts.items() if n > 1]
        if duplicates:
            raise DataValidationError(f"duplicate trade keys: {duplicates[:5]}")

    def __len__(self) -> int:
        return len(self.records)

    def years(self) -> List[int]:
        return sorted({r.year for r in self.records})

    def for_year(self, year: int) -> List[TradeRecord]:
        return [r for r in self.records if r.year == year]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame.from_records(self.records, columns=list(TRADE_COLUMNS))
        return frame.astype({"year": "int64", "country": str, "product": str, "value": "float64"})


# ---------------------------------------------------------------------------
# Macro panel
# ---------------------------------------------------------------------------

MACRO_FIELDS = (
    "gdp_pc",
    "capital_pc",
    "employment_rate",
    "human_capital",
    "labor_share",
    "population",
)
MACRO_COLUMNS = ("year", "country") + MACRO_FIELDS


class MacroObservation(BaseModel):
    """One (country, year) row of the macro panel; missing fields are None."""

    model_config = ConfigDict(frozen=True)

    year: int
    country: str
    gdp_pc: Optional[float] = None
    capital_pc: Optional[float] = None
    employment_rate: Optional[float] = None
    human_capital: Optional[float] = None
    labor_share: Optional[float] = None
    population: Optional[float] = None


class Violation(NamedTuple):
    country: str
    year: Optional[int]
    field: str
    reason: str


def _range_reason(name: str, value: float) -> Optional[str]:
    if not math.isfinite(value):
        return "not finite"
    if name == "employment_rate":
        return None if 0.0 < value <= 1.0 else "must be in (0, 1]"
    if name == "labor_share":
        return None if 0.0 < value < 1.0 else "must be in (0, 1)"
    return None if value > 0.0 else "must be > 0"


def observation_violations(obs: MacroObservation) -> List[Violation]:
    """Range violations of a single row (missing fields are not violations)."""
    violations = []
    for name in MACRO_FIELDS:
        value = getattr(obs, name)
        if value is None:
            continue
        reason = _range_reason(name, value)
        if reason:
            violations.append(Violation(obs.country, obs.year, name, reason))
    return violations


@dataclass(frozen=True)
class MacroPanel:
    """Macro observations keyed by (country, year)."""

    observations: Mapping[Tuple[str, int], MacroObservation]
    report: Optional[CleaningReport] = field(default=None, compare=False)

    def __post_init__(self):
        ordered = dict(sorted(self.observations.items()))
        object.__setattr__(self, "observations", MappingProxyType(ordered))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MacroPanel):
            return NotImplemented
        return dict(self.observations) == dict(other.observations)

    __hash__ = None

    @classmethod
    def from_observations(cls, observations: Iterable[MacroObservation],
                          report: Optional[CleaningReport] = None) -> "MacroPanel":
        keyed: Dict[Tuple[str, int], MacroObservation] = {}
        for obs in observations:
            key = (obs.country, obs.year)
            if key in keyed:
                raise DataValidationError(f"duplicate macro observation {key}")
            keyed[key] = obs
        return cls(keyed, report)

    def __len__(self) -> int:
        return len(self.observations)

    def countries(self) -> List[str]:
        return sorted({country for country, _ in self.observations})

    def years(self, country: Optional[str] = None) -> List[int]:
        return sorted({y for c, y in self.observations if country is None or c == country})

    def get(self, country: str, year: int) -> Optional[MacroObservation]:
        return self.observations.get((country, year))

    def series(self, country: str, name: str) -> Dict[int, float]:
        """Year -> value for one field of one country, skipping missing values."""
        out = {}
        for (c, y), obs in self.observations.items():
            value = getattr(obs, name)
            if c == country and value is not None:
                out[y] = value
        return out

    def to_frame(self) -> pd.DataFrame:
        rows = [obs.model_dump() for obs in self.observations.values()]
        frame = pd.DataFrame(rows, columns=list(MACRO_COLUMNS))
        frame = frame.astype({"year": "int64", "country": str, **{name: "float64" for name in MACRO_FIELDS}})
        return frame.sort_values(["year", "country"], kind="stable").reset_index(drop=True)


def validate_panel(panel: MacroPanel) -> List[Violation]:
    """Every invariant breach of the panel; an empty list means the panel is valid."""
    violations: List[Violation] = []
    for obs in panel.observations.values():
        violations.extend(observation_violations(obs))

    for country in panel.countries():
        years = panel.years(country)
        if not any(y + 1 in set(years) for y in years):
            violations.append(
                Violation(country, years[0] if years else None, "year", "insufficient consecutive years")
            )
    return violations


# ---------------------------------------------------------------------------
# Country-product matrix
# ---------------------------------------------------------------------------

def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CountryProductMatrix:
    """Binary M_cp with ordered country and product index lists."""

    year: int
    countries: Tuple[str, ...]
    products: Tuple[str, ...]
    m: np.ndarray
    dropped_countries: Tuple[str, ...] = ()
    dropped_products: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "products", tuple(self.products))
        m = _frozen_array(self.m, dtype=np.int8)
        object.__setattr__(self, "m", m)

        if m.ndim != 2 or m.shape != (len(self.countries), len(self.products)):
            raise DataValidationError(
                f"matrix shape {m.shape} does not match "
                f"{len(self.countries)} countries x {len(self.products)} products"
            )
        if m.size == 0:
            raise DataValidationError(f"empty country-product matrix for year {self.year}")
        if not np.isin(m, (0, 1)).all():
            raise DataValidationError("country-product matrix must be binary")
        if (m.sum(axis=1) == 0).any() or (m.sum(axis=0) == 0).any():
            raise DataValidationError("country-product matrix has an all-zero row or column")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountryProductMatrix):
            return NotImplemented
        return (
            self.year == other.year
            and self.countries == other.countries
            and self.products == other.products
            and np.array_equal(self.m, other.m)
        )

    __hash__ = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.m.shape


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitnessResult:
    """Converged (or budget-exhausted) fitness and complexity for one year."""

    year: int
    fitness: Mapping[str, float]
    complexity: Mapping[str, float]
    iterations: int
    converged: bool
    rank_stable_at: int
    floored: bool = False
    n_components: int = 1

    def __post_init__(self):
        object.__setattr__(self, "fitness", MappingProxyType(dict(self.fitness)))
        object.__setattr__(self, "complexity", MappingProxyType(dict(self.complexity)))
        for label, values in (("fitness", self.fitness), ("complexity", self.complexity)):
            negative = [k for k, v in values.items() if not v >= 0.0]
            if negative:
                raise DataValidationError(f"negative {label} for {negative[:5]}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, FitnessResult):
            return NotImplemented
        return (
            self.year == other.year
            and dict(self.fitness) == dict(other.fitness)
            and dict(self.complexity) == dict(other.complexity)
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.rank_stable_at == other.rank_stable_at
        )

    __hash__ = None


@dataclass(frozen=True)
class GrowthDecomposition:
    """Split of GDP-per-capita growth into input terms; ``a`` is the residual."""

    country: str
    year: int
    y: float
    a: float
    alpha: float
    term_k: float
    term_e: float
    term_h: float
    input_growth: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DataValidationError(f"alpha {self.alpha} outside (0, 1) for {self.country} {self.year}")
        if self.y != self.a + self.term_k + self.term_e + self.term_h:
            raise DataValidationError(f"growth identity broken for {self.country} {self.year}")

    @classmethod
    def from_rates(cls, country: str, year: int, y: float, alpha: float,
                   k: float, e: float, h: float) -> "GrowthDecomposition":
        term_k = alpha * k
        term_e = (1.0 - alpha) * e
        term_h = (1.0 - alpha) * h
        input_growth = term_k + term_e + term_h
        a = y - input_growth
        # y is re-summed in the identity's own order so it holds bit for bit
        y_exact = a + term_k + term_e + term_h
        return cls(country, year, y_exact, a, alpha, term_k, term_e, term_h, input_growth)


@dataclass(frozen=True)
class DetrendedObservation:
    """One pooled point for the kernel plots, after removing the yearly trend."""

    country: str
    year: int
    relative_gdp: float
    input_growth: float
    a: float
    y: float


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """Nadaraya-Watson estimate on a grid, optionally with bootstrap bands."""

    grid: np.ndarray
    estimate: np.ndarray
    bandwidth: Tuple[float, ...]
    n_effective: np.ndarray
    supported: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    level: Optional[float] = None
    omitted: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen_array(self.grid, dtype=float))
        object.__setattr__(self, "estimate", _frozen_array(self.estimate, dtype=float))
        object.__setattr__(self, "n_effective", _frozen_array(self.n_effective, dtype=float))
        object.__setattr__(self, "supported", _frozen_array(self.supported, dtype=bool))
        object.__setattr__(self, "bandwidth", tuple(float(h) for h in self.bandwidth))
        if not self.bandwidth or any(not h > 0 for h in self.bandwidth):
            raise DataValidationError(f"bandwidths must be positive, got {self.bandwidth}")

        if (self.ci_low is None) != (self.ci_high is None):
            raise DataValidationError("ci_low and ci_high must be given together")
        if self.ci_low is not None:
            object.__setattr__(self, "ci_low", _frozen_array(self.ci_low, dtype=float))
            object.__setattr__(self, "ci_high", _frozen_array(self.ci_high, dtype=float))
            if (self.ci_low > self.estimate).any() or (self.estimate > self.ci_high).any():
                raise DataValidationError("confidence band does not contain the estimate")

    @property
    def dim(self) -> int:
        return 1 if self.grid.ndim == 1 else self.grid.shape[1]

    @property
    def has_bands(self) -> bool:
        return self.ci_low is not None


class SolowParams(BaseModel):
    """Parameters of the single-country capital accumulation map."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    A: float = Field(..., gt=0, description="Technology level")
    alpha: float = Field(..., gt=0, lt=1, description="Capital elasticity")
    L: float = Field(..., gt=0, description="Labor")
    delta: float = Field(..., gt=0, lt=1, description="Depreciation rate")
    s_max: float = Field(..., gt=0, lt=1, description="Saving ceiling")
    K_F: float = Field(0.0, ge=0, description="Subsistence threshold")
    saving_mode: SavingMode = SavingMode.CONSTANT


class Equilibrium(NamedTuple):
    k_star: float
    stability: Stability


@dataclass(frozen=True)
class EquilibriumSet:
    """Fixed points of the capital map, ascending in K."""

    equilibria: Tuple[Equilibrium, ...]
    upper_unbracketed: bool = field(default=False, compare=False)

    def __post_init__(self):
        eqs = tuple(Equilibrium(float(k), Stability(s)) for k, s in self.equilibria)
        object.__setattr__(self, "equilibria", eqs)
        ks = [e.k_star for e in eqs]
        if any(k < 0 for k in ks) or ks != sorted(ks):
            raise DataValidationError(f"equilibria must be non-negative and ascending: {ks}")

    def __len__(self) -> int:
        return len(self.equilibria)

    def positive(self) -> List[Equilibrium]:
        return [e for e in self.equilibria if e.k_star > 0]

    def unstable(self) -> List[Equilibrium]:
        return [e for e in self.equilibria if e.stability is Stability.UNSTABLE]


class TrajectoryPoint(NamedTuple):
    t: int
    k: float
    y: float
    s: float


class FitnessSpec(BaseModel):
    """Fitness levels for the synthetic world: an explicit list or a log-spaced span."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: Optional[Tuple[float, ...]] = None
    span_min: float = Field(1.0, gt=0)
    span_max: float = Field(10.0, gt=0)

    @field_validator("levels", mode="before")
    @classmethod
    def _split_levels(cls, value):
        if isinstance(value, str):
            return tuple(float(v) for v in value.split(",") if v.strip())
        return value

    @field_validator("levels")
    @classmethod
    def _positive_levels(cls, value):
        if value is not None and any(not v > 0 for v in value):
            raise ValueError("fitness levels must be positive")
        return value

    def resolve(self, n_countries: int) -> List[float]:
        if self.levels is not None:
            return list(self.levels)
        return [float(f) for f in np.geomspace(self.span_min, self.span_max, n_countries)]
