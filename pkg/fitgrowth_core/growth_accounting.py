"""Growth accounting: input growth, residual, detrending and fitness tertiles.

Growth rates are log differences, so under Cobb-Douglas production the
split y = a + alpha*k + (1-alpha)*e + (1-alpha)*h is additive. Capital
share alpha is taken per observation as 1 - labor_share unless a fixed
value is supplied.
"""
import logging
import math
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from fitgrowth_core.config import get_config
from fitgrowth_core.panel_model import (
    DataValidationError,
    DetrendedObservation,
    GrowthDecomposition,
    MacroPanel,
    Tertile,
)

logger = logging.getLogger(__name__)

RATE_FIELDS = {
    "y": "gdp_pc",
    "k": "capital_pc",
    "e": "employment_rate",
    "h": "human_capital",
}


def growth_rate(series: Mapping[int, float]) -> Dict[int, float]:
    """Log-difference rate for every year whose previous year is present."""
    for year, value in series.items():
        if value is None or not value > 0 or not math.isfinite(value):
            raise DataValidationError(f"non-positive value {value} in year {year}")

    rates = {
        year: math.log(series[year] / series[year - 1])
        for year in sorted(series)
        if year - 1 in series
    }
    if not rates:
        raise DataValidationError(
            f"growth rate needs at least two consecutive years, got {sorted(series)}"
        )
    return rates


def estimate_alpha(panel: MacroPanel, country: str, year: int) -> float:
    obs = panel.get(country, year)
    if obs is None:
        raise DataValidationError(f"no observation for {country} in {year}")
    if obs.labor_share is None:
        raise DataValidationError(f"missing labor_share for {country} in {year}")
    if not 0.0 < obs.labor_share < 1.0:
        raise DataValidationError(
            f"labor_share {obs.labor_share} for {country} in {year} outside (0, 1)"
        )
    return 1.0 - obs.labor_share


def _rate_at(panel: MacroPanel, country: str, year: int, name: str) -> float:
    before, now = panel.get(country, year - 1), panel.get(country, year)
    if before is None or now is None:
        raise DataValidationError(f"{country} needs observations in {year - 1} and {year}")
    values = {year - 1: getattr(before, name), year: getattr(now, name)}
    missing = [y for y, v in values.items() if v is None]
    if missing:
        raise DataValidationError(f"missing {name} for {country} in {missing}")
    try:
        return growth_rate(values)[year]
    except DataValidationError as e:
        raise DataValidationError(f"{name} for {country}: {e}") from e


def decompose(
    panel: MacroPanel, country: str, year: int, alpha: Optional[float] = None
) -> GrowthDecomposition:
    """Growth decomposition of one (country, year) against the previous year."""
    if alpha is None:
        alpha = get_config().growth.alpha
    if alpha is None:
        alpha = estimate_alpha(panel, country, year)
    elif not 0.0 < alpha < 1.0:
        raise DataValidationError(f"alpha override {alpha} outside (0, 1)")

    rates = {key: _rate_at(panel, country, year, name) for key, name in RATE_FIELDS.items()}
    return GrowthDecomposition.from_rates(
        country, year, rates["y"], alpha, rates["k"], rates["e"], rates["h"]
    )


def decompose_panel(panel: MacroPanel, alpha: Optional[float] = None) -> List[GrowthDecomposition]:
    """Decompose every observation that has a predecessor year.

    Observations with missing fields are skipped and counted in a warning.
    """
    decompositions = []
    skipped: Dict[str, int] = defaultdict(int)

    for country in panel.countries():
        years = panel.years(country)
        for year in years:
            if year - 1 not in years:
                continue
            try:
                decompositions.append(decompose(panel, country, year, alpha=alpha))
            except DataValidationError as e:
                skipped[country] += 1
                logger.debug(f"Skipping {country} {year}: {e}")

    if skipped:
        logger.warning(
            f"Skipped {sum(skipped.values())} observations with incomplete data: {dict(skipped)}"
        )
    logger.info(f"Decomposed {len(decompositions)} country-years")
    return sorted(decompositions, key=lambda d: (d.year, d.country))


def detrend(
    decompositions: Iterable[GrowthDecomposition], panel: MacroPanel
) -> List[DetrendedObservation]:
    """Remove the yearly cross-country mean from rates and normalize GDP levels.

    Years covered by a single country carry no cross-section and are left out.
    """
    by_year: Dict[int, List[Tuple[GrowthDecomposition, float]]] = defaultdict(list)
    for d in decompositions:
        obs = panel.get(d.country, d.year)
        if obs is None or obs.gdp_pc is None:
            raise DataValidationError(f"no gdp_pc level for {d.country} in {d.year}")
        by_year[d.year].append((d, obs.gdp_pc))

    detrended = []
    excluded = []
    for year in sorted(by_year):
        rows = sorted(by_year[year], key=lambda pair: pair[0].country)
        if len(rows) < 2:
            excluded.append(year)
            continue

        gdp = np.array([level for _, level in rows])
        inputs = np.array([d.input_growth for d, _ in rows])
        residual = np.array([d.a for d, _ in rows])
        total = np.array([d.y for d, _ in rows])

        relative = gdp / gdp.mean()
        inputs = inputs - inputs.mean()
        residual = residual - residual.mean()
        total = total - total.mean()

        for i, (d, _) in enumerate(rows):
            detrended.append(
                DetrendedObservation(
                    country=d.country,
                    year=year,
                    relative_gdp=float(relative[i]),
                    input_growth=float(inputs[i]),
                    a=float(residual[i]),
                    y=float(total[i]),
                )
            )

    if excluded:
        logger.warning(f"Excluded single-country years from detrending: {excluded}")
    return detrended


def tertile_split(fitness: Mapping[str, float], year: Optional[int] = None) -> Dict[str, Tertile]:
    """Assign low/mid/high by fitness rank; remainders go to the lower groups."""
    n = len(fitness)
    if n < 3:
        label = f" in {year}" if year is not None else ""
        raise DataValidationError(f"tertile split needs at least 3 countries{label}, got {n}")

    ordered = sorted(fitness, key=lambda c: (fitness[c], c))
    base, rem = divmod(n, 3)
    n_low = base + (1 if rem > 0 else 0)
    n_mid = base + (1 if rem > 1 else 0)

    labels = {}
    for i, country in enumerate(ordered):
        if i < n_low:
            labels[country] = Tertile.LOW
        elif i < n_low + n_mid:
            labels[country] = Tertile.MID
        else:
            labels[country] = Tertile.HIGH
    return labels


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataValidationError(f"spearman needs equal-length series, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise DataValidationError("spearman needs at least 2 points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DataValidationError("spearman is undefined for a constant series")

    rho, _ = spearmanr(x, y)
    return float(rho)
