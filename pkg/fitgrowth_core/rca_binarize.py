"""Balassa revealed comparative advantage and the binary M_cp matrix."""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from fitgrowth_core.panel_model import (
    CountryProductMatrix,
    DataValidationError,
    FitnessResult,
    TradeFlows,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RcaMatrix:
    """Real-valued RCA with the same index discipline as M_cp."""

    year: int
    countries: Tuple[str, ...]
    products: Tuple[str, ...]
    rca: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "products", tuple(self.products))
        rca = np.array(self.rca, dtype=float, copy=True)
        rca.flags.writeable = False
        object.__setattr__(self, "rca", rca)
        if rca.shape != (len(self.countries), len(self.products)):
            raise DataValidationError(f"rca shape {rca.shape} does not match index lists")
        if not np.isfinite(rca).all() or (rca < 0).any():
            raise DataValidationError("rca values must be finite and non-negative")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RcaMatrix):
            return NotImplemented
        return (
            self.year == other.year
            and self.countries == other.countries
            and self.products == other.products
            and np.array_equal(self.rca, other.rca)
        )

    __hash__ = None


def export_matrix(flows: TradeFlows, year: int) -> pd.DataFrame:
    """Country x product export values for one year, zero where nothing is traded."""
    frame = flows.to_frame()
    frame = frame[frame["year"] == year]
    if frame.empty:
        raise DataValidationError(f"no trade data for year {year}")
    matrix = frame.pivot_table(
        index="country", columns="product", values="value", aggfunc="sum", fill_value=0.0
    )
    return matrix.sort_index(axis=0).sort_index(axis=1)


def compute_rca(flows: TradeFlows, year: int) -> RcaMatrix:
    matrix = export_matrix(flows, year)

    # drop countries/products with zero totals before taking shares
    matrix = matrix.loc[matrix.sum(axis=1) > 0, matrix.sum(axis=0) > 0]
    if matrix.empty:
        raise DataValidationError(f"no trade data for year {year}")

    x = matrix.to_numpy(dtype=float)
    country_share = x / x.sum(axis=1, keepdims=True)
    product_share = x.sum(axis=0, keepdims=True) / x.sum()
    rca = country_share / product_share

    logger.debug(f"RCA for {year}: {x.shape[0]} countries x {x.shape[1]} products")
    return RcaMatrix(year, tuple(matrix.index), tuple(matrix.columns), rca)


def binarize(rca: RcaMatrix, threshold: float = 1.0) -> CountryProductMatrix:
    """M_cp = 1 iff RCA >= threshold; empty rows and columns are dropped."""
    if not threshold > 0:
        raise DataValidationError(f"threshold must be > 0, got {threshold}")

    m = (rca.rca >= threshold).astype(np.int8)
    keep_rows = m.sum(axis=1) > 0
    keep_cols = m.sum(axis=0) > 0

    dropped_countries = tuple(c for c, keep in zip(rca.countries, keep_rows) if not keep)
    dropped_products = tuple(p for p, keep in zip(rca.products, keep_cols) if not keep)
    if dropped_countries or dropped_products:
        logger.warning(
            f"Year {rca.year}: dropped {len(dropped_countries)} countries and "
            f"{len(dropped_products)} products with no RCA >= {threshold}"
        )

    m = m[keep_rows][:, keep_cols]
    if m.size == 0:
        raise DataValidationError(
            f"binarized matrix for year {rca.year} is empty at threshold {threshold}"
        )

    return CountryProductMatrix(
        year=rca.year,
        countries=tuple(c for c, keep in zip(rca.countries, keep_rows) if keep),
        products=tuple(p for p, keep in zip(rca.products, keep_cols) if keep),
        m=m,
        dropped_countries=dropped_countries,
        dropped_products=dropped_products,
    )


def diversification(m: CountryProductMatrix) -> Dict[str, int]:
    return dict(zip(m.countries, (int(v) for v in m.m.sum(axis=1))))


def ubiquity(m: CountryProductMatrix) -> Dict[str, int]:
    return dict(zip(m.products, (int(v) for v in m.m.sum(axis=0))))


def order_matrix(m: CountryProductMatrix, fit: FitnessResult) -> CountryProductMatrix:
    """Rows by descending fitness, columns by ascending complexity (the nested view)."""
    missing_countries = [c for c in m.countries if c not in fit.fitness]
    missing_products = [p for p in m.products if p not in fit.complexity]
    if missing_countries or missing_products:
        raise DataValidationError(
            f"fitness result does not cover the matrix: missing countries {missing_countries}, "
            f"missing products {missing_products}"
        )

    # stable sorts with the code as tie-breaker keep the ordering deterministic
    row_order = sorted(range(len(m.countries)), key=lambda i: (-fit.fitness[m.countries[i]], m.countries[i]))
    col_order = sorted(range(len(m.products)), key=lambda j: (fit.complexity[m.products[j]], m.products[j]))

    return CountryProductMatrix(
        year=m.year,
        countries=tuple(m.countries[i] for i in row_order),
        products=tuple(m.products[j] for j in col_order),
        m=m.m[np.ix_(row_order, col_order)],
        dropped_countries=m.dropped_countries,
        dropped_products=m.dropped_products,
    )
