"""Builders shared by the test modules."""
import numpy as np

from fitgrowth_core.panel_model import CountryProductMatrix, MacroObservation, TradeFlows


def codes(prefix: str, n: int):
    return [f"{prefix}{i}" for i in range(n)]


def make_matrix(rows, year=2000, countries=None, products=None) -> CountryProductMatrix:
    m = np.asarray(rows)
    countries = countries or [chr(ord("A") + i) for i in range(m.shape[0])]
    products = products or codes("p", m.shape[1])
    return CountryProductMatrix(year, tuple(countries), tuple(products), m)


def staircase(n: int) -> np.ndarray:
    """Strictly nested n x n matrix: country i exports the first n - i products."""
    return (np.arange(n)[None, :] < (n - np.arange(n))[:, None]).astype(int)


def flows_from_matrix(x, year=2000, countries=None, products=None) -> TradeFlows:
    x = np.asarray(x, dtype=float)
    countries = countries or [chr(ord("A") + i) for i in range(x.shape[0])]
    products = products or codes("p", x.shape[1])
    records = [
        (year, countries[i], products[j], float(x[i, j]))
        for i in range(x.shape[0])
        for j in range(x.shape[1])
        if x[i, j] > 0
    ]
    return TradeFlows(tuple(records))


def macro_obs(country, year, gdp=1000.0, capital=3000.0, employment=0.5,
              human_capital=2.0, labor_share=0.6, population=1e6) -> MacroObservation:
    return MacroObservation(
        year=year, country=country, gdp_pc=gdp, capital_pc=capital, employment_rate=employment,
        human_capital=human_capital, labor_share=labor_share, population=population,
    )
