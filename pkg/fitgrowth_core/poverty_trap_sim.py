"""Capital accumulation with subsistence saving, its equilibria, and a synthetic world.

The map is K' = s(K) * A * K^alpha * L^(1-alpha) + (1 - delta) * K. With
sigmoid saving s(K) = s_max / (1 + exp(K_F - K)) the map can have a low
stable equilibrium (the poverty trap), an unstable barrier near K_F and a
high stable equilibrium.
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit

from fitgrowth_core.concurrency_controller import get_concurrency_controller
from fitgrowth_core.config import SynthConfig, get_config
from fitgrowth_core.panel_model import (
    DataValidationError,
    Equilibrium,
    EquilibriumSet,
    MacroObservation,
    MacroPanel,
    SavingMode,
    SolowParams,
    Stability,
    TradeFlows,
    TradeRecord,
    TrajectoryPoint,
)

logger = logging.getLogger(__name__)

Real = Union[float, np.ndarray]

ROOT_RTOL = 1e-10


def production(p: SolowParams, K: Real) -> Real:
    return p.A * np.power(K, p.alpha) * p.L ** (1.0 - p.alpha)


def saving_rate(p: SolowParams, K: Real) -> Real:
    if p.saving_mode is SavingMode.CONSTANT:
        return p.s_max * np.ones_like(K, dtype=float) if np.ndim(K) else p.s_max
    # expit stays finite for any |K_F - K|
    return p.s_max * expit(np.subtract(K, p.K_F))


def net_investment(p: SolowParams, K: Real) -> Real:
    """g(K) = s(K) * Y(K) - delta * K; its zeros are the fixed points of the map."""
    return saving_rate(p, K) * production(p, K) - p.delta * np.asarray(K, dtype=float)


def step_capital(p: SolowParams, K: float) -> float:
    if K < 0:
        raise DataValidationError(f"capital must be non-negative, got {K}")
    return float(max(0.0, saving_rate(p, K) * production(p, K) + (1.0 - p.delta) * K))


def simulate(p: SolowParams, K0: float, T: int) -> List[TrajectoryPoint]:
    """Trajectory for t = 0..T starting from K0."""
    if T < 1:
        raise DataValidationError(f"simulation needs T >= 1, got {T}")
    if K0 < 0:
        raise DataValidationError(f"initial capital must be non-negative, got {K0}")

    points = []
    k = float(K0)
    for t in range(T + 1):
        points.append(TrajectoryPoint(t, k, float(production(p, k)), float(saving_rate(p, k))))
        if t < T:
            k = step_capital(p, k)
    return points


def find_equilibria(
    p: SolowParams,
    k_max: Optional[float] = None,
    n_scan: Optional[int] = None,
    scan_floor: Optional[float] = None,
) -> EquilibriumSet:
    """Zeros of g on (0, k_max] plus K = 0, each classified by the sign change of g.

    The scan grid is log-spaced from ``k_max * scan_floor`` so roots many
    orders of magnitude apart are all bracketed. A root is stable when g
    goes from positive to negative across it.
    """
    cfg = get_config().simulation
    k_max = cfg.k_max if k_max is None else k_max
    n_scan = cfg.n_scan if n_scan is None else n_scan
    scan_floor = cfg.scan_floor if scan_floor is None else scan_floor
    if not k_max > 0:
        raise DataValidationError(f"k_max must be > 0, got {k_max}")
    if n_scan < 100:
        raise DataValidationError(f"n_scan must be >= 100, got {n_scan}")

    grid = np.geomspace(k_max * scan_floor, k_max, n_scan)
    values = net_investment(p, grid)
    signs = np.sign(values)

    zero_stability = Stability.UNSTABLE if values[0] > 0 else Stability.STABLE
    equilibria = [Equilibrium(0.0, zero_stability)]

    def g(k: float) -> float:
        return float(net_investment(p, k))

    for i in range(n_scan - 1):
        left, right = signs[i], signs[i + 1]
        if left == 0:
            before = signs[i - 1] if i > 0 else right
            if before != right and before != 0:
                stability = Stability.STABLE if before > 0 else Stability.UNSTABLE
                equilibria.append(Equilibrium(float(grid[i]), stability))
            continue
        if right == 0 or left == right:
            continue
        root = bisect(g, grid[i], grid[i + 1], xtol=grid[i] * 1e-12, rtol=ROOT_RTOL)
        stability = Stability.STABLE if left > 0 else Stability.UNSTABLE
        equilibria.append(Equilibrium(float(root), stability))

    if signs[-1] == 0 and n_scan > 1 and signs[-2] != 0:
        stability = Stability.STABLE if signs[-2] > 0 else Stability.UNSTABLE
        equilibria.append(Equilibrium(float(grid[-1]), stability))

    upper_unbracketed = bool(values[-1] > 0)
    if upper_unbracketed:
        logger.warning(f"g(k_max={k_max}) > 0: an upper equilibrium may lie beyond the scan range")

    logger.debug(f"Equilibria: {[(round(e.k_star, 12), e.stability.value) for e in equilibria]}")
    return EquilibriumSet(tuple(equilibria), upper_unbracketed=upper_unbracketed)


# ---------------------------------------------------------------------------
# Synthetic world
# ---------------------------------------------------------------------------

class SyntheticWorld(NamedTuple):
    panel: MacroPanel
    flows: TradeFlows
    true_fitness: Dict[str, float]


def _logistic_progress(count: np.ndarray, scale: float = 5.0) -> np.ndarray:
    # 0 before any high-growth year, approaching 1 as they accumulate
    return 2.0 * (expit(count / scale) - 0.5)


def _country_params(cfg: SynthConfig, fitness: float) -> SolowParams:
    return SolowParams(
        A=cfg.A,
        alpha=cfg.alpha,
        L=1.0,
        delta=cfg.delta,
        s_max=cfg.s_max,
        K_F=cfg.k_f0 / fitness,
        saving_mode=SavingMode.SIGMOID,
    )


def _simulate_country(
    cfg: SynthConfig, index: int, country: str, fitness: float, fitness_max: float,
    products: Sequence[str], T: int, seed: int,
) -> Tuple[List[MacroObservation], List[TradeRecord]]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    params = _country_params(cfg, fitness)

    barriers = [e.k_star for e in find_equilibria(params).unstable() if e.k_star > 0]
    margin = rng.uniform(*cfg.k0_margin)
    k0 = (max(barriers) if barriers else params.K_F) * (1.0 + margin)

    path = simulate(params, k0, T)
    capital = np.array([pt.k for pt in path])
    a_noise = np.exp(rng.normal(0.0, cfg.a_noise_sd, size=len(path)))
    gdp = production(params, capital) * a_noise

    high_growth = net_investment(params, capital) > cfg.high_growth_fraction * params.delta * capital
    progress = _logistic_progress(np.cumsum(high_growth))
    employment = cfg.employment[0] + (cfg.employment[1] - cfg.employment[0]) * progress
    human_capital = cfg.human_capital[0] + (cfg.human_capital[1] - cfg.human_capital[0]) * progress
    population = 1.0e6 * (1.0 + cfg.population_growth) ** np.arange(len(path))

    observations = [
        MacroObservation(
            year=cfg.start_year + t,
            country=country,
            gdp_pc=float(gdp[t]),
            capital_pc=float(capital[t]),
            employment_rate=float(employment[t]),
            human_capital=float(human_capital[t]),
            labor_share=cfg.labor_share,
            population=float(population[t]),
        )
        for t in range(len(path))
    ]

    # nested staircase: the first k products, k proportional to fitness
    n_products = len(products)
    reach = max(1, int(round(n_products * fitness / fitness_max)))
    members = np.arange(n_products) < reach
    records = []
    for t in range(len(path)):
        flips = rng.random(n_products) < cfg.flip_rate
        exported = members ^ flips
        values = 1000.0 * np.exp(rng.normal(0.0, 0.3, size=n_products))
        records.extend(
            TradeRecord(cfg.start_year + t, country, products[j], float(values[j]))
            for j in np.flatnonzero(exported)
        )
    return observations, records


def synth_world(
    n_countries: Optional[int] = None,
    T: Optional[int] = None,
    seed: Optional[int] = None,
    fitness_levels: Optional[Sequence[float]] = None,
    config: Optional[SynthConfig] = None,
) -> SyntheticWorld:
    """Multi-country world whose industrialization barrier K_F = k_f0 / F falls with fitness.

    Each country starts just above its own unstable equilibrium. Country i
    draws all of its randomness from the stream seeded by (seed, i).
    """
    cfg = config or get_config().synth
    n_countries = cfg.n_countries if n_countries is None else n_countries
    T = cfg.steps if T is None else T
    seed = cfg.seed if seed is None else seed
    if fitness_levels is None:
        fitness_levels = np.geomspace(cfg.fitness_span[0], cfg.fitness_span[1], n_countries)
    fitness_levels = [float(f) for f in fitness_levels]

    if len(fitness_levels) != n_countries:
        raise DataValidationError(
            f"{len(fitness_levels)} fitness levels given for {n_countries} countries"
        )
    if n_countries < 6:
        raise DataValidationError(f"synthetic world needs at least 6 countries, got {n_countries}")
    if T < 20:
        raise DataValidationError(f"synthetic world needs T >= 20, got {T}")
    if any(not f > 0 for f in fitness_levels):
        raise DataValidationError(f"fitness levels must be positive: {fitness_levels}")
    if cfg.n_products < 1:
        raise DataValidationError(f"n_products must be >= 1, got {cfg.n_products}")

    width = len(str(n_countries))
    countries = [f"C{i + 1:0{width}d}" for i in range(n_countries)]
    products = [f"P{j + 1:03d}" for j in range(cfg.n_products)]
    fitness_max = max(fitness_levels)

    with get_concurrency_controller().executor() as pool:
        futures = [
            pool.submit(_simulate_country, cfg, i, countries[i], fitness_levels[i],
                        fitness_max, products, T, seed)
            for i in range(n_countries)
        ]
        results = [f.result() for f in futures]

    observations = [obs for country_obs, _ in results for obs in country_obs]
    records = [rec for _, country_records in results for rec in country_records]
    records.sort(key=lambda r: (r.year, r.country, r.product))

    logger.info(
        f"Synthetic world: {n_countries} countries, {T + 1} years, {len(records)} trade records"
    )
    return SyntheticWorld(
        panel=MacroPanel.from_observations(observations),
        flows=TradeFlows(tuple(records)),
        true_fitness=dict(zip(countries, fitness_levels)),
    )
