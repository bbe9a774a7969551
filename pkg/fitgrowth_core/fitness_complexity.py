"""Nonlinear fitness-complexity fixed point on the country-product matrix."""
import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import rankdata

from fitgrowth_core.config import get_config
from fitgrowth_core.panel_model import (
    CountryProductMatrix,
    DataValidationError,
    FitnessResult,
    UpdateScheme,
)

logger = logging.getLogger(__name__)

MatrixLike = Union[CountryProductMatrix, np.ndarray]


def _as_array(m: MatrixLike) -> np.ndarray:
    arr = m.m if isinstance(m, CountryProductMatrix) else np.asarray(m)
    arr = arr.astype(float)
    if arr.ndim != 2 or arr.size == 0:
        raise DataValidationError("fitness iteration needs a non-empty 2D matrix")
    return arr


def _complexity_from(m: np.ndarray, fitness: np.ndarray, floor: float) -> np.ndarray:
    # vanishing fitness is clamped so 1/F stays finite
    return 1.0 / (m.T @ (1.0 / np.maximum(fitness, floor)))


def fitness_step(
    m: MatrixLike,
    fitness: np.ndarray,
    complexity: np.ndarray,
    floor: Optional[float] = None,
    scheme: Union[UpdateScheme, str, None] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """One application of the fitness/complexity map followed by mean normalization.

    Fitness always comes from the incoming complexity. With the sequential
    scheme the complexity sum uses the fitness just produced by this call;
    with the simultaneous scheme it uses the incoming fitness. Both schemes
    share their fixed points.
    """
    cfg = get_config().fitness
    floor = cfg.floor if floor is None else floor
    scheme = UpdateScheme(scheme or cfg.scheme)
    arr = _as_array(m)

    fitness = np.asarray(fitness, dtype=float)
    complexity = np.asarray(complexity, dtype=float)
    if fitness.shape != (arr.shape[0],) or complexity.shape != (arr.shape[1],):
        raise DataValidationError(
            f"vector sizes {fitness.shape}/{complexity.shape} do not match matrix {arr.shape}"
        )

    f_tilde = arr @ complexity
    new_fitness = f_tilde / f_tilde.mean()

    source = new_fitness if scheme is UpdateScheme.SEQUENTIAL else fitness
    if (source < floor).any():
        logger.debug(f"{int((source < floor).sum())} fitness components clamped at floor {floor}")
    q_tilde = _complexity_from(arr, source, floor)
    new_complexity = q_tilde / q_tilde.mean()

    return new_fitness, new_complexity


def _ranks(values: np.ndarray) -> np.ndarray:
    # 1 = highest, ties share the smaller rank
    return rankdata(-values, method="min").astype(int)


def bipartite_components(m: MatrixLike) -> int:
    """Number of connected components of the country-product graph."""
    arr = _as_array(m)
    n_c, n_p = arr.shape
    adjacency = np.zeros((n_c + n_p, n_c + n_p))
    adjacency[:n_c, n_c:] = arr
    adjacency[n_c:, :n_c] = arr.T
    n_components, _ = connected_components(csr_matrix(adjacency), directed=False)
    return int(n_components)


def iterate_fitness(
    m: CountryProductMatrix,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    floor: Optional[float] = None,
    rank_window: Optional[int] = None,
    scheme: Union[UpdateScheme, str, None] = None,
    initial: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> FitnessResult:
    """Iterate the map from the all-ones start until values and ranking settle.

    Convergence needs both a relative change below ``tol`` on every
    component above the floor and an unchanged country ranking for
    ``rank_window`` consecutive iterations. An exact fixed point stops at
    once. Running out of budget is reported through ``converged=False``.
    """
    cfg = get_config().fitness
    max_iter = cfg.max_iter if max_iter is None else max_iter
    tol = cfg.tol if tol is None else tol
    floor = cfg.floor if floor is None else floor
    rank_window = cfg.rank_window if rank_window is None else rank_window
    scheme = UpdateScheme(scheme or cfg.scheme)

    if max_iter < 1:
        raise DataValidationError(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise DataValidationError(f"tol must be > 0, got {tol}")

    arr = _as_array(m)
    year = m.year if isinstance(m, CountryProductMatrix) else 0
    countries = m.countries if isinstance(m, CountryProductMatrix) else tuple(str(i) for i in range(arr.shape[0]))
    products = m.products if isinstance(m, CountryProductMatrix) else tuple(str(j) for j in range(arr.shape[1]))

    n_components = bipartite_components(arr)
    if n_components > 1:
        logger.warning(f"Year {year}: country-product graph has {n_components} disconnected components")

    if initial is None:
        fitness, complexity = np.ones(arr.shape[0]), np.ones(arr.shape[1])
    else:
        fitness, complexity = (np.asarray(v, dtype=float) for v in initial)

    ranks = _ranks(fitness)
    rank_stable_at = 0
    converged = False
    floored = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        new_fitness, new_complexity = fitness_step(arr, fitness, complexity, floor=floor, scheme=scheme)
        floored = floored or bool((new_fitness < floor).any())

        old = np.concatenate([fitness, complexity])
        new = np.concatenate([new_fitness, new_complexity])
        above = (old > floor) & (new > floor)
        change = np.abs(new[above] - old[above]) / old[above]
        max_change = float(change.max()) if change.size else 0.0

        new_ranks = _ranks(new_fitness)
        if not np.array_equal(new_ranks, ranks):
            rank_stable_at = iteration
        ranks = new_ranks
        fitness, complexity = new_fitness, new_complexity

        if max_change == 0.0:
            converged = True
            break
        if max_change < tol and iteration - rank_stable_at >= rank_window:
            converged = True
            break

    if not converged:
        logger.warning(f"Year {year}: fitness not converged after {iteration} iterations")
    if floored:
        logger.warning(f"Year {year}: some fitness components fell below floor {floor}")
    logger.debug(f"Year {year}: {iteration} iterations, ranking stable since {rank_stable_at}")

    return FitnessResult(
        year=year,
        fitness=dict(zip(countries, (float(v) for v in fitness))),
        complexity=dict(zip(products, (float(v) for v in complexity))),
        iterations=iteration,
        converged=converged,
        rank_stable_at=rank_stable_at,
        floored=floored,
        n_components=n_components,
    )


def rank_of(fit: FitnessResult) -> Dict[str, int]:
    countries = list(fit.fitness)
    ranks = _ranks(np.array([fit.fitness[c] for c in countries]))
    return dict(zip(countries, (int(r) for r in ranks)))
