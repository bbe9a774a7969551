import time
from fractions import Fraction

import numpy as np
import pytest

from fitgrowth_core.fitness_complexity import (
    bipartite_components,
    fitness_step,
    iterate_fitness,
    rank_of,
)
from fitgrowth_core.panel_model import DataValidationError, FitnessResult, UpdateScheme
from fitgrowth_core.rca_binarize import diversification
from tests.helpers import make_matrix, staircase

NESTED_2X2 = [[1, 1], [0, 1]]


@pytest.mark.parametrize("shape", [(1, 1), (3, 3), (4, 7), (10, 2)])
def test_all_ones_is_exact_fixed_point(shape):
    start = time.perf_counter()
    fit = iterate_fitness(make_matrix(np.ones(shape, dtype=int)))
    assert fit.iterations == 1
    assert fit.converged
    assert all(v == 1.0 for v in fit.fitness.values())
    assert all(v == 1.0 for v in fit.complexity.values())
    assert time.perf_counter() - start < 1.0


def test_single_step_on_all_ones():
    f, q = fitness_step(np.ones((3, 3)), np.ones(3), np.ones(3))
    assert f.tolist() == [1.0, 1.0, 1.0]
    assert q.tolist() == [1.0, 1.0, 1.0]


def test_hand_iterates_on_nested_2x2():
    m = make_matrix(NESTED_2X2)
    f, q = np.ones(2), np.ones(2)
    for n in range(1, 7):
        f, q = fitness_step(m, f, q)
        expected_f = (Fraction(4 * n, 2 * n + 1), Fraction(2, 2 * n + 1))
        expected_q = (Fraction(2 * n + 1, n + 1), Fraction(1, n + 1))
        np.testing.assert_allclose(f, [float(v) for v in expected_f], rtol=0, atol=1e-12)
        np.testing.assert_allclose(q, [float(v) for v in expected_q], rtol=0, atol=1e-12)


def test_first_three_iterates_match_exact_rationals():
    m = make_matrix(NESTED_2X2)
    f, q = np.ones(2), np.ones(2)
    expected = [
        ((4 / 3, 2 / 3), (3 / 2, 1 / 2)),
        ((8 / 5, 2 / 5), (5 / 3, 1 / 3)),
        ((12 / 7, 2 / 7), (7 / 4, 1 / 4)),
    ]
    for expected_f, expected_q in expected:
        f, q = fitness_step(m, f, q)
        assert f == pytest.approx(expected_f, abs=1e-12)
        assert q == pytest.approx(expected_q, abs=1e-12)


def test_simultaneous_scheme_shares_the_fixed_point():
    f, q = fitness_step(np.ones((2, 3)), np.ones(2), np.ones(3), scheme=UpdateScheme.SIMULTANEOUS)
    assert f.tolist() == [1.0, 1.0]
    assert q.tolist() == [1.0, 1.0, 1.0]

    # first step: complexity from the incoming, uniform fitness
    f, q = fitness_step(np.array(NESTED_2X2), np.ones(2), np.ones(2), scheme="simultaneous")
    assert f == pytest.approx((4 / 3, 2 / 3), abs=1e-12)
    assert q == pytest.approx((4 / 3, 2 / 3), abs=1e-12)


def test_normalization_and_nonnegativity_on_random_matrices():
    rng = np.random.default_rng(42)
    start = time.perf_counter()
    for _ in range(100):
        n_c, n_p = rng.integers(2, 31), rng.integers(2, 51)
        m = (rng.random((n_c, n_p)) < 0.4).astype(int)
        m[m.sum(axis=1) == 0, 0] = 1
        m[0, m.sum(axis=0) == 0] = 1
        f, q = np.ones(n_c), np.ones(n_p)
        for _ in range(20):
            f, q = fitness_step(m, f, q)
            assert abs(f.mean() - 1.0) < 1e-9
            assert abs(q.mean() - 1.0) < 1e-9
            assert (f >= 0).all() and (q >= 0).all()
    assert time.perf_counter() - start < 10.0


def test_permutation_equivariance():
    rng = np.random.default_rng(7)
    m = (rng.random((6, 9)) < 0.5).astype(int)
    m[m.sum(axis=1) == 0, 0] = 1
    m[0, m.sum(axis=0) == 0] = 1
    rows, cols = rng.permutation(6), rng.permutation(9)

    f, q = np.ones(6), np.ones(9)
    pf, pq = np.ones(6), np.ones(9)
    for _ in range(15):
        f, q = fitness_step(m, f, q)
        pf, pq = fitness_step(m[np.ix_(rows, cols)], pf, pq)
        np.testing.assert_allclose(pf, f[rows], rtol=1e-12)
        np.testing.assert_allclose(pq, q[cols], rtol=1e-12)


def test_nested_2x2_ranking_is_stable_from_first_iteration():
    fit = iterate_fitness(make_matrix(NESTED_2X2))
    assert rank_of(fit) == {"A": 1, "B": 2}
    assert fit.rank_stable_at == 1
    # B decays like 1/n and stays above the floor, so its relative change never meets tol
    assert not fit.converged
    assert fit.iterations == 1000
    assert fit.fitness["A"] > 1.99
    assert fit.fitness["B"] < 0.01


def test_budget_exhaustion_is_reported_not_raised(caplog):
    fit = iterate_fitness(make_matrix(NESTED_2X2), max_iter=1)
    assert fit.iterations == 1
    assert not fit.converged
    assert "not converged" in caplog.text


def test_staircase_fitness_follows_diversification():
    m = make_matrix(staircase(4))
    fit = iterate_fitness(m)
    div = diversification(m)
    by_fitness = sorted(fit.fitness, key=fit.fitness.get, reverse=True)
    by_diversification = sorted(div, key=div.get, reverse=True)
    assert by_fitness == by_diversification


@pytest.mark.parametrize("scheme", ["sequential", "simultaneous"])
def test_ranking_does_not_depend_on_the_start(scheme):
    rng = np.random.default_rng(11)
    matrix = make_matrix(staircase(5))

    baseline = iterate_fitness(matrix, max_iter=50, scheme=scheme)
    for _ in range(5):
        initial = (rng.uniform(0.5, 1.5, 5), rng.uniform(0.5, 1.5, 5))
        fit = iterate_fitness(matrix, max_iter=50, scheme=scheme, initial=initial)
        assert rank_of(fit) == rank_of(baseline)


def test_disconnected_components_are_counted(caplog):
    m = make_matrix([[1, 0], [0, 1]])
    assert bipartite_components(m) == 2
    fit = iterate_fitness(m)
    assert fit.n_components == 2
    assert "disconnected" in caplog.text


def test_invalid_arguments():
    with pytest.raises(DataValidationError):
        iterate_fitness(make_matrix([[1]]), max_iter=0)
    with pytest.raises(DataValidationError):
        iterate_fitness(make_matrix([[1]]), tol=0.0)
    with pytest.raises(DataValidationError):
        fitness_step(np.ones((2, 2)), np.ones(3), np.ones(2))


@pytest.mark.parametrize(
    "fitness, expected",
    [
        ({"A": 2.0, "B": 0.5}, {"A": 1, "B": 2}),
        ({"A": 1.0, "B": 1.0}, {"A": 1, "B": 1}),
        ({"A": 3.0, "B": 1.0, "C": 1.0}, {"A": 1, "B": 2, "C": 2}),
    ],
)
def test_rank_of(fitness, expected):
    fit = FitnessResult(2000, fitness, {"p": 1.0}, 1, True, 0)
    assert rank_of(fit) == expected
