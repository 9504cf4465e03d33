"""Revised simplex: values and duals against scipy, statuses, anticycling."""

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from fluidbandit.simplex import solve_lp


def _check_against_scipy(A, b, c):
    res = solve_lp(sp.csc_matrix(A), b, c)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert ref.status == 0
    assert res.status == "optimal"
    scale = 1.0 + abs(ref.fun)
    assert abs(res.obj - ref.fun) <= 1e-7 * scale
    # primal feasibility of our vertex
    assert res.x.min() >= 0.0
    assert np.abs(A @ res.x - b).max() <= 1e-7 * (1.0 + np.abs(b).max())
    # dual feasibility and strong duality for min c'x, Ax = b, x >= 0
    assert (A.T @ res.y - c).max() <= 1e-6
    assert abs(b @ res.y - res.obj) <= 1e-6 * scale
    return res


def test_random_lps_match_scipy():
    rng = np.random.default_rng(7)
    for m, n in [(3, 6), (4, 9), (6, 12), (8, 16), (10, 24)]:
        for _ in range(4):
            A = rng.normal(size=(m, n))
            x0 = rng.uniform(0.5, 2.0, size=n)
            b = A @ x0  # mixed signs exercise the row-flip path
            c = rng.uniform(0.0, 1.0, size=n)  # c >= 0 keeps the LP bounded
            _check_against_scipy(A, b, c)


def test_degenerate_doubly_stochastic_lp():
    # row/column sum constraints of a k x k matrix: rank-deficient and
    # massively degenerate at permutation vertices
    rng = np.random.default_rng(3)
    k = 4
    n = k * k
    rows = []
    for i in range(k):
        r = np.zeros(n)
        r[i * k:(i + 1) * k] = 1.0
        rows.append(r)
    for j in range(k):
        r = np.zeros(n)
        r[j::k] = 1.0
        rows.append(r)
    A = np.array(rows)
    b = np.ones(2 * k)
    c = rng.uniform(0.0, 1.0, size=n)
    _check_against_scipy(A, b, c)


def test_redundant_rows():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 1.0])
    c = np.array([-1.0, 0.0])
    res = solve_lp(sp.csc_matrix(A), b, c)
    assert res.status == "optimal"
    assert abs(res.obj - (-1.0)) <= 1e-9
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-9)


def test_anticycling_classic_example():
    # standard-form encoding of a problem known to cycle under naive
    # largest-coefficient pivoting; optimum is -1/20
    A = np.array([
        [0.25, -60.0, -1.0 / 25.0, 9.0, 1.0, 0.0, 0.0],
        [0.5, -90.0, -1.0 / 50.0, 3.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([0.0, 0.0, 1.0])
    c = np.array([-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0])
    res = solve_lp(sp.csc_matrix(A), b, c)
    assert res.status == "optimal"
    assert abs(res.obj - (-0.05)) <= 1e-9


def test_infeasible():
    A = np.array([[1.0, 1.0]])
    b = np.array([-1.0])
    c = np.zeros(2)
    assert solve_lp(sp.csc_matrix(A), b, c).status == "infeasible"


def test_unbounded():
    A = np.array([[1.0, -1.0]])
    b = np.array([0.0])
    c = np.array([-1.0, 0.0])
    assert solve_lp(sp.csc_matrix(A), b, c).status == "unbounded"


def test_nonbasic_entries_exactly_zero():
    # vertex solutions carry exact zeros, not near-zero junk; the
    # category classifier depends on this
    rng = np.random.default_rng(11)
    A = rng.normal(size=(5, 12))
    b = A @ rng.uniform(0.5, 2.0, size=12)
    c = rng.uniform(0.0, 1.0, size=12)
    res = solve_lp(sp.csc_matrix(A), b, c)
    assert res.status == "optimal"
    assert ((res.x == 0.0) | (res.x > 1e-9)).all()
