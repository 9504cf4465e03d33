"""Self-contained two-phase revised simplex for equality-form LPs.

Solves  min c'x  s.t.  A x = b,  x >= 0  with a dense basis inverse kept
up to date by rank-one updates, sparse column pricing, Dantzig entering
rule, and a permanent switch to Bland's rule after a long degenerate
streak.  Artificial variables are retained and never re-enter, so
redundant rows need no preprocessing; an artificial that is basic at zero
is forced out the moment an entering column crosses its row.

This is the package's primary LP engine; scipy's HiGHS is wired elsewhere
as an independent cross-check and as a fallback backend for large
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

try:
    from scipy.linalg.blas import dger as _dger
except ImportError:  # pragma: no cover
    _dger = None

# Reduced-cost threshold for entering candidates.
OPT_TOL = 1e-9
# Ordinary pivot magnitude floor.
PIV_TOL = 1e-10
# Forced removal of a zero-valued artificial needs a safer pivot.
FORCE_PIV_TOL = 1e-7
# Phase-1 objective above this means infeasible.
FEAS_TOL = 1e-7
# Degenerate steps before switching to Bland's rule for good.
BLAND_TRIGGER = 300
# Rebuild the basis inverse from scratch this often; rank-one update
# drift past ~1e3 pivots was measured at 1e-6 scale on 2.5e3-row LPs.
REFACTOR_EVERY = 1000


@dataclass
class SimplexResult:
    """Outcome of one solve.

    :status: "optimal", "infeasible", "unbounded", or "iteration_limit".
    :x: primal solution over structural variables, shape (n,).
    :y: row duals for the min problem, original row order and sign.
    :obj: c'x at the final point.
    :iterations: total pivots across both phases.
    :basis: final basic variable indices (artificials >= n may appear).
    """

    status: str
    x: np.ndarray
    y: np.ndarray
    obj: float
    iterations: int
    basis: np.ndarray


def _rank1_update(binv: np.ndarray, d: np.ndarray, leave: int) -> None:
    """binv <- E(d, leave) @ binv, in place."""
    pivot_row = binv[leave] / d[leave]
    if _dger is not None and binv.flags.f_contiguous:
        _dger(-1.0, d, pivot_row, a=binv, overwrite_a=1)
    else:
        binv -= np.outer(d, pivot_row)
    binv[leave] = pivot_row


def _refactor(A: sp.csc_matrix, basis: np.ndarray, m: int, n: int) -> np.ndarray:
    """Recompute the dense basis inverse from the basis column set."""
    B = np.zeros((m, m), dtype=np.float64, order="F")
    struct = basis < n
    if struct.any():
        B[:, struct] = A[:, basis[struct]].toarray()
    for i in np.flatnonzero(~struct):
        B[basis[i] - n, i] = 1.0
    binv = np.linalg.inv(B)
    return np.asfortranarray(binv)


def solve_lp(A: sp.spmatrix, b: np.ndarray, c: np.ndarray,
             maxiter: int | None = None) -> SimplexResult:
    """Two-phase revised simplex on min c'x, Ax=b, x>=0."""
    A = sp.csc_matrix(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if maxiter is None:
        maxiter = 50_000 + 20 * m

    # Normalize to b >= 0 for the artificial start; remember flipped rows.
    flip = b < 0
    if flip.any():
        A = sp.csc_matrix(sp.diags(np.where(flip, -1.0, 1.0)) @ A)
        b = np.abs(b)
    AT = sp.csr_matrix(A.T)  # fast A'y products for pricing
    col_ind, col_ptr, col_val = A.indices, A.indptr, A.data

    basis = np.arange(n, n + m)  # start from the all-artificial basis
    binv = np.asfortranarray(np.eye(m))
    xB = b.copy()
    in_basis = np.zeros(n, dtype=bool)

    iterations = 0
    bland = False
    degen_streak = 0
    since_refactor = 0

    def column_dense(j: int) -> np.ndarray:
        lo, hi = col_ptr[j], col_ptr[j + 1]
        return binv[:, col_ind[lo:hi]] @ col_val[lo:hi]

    def run_phase(cost: np.ndarray, phase_two: bool) -> str:
        nonlocal iterations, bland, degen_streak, since_refactor, xB, binv
        while True:
            if iterations >= maxiter:
                return "iteration_limit"
            struct_mask = basis < n
            cb_full = np.zeros(m)
            cb_full[struct_mask] = cost[basis[struct_mask]]
            if not phase_two:
                cb_full[~struct_mask] = 1.0
            y = cb_full @ binv
            red = cost - AT @ y
            red[in_basis] = 0.0
            if bland:
                cand = np.flatnonzero(red < -OPT_TOL)
                if cand.size == 0:
                    return "optimal"
                enter = int(cand[0])
            else:
                enter = int(np.argmin(red))
                if red[enter] >= -OPT_TOL:
                    return "optimal"
            d = column_dense(enter)

            # force out an artificial basic at zero whose row is crossed
            leave = -1
            theta = 0.0
            if phase_two and not struct_mask.all():
                forced = np.flatnonzero(~struct_mask & (np.abs(d) > FORCE_PIV_TOL))
                if forced.size:
                    leave = int(forced[np.argmax(np.abs(d[forced]))])
            if leave < 0:
                pos = d > PIV_TOL
                if not pos.any():
                    return "unbounded" if phase_two else "optimal"
                idx = np.flatnonzero(pos)
                ratios = xB[idx] / d[idx]
                theta = float(ratios.min())
                ties = idx[ratios <= theta + 1e-9 * (1.0 + theta)]
                if bland:
                    leave = int(ties[np.argmin(basis[ties])])
                else:
                    leave = int(ties[np.argmax(d[ties])])

            if theta <= 1e-12:
                degen_streak += 1
                if degen_streak > BLAND_TRIGGER:
                    bland = True
            else:
                degen_streak = 0

            xB -= theta * d
            xB[leave] = theta
            np.maximum(xB, 0.0, out=xB)
            old = basis[leave]
            if old < n:
                in_basis[old] = False
            basis[leave] = enter
            in_basis[enter] = True
            _rank1_update(binv, d, leave)
            iterations += 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                binv = _refactor(A, basis, m, n)
                xB = np.maximum(binv @ b, 0.0)
                since_refactor = 0

    status = run_phase(np.zeros(n), phase_two=False)
    if status != "optimal":
        return SimplexResult(status, np.zeros(n), np.zeros(m), float("nan"),
                             iterations, basis.copy())
    binv = _refactor(A, basis, m, n)
    xB = np.maximum(binv @ b, 0.0)
    since_refactor = 0
    art_mass = float(xB[basis >= n].sum())
    if art_mass > FEAS_TOL:
        return SimplexResult("infeasible", np.zeros(n), np.zeros(m), float("nan"),
                             iterations, basis.copy())

    degen_streak = 0
    bland = False
    # Rank-one drift can both corrupt xB and stop the phase early on stale
    # reduced costs, so certify termination against a fresh factorization
    # and resume if anything still prices in.
    for _ in range(5):
        status = run_phase(c, phase_two=True)
        binv = _refactor(A, basis, m, n)
        xB = np.maximum(binv @ b, 0.0)
        since_refactor = 0
        if status != "optimal":
            break
        struct = basis < n
        cb_full = np.zeros(m)
        cb_full[struct] = c[basis[struct]]
        red = c - AT @ (cb_full @ binv)
        red[in_basis] = 0.0
        if red.min() >= -OPT_TOL:
            break

    struct = basis < n
    cb_full = np.zeros(m)
    cb_full[struct] = c[basis[struct]]
    y = cb_full @ binv
    x = np.zeros(n)
    x[basis[struct]] = xB[struct]
    y = np.where(flip, -y, y)
    return SimplexResult(status, x, y, float(c @ x), iterations, basis.copy())
