"""Dense two-phase tableau simplex with Bland's anticycling rule.

Sized for the small post-processing programs in :mod:`classical_sim`
(tens of rows and columns); no attempt at sparsity or scaling. A basis
from a previous, structurally identical program can be passed to skip
phase 1, which is how the grid search over Alice's maps stays fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


class CyclingError(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    basis: tuple[int, ...] | None  # None when redundant rows were dropped


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    colvals = tab[:, col].copy()
    colvals[row] = 0.0
    tab -= colvals[:, None] * tab[row]


def _run(tab: np.ndarray, basis: list[int], ncols: int, eps: float,
         max_iter: int) -> int:
    """Optimise the tableau in place; the objective row is the last row and
    only the first ``ncols`` columns may enter."""
    m = tab.shape[0] - 1
    basis_arr = np.asarray(basis)
    for it in range(max_iter):
        neg = tab[m, :ncols] < -eps
        if not neg.any():
            basis[:] = basis_arr.tolist()
            return it
        col = int(neg.argmax())  # Bland: lowest index
        column = tab[:m, col]
        positive = np.flatnonzero(column > eps)
        if positive.size == 0:
            raise UnboundedError(f"objective unbounded along column {col}")
        ratios = tab[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + eps * max(1.0, abs(best))]
        row = int(ties[basis_arr[ties].argmin()])
        _pivot(tab, row, col)
        basis_arr[row] = col
    raise CyclingError(f"no optimum after {max_iter} pivots")


def _standard_form(c, A_ub, b_ub, A_eq, b_eq):
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the cost vector")
    m_ub, m_eq = b_ub.size, b_eq.size
    nvar = n + m_ub
    A = np.zeros((m_ub + m_eq, nvar))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, np.zeros(m_ub)])
    return c, A, b, cost, m_ub, m_eq


def _phase2(A, b, cost, basis, eps, max_iter, tab=None):
    m, nvar = A.shape
    if tab is None:
        tab = np.zeros((m + 1, nvar + 1))
        tab[:m, :nvar] = A
        tab[:m, -1] = b
    tab[m, :nvar] = cost
    tab[m, -1] = 0.0
    for r, var in enumerate(basis):
        if cost[var] != 0.0:
            tab[m] -= cost[var] * tab[r]
    iters = _run(tab, basis, nvar, eps, max_iter)
    x = np.zeros(nvar)
    x[basis] = tab[:m, -1]
    return x, iters


def _warm_tableau(A, b, basis, eps):
    """Tableau for a given basis, or None if it is singular or infeasible."""
    B = A[:, basis]
    try:
        lhs = np.linalg.solve(B, np.column_stack([A, b]))
    except np.linalg.LinAlgError:
        return None
    if lhs[:, -1].min() < -eps or not np.all(np.isfinite(lhs)):
        return None
    # the basic columns are exactly unit vectors in a clean tableau
    lhs[:, basis] = np.eye(len(basis))
    lhs[:, -1] = np.clip(lhs[:, -1], 0.0, None)
    tab = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
    tab[:-1] = lhs
    return tab


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *,
            warm_basis: Sequence[int] | None = None, eps: float = 1e-9,
            max_iter: int = 10_000) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c, A, b, cost, m_ub, m_eq = _standard_form(c, A_ub, b_ub, A_eq, b_eq)
    n = c.size
    m, nvar = A.shape

    if warm_basis is not None and len(warm_basis) == m:
        basis = list(warm_basis)
        tab = _warm_tableau(A, b, basis, eps)
        if tab is not None:
            x, iters = _phase2(A, b, cost, basis, eps, max_iter, tab)
            x = np.clip(x[:n], 0.0, None)
            return LPResult(x, float(c @ x), iters, tuple(basis))

    neg = b < 0
    A = A.copy()
    A[neg] *= -1
    b = np.abs(b)

    # phase 1: artificials only where a slack cannot start in the basis
    needs_art = np.concatenate([neg[:m_ub], np.ones(m_eq, dtype=bool)])
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    tab = np.zeros((m + 1, nvar + n_art + 1))
    tab[:m, :nvar] = A
    tab[art_rows, nvar + np.arange(n_art)] = 1.0
    tab[:m, -1] = b
    basis = [n + r for r in range(m)]
    for k, r in enumerate(art_rows):
        basis[r] = nvar + k
    tab[m, :nvar] = -A[art_rows].sum(axis=0)
    tab[m, -1] = -b[art_rows].sum()
    iters = _run(tab, basis, nvar + n_art, eps, max_iter)
    if -tab[m, -1] > 1e-9 * max(1.0, b.sum()):
        raise InfeasibleError(f"phase 1 optimum {-tab[m, -1]:.3g} > 0")

    # drive remaining artificials out of the basis
    keep_rows = []
    for r, var in enumerate(basis):
        if var < nvar:
            keep_rows.append(r)
            continue
        candidates = np.flatnonzero(np.abs(tab[r, :nvar]) > 1e-9)
        if candidates.size:
            _pivot(tab, r, int(candidates[0]))
            basis[r] = int(candidates[0])
            keep_rows.append(r)
        # otherwise the row is redundant and is dropped

    tab2 = np.zeros((len(keep_rows) + 1, nvar + 1))
    tab2[:-1, :nvar] = tab[keep_rows, :nvar]
    tab2[:-1, -1] = tab[keep_rows, -1]
    basis = [basis[r] for r in keep_rows]
    x, more = _phase2(tab2[:-1, :nvar], tab2[:-1, -1], cost, basis, eps, max_iter, tab2)
    x = np.clip(x[:n], 0.0, None)
    full = tuple(basis) if len(basis) == m else None
    return LPResult(x, float(c @ x), iters + more, full)
