"""Can Alice and Bob fake the noisy statistics by locally re-labelling the
noiseless ones?

Alice applies a row-stochastic 2x2 map ``a`` to her bit and Bob a 2x4 map
``b`` from his two noiseless outcomes to the four Bell symbols. The system
is bilinear in (a, b); fixing ``a`` on a grid leaves a linear program in
``b`` whose optimum is the best achievable L-infinity mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .protocol import JointDistribution
from .simplex import linprog


@dataclass(frozen=True, eq=False)
class StochasticMap:
    rows: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.rows, dtype=float)
        if r.ndim != 2:
            raise ValueError("stochastic map must be a matrix")
        if r.min() < -1e-12:
            raise ValueError(f"negative transition probability {r.min():.3g}")
        if np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError(f"rows do not sum to 1: {r.sum(axis=1)}")
        r = np.clip(r, 0.0, None)
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)

    @classmethod
    def alice(cls, a00: float, a10: float) -> "StochasticMap":
        return cls(np.array([[a00, 1 - a00], [a10, 1 - a10]]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


IDENTITY_A = StochasticMap(np.eye(2))
IDENTITY_B = StochasticMap(np.eye(2, 4))


def _source(p: JointDistribution | np.ndarray) -> np.ndarray:
    arr = p.p if isinstance(p, JointDistribution) else np.asarray(p, dtype=float)
    if arr.shape != (2, 3, 4):
        raise ValueError(f"joint distribution must have shape (2, 3, 4), got {arr.shape}")
    if np.any(np.abs(arr[:, :, 2:]) > 1e-12):
        raise ValueError("source statistics must only use Bob's symbols 0 and 1")
    return arr[:, :, :2]


def local_postprocess(p: JointDistribution | np.ndarray, a: StochasticMap,
                      b: StochasticMap) -> JointDistribution:
    """P'(A', E, B') = sum_{A,B} P(A, E, B) a[A, A'] b[B, B']."""
    if a.shape != (2, 2) or b.shape != (2, 4):
        raise ValueError(f"need a 2x2 and a 2x4 map, got {a.shape} and {b.shape}")
    src = _source(p)
    return JointDistribution(np.einsum("xeb,xy,bz->yez", src, a.rows, b.rows))


def _target(p_target) -> np.ndarray:
    arr = (p_target.p if isinstance(p_target, JointDistribution)
           else np.asarray(p_target, dtype=float))
    if arr.shape != (2, 3, 4):
        raise ValueError(f"target must have shape (2, 3, 4), got {arr.shape}")
    return arr.reshape(-1)


_A_EQ = np.zeros((2, 9))
_A_EQ[0, 0:4] = 1.0
_A_EQ[1, 4:8] = 1.0
_COST = np.zeros(9)
_COST[8] = 1.0


def _solve_b(src: np.ndarray, target: np.ndarray, a: StochasticMap, warm=None):
    # q[A', E, B] = sum_A P[A, E, B] a[A, A']
    q = np.einsum("xeb,xy->yeb", src, a.rows)
    # coefficient of b[B, B'] (flattened B*4 + B') in cell (A', E, B')
    coeff = np.zeros((2, 3, 4, 2, 4))
    for bp in range(4):
        coeff[:, :, bp, :, bp] = q
    coeff = coeff.reshape(24, 8)
    ones = np.ones((24, 1))
    A_ub = np.vstack([np.hstack([coeff, -ones]), np.hstack([-coeff, -ones])])
    b_ub = np.concatenate([target, -target])
    res = linprog(_COST, A_ub, b_ub, _A_EQ, np.ones(2), warm_basis=warm)
    b = res.x[:8].reshape(2, 4)
    b = b / b.sum(axis=1, keepdims=True)
    return float(res.x[8]), StochasticMap(b), res.basis


def lp_residual_b_given_a(p, p_target, a: StochasticMap) -> tuple[float, StochasticMap]:
    """Best L-infinity fit over row-stochastic ``b`` for a fixed ``a``."""
    if a.shape != (2, 2):
        raise ValueError(f"Alice's map must be 2x2, got {a.shape}")
    r, b, _ = _solve_b(_source(p), _target(p_target), a)
    return r, b


@dataclass(frozen=True)
class FeasibilityReport:
    min_residual: float
    best_a: StochasticMap
    best_b: StochasticMap
    tol: float
    evaluated: int = field(default=0, compare=False)

    @property
    def feasible(self) -> bool:
        return self.min_residual < self.tol


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    pts = lo + step * np.arange(n + 1)
    return np.clip(np.append(pts, hi) if pts[-1] < hi - 1e-12 else pts, 0.0, 1.0)


def feasibility_search(p, p_target, grid_step: float = 0.01,
                       tol: float = 1e-6) -> FeasibilityReport:
    """Sweep Alice's map over a grid, solve for Bob's map exactly, then
    refine once on a ten-times finer grid around the best cell."""
    if not 0 < grid_step <= 0.5:
        raise ValueError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    src, target = _source(p), _target(p_target)
    best = None
    count = 0
    warm = None

    def scan(xs, ys):
        nonlocal best, count, warm
        for a00 in xs:
            for a10 in ys:
                a = StochasticMap.alice(float(a00), float(a10))
                r, b, warm = _solve_b(src, target, a, warm)
                count += 1
                if best is None or r < best[0] - 1e-15:
                    best = (r, a, b)
                if best[0] <= 1e-12:
                    return True
        return False

    coarse = _grid(0.0, 1.0, grid_step)
    if not scan(coarse, coarse):
        c00, c10 = best[1].rows[0, 0], best[1].rows[1, 0]
        fine = grid_step / 10

        def around(c):
            return _grid(max(0.0, c - grid_step), min(1.0, c + grid_step), fine)

        scan(around(c00), around(c10))
    r, a, b = best
    return FeasibilityReport(r, a, b, tol, count)


@dataclass(frozen=True)
class Certificate:
    lam: float
    infeasible: bool
    steps: list[str]


def algebraic_witness(lam: float) -> Certificate:
    """Case analysis on three cells of the case-2 target reachable from the
    noiseless table; returns the chain of implications."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    steps = [
        "P'(0,1,2) = P(1,1,0) a10 b02 + P(1,1,1) a10 b12 = (a10/8)(b02 + b12) must equal 0",
        "P'(1,1,2) = (a11/8)(b02 + b12) must equal 0; since a10 + a11 = 1 the two "
        "a-terms cannot both vanish, so b02 + b12 = 0 and hence b02 = b12 = 0",
        f"P'(0,0,2) = a00 b02 / 2 + (a10/8)(b02 + b12) must equal lambda/4 = {lam / 4:.6g}, "
        f"so a00 b02 = lambda/2 = {lam / 2:.6g}",
    ]
    if lam > 0:
        steps.append("lambda > 0 forces b02 > 0, contradicting b02 = 0: no local maps exist")
    else:
        steps.append("lambda = 0: a00 b02 = 0 is consistent with b02 = 0; no contradiction")
    return Certificate(lam, lam > 0, steps)
