"""McCormick relaxation with an outer-approximated pool of concave cuts.

Column layout of the LP: ``x`` in ``[0, n)``, ``y`` in ``[n, 2n)`` and the
product variables ``w`` in ``[2n, 3n)``.  Only the diagonal products
``w_i ~ x_i y_i`` exist; no row of the problem touches any other product.

Cuts in the pool are nonlinear (``body(x, y) >= rhs`` with a concave body).
They enter the LP through supporting hyperplanes of the body taken at LP
optima, i.e. a Kelley loop on top of the LP core.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._concave import PiecewiseConcaveCut
from .lp import INF, LinearProgram, LPResult, LPSolverError, LPStatus
from .model import BilinearInstance, PointXY

__all__ = [
    "RelaxSolution",
    "RelaxationState",
    "LinearCut",
    "build_mccormick",
    "solve",
    "add_cut",
    "add_cut_linearization",
    "refine_until_cut_feasible",
    "write_lp",
    "LPSolverError",
]

DEDUP_GRID = 1e-9


@dataclass
class RelaxSolution:
    status: LPStatus
    z: float
    point: Optional[PointXY]
    w: Optional[np.ndarray]
    lp: LPResult

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


@dataclass(frozen=True)
class LinearCut:
    """``gx . x[idx] + gy . y[idx] >= rhs``; valid for every feasible point."""

    cut_id: tuple
    idx: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    rhs: float

    def slack(self, x, y):
        x = np.asarray(x)[..., self.idx]
        y = np.asarray(y)[..., self.idx]
        return x @ self.gx + y @ self.gy - self.rhs


class RelaxationState:
    """Mutable relaxation: LP model, cut pool and solve history."""

    def __init__(self, instance: BilinearInstance):
        n = instance.n
        self.instance = instance
        cost = np.concatenate([instance.cx, instance.cy, np.zeros(n)])
        self.lp = LinearProgram(cost, np.zeros(3 * n), np.ones(3 * n))

        entries, lo, hi = [], [], []
        for row in instance.rows:
            entries.append((2 * n + row.idx, row.coef))
            lo.append(row.rhs)
            hi.append(INF)
        self.lp.add_rows(lo, hi, entries)

        mc = []
        for k in range(n):
            mc.append(([k, 2 * n + k], [-1.0, 1.0]))           # w <= x
            mc.append(([n + k, 2 * n + k], [-1.0, 1.0]))       # w <= y
            mc.append(([k, n + k, 2 * n + k], [-1.0, -1.0, 1.0]))  # w >= x + y - 1
        lo = np.tile([-INF, -INF, -1.0], n)
        hi = np.tile([0.0, 0.0, INF], n)
        self.lp.add_rows(lo, hi, mc)
        self.num_base_rows = self.lp.num_rows

        self.cut_pool: list[PiecewiseConcaveCut] = []
        self.cut_ids: set = set()
        self.linearization_counts: dict = {}
        self.linear_cuts: list[LinearCut] = []
        self._lin_keys: set = set()
        self.last: Optional[RelaxSolution] = None
        self.bound_history: list[tuple[int, float]] = []
        self.iteration = 0
        self._stale = True

    @property
    def n(self) -> int:
        return self.instance.n


def build_mccormick(inst: BilinearInstance) -> RelaxationState:
    return RelaxationState(inst)


def solve(state: RelaxationState) -> RelaxSolution:
    """Solve the current LP; records optimal values in ``bound_history``."""
    res = state.lp.solve()
    n = state.n
    if res.optimal:
        sol = RelaxSolution(res.status, res.objective, PointXY(res.x[:n], res.x[n:2 * n]),
                            np.clip(res.x[2 * n:], 0.0, 1.0), res)
        state.bound_history.append((state.iteration, res.objective))
    else:
        sol = RelaxSolution(res.status, np.inf, None, None, res)
    state.last = sol
    state._stale = False
    return sol


def _current(state: RelaxationState) -> RelaxSolution:
    if state.last is None or state._stale:
        return solve(state)
    return state.last


def add_cut(state: RelaxationState, cut: PiecewiseConcaveCut) -> bool:
    """Put ``cut`` into the pool; False when a cut with the same id is there."""
    if cut.cut_id in state.cut_ids:
        return False
    state.cut_ids.add(cut.cut_id)
    state.cut_pool.append(cut)
    state.linearization_counts[cut.cut_id] = 0
    return True


def add_cut_linearization(state: RelaxationState, cut: PiecewiseConcaveCut, at: PointXY) -> Optional[int]:
    """Add the supporting hyperplane of ``cut`` at ``at`` as an LP row.

    Returns the new row index, or None for a duplicate or an all-zero
    gradient.
    """
    sg = cut.supergradient(at)
    key = (
        cut.cut_id,
        tuple(np.round(sg.at_x / DEDUP_GRID).astype(np.int64)),
        tuple(np.round(sg.at_y / DEDUP_GRID).astype(np.int64)),
    )
    if key in state._lin_keys:
        return None
    if not (np.any(sg.gx != 0.0) or np.any(sg.gy != 0.0)):
        warnings.warn(f"cut {cut.cut_id!r}: zero supergradient, no row added", RuntimeWarning, stacklevel=2)
        return None
    state._lin_keys.add(key)
    n = state.n
    rhs = cut.rhs - sg.offset
    row = state.lp.add_rows([rhs], [INF], [(np.concatenate([sg.idx, n + sg.idx]), np.concatenate([sg.gx, sg.gy]))])
    state.linear_cuts.append(LinearCut(cut.cut_id, sg.idx, sg.gx.copy(), sg.gy.copy(), rhs))
    state.linearization_counts[cut.cut_id] = state.linearization_counts.get(cut.cut_id, 0) + 1
    state._stale = True
    return row


def refine_until_cut_feasible(state: RelaxationState, tol: float = 1e-6, max_pass: int = 50) -> int:
    """Kelley loop: linearize every pooled cut violated by more than ``tol``.

    Returns the number of passes that added rows.  A return value below
    ``max_pass`` means the final LP optimum satisfies every pooled cut
    within ``tol`` (or the LP is infeasible).
    """
    for passes in range(max_pass):
        sol = _current(state)
        if not sol.optimal:
            return passes
        added = 0
        for cut in state.cut_pool:
            if cut.lhs(sol.point) < cut.rhs - tol:
                if add_cut_linearization(state, cut, sol.point) is not None:
                    added += 1
        if not added:
            return passes
        solve(state)
    return max_pass


def write_lp(state: RelaxationState, path) -> None:
    n = state.n
    names = [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)] + [f"w{i}" for i in range(n)]
    state.lp.write_lp(path, names)
