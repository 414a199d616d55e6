"""Thin incremental LP core on top of HiGHS.

Models are minimization problems ``min c'x`` with ranged rows
``lo <= A x <= hi`` and column bounds.  Rows can be appended and bounds or
coefficients changed between solves; HiGHS then re-optimizes from the
previous basis, which is what makes cut loops and branch-and-bound cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import highspy
import numpy as np

INF = highspy.kHighsInf

__all__ = ["INF", "LPStatus", "LPResult", "LPSolverError", "LinearProgram"]


class LPStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


class LPSolverError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: LPStatus
    objective: float
    x: np.ndarray
    row_activity: np.ndarray
    row_dual: np.ndarray
    dual_objective: float
    primal_residual: float

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL

    @property
    def relative_gap(self) -> float:
        return abs(self.objective - self.dual_objective) / max(1.0, abs(self.objective))


def _dual_value(dual: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Contribution ``sum dual * active bound`` to the dual objective."""
    bound = np.where(dual > 0, lo, np.where(dual < 0, hi, 0.0))
    if not np.all(np.isfinite(bound)) or np.any(np.abs(bound) >= INF):
        return -np.inf
    return float(np.dot(dual, bound))


class LinearProgram:
    """A HiGHS model that keeps its basis between solves."""

    def __init__(self, cost, lower, upper, *, tolerance: float = 1e-9):
        cost = np.ascontiguousarray(cost, dtype=np.float64)
        lower = np.ascontiguousarray(lower, dtype=np.float64)
        upper = np.ascontiguousarray(upper, dtype=np.float64)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("log_to_console", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("primal_feasibility_tolerance", tolerance)
        h.setOptionValue("dual_feasibility_tolerance", tolerance)
        empty = np.zeros(0, dtype=np.int32)
        h.addCols(cost.size, cost, lower, upper, 0, empty, empty, np.zeros(0))
        self._h = h
        self.num_cols = int(cost.size)
        self.num_rows = 0
        self.tolerance = tolerance

    def add_rows(self, lower: Sequence[float], upper: Sequence[float], entries) -> int:
        """Append rows; ``entries`` is one ``(cols, vals)`` pair per row.

        Returns the index of the first new row.
        """
        lower = np.ascontiguousarray(lower, dtype=np.float64)
        upper = np.ascontiguousarray(upper, dtype=np.float64)
        starts, index, value = [0], [], []
        for cols, vals in entries:
            index.append(np.asarray(cols, dtype=np.int32))
            value.append(np.asarray(vals, dtype=np.float64))
            starts.append(starts[-1] + len(index[-1]))
        if len(starts) - 1 != lower.size:
            raise ValueError("one (cols, vals) pair is needed per row")
        index = np.concatenate(index) if index else np.zeros(0, dtype=np.int32)
        value = np.concatenate(value) if value else np.zeros(0)
        first = self.num_rows
        self._h.addRows(
            lower.size, lower, upper, index.size,
            np.asarray(starts[:-1], dtype=np.int32), index, value,
        )
        self.num_rows += lower.size
        return first

    def set_col_bounds(self, cols, lower, upper) -> None:
        cols = np.ascontiguousarray(cols, dtype=np.int32)
        if cols.size:
            self._h.changeColsBounds(
                cols.size, cols,
                np.ascontiguousarray(lower, dtype=np.float64),
                np.ascontiguousarray(upper, dtype=np.float64),
            )

    def set_row_bounds(self, rows, lower, upper) -> None:
        rows = np.ascontiguousarray(rows, dtype=np.int32)
        if rows.size:
            self._h.changeRowsBounds(
                rows.size, rows,
                np.ascontiguousarray(lower, dtype=np.float64),
                np.ascontiguousarray(upper, dtype=np.float64),
            )

    def set_coeff(self, row: int, col: int, value: float) -> None:
        self._h.changeCoeff(int(row), int(col), float(value))

    def solve(self) -> LPResult:
        status = self._run()
        if status is None:
            # one cold restart before giving up
            self._h.clearSolver()
            status = self._run()
        if status is None:
            info = self._h.getInfo()
            raise LPSolverError(
                f"HiGHS stopped with {self._h.modelStatusToString(self._h.getModelStatus())}; "
                f"max primal infeasibility {info.max_primal_infeasibility:.3e}, "
                f"max dual infeasibility {info.max_dual_infeasibility:.3e}, "
                f"simplex iterations {info.simplex_iteration_count}, "
                f"{self.num_rows} rows x {self.num_cols} cols"
            )
        if status is LPStatus.INFEASIBLE:
            nan = np.full(self.num_cols, np.nan)
            return LPResult(status, np.inf, nan, np.zeros(0), np.zeros(0), np.inf, np.inf)

        sol = self._h.getSolution()
        x = np.array(sol.col_value)
        act = np.array(sol.row_value)
        lp = self._h.getLp()
        col_lo, col_hi = np.array(lp.col_lower_), np.array(lp.col_upper_)
        row_lo, row_hi = np.array(lp.row_lower_), np.array(lp.row_upper_)
        residual = 0.0
        if x.size:
            residual = max(residual, float(np.max(np.maximum(col_lo - x, x - col_hi))))
        if act.size:
            residual = max(residual, float(np.max(np.maximum(row_lo - act, act - row_hi))))
        row_dual = np.array(sol.row_dual)
        dual_obj = _dual_value(row_dual, row_lo, row_hi) + _dual_value(np.array(sol.col_dual), col_lo, col_hi)
        return LPResult(
            LPStatus.OPTIMAL,
            float(self._h.getInfo().objective_function_value),
            x, act, row_dual, dual_obj, max(residual, 0.0),
        )

    def _run(self):
        self._h.run()
        ms = self._h.getModelStatus()
        if ms == highspy.HighsModelStatus.kOptimal:
            return LPStatus.OPTIMAL
        if ms == highspy.HighsModelStatus.kInfeasible:
            return LPStatus.INFEASIBLE
        return None

    def write_lp(self, path, col_names: Sequence[str] | None = None) -> None:
        """Dump the current model in CPLEX LP text layout."""
        lp = self._h.getLp()
        names = list(col_names) if col_names is not None else [f"c{j}" for j in range(self.num_cols)]
        cost = np.array(lp.col_cost_)
        a = lp.a_matrix_
        # HiGHS may hold the matrix column-wise; rebuild the rows explicitly.
        starts, index, value = np.array(a.start_), np.array(a.index_), np.array(a.value_)
        rows = [[] for _ in range(self.num_rows)]
        if a.format_ == highspy.MatrixFormat.kColwise:
            for j in range(self.num_cols):
                for k in range(starts[j], starts[j + 1]):
                    rows[index[k]].append((j, value[k]))
        else:
            for i in range(self.num_rows):
                rows[i] = [(index[k], value[k]) for k in range(starts[i], starts[i + 1])]

        def expr(terms):
            out = " ".join(f"{'+' if v >= 0 else '-'} {abs(v):.17g} {names[j]}" for j, v in terms if v != 0)
            return out or "0 " + names[0]

        lines = ["\\ written by bilicover", "Minimize", " obj: " + expr(enumerate(cost)), "Subject To"]
        for i, (lo, hi) in enumerate(zip(lp.row_lower_, lp.row_upper_)):
            body = expr(sorted(rows[i]))
            if lo == hi:
                lines.append(f" r{i}: {body} = {lo:.17g}")
                continue
            if lo > -INF:
                lines.append(f" r{i}_lo: {body} >= {lo:.17g}")
            if hi < INF:
                lines.append(f" r{i}_hi: {body} <= {hi:.17g}")
        lines.append("Bounds")
        for j, (lo, hi) in enumerate(zip(lp.col_lower_, lp.col_upper_)):
            lo_s = "-inf" if lo <= -INF else f"{lo:.17g}"
            hi_s = "+inf" if hi >= INF else f"{hi:.17g}"
            lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
        lines.append("End")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
