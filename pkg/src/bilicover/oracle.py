"""Desk-scale ground truth for separable bilinear programs.

* :func:`solve_global` -- best-first spatial branch and bound with
  McCormick envelopes over each node's box.
* :func:`alternating_polish` -- a primal heuristic: with ``x`` fixed the
  problem is an LP in ``y`` and vice versa.
* :func:`sample_feasible` -- rejection sampler for validity tests.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .lp import INF, LinearProgram
from .model import BilinearInstance, PointXY

__all__ = [
    "GlobalStatus",
    "GlobalResult",
    "TraceEntry",
    "solve_global",
    "alternating_polish",
    "SampleResult",
    "sample_feasible",
    "row_instance",
]

FEAS_TOL = 1e-8


class GlobalStatus(str, Enum):
    OPTIMAL = "Optimal"
    BOUNDS = "Bounds"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class TraceEntry:
    node: int
    depth: int
    parent_bound: float
    node_bound: float
    global_lb: float
    ub: float


@dataclass
class GlobalResult:
    status: GlobalStatus
    lb: float
    ub: float
    point: Optional[PointXY]
    nodes: int
    elapsed_s: float = 0.0
    trace: list = field(default_factory=list, repr=False)

    @property
    def z_opt(self) -> float:
        return self.ub


def _row_matrix(inst: BilinearInstance):
    A, d = inst.dense_rows()
    return sparse.csr_matrix(A), d


def _violations(A, d, x, y):
    return A @ (x * y) - d


def _feasible(A, d, x, y, tol=FEAS_TOL) -> bool:
    return bool(np.all(_violations(A, d, x, y) >= -tol * np.maximum(1.0, np.abs(d))))


def _fixed_side_lp(A, d, fixed, cost):
    """min cost.v  s.t.  sum_i (a_ji fixed_i) v_i >= d_j,  v in [0,1]^n."""
    n = cost.size
    M = (A @ sparse.diags(fixed)).tocsr()
    lp = LinearProgram(cost, np.zeros(n), np.ones(n))
    entries = [(M.indices[M.indptr[j]:M.indptr[j + 1]], M.data[M.indptr[j]:M.indptr[j + 1]]) for j in range(M.shape[0])]
    lp.add_rows(d, np.full(d.size, INF), entries)
    res = lp.solve()
    return np.clip(res.x, 0.0, 1.0) if res.optimal else None


def alternating_polish(inst: BilinearInstance, x0, y0, rounds: int = 2, _mats=None) -> Optional[PointXY]:
    """Improve ``(x0, y0)`` by alternately optimizing ``y`` and ``x``.

    Returns the best feasible point met, or None.
    """
    A, d = _mats if _mats is not None else _row_matrix(inst)
    x = np.clip(np.asarray(x0, float), 0.0, 1.0)
    y = np.clip(np.asarray(y0, float), 0.0, 1.0)
    best, best_val = None, INF
    for _ in range(rounds):
        for side in ("y", "x"):
            if side == "y":
                new = _fixed_side_lp(A, d, x, inst.cy)
                if new is None:
                    break
                y = new
            else:
                new = _fixed_side_lp(A, d, y, inst.cx)
                if new is None:
                    break
                x = new
            if _feasible(A, d, x, y):
                val = inst.objective(x, y)
                if val < best_val:
                    best, best_val = PointXY(x.copy(), y.copy()), val
    return best


@dataclass
class _Node:
    bound: float
    depth: int
    parent: Optional["_Node"]
    var: int = -1
    lo: float = 0.0
    hi: float = 1.0


class _BoxModel:
    """Node LP: McCormick envelopes of the current box plus fixed extra rows."""

    def __init__(self, inst: BilinearInstance, extra_cuts: Sequence):
        n = inst.n
        self.n = n
        cost = np.concatenate([inst.cx, inst.cy, np.zeros(n)])
        self.lp = LinearProgram(cost, np.zeros(3 * n), np.ones(3 * n))
        entries = [(2 * n + r.idx, r.coef) for r in inst.rows]
        self.lp.add_rows([r.rhs for r in inst.rows], np.full(inst.m, INF), entries)
        self.mc_first = self.lp.num_rows
        mc, lo, hi = [], [], []
        for i in range(n):
            # rows R1..R4 at the unit box
            mc += [([i, n + i, 2 * n + i], [0.0, 0.0, 1.0]), ([i, n + i, 2 * n + i], [-1.0, -1.0, 1.0]),
                   ([i, n + i, 2 * n + i], [0.0, -1.0, 1.0]), ([i, n + i, 2 * n + i], [-1.0, 0.0, 1.0])]
            lo += [0.0, -1.0, -INF, -INF]
            hi += [INF, INF, 0.0, 0.0]
        self.lp.add_rows(lo, hi, mc)
        if extra_cuts:
            self.lp.add_rows(
                [c.rhs for c in extra_cuts], np.full(len(extra_cuts), INF),
                [(np.concatenate([c.idx, n + c.idx]), np.concatenate([c.gx, c.gy])) for c in extra_cuts],
            )
        self.lo = np.zeros(2 * n)
        self.hi = np.ones(2 * n)

    def set_box(self, lo: np.ndarray, hi: np.ndarray) -> None:
        n = self.n
        changed = np.flatnonzero((lo != self.lo) | (hi != self.hi))
        if changed.size == 0:
            return
        pairs = np.unique(changed % n)
        self.lo[:] = lo
        self.hi[:] = hi
        lp = self.lp
        cols = np.concatenate([pairs, n + pairs, 2 * n + pairs])
        lx, ux, ly, uy = lo[pairs], hi[pairs], lo[n + pairs], hi[n + pairs]
        lp.set_col_bounds(cols, np.concatenate([lx, ly, lx * ly]), np.concatenate([ux, uy, ux * uy]))
        for k, i in enumerate(pairs):
            r = self.mc_first + 4 * int(i)
            a, b, c, e = lx[k], ux[k], ly[k], uy[k]
            # w - ly x - lx y >= -lx ly ; w - uy x - ux y >= -ux uy
            # w - ly x - ux y <= -ux ly ; w - uy x - lx y <= -lx uy
            for row, cx_, cy_ in ((r, -c, -a), (r + 1, -e, -b), (r + 2, -c, -b), (r + 3, -e, -a)):
                lp.set_coeff(row, i, cx_)
                lp.set_coeff(row, n + i, cy_)
        rows = self.mc_first + 4 * pairs[:, None] + np.arange(4)
        rlo = np.stack([-lx * ly, -ux * uy, np.full(pairs.size, -INF), np.full(pairs.size, -INF)], axis=1)
        rhi = np.stack([np.full(pairs.size, INF), np.full(pairs.size, INF), -ux * ly, -lx * uy], axis=1)
        lp.set_row_bounds(rows.ravel(), rlo.ravel(), rhi.ravel())


def _node_box(node: _Node, n: int):
    chain = []
    while node.parent is not None:
        chain.append(node)
        node = node.parent
    lo = np.zeros(2 * n)
    hi = np.ones(2 * n)
    for nd in reversed(chain):
        lo[nd.var] = nd.lo
        hi[nd.var] = nd.hi
    return lo, hi


def solve_global(
    inst: BilinearInstance,
    gap_tol: float = 1e-6,
    node_cap: int = 100_000,
    *,
    extra_cuts: Sequence = (),
    time_limit: Optional[float] = None,
    polish_every: int = 1,
    record_trace: bool = False,
) -> GlobalResult:
    """Best-first spatial branch and bound.

    Each node solves the McCormick LP of its box.  The branching pair is the
    one whose product is worst approximated (``|w - x y|``); its wider
    coordinate is split at the LP value, clamped to the middle 60% of the
    interval.  ``extra_cuts`` are globally valid linear rows (e.g.
    linearized root cuts) included at every node.  Stops with ``Optimal``
    when ``ub - lb <= gap_tol * max(1, |ub|)``, with ``Bounds`` at the node
    cap or the time limit.
    """
    start = time.monotonic()
    n = inst.n
    A, d = _row_matrix(inst)
    used = np.unique(np.concatenate([r.idx for r in inst.rows])) if inst.m else np.zeros(0, int)
    model = _BoxModel(inst, list(extra_cuts))

    ub, best = INF, None
    trace = []
    counter = itertools.count()
    root = _Node(-INF, 0, None)
    heap = [(-INF, next(counter), root)]
    nodes = 0

    def abs_gap():
        return gap_tol * max(1.0, abs(ub)) if ub < INF else 0.0

    def offer(x, y):
        nonlocal ub, best
        if _feasible(A, d, x, y):
            val = inst.objective(x, y)
            if val < ub:
                ub, best = val, PointXY(x.copy(), y.copy())

    stopped = False
    while heap:
        bound, _, node = heap[0]
        if ub < INF and ub - bound <= abs_gap():
            break
        if nodes >= node_cap or (time_limit is not None and time.monotonic() - start > time_limit):
            stopped = True
            break
        heapq.heappop(heap)
        nodes += 1
        lo, hi = _node_box(node, n)
        model.set_box(lo, hi)
        res = model.lp.solve()
        z = res.objective if res.optimal else INF
        if record_trace:
            trace.append(TraceEntry(nodes, node.depth, node.bound, z, bound, ub))
        if not res.optimal or z >= ub - abs_gap():
            continue
        x = np.clip(res.x[:n], lo[:n], hi[:n])
        y = np.clip(res.x[n:2 * n], lo[n:], hi[n:])
        w = res.x[2 * n:]
        if _feasible(A, d, x, y):
            offer(x, y)
            continue
        if polish_every and (nodes - 1) % polish_every == 0:
            pt = alternating_polish(inst, x, y, _mats=(A, d))
            if pt is not None:
                offer(pt.x, pt.y)

        err = np.abs(w[used] - x[used] * y[used])
        wx = hi[used] - lo[used]
        wy = hi[n + used] - lo[n + used]
        widest = np.maximum(wx, wy)
        if widest.max() < 1e-12:
            continue
        err = np.where(widest > 1e-12, err, -1.0)
        k = int(np.argmax(err)) if err.max() > 1e-12 else int(np.argmax(widest))
        i = int(used[k])
        var = i if wx[k] >= wy[k] else n + i
        a, b = lo[var], hi[var]
        val = x[i] if var == i else y[i]
        split = min(max(val, a + 0.2 * (b - a)), a + 0.8 * (b - a))
        heapq.heappush(heap, (z, next(counter), _Node(z, node.depth + 1, node, var, a, split)))
        heapq.heappush(heap, (z, next(counter), _Node(z, node.depth + 1, node, var, split, b)))

    lb = min(heap[0][0], ub) if heap else ub
    elapsed = time.monotonic() - start
    if best is None and not heap:
        return GlobalResult(GlobalStatus.INFEASIBLE, INF, INF, None, nodes, elapsed, trace)
    if stopped or best is None:
        return GlobalResult(GlobalStatus.BOUNDS, lb, ub, best, nodes, elapsed, trace)
    return GlobalResult(GlobalStatus.OPTIMAL, lb, ub, best, nodes, elapsed, trace)


@dataclass
class SampleResult:
    x: np.ndarray
    y: np.ndarray
    trials: int
    gave_up: bool = False

    def __len__(self):
        return self.x.shape[0]

    @property
    def points(self) -> list[PointXY]:
        return [PointXY(a, b) for a, b in zip(self.x, self.y)]


def row_instance(row, n_local: Optional[int] = None) -> BilinearInstance:
    """One-row instance over the support of ``row`` (variables renumbered)."""
    from .model import BilinearRow, SignMode

    k = row.size if n_local is None else n_local
    local = BilinearRow(0, np.arange(row.size), row.coef, row.rhs)
    mode = SignMode.MIXED_SIGNS if np.any(row.coef < 0) else SignMode.NON_NEGATIVE
    return BilinearInstance(k, 1, np.zeros(k), np.zeros(k), (local,), mode, 0)


def _boundary_points(px, py, pool_x, pool_y, ok, rng, steps: int = 40):
    """Bisect from each rejected draw towards a random known feasible point.

    Returns the boundary points plus one random point on each segment
    between boundary and anchor that passes the check.
    """
    pick = rng.integers(pool_x.shape[0], size=px.shape[0])
    qx, qy = pool_x[pick], pool_y[pick]
    t_lo = np.zeros(px.shape[0])
    t_hi = np.ones(px.shape[0])
    for _ in range(steps):
        t = 0.5 * (t_lo + t_hi)
        f = ok(px + t[:, None] * (qx - px), py + t[:, None] * (qy - py))
        t_hi = np.where(f, t, t_hi)
        t_lo = np.where(f, t_lo, t)
    bx = px + t_hi[:, None] * (qx - px)
    by = py + t_hi[:, None] * (qy - py)
    keep = ok(bx, by)
    s = rng.random(px.shape[0])[:, None]
    ix = bx + s * (qx - bx)
    iy = by + s * (qy - by)
    keep_i = ok(ix, iy)
    return (np.concatenate([bx[keep], ix[keep_i]]), np.concatenate([by[keep], iy[keep_i]]))


def sample_feasible(
    inst: BilinearInstance,
    count: int,
    rng: np.random.Generator,
    *,
    proposal: str = "uniform",
    max_trials: int = 1_000_000,
    batch: int = 4096,
) -> SampleResult:
    """Feasible points of ``inst`` by rejection from the unit box.

    Feasible corners (all ones, all zeros) come first.  ``proposal="mixed"``
    also draws from a law skewed towards 1 with some coordinates snapped to
    0 or 1, and adds boundary points found by bisection between rejected
    draws and earlier feasible points (the corners to begin with), plus a
    random feasible point on each such segment.  Gives up
    (``gave_up=True``) when the acceptance rate is below 1e-4 after
    ``max_trials`` draws.
    """
    n = inst.n
    A, d = _row_matrix(inst)
    scale = np.maximum(1.0, np.abs(d))

    def ok(X, Y):
        return np.all((A @ (X * Y).T).T - d >= -1e-12 * scale, axis=1) if inst.m else np.ones(len(X), bool)

    xs, ys = [], []
    got = 0
    pool_x = np.zeros((0, n))
    pool_y = np.zeros((0, n))
    for c in (1.0, 0.0):
        X = np.full((1, n), c)
        if ok(X, X)[0]:
            pool_x = np.concatenate([pool_x, X])
            pool_y = np.concatenate([pool_y, X])
            if got < count:
                xs.append(X)
                ys.append(X.copy())
                got += 1
    trials = 0
    gave_up = False
    while got < count:
        if trials >= max_trials and got < 1e-4 * trials:
            gave_up = True
            break
        X = rng.random((batch, n))
        Y = rng.random((batch, n))
        if proposal == "mixed":
            half = batch // 2
            X[half:] = X[half:] ** 0.25
            Y[half:] = Y[half:] ** 0.25
            snap = rng.random((batch - half, n))
            for M in (X[half:], Y[half:]):
                M[snap < 0.1] = 0.0
                M[snap > 0.9] = 1.0
        elif proposal != "uniform":
            raise ValueError(f"unknown proposal {proposal!r}")
        trials += batch
        good = ok(X, Y)
        acc_x, acc_y = X[good], Y[good]
        if proposal == "mixed":
            if acc_x.shape[0]:
                pool_x = np.concatenate([pool_x, acc_x])[-batch:]
                pool_y = np.concatenate([pool_y, acc_y])[-batch:]
            if pool_x.shape[0] and (~good).any():
                bx, by = _boundary_points(X[~good], Y[~good], pool_x, pool_y, ok, rng)
                acc_x = np.concatenate([acc_x, bx])
                acc_y = np.concatenate([acc_y, by])
        take = min(count - got, acc_x.shape[0])
        xs.append(acc_x[:take])
        ys.append(acc_y[:take])
        got += take
    X = np.concatenate(xs) if xs else np.zeros((0, n))
    Y = np.concatenate(ys) if ys else np.zeros((0, n))
    return SampleResult(X, Y, trials, gave_up)
