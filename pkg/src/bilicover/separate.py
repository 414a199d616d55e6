"""Randomized guess-and-adjust separation of lifted bilinear cover cuts.

For each violated row the separator guesses a partition from the relaxation
point (products near 0 go to ``J0``, near 1 to ``J1``, the rest to the cover
when the coefficient is positive) and then repairs it with random label
flips until it is a minimal cover yielding partition.  The lifted cut of
that partition is kept if the point violates it.

Random draws come from one PCG64 stream per ``(iteration, row)``, derived
from ``SeparationConfig.rng_seed``, so results do not depend on the order
rows are processed in.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Collection, Optional

import numpy as np

from .cover import InvalidReason, Label, partition_failure, validate_partition
from .lift import LiftedCut, build_cut
from .model import BilinearInstance, BilinearRow, PointXY, evaluate_row, substream

__all__ = [
    "SeparationConfig",
    "initial_labels",
    "repair",
    "separate_row",
    "separate_all",
    "row_rng",
]


@dataclass(frozen=True)
class SeparationConfig:
    epsilon: float = 1e-2
    attempts_per_term: int = 10
    rng_seed: int = 0
    violation_tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.violation_tol <= 0:
            raise ValueError("violation_tol must be positive")
        if self.attempts_per_term < 1:
            raise ValueError("attempts_per_term must be >= 1")

    def attempts(self, row: BilinearRow) -> int:
        return self.attempts_per_term * row.size


def row_rng(cfg: SeparationConfig, iteration: int, row_index: int) -> np.random.Generator:
    return substream(cfg.rng_seed, 2, iteration, row_index)


def initial_labels(row: BilinearRow, pt: PointXY, rng: np.random.Generator, epsilon: float = 1e-2) -> np.ndarray:
    xy = pt.x[row.idx] * pt.y[row.idx]
    labels = np.empty(row.size, dtype=np.int8)
    for k in range(row.size):
        if xy[k] < epsilon:
            labels[k] = Label.J0
        elif xy[k] > 1.0 - epsilon:
            labels[k] = Label.J1
        elif row.coef[k] > 0:
            labels[k] = Label.I
        else:
            labels[k] = Label.J1 if rng.random() < xy[k] else Label.J0
    return labels


def repair(row: BilinearRow, labels: np.ndarray, reason: InvalidReason, rng: np.random.Generator) -> Optional[np.ndarray]:
    """One adjustment step; returns new labels or None when nothing can be flipped."""
    a = row.coef
    out = labels.copy()
    if reason is InvalidReason.RHS_NOT_POSITIVE:
        # raise d_lambda: J1+ -> I or J0- -> J1
        up = np.flatnonzero((a > 0) & (labels == Label.J1))
        down = np.flatnonzero((a < 0) & (labels == Label.J0))
        pool = np.concatenate([up, down])
        if pool.size == 0:
            return None
        k = int(pool[rng.integers(pool.size)])
        out[k] = Label.I if a[k] > 0 else Label.J1
    elif reason is InvalidReason.NOT_A_COVER:
        # lower d_lambda: J0+ -> J1 or J1- -> J0
        up = np.flatnonzero((a > 0) & (labels == Label.J0))
        down = np.flatnonzero((a < 0) & (labels == Label.J1))
        pool = np.concatenate([up, down])
        if pool.size == 0:
            return None
        k = int(pool[rng.integers(pool.size)])
        out[k] = Label.J1 if a[k] > 0 else Label.J0
    else:
        I = np.flatnonzero(labels == Label.I)
        out[I[np.argmin(a[I])]] = Label.J1
    return out


def separate_row(row: BilinearRow, pt: PointXY, cfg: SeparationConfig, rng: np.random.Generator) -> Optional[LiftedCut]:
    """Try to cut ``pt`` off with a lifted cover cut of ``row``."""
    if evaluate_row(row, pt) >= 0.0:
        return None
    labels = initial_labels(row, pt, rng, cfg.epsilon)
    reason = partition_failure(row, labels)
    for _ in range(cfg.attempts(row)):
        if reason is None:
            break
        labels = repair(row, labels, reason, rng)
        if labels is None:
            return None
        reason = partition_failure(row, labels)
    if reason is not None:
        return None
    cut = build_cut(validate_partition(row, labels))
    if cut.lhs(pt) < cut.rhs - cfg.violation_tol:
        return cut
    return None


def separate_all(
    instance: BilinearInstance,
    pt: PointXY,
    cfg: SeparationConfig,
    iteration: int = 0,
    deadline: Optional[float] = None,
    known: Collection = (),
) -> list[LiftedCut]:
    """At most one violated cut per row, in row order.

    ``deadline`` is a ``time.monotonic()`` instant checked before each row;
    cuts whose id is in ``known`` are dropped.
    """
    cuts = []
    for row in instance.rows:
        if deadline is not None and time.monotonic() >= deadline:
            break
        cut = separate_row(row, pt, cfg, row_rng(cfg, iteration, row.row_index))
        if cut is not None and cut.cut_id not in known:
            cuts.append(cut)
    return cuts
