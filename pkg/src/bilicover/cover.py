"""Minimal covers of a bilinear row and the cuts built directly on them.

A labeling assigns each support index of a row to ``I`` (the cover), ``J0``
(restricted to ``x = y = 0``) or ``J1`` (restricted to ``x = y = 1``).  It is
a *minimal cover yielding partition* when the positive coefficients in ``I``
form a minimal cover of ``d_lambda = d - sum_{J1} a``.  With
``delta = sum_I a - d_lambda`` minimality is ``a_i >= delta`` for all ``i`` in
``I``, because the largest proper subsets drop a single element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional

import numpy as np

from ._concave import PiecewiseConcaveCut
from .model import BilinearRow, PointXY

__all__ = [
    "Label",
    "InvalidReason",
    "InvalidPartition",
    "CoverPartition",
    "partition_failure",
    "validate_partition",
    "seed_coefficient",
    "eval_seed_lhs",
    "MTCut",
    "mt_cut",
    "mt_cut_lhs",
    "ZERO_TOL",
]

ZERO_TOL = 1e-12


class Label(IntEnum):
    I = 0
    J0 = 1
    J1 = 2


class InvalidReason(str, Enum):
    RHS_NOT_POSITIVE = "RhsNotPositive"
    NOT_A_COVER = "NotACover"
    NON_POSITIVE_COEFF_IN_I = "NonPositiveCoeffInI"
    NOT_MINIMAL = "NotMinimal"


class InvalidPartition(ValueError):
    def __init__(self, reason: InvalidReason):
        self.reason = reason
        super().__init__(f"not a minimal cover yielding partition: {reason.value}")


def _as_labels(row: BilinearRow, labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int8).reshape(-1)
    if labels.size != row.size:
        raise ValueError(f"expected {row.size} labels for row {row.row_index}, got {labels.size}")
    if labels.size and (labels.min() < 0 or labels.max() > 2):
        raise ValueError("labels must be Label.I, Label.J0 or Label.J1")
    return labels


def _cover_sums(a: np.ndarray, labels: np.ndarray, rhs: float) -> tuple[float, float]:
    d_lambda = rhs - float(a[labels == Label.J1].sum())
    delta = float(a[labels == Label.I].sum()) - d_lambda
    return d_lambda, delta


def partition_failure(row: BilinearRow, labels) -> Optional[InvalidReason]:
    """First reason ``labels`` fails, in the repair order of the separator, or None."""
    labels = _as_labels(row, labels)
    a = row.coef
    d_lambda, delta = _cover_sums(a, labels, row.rhs)
    if d_lambda <= ZERO_TOL:
        return InvalidReason.RHS_NOT_POSITIVE
    if delta <= ZERO_TOL:
        return InvalidReason.NOT_A_COVER
    a_I = a[labels == Label.I]
    if np.any(a_I <= 0.0):
        return InvalidReason.NON_POSITIVE_COEFF_IN_I
    if np.any(a_I < delta - ZERO_TOL):
        return InvalidReason.NOT_MINIMAL
    return None


@dataclass(frozen=True, eq=False)
class CoverPartition:
    """A validated minimal cover yielding partition and its derived numbers.

    Positions refer to the row's support (``row.idx``), not to variable
    indices.  ``d_i`` is stored for every support position as ``a - delta``
    (only meaningful on ``I`` and on ``J1+``); on ``I`` values up to the
    validity tolerance are set to 0.
    """

    row: BilinearRow
    labels: np.ndarray
    d_lambda: float
    delta: float
    d_i: np.ndarray
    i0: Optional[int]
    l_plus: float
    l_minus: float

    @property
    def a(self) -> np.ndarray:
        return self.row.coef

    def positions(self, label: Label, sign: int = 0) -> np.ndarray:
        mask = self.labels == label
        if sign > 0:
            mask &= self.a > 0
        elif sign < 0:
            mask &= self.a < 0
        return np.flatnonzero(mask)

    @property
    def I(self) -> np.ndarray:
        return self.positions(Label.I)

    @property
    def i_greater(self) -> np.ndarray:
        """Positions of ``I`` with ``a_i > delta``."""
        I = self.I
        return I[self.d_i[I] > 0.0]

    @property
    def a_i0(self) -> Optional[float]:
        return None if self.i0 is None else float(self.a[self.i0])

    def variables(self, label: Label) -> np.ndarray:
        return self.row.idx[self.positions(label)]


def validate_partition(row: BilinearRow, labels) -> CoverPartition:
    """Validate ``labels`` on ``row``; raises :class:`InvalidPartition` on failure."""
    labels = _as_labels(row, labels)
    reason = partition_failure(row, labels)
    if reason is not None:
        raise InvalidPartition(reason)
    a = row.coef
    d_lambda, delta = _cover_sums(a, labels, row.rhs)
    d_i = a - delta
    in_I = labels == Label.I
    # residues within the validity tolerance are rounding noise; keeping them
    # would put the index in I^> with l_plus ~ 1/sqrt(d_i)
    d_i = np.where(in_I & (d_i <= ZERO_TOL), 0.0, d_i)

    greater = np.flatnonzero(in_I & (d_i > 0.0))
    i0 = None
    l_minus = 1.0 / delta
    l_plus = l_minus
    if greater.size:
        # smallest position among the minimizers
        i0 = int(greater[np.argmin(a[greater])])
        l_plus = (math.sqrt(a[i0]) + math.sqrt(d_i[i0])) / (delta * math.sqrt(d_i[i0]))
    labels = labels.copy()
    labels.setflags(write=False)
    d_i.setflags(write=False)
    return CoverPartition(row, labels, d_lambda, delta, d_i, i0, l_plus, l_minus)


def seed_coefficient(part: CoverPartition, pos: int) -> float:
    """``sqrt(a_i) / (sqrt(a_i) - sqrt(d_i))`` for a cover position."""
    if part.labels[pos] != Label.I:
        raise ValueError(f"position {pos} is not in the cover")
    ra = math.sqrt(part.a[pos])
    return ra / (ra - math.sqrt(part.d_i[pos]))


def _seed_coefficients(part: CoverPartition, pos: np.ndarray) -> np.ndarray:
    ra = np.sqrt(part.a[pos])
    return ra / (ra - np.sqrt(part.d_i[pos]))


def eval_seed_lhs(part: CoverPartition, pt: PointXY) -> float:
    """Left side of the bilinear cover inequality (valid form: ``>= -1``).

    Only the cover indices enter; ``J0`` and ``J1`` are ignored.
    """
    I = part.I
    v = part.row.idx[I]
    return float(np.sum(_seed_coefficients(part, I) * (np.sqrt(pt.x[v] * pt.y[v]) - 1.0)))


class MTCut(PiecewiseConcaveCut):
    """``sum_i sqrt(a_i x_i y_i) >= sqrt(d)`` for a row with nonnegative coefficients."""

    def __init__(self, row: BilinearRow):
        if np.any(row.coef < 0):
            raise ValueError(f"row {row.row_index}: square-root cut needs nonnegative coefficients")
        if row.rhs <= 0:
            raise ValueError(f"row {row.row_index}: square-root cut needs a positive right-hand side")
        k = row.size
        alpha = np.zeros((k, 4))
        alpha[:, 0] = np.sqrt(row.coef)
        present = np.zeros((k, 4), dtype=bool)
        present[:, 0] = True
        self.row = row
        self.idx = row.idx
        self.cut_id = ("mt", row.row_index)
        self.rhs = 0.0
        self.constant = -math.sqrt(row.rhs)
        zero = np.zeros((k, 4))
        self._set_pieces(alpha, zero, zero, zero, present)


def mt_cut(row: BilinearRow) -> MTCut:
    return MTCut(row)


def mt_cut_lhs(row: BilinearRow, pt: PointXY) -> float:
    """``sum_i sqrt(a_i x_i y_i) - sqrt(d)``; the cut asks for ``>= 0``."""
    return MTCut(row).lhs(pt)
