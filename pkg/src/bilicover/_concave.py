"""Separable concave cut bodies built from a few elementary pieces.

Every term of a cut is the minimum of up to four pieces of the form

    alpha * sqrt(x*y) + beta * min(x, y) + gamma * (x + y) + delta

with ``alpha >= 0``.  A cut reads ``constant + sum_k term_k(x_k, y_k) >= rhs``.
Keeping all cut families in this one shape gives a single vectorized
evaluator and a single supergradient rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PointXY

MAX_PIECES = 4
SQRT_FLOOR = 1e-6


@dataclass(frozen=True)
class Supergradient:
    """Linear overestimator ``value + gx.(x - at_x) + gy.(y - at_y)`` on the support ``idx``."""

    idx: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    value: float
    at_x: np.ndarray
    at_y: np.ndarray

    def evaluate(self, x, y):
        """Value of the linear model at full-length (or batched) points."""
        x = np.asarray(x)[..., self.idx]
        y = np.asarray(y)[..., self.idx]
        return self.value + (x - self.at_x) @ self.gx + (y - self.at_y) @ self.gy

    @property
    def offset(self) -> float:
        """Constant ``value - g.at`` so the model is ``g.p + offset``."""
        return float(self.value - self.gx @ self.at_x - self.gy @ self.at_y)


class PiecewiseConcaveCut:
    """Common evaluation machinery; subclasses fill the piece tables."""

    cut_id: tuple
    idx: np.ndarray
    rhs: float
    constant: float

    def _set_pieces(self, alpha, beta, gamma, delta, present):
        self._alpha = np.asarray(alpha, dtype=np.float64)
        self._beta = np.asarray(beta, dtype=np.float64)
        self._gamma = np.asarray(gamma, dtype=np.float64)
        self._delta = np.asarray(delta, dtype=np.float64)
        self._present = np.asarray(present, dtype=bool)

    def _pieces(self, x, y):
        X = x[..., None]
        Y = y[..., None]
        V = (
            self._alpha * np.sqrt(X * Y)
            + self._beta * np.minimum(X, Y)
            + self._gamma * (X + Y)
            + self._delta
        )
        return np.where(self._present, V, np.inf)

    def term_values(self, x, y) -> np.ndarray:
        """Per-term values for support-local coordinates, shape ``(..., k)``."""
        return self._pieces(np.asarray(x, float), np.asarray(y, float)).min(axis=-1)

    def lhs_local(self, x, y):
        return self.constant + self.term_values(x, y).sum(axis=-1)

    def lhs(self, pt: PointXY) -> float:
        return float(self.lhs_local(pt.x[self.idx], pt.y[self.idx]))

    def violation(self, pt: PointXY) -> float:
        """Amount by which the cut is violated at ``pt`` (0 when satisfied)."""
        return max(0.0, self.rhs - self.lhs(pt))

    def supergradient(self, at: PointXY) -> Supergradient:
        """Supergradient of the cut body at ``at``.

        Each term uses the gradient of its smallest piece (first piece on
        ties).  For ``sqrt(x*y)`` the gradient ``(sqrt(y/x), sqrt(x/y)) / 2``
        is taken with both coordinates floored at ``SQRT_FLOOR``; that plane
        passes through the origin and overestimates ``sqrt(x*y)`` everywhere
        on the quadrant, so the returned value is the plane's value at
        ``at``.  It equals the exact body unless the floor was active.
        """
        x = at.x[self.idx]
        y = at.y[self.idx]
        V = self._pieces(x, y)
        pick = np.argmin(V, axis=1)
        rows = np.arange(pick.size)
        a = self._alpha[rows, pick]
        b = self._beta[rows, pick]
        g = self._gamma[rows, pick]
        dl = self._delta[rows, pick]

        xc = np.maximum(x, SQRT_FLOOR)
        yc = np.maximum(y, SQRT_FLOOR)
        hx = 0.5 * np.sqrt(yc / xc)
        hy = 0.5 * np.sqrt(xc / yc)
        x_side = x <= y
        gx = a * hx + np.where(x_side, b, 0.0) + g
        gy = a * hy + np.where(x_side, 0.0, b) + g
        lin = a * (hx * x + hy * y) + b * np.minimum(x, y) + g * (x + y) + dl
        return Supergradient(self.idx, gx, gy, float(self.constant + lin.sum()), x.copy(), y.copy())
