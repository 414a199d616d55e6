"""Lifted bilinear cover inequalities.

Given a minimal cover yielding partition of one row, the cut

    sum_{i in I} c_i (sqrt(x_i y_i) - 1) + sum_{i not in I} gamma_i(x_i, y_i) >= -1

with ``c_i = sqrt(a_i) / (sqrt(a_i) - sqrt(d_i))`` is valid for the whole
row set.  The lifting functions depend on which side an index was fixed to
and on the sign of its coefficient:

=================  =====================================================
``J0+``            ``l+ a min(x, y)``
``J1-``            ``-l+ a min(2 - x - y, 1)``
``J0-``            ``min(l- a (x+y-1), l+ a (x+y-1) + l+ delta - 1, 0)``
``J1+``            ``min(g~, h~)``, plus ``g, h`` when ``a >= a_i0``
=================  =====================================================

where for ``J1+``

    g~ = l+ a (min(x,y) - 1) + l+ delta - 1
    h~ = l- a (min(x,y) - 1)
    g  = sqrt(a - delta) sqrt(a) l+ sqrt(xy) - l+ (a - delta) - 1
    h  = sqrt(a) / (sqrt(a) - sqrt(a - delta)) (sqrt(xy) - 1)
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from ._concave import MAX_PIECES, PiecewiseConcaveCut, Supergradient
from .cover import CoverPartition, Label
from .model import PointXY

__all__ = ["TermCase", "LiftedCut", "build_cut", "eval_cut_lhs", "supergradient", "format_cut"]


class TermCase(str, Enum):
    SEED = "I"
    J0_PLUS = "J0plus"
    J1_MINUS = "J1minus"
    J0_MINUS = "J0minus"
    J1_PLUS_FULL = "J1plus_full"
    J1_PLUS_REDUCED = "J1plus_reduced"


class LiftedCut(PiecewiseConcaveCut):
    """A lifted bilinear cover inequality ``body(x, y) >= -1``."""

    rhs = -1.0
    constant = 0.0

    def __init__(self, part: CoverPartition):
        self.partition = part
        row = part.row
        self.row = row
        self.idx = row.idx
        self.cut_id = (row.row_index, part.labels.tobytes())

        k = row.size
        alpha, beta, gamma, delta = (np.zeros((k, MAX_PIECES)) for _ in range(4))
        present = np.zeros((k, MAX_PIECES), dtype=bool)
        cases = []
        lp, lm, D = part.l_plus, part.l_minus, part.delta
        a_i0 = part.a_i0

        def put(pos, slot, al=0.0, be=0.0, ga=0.0, de=0.0):
            alpha[pos, slot] = al
            beta[pos, slot] = be
            gamma[pos, slot] = ga
            delta[pos, slot] = de
            present[pos, slot] = True

        for pos in range(k):
            a = float(row.coef[pos])
            lab = part.labels[pos]
            if lab == Label.I:
                ra = math.sqrt(a)
                c = ra / (ra - math.sqrt(part.d_i[pos]))
                put(pos, 0, al=c, de=-c)
                cases.append(TermCase.SEED)
            elif lab == Label.J0 and a > 0:
                put(pos, 0, be=lp * a)
                cases.append(TermCase.J0_PLUS)
            elif lab == Label.J1 and a < 0:
                put(pos, 0, ga=lp * a, de=-2.0 * lp * a)
                put(pos, 1, de=-lp * a)
                cases.append(TermCase.J1_MINUS)
            elif lab == Label.J0:
                put(pos, 0, ga=lm * a, de=-lm * a)
                put(pos, 1, ga=lp * a, de=-lp * a + lp * D - 1.0)
                put(pos, 2)
                cases.append(TermCase.J0_MINUS)
            else:
                put(pos, 0, be=lp * a, de=-lp * a + lp * D - 1.0)
                put(pos, 1, be=lm * a, de=-lm * a)
                if a_i0 is not None and a >= a_i0:
                    d = a - D
                    ra, rd = math.sqrt(a), math.sqrt(d)
                    put(pos, 2, al=rd * ra * lp, de=-lp * d - 1.0)
                    ch = ra / (ra - rd)
                    put(pos, 3, al=ch, de=-ch)
                    cases.append(TermCase.J1_PLUS_FULL)
                else:
                    cases.append(TermCase.J1_PLUS_REDUCED)
        self.cases = tuple(cases)
        self._set_pieces(alpha, beta, gamma, delta, present)

    def gamma(self, pos: int, x: float, y: float) -> float:
        """Value of the term at support position ``pos`` (seed term on ``I``)."""
        xs = np.zeros(self.idx.size)
        ys = np.zeros(self.idx.size)
        xs[pos], ys[pos] = x, y
        return float(self.term_values(xs, ys)[pos])

    def __repr__(self):
        return f"LiftedCut({format_cut(self)})"


def build_cut(part: CoverPartition) -> LiftedCut:
    return LiftedCut(part)


def eval_cut_lhs(cut: LiftedCut, pt: PointXY) -> float:
    return cut.lhs(pt)


def supergradient(cut: PiecewiseConcaveCut, at: PointXY) -> Supergradient:
    return cut.supergradient(at)


def format_cut(cut: LiftedCut) -> str:
    """One-line audit record of the partition behind ``cut``."""
    part = cut.partition

    def ids(label):
        return ",".join(str(int(v)) for v in part.variables(label))

    return (
        f"cut {cut.row.row_index} I:{ids(Label.I)} J0:{ids(Label.J0)} J1:{ids(Label.J1)} "
        f"lplus:{part.l_plus:.17g} lminus:{part.l_minus:.17g}"
    )
