"""Separable bilinear programs: data types, random generator and text I/O.

A problem has ``n`` variable pairs ``(x_i, y_i)`` in the unit box and ``m``
rows of the form ``sum_i a_i x_i y_i >= d``.  The objective is linear,
``sum_i cx_i x_i + cy_i y_i``.

Random streams: every instance is drawn from numpy's PCG64 bit generator.
The master seed is split with ``SeedSequence(seed, spawn_key=...)``; the
objective vectors use key ``(0,)`` and row ``j`` uses key ``(1, j)``, so a row
does not depend on how many draws earlier rows consumed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SignMode",
    "BilinearRow",
    "BilinearInstance",
    "PointXY",
    "InstanceFormatError",
    "generate_instance",
    "evaluate_row",
    "read_instance",
    "write_instance",
    "format_instance",
    "parse_instance",
    "substream",
]

BOX_TOL = 1e-9


class SignMode(str, Enum):
    NON_NEGATIVE = "NonNegative"
    MIXED_SIGNS = "MixedSigns"


class InstanceFormatError(ValueError):
    """Malformed instance file; ``lineno`` is 1-based (0 when unknown)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, eq=False)
class BilinearRow:
    """One constraint ``sum_k coef[k] * x[idx[k]] * y[idx[k]] >= rhs``."""

    row_index: int
    idx: np.ndarray
    coef: np.ndarray
    rhs: float

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64).reshape(-1)
        coef = np.asarray(self.coef, dtype=np.float64).reshape(-1)
        if idx.shape != coef.shape:
            raise ValueError("idx and coef must have the same length")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
            raise ValueError(f"row {self.row_index}: indices must be strictly increasing and >= 0")
        if np.any(coef == 0.0):
            raise ValueError(f"row {self.row_index}: zero coefficients must not be stored")
        if not np.all(np.isfinite(coef)) or not math.isfinite(self.rhs):
            raise ValueError(f"row {self.row_index}: non-finite data")
        idx.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "rhs", float(self.rhs))

    @property
    def size(self) -> int:
        return int(self.idx.size)

    def __eq__(self, other):
        if not isinstance(other, BilinearRow):
            return NotImplemented
        return (
            self.row_index == other.row_index
            and self.rhs == other.rhs
            and np.array_equal(self.idx, other.idx)
            and np.array_equal(self.coef, other.coef)
        )

    def __hash__(self):
        return hash((self.row_index, self.rhs, self.idx.tobytes(), self.coef.tobytes()))


@dataclass(frozen=True, eq=False)
class BilinearInstance:
    n: int
    m: int
    cx: np.ndarray
    cy: np.ndarray
    rows: tuple
    sign_mode: SignMode = SignMode.NON_NEGATIVE
    seed: int = 0

    def __post_init__(self):
        cx = np.asarray(self.cx, dtype=np.float64).reshape(-1)
        cy = np.asarray(self.cy, dtype=np.float64).reshape(-1)
        if cx.size != self.n or cy.size != self.n:
            raise ValueError("objective vectors must have length n")
        rows = tuple(self.rows)
        if len(rows) != self.m:
            raise ValueError(f"expected {self.m} rows, got {len(rows)}")
        sign_mode = SignMode(self.sign_mode)
        for row in rows:
            if row.size and row.idx[-1] >= self.n:
                raise ValueError(f"row {row.row_index}: variable index out of range")
            if sign_mode is SignMode.NON_NEGATIVE and np.any(row.coef < 0):
                raise ValueError(f"row {row.row_index}: negative coefficient in a NonNegative instance")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        cx.setflags(write=False)
        cy.setflags(write=False)
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cy", cy)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "sign_mode", sign_mode)
        object.__setattr__(self, "seed", int(self.seed))

    def __eq__(self, other):
        if not isinstance(other, BilinearInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and self.sign_mode == other.sign_mode
            and self.seed == other.seed
            and np.array_equal(self.cx, other.cx)
            and np.array_equal(self.cy, other.cy)
            and self.rows == other.rows
        )

    __hash__ = None

    @property
    def nnz(self) -> int:
        return sum(r.size for r in self.rows)

    @property
    def density(self) -> float:
        return self.nnz / float(self.n * self.m)

    @property
    def mean_row_size(self) -> float:
        return self.nnz / float(self.m)

    def dense_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient matrix ``(m, n)`` and right-hand sides ``(m,)``."""
        A = np.zeros((self.m, self.n))
        for j, row in enumerate(self.rows):
            A[j, row.idx] = row.coef
        d = np.array([r.rhs for r in self.rows], dtype=np.float64)
        return A, d

    def objective(self, x, y) -> float:
        return float(np.dot(self.cx, x) + np.dot(self.cy, y))

    def is_feasible(self, pt: "PointXY", tol: float = 1e-8) -> bool:
        return all(evaluate_row(r, pt) >= -tol for r in self.rows)

    def with_objective(self, cx, cy) -> "BilinearInstance":
        return BilinearInstance(self.n, self.m, cx, cy, self.rows, self.sign_mode, self.seed)


@dataclass(frozen=True, eq=False)
class PointXY:
    """A point of the unit box; values within 1e-9 of the box are clipped onto it."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        for name, v in (("x", x), ("y", y)):
            if v.size and (v.min() < -BOX_TOL or v.max() > 1.0 + BOX_TOL):
                raise ValueError(f"{name} leaves the unit box by more than {BOX_TOL}")
        object.__setattr__(self, "x", np.clip(x, 0.0, 1.0))
        object.__setattr__(self, "y", np.clip(y, 0.0, 1.0))

    @property
    def n(self) -> int:
        return int(self.x.size)

    def products(self) -> np.ndarray:
        return self.x * self.y

    def __eq__(self, other):
        if not isinstance(other, PointXY):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None


def evaluate_row(row: BilinearRow, pt: PointXY) -> float:
    """Row slack ``sum a_i x_i y_i - d``; nonnegative means satisfied."""
    return float(np.dot(row.coef, pt.x[row.idx] * pt.y[row.idx]) - row.rhs)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for ``key`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def generate_instance(
    m: int,
    n: int,
    p: float,
    sign_mode: SignMode | str = SignMode.NON_NEGATIVE,
    seed: int = 0,
) -> BilinearInstance:
    """Draw a random sparse separable bilinear program.

    Each coefficient is nonzero with probability ``p`` and then uniform on
    ``[0, 1)`` (NonNegative) or ``[-1, 1)`` (MixedSigns).  With
    ``s = sum_i a_i`` the right-hand side is ``d = r * s`` where
    ``r ~ U[0, 1)`` if ``s > 0`` and ``r ~ U[1, 2)`` otherwise.  A row that
    comes out empty is redrawn from its own stream.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise ValueError(f"density p must lie in (0, 1], got {p!r}")
    sign_mode = SignMode(sign_mode)
    seed = int(seed)

    obj = substream(seed, 0)
    cx = obj.random(n)
    cy = obj.random(n)

    rows = []
    for j in range(m):
        rng = substream(seed, 1, j)
        while True:
            mask = rng.random(n) < p
            vals = rng.random(n)
            if sign_mode is SignMode.MIXED_SIGNS:
                vals = 2.0 * vals - 1.0
            mask &= vals != 0.0
            if mask.any():
                break
        idx = np.flatnonzero(mask)
        coef = vals[idx]
        s = float(coef.sum())
        r = rng.random() if s > 0 else 1.0 + rng.random()
        rows.append(BilinearRow(j, idx, coef, r * s))
    return BilinearInstance(n, m, cx, cy, tuple(rows), sign_mode, seed)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_instance(inst: BilinearInstance) -> str:
    lines = [
        f"bilinear {inst.m} {inst.n} {inst.sign_mode.value} {inst.seed}",
        "cx " + " ".join(_fmt(v) for v in inst.cx),
        "cy " + " ".join(_fmt(v) for v in inst.cy),
    ]
    for row in inst.rows:
        parts = [f"row {row.row_index} {_fmt(row.rhs)} {row.size}"]
        parts.extend(f"{i} {_fmt(a)}" for i, a in zip(row.idx, row.coef))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_instance(inst: BilinearInstance, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_instance(inst))


def _floats(tokens: Sequence[str], lineno: int) -> np.ndarray:
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise InstanceFormatError(str(exc), lineno) from None


def parse_instance(lines: Iterable[str]) -> BilinearInstance:
    numbered = [(k + 1, ln.split()) for k, ln in enumerate(lines)]
    numbered = [(k, toks) for k, toks in numbered if toks]
    if not numbered:
        raise InstanceFormatError("empty instance file", 1)

    lineno, head = numbered[0]
    if len(head) != 5 or head[0] != "bilinear":
        raise InstanceFormatError("expected 'bilinear <m> <n> <sign_mode> <seed>'", lineno)
    try:
        m, n, seed = int(head[1]), int(head[2]), int(head[4])
        sign_mode = SignMode(head[3])
    except ValueError as exc:
        raise InstanceFormatError(str(exc), lineno) from None
    if m < 1 or n < 1:
        raise InstanceFormatError("m and n must be positive", lineno)
    if len(numbered) != 3 + m:
        raise InstanceFormatError(f"expected {3 + m} non-empty lines, found {len(numbered)}", numbered[-1][0])

    vecs = {}
    for lineno, toks in numbered[1:3]:
        key = toks[0]
        if key not in ("cx", "cy") or key in vecs:
            raise InstanceFormatError("expected 'cx' then 'cy' lines", lineno)
        if len(toks) != n + 1:
            raise InstanceFormatError(f"{key} needs {n} values", lineno)
        vecs[key] = _floats(toks[1:], lineno)

    rows = []
    for j, (lineno, toks) in enumerate(numbered[3:]):
        if toks[0] != "row" or len(toks) < 4:
            raise InstanceFormatError("expected 'row <j> <d> <k> (<idx> <coeff>)*k'", lineno)
        try:
            row_index, k = int(toks[1]), int(toks[3])
        except ValueError as exc:
            raise InstanceFormatError(str(exc), lineno) from None
        if row_index != j:
            raise InstanceFormatError(f"row index {row_index} out of order (expected {j})", lineno)
        if k < 0 or len(toks) != 4 + 2 * k:
            raise InstanceFormatError(f"row declares {k} terms but has {(len(toks) - 4) / 2:g}", lineno)
        rhs = _floats(toks[2:3], lineno)[0]
        try:
            idx = np.array([int(t) for t in toks[4::2]], dtype=np.int64)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), lineno) from None
        coef = _floats(toks[5::2], lineno)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InstanceFormatError(f"variable index outside [0, {n})", lineno)
        try:
            rows.append(BilinearRow(row_index, idx, coef, rhs))
        except ValueError as exc:
            raise InstanceFormatError(str(exc), lineno) from None

    try:
        return BilinearInstance(n, m, vecs["cx"], vecs["cy"], tuple(rows), sign_mode, seed)
    except ValueError as exc:
        raise InstanceFormatError(str(exc), 1) from None


def read_instance(path: str | os.PathLike) -> BilinearInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read().splitlines())
