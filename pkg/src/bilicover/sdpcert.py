"""Certificate that the SDP constraint adds nothing to McCormick here.

From a McCormick optimum ``(x, y, w)`` build the moment matrix

    W = [[1, u'], [u, M]],   u = (x, y),

with ``M_ii = u_i``, ``M_ik = u_i u_k`` off the diagonal, except the matched
entries ``M_{i, n+i} = M_{n+i, i} = w_i``.  Then ``W - (1, u)(1, u)'`` is
zero apart from ``u_i - u_i^2`` on the diagonal and ``w_i - x_i y_i`` on the
matched pairs, so ``W`` is PSD as soon as

    x_i - x_i^2 >= |w_i - x_i y_i|  and  y_i - y_i^2 >= |w_i - x_i y_i|,

which every McCormick-feasible triple satisfies.  ``W`` therefore extends
the McCormick optimum to a feasible point of the McCormick+SDP relaxation
with the same objective, and the two bounds coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .model import BilinearInstance
from .relax import build_mccormick, solve

__all__ = [
    "MomentMatrix",
    "PsdCertificate",
    "SdpStatus",
    "SdpVerification",
    "build_wstar",
    "certify_psd",
    "gershgorin_slack",
    "jacobi_eigenvalues",
    "verify_sdp_equals_mccormick",
    "McCormickViolation",
]

MC_TOL = 1e-7


class McCormickViolation(ValueError):
    pass


@dataclass(frozen=True)
class MomentMatrix:
    W: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def u(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


def build_wstar(x, y, w, tol: float = MC_TOL) -> MomentMatrix:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if not (x.size == y.size == w.size):
        raise ValueError("x, y and w must have equal length")
    lo = np.maximum(0.0, x + y - 1.0)
    hi = np.minimum(x, y)
    bad = (w < lo - tol) | (w > hi + tol) | (x < -tol) | (x > 1 + tol) | (y < -tol) | (y > 1 + tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise McCormickViolation(
            f"pair {i}: need max(0, x+y-1) <= w <= min(x, y), got x={x[i]:.6g}, y={y[i]:.6g}, w={w[i]:.6g}"
        )
    return _assemble(x, y, w)


def _assemble(x, y, w) -> MomentMatrix:
    n = x.size
    u = np.concatenate([x, y])
    v = np.concatenate([[1.0], u])
    W = np.outer(v, v)
    k = np.arange(1, 2 * n + 1)
    W[k, k] = u
    i = np.arange(1, n + 1)
    W[i, i + n] = w
    W[i + n, i] = w
    return MomentMatrix(W, x.copy(), y.copy(), w.copy())


def _round_robin(N: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering every (p, q), p < q, once per sweep."""
    M = N + (N % 2)
    players = list(range(M))
    rounds = []
    for _ in range(M - 1):
        pairs = [(players[k], players[M - 1 - k]) for k in range(M // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < N and b < N]
        if pairs:
            P, Q = map(np.array, zip(*pairs))
            rounds.append((P, Q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the rotations of one round act on disjoint index pairs and can be
    applied together.  Sweeps stop once the off-diagonal Frobenius norm is
    below ``tol * max(1, ||A||_F)``.  Returned in ascending order.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    if not np.allclose(A, A.T, atol=1e-12, rtol=0):
        raise ValueError("matrix is not symmetric")
    N = A.shape[0]
    A = 0.5 * (A + A.T)
    target = tol * max(1.0, float(np.linalg.norm(A)))
    mask = ~np.eye(N, dtype=bool)
    rounds = _round_robin(N)

    def off(M):
        return float(np.linalg.norm(M[mask]))

    for _ in range(max_sweeps):
        if off(A) <= target:
            break
        for P, Q in rounds:
            apq = A[P, Q]
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            P, Q, apq = P[live], Q[live], apq[live]
            theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
            with np.errstate(over="ignore", divide="ignore"):
                t = np.where(
                    np.abs(theta) > 1e150,
                    0.5 / theta,
                    np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                )
            t = np.where(theta == 0.0, 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            colP, colQ = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = c * colP - s * colQ
            A[:, Q] = s * colP + c * colQ
            rowP, rowQ = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = c[:, None] * rowP - s[:, None] * rowQ
            A[Q, :] = s[:, None] * rowP + c[:, None] * rowQ
            A[P, Q] = 0.0
            A[Q, P] = 0.0
    else:
        if off(A) > target:
            raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))


def gershgorin_slack(Wm: MomentMatrix) -> float:
    """Smallest row slack ``(u_i - u_i^2) - |w_i - x_i y_i|`` of ``W - G``.

    Nonnegative slack proves ``W - G`` (hence ``W``) PSD by the circle theorem.
    """
    x, y, w = Wm.x, Wm.y, Wm.w
    e = np.abs(w - x * y)
    s = np.concatenate([x - x * x - e, y - y * y - e])
    return float(s.min()) if s.size else 0.0


class SdpStatus(str, Enum):
    VERIFIED = "Verified"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class PsdCertificate:
    certified: bool
    min_eig: float
    gershgorin_slack: float
    eig_certified: bool
    gershgorin_certified: bool

    @property
    def status(self) -> str:
        return "Certified" if self.certified else "Failed"

    @property
    def routes_agree(self) -> bool:
        return self.eig_certified == self.gershgorin_certified


def certify_psd(Wm: MomentMatrix, tol: float = 1e-8, method: str = "jacobi") -> PsdCertificate:
    """Check ``W >= 0`` two ways: eigenvalues, and the diagonal-dominance rule.

    ``method`` picks the eigenvalue routine (``"jacobi"`` or ``"numpy"``).
    ``certified`` follows the eigenvalue route.
    """
    if method == "jacobi":
        eig = jacobi_eigenvalues(Wm.W)
    elif method == "numpy":
        eig = np.linalg.eigvalsh(Wm.W)
    else:
        raise ValueError(f"unknown method {method!r}")
    min_eig = float(eig[0])
    slack = gershgorin_slack(Wm)
    eig_ok = min_eig >= -tol
    g_ok = slack >= -tol
    return PsdCertificate(eig_ok, min_eig, slack, eig_ok, g_ok)


@dataclass(frozen=True)
class SdpVerification:
    status: SdpStatus
    z_mc: float = math.inf
    certificate: Optional[PsdCertificate] = None
    moment: Optional[MomentMatrix] = None

    @property
    def min_eig(self) -> float:
        return self.certificate.min_eig if self.certificate else math.nan


def verify_sdp_equals_mccormick(inst: BilinearInstance, tol: float = 1e-8, method: str = "jacobi") -> SdpVerification:
    """Solve McCormick, lift the optimum to ``W`` and certify ``W >= 0``.

    Raises ``RuntimeError`` if the certificate fails, which would
    contradict the equality of the two bounds.
    """
    state = build_mccormick(inst)
    sol = solve(state)
    if not sol.optimal:
        return SdpVerification(SdpStatus.INFEASIBLE)
    Wm = build_wstar(sol.point.x, sol.point.y, sol.w)
    cert = certify_psd(Wm, tol, method)
    if not cert.certified:
        raise RuntimeError(f"moment matrix not PSD (min eigenvalue {cert.min_eig:.3e})")
    return SdpVerification(SdpStatus.VERIFIED, sol.z, cert, Wm)
