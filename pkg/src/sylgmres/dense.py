"""Dense kernels for the small projected subproblems.

Everything here operates on matrices of at most a few hundred rows: least
squares on (m+1) x m quasi-Hessenberg matrices via plane rotations, a
rank-revealing modified Gram-Schmidt QR, a real nonsymmetric eigensolver and
partial-pivoted linear solves with an explicit singularity threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "SingularMatrixError",
    "EigenConvergenceError",
    "LsqSolution",
    "QrFactors",
    "EigenPairSet",
    "hessenberg_lsq",
    "reduced_qr",
    "small_eig",
    "small_solve",
]

# Column drop threshold in reduced_qr, relative to the largest input column norm.
RANK_TOL = 1e-12
# Singularity threshold for triangular/LU diagonals, relative to the matrix norm.
PIVOT_TOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """A linear solve met a pivot below the singularity threshold."""


class EigenConvergenceError(np.linalg.LinAlgError):
    """The QR eigeniteration did not converge within its sweep budget."""


class LsqSolution(NamedTuple):
    y: np.ndarray
    residual: np.ndarray
    rho: float
    degenerate: bool


class QrFactors(NamedTuple):
    q: np.ndarray
    gamma: np.ndarray
    kept: list


@dataclass(frozen=True)
class EigenPairSet:
    """Eigenvalues with right eigenvectors of a real matrix.

    Complex conjugate pairs are adjacent (positive imaginary part first) and
    every vector has unit 2-norm.  ``magnitude_order`` sorts ascending by
    eigenvalue magnitude; the sort is stable, so adjacency of conjugate pairs
    survives reordering.
    """

    values: np.ndarray
    vectors: np.ndarray
    magnitude_order: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def sorted_by_magnitude(self):
        o = self.magnitude_order
        return EigenPairSet(self.values[o], self.vectors[:, o], np.arange(len(o)))


def _rotation(f, g):
    """Stable plane rotation (c, s) with c*f + s*g = hypot(f, g) >= 0."""
    r = np.hypot(f, g)
    return f / r, g / r


def hessenberg_lsq(h, c):
    """Minimize ||c - H y||_2 for an (m+1) x m matrix H by plane rotations.

    H may be proper upper Hessenberg or carry a dense leading block (as after
    a deflated restart); rotations eliminate whatever subdiagonal entries are
    present, column by column.  Returns the minimizer ``y``, the explicit
    residual vector ``c - H y``, its 2-norm ``rho`` and a ``degenerate`` flag.
    A triangular diagonal below ``PIVOT_TOL * ||H||_F`` marks the system rank
    deficient; the minimum-norm solution is returned in that case.
    """
    h = np.asarray(h, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1] + 1:
        raise ValueError(f"expected an (m+1) x m matrix, got {h.shape}")
    m = h.shape[1]
    if c.shape != (m + 1,):
        raise ValueError(f"right-hand side must have length {m + 1}, got {c.shape}")

    r = h.copy()
    g = c.copy()
    for j in range(m):
        for i in range(m, j, -1):
            if r[i, j] == 0.0:
                continue
            cs, sn = _rotation(r[i - 1, j], r[i, j])
            top = cs * r[i - 1, j:] + sn * r[i, j:]
            r[i, j:] = -sn * r[i - 1, j:] + cs * r[i, j:]
            r[i - 1, j:] = top
            gt = cs * g[i - 1] + sn * g[i]
            g[i] = -sn * g[i - 1] + cs * g[i]
            g[i - 1] = gt

    diag = np.abs(np.diagonal(r[:m, :m])) if m else np.empty(0)
    degenerate = bool(m and np.any(diag <= PIVOT_TOL * np.linalg.norm(h)))
    if degenerate:
        y = np.linalg.lstsq(r[:m], g[:m], rcond=None)[0]
    elif m:
        y = scipy.linalg.solve_triangular(r[:m], g[:m])
    else:
        y = np.empty(0)
    residual = c - h @ y
    rho = float(np.linalg.norm(residual)) if degenerate else abs(float(g[m]))
    return LsqSolution(y, residual, rho, degenerate)


def reduced_qr(g):
    """Reduced QR of a tall m x k matrix by modified Gram-Schmidt.

    Every column gets one full reorthogonalization sweep.  Columns whose
    orthogonalized remainder falls below ``RANK_TOL`` times the largest input
    column norm are dropped, so ``q`` may have fewer than k columns; ``kept``
    lists the surviving input column indices and ``gamma`` has one row per
    kept column (upper triangular when nothing is dropped, with
    ``g ~ q @ gamma`` either way).
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    m, k = g.shape
    if k > m:
        raise ValueError(f"need at least as many rows as columns, got {g.shape}")
    col_norms = np.linalg.norm(g, axis=0)
    tol = RANK_TOL * (col_norms.max() if k else 0.0)

    q_cols = []
    gamma_cols = []
    kept = []
    for j in range(k):
        v = g[:, j].copy()
        coeff = np.zeros(k)
        for _ in range(2):
            for i, qi in enumerate(q_cols):
                t = float(qi @ v)
                coeff[i] += t
                v -= t * qi
        nrm = float(np.linalg.norm(v))
        if nrm <= tol:
            gamma_cols.append(coeff)
            continue
        coeff[len(q_cols)] = nrm
        q_cols.append(v / nrm)
        kept.append(j)
        gamma_cols.append(coeff)

    rank = len(q_cols)
    q = np.column_stack(q_cols) if rank else np.zeros((m, 0))
    gamma = np.column_stack([c[:rank] for c in gamma_cols]) if k else np.zeros((0, 0))
    return QrFactors(q, gamma, kept)


def small_eig(mat):
    """All eigenpairs of a small dense real matrix.

    Backed by LAPACK's balanced Hessenberg-reduction + implicitly shifted QR
    iteration, which keeps conjugate pairs adjacent and returns unit-norm
    right eigenvectors.  Non-convergence raises EigenConvergenceError.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got {mat.shape}")
    if mat.shape[0] < 1:
        raise ValueError("matrix must be at least 1 x 1")
    if not np.isfinite(mat).all():
        raise ValueError("matrix contains non-finite entries")
    try:
        values, vectors = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    values = values.astype(np.complex128)
    vectors = vectors.astype(np.complex128)
    order = np.argsort(np.abs(values), kind="stable")
    return EigenPairSet(values, vectors, order)


def small_solve(mat, rhs):
    """Solve mat @ x = rhs by partial-pivoted elimination.

    Raises SingularMatrixError when any pivot falls below
    ``PIVOT_TOL * ||mat||_F``, so callers can fall back to an alternative
    formulation instead of consuming garbage.
    """
    mat = np.asarray(mat, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got {mat.shape}")
    if rhs.shape[0] != mat.shape[0]:
        raise ValueError(
            f"right-hand side rows {rhs.shape[0]} do not match matrix {mat.shape}"
        )
    if not np.isfinite(mat).all():
        raise ValueError("matrix contains non-finite entries")
    with warnings.catch_warnings():
        # singularity is reported through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(mat, check_finite=False)
    if not np.all(np.abs(np.diagonal(lu)) > PIVOT_TOL * np.linalg.norm(mat)):
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
