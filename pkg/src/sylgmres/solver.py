"""Restarted weighted global GMRES for AX + XB = C, with optional deflation.

``wglgmres`` is the plain restarted method: each cycle runs the weighted
global Arnoldi process on the current residual, minimizes the projected
residual over the Krylov block subspace and restarts, optionally rebuilding
the weight from the new residual.

``wglgmres_dr`` adds deflated restarting: at each restart it extracts the
harmonic Ritz pairs of smallest magnitude from the projected recurrence
matrix, turns them into a real orthonormal set of recycled blocks together
with the just-computed residual direction, and continues the Arnoldi process
from that prefix instead of starting over.  All deflation failures degrade
to a plain restart; they never abort a solve.

Convergence is declared when the cheap projected estimate
``||c - H y||_2 / ||C||_D`` meets the tolerance and the explicitly formed
residual confirms it in the same weighted norm.  The reported final residual
is always recomputed from the returned iterate in the Frobenius norm.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .arnoldi import ArnoldiDecomposition, arnoldi_extend, arnoldi_run
from .core import as_block, basis_combine, frob, weighted_norm
from .dense import (
    EigenConvergenceError,
    EigenPairSet,
    SingularMatrixError,
    hessenberg_lsq,
    reduced_qr,
    small_eig,
    small_solve,
)
from .weighting import WeightStrategy, make_weight

__all__ = [
    "SolverConfig",
    "SolveReport",
    "CycleRecord",
    "CycleTrace",
    "HarmonicSet",
    "DeflationError",
    "wglgmres",
    "wglgmres_dr",
    "harmonic_pairs",
    "select_and_realify",
    "restart_subspace",
    "collinearity_check",
]

# Eigenvalues of the inverted harmonic problem below this (relative) size
# correspond to infinite harmonic values and are discarded.
_INV_EIG_TOL = 1e-14
# The restart residual must keep this fraction of its norm after
# orthogonalization against the recycled directions to be usable.
_RESTART_SPAN_TOL = 1e-12


class DeflationError(RuntimeError):
    """A deflated restart could not be built; the caller restarts plainly."""


@dataclass(frozen=True)
class SolverConfig:
    """Restart length ``m``, deflation count ``k`` and stopping controls.

    ``k = 0`` disables deflation; otherwise ``1 <= k <= m - 2`` so a
    conjugate-pair adjustment always has room.  Only ``sigma = 0`` (deflating
    the smallest-magnitude harmonic values) is supported.
    """

    m: int
    k: int = 0
    tol: float = 1e-6
    maxit: int = 2500
    strategy: WeightStrategy = WeightStrategy("identity")
    sigma: float = 0.0
    record_cycles: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("restart length m must be >= 1")
        if self.k < 0:
            raise ValueError("deflation count k must be >= 0")
        if self.k > 0 and self.k > self.m - 2:
            raise ValueError(f"deflation count k={self.k} must be <= m - 2 = {self.m - 2}")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be > 0")
        if self.maxit < 1:
            raise ValueError("maxit must be >= 1")
        if self.sigma != 0.0:
            raise ValueError("only the zero harmonic shift is supported")


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    cumulative_iter: int
    est_resnorm: float
    true_resnorm: float
    weight_tag: str
    wall_s: float


@dataclass
class CycleTrace:
    """Full per-cycle state, kept only when ``record_cycles`` is set."""

    cycle: int
    weight: object
    prev_weight: object
    prefix_blocks: int  # blocks retained at cycle start (1 for a fresh cycle)
    dec: ArnoldiDecomposition
    c: np.ndarray
    y: np.ndarray
    beta: float


@dataclass
class SolveReport:
    x: np.ndarray
    converged: bool
    cycles: int
    history: list
    true_resnorm: float
    breakdowns: list
    wall_time: float
    traces: list | None = None

    @property
    def estimated_history(self):
        return [rec.est_resnorm for rec in self.history]


@dataclass
class HarmonicSet:
    """Smallest-magnitude harmonic pairs with their realified basis.

    ``g_real`` stacks the selected eigenvectors as real columns: real pairs
    contribute their vector, complex conjugate pairs contribute (Re g, Im g)
    exactly once.  ``k_effective`` is the resulting column count after the
    conjugate-pair boundary adjustment.
    """

    pairs: EigenPairSet
    g_real: np.ndarray
    k_effective: int


def harmonic_pairs(h):
    """Harmonic Ritz pairs of the projected recurrence matrix.

    For the (m+1) x m matrix H with square part H_m and subdiagonal scalar
    h_sub, the pairs are the eigenpairs of
    ``H_m + h_sub^2 * H_m^{-T} e_m e_m^T`` when H_m is regular; otherwise the
    generalized form ``theta * H_m^T g = (H^T H) g`` is solved through the
    normal-matrix factorization, discarding infinite values.  Pairs come back
    sorted ascending by magnitude, conjugate pairs adjacent.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1] + 1:
        raise ValueError(f"expected an (m+1) x m matrix, got {h.shape}")
    m = h.shape[1]
    hm = h[:m, :]
    hsub = float(h[m, m - 1])
    try:
        em = np.zeros(m)
        em[m - 1] = 1.0
        u = small_solve(hm.T, em)
        mat = hm.copy()
        mat[:, m - 1] += hsub**2 * u
        pairs = small_eig(mat)
    except SingularMatrixError:
        normal = h.T @ h
        inv_map = small_solve(normal, hm.T)  # raises again if the pencil is singular
        inv_pairs = small_eig(inv_map)
        mags = np.abs(inv_pairs.values)
        keep = mags > _INV_EIG_TOL * max(1.0, float(mags.max()))
        if not np.any(keep):
            raise DeflationError("harmonic pencil has no finite eigenvalues")
        values = 1.0 / inv_pairs.values[keep]
        vectors = inv_pairs.vectors[:, keep]
        order = np.argsort(np.abs(values), kind="stable")
        pairs = EigenPairSet(values, vectors, order)
    return pairs.sorted_by_magnitude()


def select_and_realify(pairs, k):
    """Pick the k smallest-magnitude pairs and build a real column set.

    If the cut would split a complex conjugate pair, k grows by one so both
    the real and the imaginary part enter (shrinking by one instead when the
    grown k would exceed m - 2).  Each conjugate pair contributes the two
    columns (Re g, Im g) exactly once.
    """
    if k < 1:
        raise ValueError("selection count k must be >= 1")
    values = pairs.values
    vectors = pairs.vectors
    m = vectors.shape[0]
    cap = m - 2
    k_sel = min(k, len(values), cap) if cap >= 1 else 0
    if k_sel < 1:
        raise DeflationError("no harmonic pairs available for deflation")

    i = 0
    while i < k_sel:
        if values[i].imag == 0.0:
            i += 1
            continue
        if i + 1 == k_sel:  # the cut splits this conjugate pair
            k_sel = k_sel + 1 if (k_sel + 1 <= min(cap, len(values))) else k_sel - 1
            break
        i += 2
    if k_sel < 1:
        raise DeflationError("conjugate-pair adjustment left nothing to deflate")

    cols = []
    i = 0
    while i < k_sel:
        val = values[i]
        vec = vectors[:, i]
        if val.imag == 0.0:
            cols.append(vec.real)
            i += 1
            continue
        if i + 1 >= len(values) or not np.isclose(
            values[i + 1], np.conj(val), rtol=1e-8, atol=0.0
        ):
            raise DeflationError("conjugate partner of a complex harmonic value is missing")
        cols.append(vec.real)
        cols.append(vec.imag)
        i += 2

    g_real = np.column_stack(cols)
    selected = EigenPairSet(values[:k_sel], vectors[:, :k_sel], np.arange(k_sel))
    return HarmonicSet(selected, g_real, g_real.shape[1])


def restart_subspace(dec, hs, r):
    """Recycled blocks and projected recurrence for a deflated restart.

    Orthonormalizes the realified harmonic columns, appends the normalized
    component of the small residual vector ``r`` orthogonal to them, and maps
    both through the current basis: the returned blocks span the harmonic
    Ritz block vectors plus the residual, and ``new_h`` restates the
    recurrence on that set.  Raises DeflationError when the harmonic columns
    are rank deficient or ``r`` already lies in their span.
    """
    qr = reduced_qr(hs.g_real)
    kq = qr.q.shape[1]
    if kq == 0:
        raise DeflationError("harmonic vectors are numerically rank deficient")
    r = np.asarray(r, dtype=np.float64)
    rows = dec.h.shape[0]
    if r.shape != (rows,):
        raise ValueError(f"residual vector must have length {rows}, got {r.shape}")

    q_ext = np.zeros((rows, kq))
    q_ext[: qr.q.shape[0], :] = qr.q
    v = r.copy()
    for _ in range(2):
        v -= q_ext @ (q_ext.T @ v)
    nrm = float(np.linalg.norm(v))
    if nrm <= _RESTART_SPAN_TOL * float(np.linalg.norm(r)):
        raise DeflationError("residual direction already lies in the recycled span")
    q = np.column_stack([q_ext, v / nrm])

    new_h = q.T @ dec.h @ qr.q
    new_basis = [basis_combine(dec.basis, q[:, i]) for i in range(kq + 1)]
    return new_basis, new_h, q


def collinearity_check(dec, pairs, y, beta):
    """Largest angular deviation between harmonic residuals and the GMRES one.

    For each pair (theta, g) the harmonic residual vector
    ``(H - theta * [I; 0]) g`` should be a scalar multiple of the projected
    GMRES residual ``beta e_1 - H y``; returns the maximum over pairs of
    ``1 - |cos angle|``, testing real and imaginary parts separately for
    complex values.  Vanishing residuals count as deviation 0.
    """
    h = dec.h
    rows = h.shape[0]
    rm = -(h @ y)
    rm[0] += beta
    rnorm = float(np.linalg.norm(rm))
    if rnorm < 1e-300:
        return 0.0
    hscale = float(np.linalg.norm(h))
    dev = 0.0
    for idx in range(len(pairs)):
        theta = pairs.values[idx]
        g = pairs.vectors[:, idx]
        rt = h @ g
        rt[: rows - 1] -= theta * g
        parts = (rt.real,) if theta.imag == 0.0 else (rt.real, rt.imag)
        floor = 1e-12 * (hscale + abs(theta)) * float(np.linalg.norm(g))
        for part in parts:
            pnorm = float(np.linalg.norm(part))
            if pnorm <= floor:
                continue
            cosine = abs(float(part @ rm)) / (pnorm * rnorm)
            dev = max(dev, 1.0 - cosine)
    return dev


def wglgmres(op, c, cfg, x0=None):
    """Restarted weighted global GMRES (no deflation; ``cfg.k`` must be 0)."""
    if cfg.k != 0:
        raise ValueError("wglgmres requires k = 0; use wglgmres_dr for deflation")
    return _drive(op, c, cfg, x0, use_deflation=False)


def wglgmres_dr(op, c, cfg, x0=None):
    """Weighted global GMRES with deflated restarting (plain when k = 0)."""
    if cfg.k == 0:
        return wglgmres(op, c, cfg, x0)
    return _drive(op, c, cfg, x0, use_deflation=True)


def _drive(op, c, cfg, x0, use_deflation):
    t0 = time.perf_counter()
    c = as_block(c, name="right-hand side")
    if c.shape != op.shape:
        raise ValueError(f"right-hand side shape {c.shape} does not match operator {op.shape}")
    x = np.zeros(op.shape, order="F") if x0 is None else as_block(x0, name="x0").copy(order="F")
    if x.shape != op.shape:
        raise ValueError(f"initial guess shape {x.shape} does not match operator {op.shape}")

    norm_c_f = frob(c)
    r = c - op.apply(x)
    if norm_c_f == 0.0:
        if frob(r) == 0.0:
            return SolveReport(x, True, 0, [], 0.0, [], time.perf_counter() - t0,
                               [] if cfg.record_cycles else None)
        raise ValueError("zero right-hand side with a nonzero initial residual")

    fixed_weight = None
    if cfg.strategy.kind in ("identity", "random", "hadamard"):
        # these weights are fixed for the whole solve; the others follow the residual
        fixed_weight = make_weight(cfg.strategy, residual=r, rhs=c)

    history = []
    events = []
    traces = [] if cfg.record_cycles else None
    prefix = None
    prev_weight = None
    converged = False
    cum_iter = 0

    for cycle in range(1, cfg.maxit + 1):
        weight = fixed_weight if fixed_weight is not None else make_weight(
            cfg.strategy, residual=r, rhs=c
        )
        norm_c_d = weighted_norm(c, weight)
        beta = weighted_norm(r, weight)
        if beta == 0.0:
            converged = True
            break

        if prefix is None:
            dec = arnoldi_run(op, r, weight, cfg.m)
            cvec = np.zeros(dec.h.shape[0])
            cvec[0] = beta
            prefix_cols = 0
        else:
            blocks, h_prefix, tags, c_prefix = prefix
            seed = ArnoldiDecomposition(blocks, h_prefix, tags)
            dec = arnoldi_extend(seed, op, weight, len(blocks), cfg.m)
            # the carried residual lies in the span of the recycled blocks, so
            # its representation in the restarted basis is c_prefix exactly and
            # has no components along the freshly generated blocks
            cvec = np.zeros(dec.h.shape[0])
            cvec[: c_prefix.shape[0]] = c_prefix
            prefix_cols = h_prefix.shape[1]
        cum_iter += dec.h.shape[1] - prefix_cols
        if dec.breakdown is not None:
            events.append(f"cycle {cycle}: invariant subspace at step {dec.breakdown}")

        sol = hessenberg_lsq(dec.h, cvec)
        if sol.degenerate:
            events.append(f"cycle {cycle}: degenerate projected least-squares")
        ncols = dec.h.shape[1]
        x = x + basis_combine(dec.basis[:ncols], sol.y)
        r = c - op.apply(x)

        est = sol.rho / norm_c_d
        explicit = weighted_norm(r, weight) / norm_c_d
        history.append(CycleRecord(cycle, cum_iter, est, frob(r) / norm_c_f,
                                   weight.tag, time.perf_counter() - t0))
        if traces is not None:
            traces.append(CycleTrace(cycle, weight, prev_weight,
                                     1 + prefix_cols, dec, cvec, sol.y, beta))

        if est <= cfg.tol and explicit <= cfg.tol:
            converged = True
            break
        if cycle == cfg.maxit:
            break

        prefix = None
        if use_deflation and dec.breakdown is None and not sol.degenerate:
            try:
                pairs = harmonic_pairs(dec.h)
                hs = select_and_realify(pairs, cfg.k)
                blocks, new_h, q = restart_subspace(dec, hs, sol.residual)
                prefix = (blocks, new_h, [f"{weight.tag}+recycled"] * len(blocks),
                          q.T @ sol.residual)
            except (DeflationError, SingularMatrixError, EigenConvergenceError) as exc:
                events.append(f"cycle {cycle}: deflation skipped ({exc})")
        prev_weight = weight

    true_resnorm = frob(c - op.apply(x)) / norm_c_f
    return SolveReport(x, converged, len(history), history, true_resnorm,
                       events, time.perf_counter() - t0, traces)
