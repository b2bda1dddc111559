"""Weighted global Arnoldi process over block vectors.

Builds a weight-orthonormal block basis for the matrix Krylov subspace of a
Sylvester operator by modified Gram-Schmidt in the weighted inner product,
with one norm-drop-triggered reorthogonalization sweep.  The recurrence
coefficients land in a quasi upper Hessenberg matrix of shape (j+1) x j.

The process can also continue from a retained prefix (the deflated-restart
case): new blocks are orthogonalized against every existing block in the
*current* weight while the prefix itself is never touched, so a basis built
across a weight change is orthonormal in the mixed sense (prefix blocks in
the weight of their construction, new blocks and all cross terms in the new
weight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import as_block, diamond_product, weighted_inner, weighted_norm

__all__ = ["ArnoldiDecomposition", "arnoldi_run", "arnoldi_extend"]

# h_{j+1,j} at or below BREAKDOWN_TOL * max(1, largest |h| so far) stops the
# recurrence: the Krylov subspace is (numerically) invariant.
BREAKDOWN_TOL = 1e-14
_REORTH_DROP = math.sqrt(0.5)


def _frozen(block):
    block = np.asarray(block)
    block.flags.writeable = False
    return block


@dataclass
class ArnoldiDecomposition:
    """Block basis V_1..V_{j+1} with its (j+1) x j recurrence matrix.

    ``weight_tags[i]`` names the weight under which block i was produced.
    ``breakdown`` is the 1-based step at which the subdiagonal coefficient
    vanished, if it did; the basis then has one block fewer than usual and
    the last row of ``h`` is (numerically) zero.
    """

    basis: list = field(default_factory=list)
    h: np.ndarray = field(default_factory=lambda: np.zeros((1, 0)))
    weight_tags: list = field(default_factory=list)
    breakdown: int | None = None

    @property
    def steps(self):
        return self.h.shape[1]


def _orthogonalize(w, basis, weight, prefix_solve=None, prefix_count=0):
    """Make ``w`` weight-orthogonal to every block in ``basis``.

    Blocks beyond ``prefix_count`` are orthonormal in ``weight`` and handled
    by modified Gram-Schmidt.  The leading ``prefix_count`` blocks may fail to
    be orthonormal in ``weight`` (a restart prefix carried across a weight
    change); their component is removed by an oblique projection through the
    prefix Gram matrix, applied by ``prefix_solve``.  One full
    reorthogonalization sweep runs whenever a non-trivial prefix is present,
    otherwise when the norm drops below 1/sqrt(2) of its starting value.
    """
    before = weighted_norm(w, weight)
    coeffs = np.zeros(len(basis))

    def sweep(w):
        if prefix_solve is not None:
            b = np.array([weighted_inner(w, basis[i], weight) for i in range(prefix_count)])
            z = prefix_solve(b)
            for i in range(prefix_count):
                w = w - z[i] * basis[i]
            coeffs[:prefix_count] += z
            start = prefix_count
        else:
            start = 0
        for i in range(start, len(basis)):
            t = weighted_inner(w, basis[i], weight)
            coeffs[i] += t
            w = w - t * basis[i]
        return w

    w = sweep(w)
    after = weighted_norm(w, weight)
    if prefix_solve is not None or after < _REORTH_DROP * before:
        w = sweep(w)
        after = weighted_norm(w, weight)
    return coeffs, w, after


def arnoldi_run(op, v, weight, m):
    """Run m weighted global Arnoldi steps from the start block ``v``.

    The start block is normalized to V_1 = v / ||v||; each step applies the
    operator, orthogonalizes against all previous blocks and normalizes the
    remainder, so that op(V_j) = sum_{i<=j+1} h[i,j] V_i holds column by
    column.  Happy breakdown truncates the decomposition (see
    :class:`ArnoldiDecomposition`).
    """
    if m < 1:
        raise ValueError("step count m must be >= 1")
    v = as_block(v)
    if v.shape != op.shape:
        raise ValueError(f"start block shape {v.shape} does not match operator {op.shape}")
    beta = weighted_norm(v, weight)
    if beta == 0.0:
        raise ValueError("start block must be nonzero")
    seed = ArnoldiDecomposition([_frozen(v / beta)], np.zeros((1, 0)), [weight.tag])
    return arnoldi_extend(seed, op, weight, 1, m)


def arnoldi_extend(dec, op, weight, from_j, to_m):
    """Continue the Arnoldi recurrence from an existing prefix.

    ``dec`` must hold ``from_j`` blocks and their ``from_j x (from_j - 1)``
    recurrence matrix, which is embedded unchanged in the result.  Columns
    ``from_j`` .. ``to_m`` are then produced by the standard loop under
    ``weight``; with ``from_j = 1`` this reproduces :func:`arnoldi_run`.
    The input decomposition is not modified.
    """
    if from_j != len(dec.basis):
        raise ValueError(f"prefix holds {len(dec.basis)} blocks, expected {from_j}")
    if dec.h.shape != (from_j, from_j - 1):
        raise ValueError(
            f"prefix recurrence matrix has shape {dec.h.shape}, "
            f"expected {(from_j, from_j - 1)}"
        )
    if to_m < from_j:
        raise ValueError(f"cannot extend from {from_j} blocks to {to_m} steps")

    basis = list(dec.basis)
    tags = list(dec.weight_tags)
    h = np.zeros((to_m + 1, to_m))
    h[: from_j, : from_j - 1] = dec.h
    hmax = max(1.0, float(np.abs(dec.h).max()) if dec.h.size else 0.0)
    breakdown = None
    prefix_solve, prefix_count = _prefix_projector(basis, weight)

    for col in range(from_j - 1, to_m):
        w = op.apply(basis[col])
        coeffs, w, nrm = _orthogonalize(w, basis, weight, prefix_solve, prefix_count)
        h[: col + 1, col] = coeffs
        h[col + 1, col] = nrm
        hmax = max(hmax, float(np.abs(coeffs).max()) if coeffs.size else 0.0, nrm)
        if nrm <= BREAKDOWN_TOL * hmax:
            breakdown = col + 1
            h = h[: col + 2, : col + 1]
            break
        basis.append(_frozen(w / nrm))
        tags.append(weight.tag)

    return ArnoldiDecomposition(basis, h, tags, breakdown)


def _prefix_projector(prefix, weight):
    """Solver for the prefix Gram system, or None when the prefix is already
    orthonormal in ``weight`` (then plain MGS suffices)."""
    gram = diamond_product(prefix, prefix, weight)
    if np.abs(gram - np.eye(len(prefix))).max() <= 1e-12:
        return None, 0
    try:
        factor = scipy.linalg.cho_factor(gram)
        return (lambda b: scipy.linalg.cho_solve(factor, b)), len(prefix)
    except np.linalg.LinAlgError:
        # weight change made the prefix numerically dependent; fall back to a
        # least-squares projection so the extension can still proceed
        return (lambda b: np.linalg.lstsq(gram, b, rcond=None)[0]), len(prefix)
