"""Block vectors, sparse operators and weighted inner products.

A "block vector" is a dense real n x s matrix treated as a single Krylov
atom.  The inner product of two blocks Y, Z under a positive diagonal weight
D is trace(Z^T D Y); an entrywise-positive weight W replaces D Y with the
Hadamard product W * Y.  The diamond product of two block sequences collects
all pairwise weighted inner products into a small Gram matrix.

Block vectors are plain float64 ndarrays (column-major at construction, so
columns of right-hand sides and iterates are contiguous).  Sparse matrices
are scipy CSR arrays.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Weight",
    "SylvesterOperator",
    "as_block",
    "as_csr",
    "frob",
    "apply_sylvester",
    "weighted_inner",
    "weighted_norm",
    "diamond_product",
    "basis_combine",
]


def as_block(x, name="block"):
    """Coerce ``x`` to a float64 column-major 2d array with finite entries."""
    b = np.asfortranarray(x, dtype=np.float64)
    if b.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {b.shape}")
    if not np.isfinite(b).all():
        raise ValueError(f"{name} contains non-finite entries")
    return b


def as_csr(mat, name="matrix"):
    """Coerce ``mat`` (dense or sparse) to float64 CSR with sorted indices."""
    m = sp.csr_array(mat).astype(np.float64)
    m.sum_duplicates()
    m.sort_indices()
    if not np.isfinite(m.data).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


def frob(x):
    """Frobenius norm of a dense array."""
    return float(np.linalg.norm(np.asarray(x)))


class Weight:
    """Positive weight defining the block inner product trace(Z^T D Y).

    Three variants: ``identity`` (plain Frobenius inner product), ``diagonal``
    (positive diagonal D of length n) and ``elementwise`` (positive n x s
    matrix combined by Hadamard product).  Weights are immutable; ``tag``
    records how the weight was constructed, for diagnostics.
    """

    __slots__ = ("kind", "data", "tag")

    def __init__(self, kind, data, tag):
        self.kind = kind
        self.data = data
        self.tag = tag

    @classmethod
    def identity(cls, tag="identity"):
        return cls("identity", None, tag)

    @classmethod
    def diagonal(cls, d, tag="diagonal"):
        d = np.ascontiguousarray(d, dtype=np.float64)
        if d.ndim != 1:
            raise ValueError("diagonal weight must be a 1-d vector")
        if not np.isfinite(d).all() or np.any(d <= 0.0):
            raise ValueError("diagonal weight entries must be finite and > 0")
        d.flags.writeable = False
        return cls("diagonal", d, tag)

    @classmethod
    def elementwise(cls, w, tag="elementwise"):
        w = as_block(w, name="elementwise weight")
        if np.any(w <= 0.0):
            raise ValueError("elementwise weight entries must be > 0")
        w.flags.writeable = False
        return cls("elementwise", w, tag)

    def _check(self, y):
        if self.kind == "diagonal" and self.data.shape[0] != y.shape[0]:
            raise ValueError(
                f"diagonal weight length {self.data.shape[0]} does not match "
                f"block rows {y.shape[0]}"
            )
        if self.kind == "elementwise" and self.data.shape != y.shape:
            raise ValueError(
                f"elementwise weight shape {self.data.shape} does not match "
                f"block shape {y.shape}"
            )

    def scale(self, y):
        """Return D @ y (diagonal), W * y (elementwise) or y (identity)."""
        self._check(y)
        if self.kind == "identity":
            return y
        if self.kind == "diagonal":
            return self.data[:, None] * y
        return self.data * y

    def same_data(self, other):
        """True if ``other`` defines the same inner product."""
        if self.kind != other.kind:
            return False
        if self.kind == "identity":
            return True
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"Weight(kind={self.kind!r}, tag={self.tag!r})"


class SylvesterOperator:
    """The linear map X -> A X + X B for sparse square A (n x n), B (s x s)."""

    __slots__ = ("a", "b", "n", "s")

    def __init__(self, a, b):
        self.a = as_csr(a, name="A")
        self.b = as_csr(b, name="B")
        if self.a.shape[0] != self.a.shape[1]:
            raise ValueError(f"A must be square, got {self.a.shape}")
        if self.b.shape[0] != self.b.shape[1]:
            raise ValueError(f"B must be square, got {self.b.shape}")
        self.n = self.a.shape[0]
        self.s = self.b.shape[0]

    @property
    def shape(self):
        return (self.n, self.s)

    def apply(self, x):
        return apply_sylvester(self, x)

    def frobenius_scale(self):
        """||A||_F + ||B||_F, the natural magnitude scale of the operator."""
        return float(np.sqrt((self.a.data**2).sum()) + np.sqrt((self.b.data**2).sum()))

    def __repr__(self):
        return f"SylvesterOperator(n={self.n}, s={self.s})"


def apply_sylvester(op, x):
    """Apply X -> A X + X B without forming any Kronecker matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != op.shape:
        raise ValueError(f"block shape {x.shape} does not match operator {op.shape}")
    return op.a @ x + x @ op.b


def weighted_inner(y, z, weight):
    """Weighted inner product of two equally shaped blocks.

    trace(Z^T D Y) for identity/diagonal weights, trace(Z^T (W * Y)) for the
    elementwise variant.
    """
    y = np.asarray(y)
    z = np.asarray(z)
    if y.shape != z.shape:
        raise ValueError(f"block shapes differ: {y.shape} vs {z.shape}")
    weight._check(y)
    if weight.kind == "identity":
        return float(np.einsum("ij,ij->", y, z))
    if weight.kind == "diagonal":
        return float(np.einsum("i,ij,ij->", weight.data, y, z))
    return float(np.einsum("ij,ij,ij->", weight.data, y, z))


def weighted_norm(y, weight):
    """Norm induced by :func:`weighted_inner`; zero only for the zero block."""
    val = weighted_inner(y, y, weight)
    # tiny negative values can appear through rounding in the einsum reduction
    return float(np.sqrt(val)) if val > 0.0 else 0.0


def diamond_product(u, v, weight):
    """Small Gram matrix of two block sequences.

    Entry (i, j) is the weighted inner product of ``u[i]`` and ``v[j]``.
    """
    if len(u) == 0 or len(v) == 0:
        return np.zeros((len(u), len(v)))
    shape = u[0].shape
    for blk in list(u) + list(v):
        if blk.shape != shape:
            raise ValueError("all blocks must share one shape")
    su = np.stack([np.ravel(b, order="F") for b in u])
    sv = np.stack([np.ravel(weight.scale(b), order="F") for b in v])
    return su @ sv.T


def basis_combine(basis, coeffs):
    """Linear combination sum_i coeffs[i] * basis[i] of equally shaped blocks."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.shape[0] != len(basis):
        raise ValueError(
            f"got {coeffs.shape[0] if coeffs.ndim == 1 else coeffs.shape} "
            f"coefficients for {len(basis)} blocks"
        )
    out = np.zeros(basis[0].shape, order="F") if basis else None
    if out is None:
        raise ValueError("empty basis")
    for c, b in zip(coeffs, basis):
        out += c * b
    return out
