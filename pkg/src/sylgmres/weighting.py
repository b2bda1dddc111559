"""Residual-driven construction of inner-product weights.

Diagonal strategies rebuild the weight from the current residual block at
every restart:

* ``max-col`` / ``min-col``: normalized absolute values of the residual
  column with the largest / smallest 2-norm (smallest column index wins
  ties).
* ``mean``: absolute row means of the residual, kept unnormalized.

``hadamard`` derives an entrywise weight once from the right-hand side and
never updates it; ``random`` draws one positive diagonal per solve from a
seeded generator.  Every produced weight is floored away from zero so the
inner product stays positive definite even for residuals with exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Weight, frob

__all__ = ["WeightStrategy", "STRATEGY_KINDS", "make_weight"]

STRATEGY_KINDS = ("identity", "max-col", "min-col", "mean", "hadamard", "random")

# Entries with absolute value below this are treated as an all-zero residual.
_ZERO_RESIDUAL = 1e-300


@dataclass(frozen=True)
class WeightStrategy:
    """Named weighting scheme plus its floor and (for ``random``) its seed."""

    kind: str = "identity"
    seed: int | None = None
    floor_rel: float = 1e-12

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(
                f"unknown weighting strategy {self.kind!r}; "
                f"choose one of {', '.join(STRATEGY_KINDS)}"
            )
        if self.floor_rel <= 0.0:
            raise ValueError("floor_rel must be > 0")
        if self.kind == "random" and self.seed is None:
            raise ValueError("the random strategy needs an explicit seed")


def _floored(values, floor_rel, tag, make):
    mx = float(values.max()) if values.size else 0.0
    if mx <= 0.0:
        return Weight.identity(tag=f"identity[degenerate:{tag}]")
    return make(np.maximum(values, floor_rel * mx), tag=tag)


def make_weight(strategy, residual=None, rhs=None):
    """Build the Weight a strategy prescribes for the current solve state.

    ``residual`` feeds the max-col/min-col/mean strategies (and sizes the
    random one); ``rhs`` feeds hadamard.  A numerically zero residual
    degrades to the identity weight, recorded in the weight's tag.
    """
    kind = strategy.kind
    if kind == "identity":
        return Weight.identity()

    if kind == "hadamard":
        if rhs is None:
            raise ValueError("hadamard weighting needs the right-hand side block")
        c = np.asarray(rhs, dtype=np.float64)
        nrm = frob(c)
        if nrm == 0.0:
            return Weight.identity(tag="identity[degenerate:hadamard]")
        w = np.sqrt(c.size) * np.abs(c) / nrm
        return _floored(w, strategy.floor_rel, "hadamard", Weight.elementwise)

    if residual is None:
        raise ValueError(f"{kind} weighting needs the current residual block")
    r = np.asarray(residual, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("residual must be an n x s block")

    if kind == "random":
        d = np.random.default_rng(strategy.seed).uniform(0.0, 2.0, r.shape[0])
        return _floored(d, strategy.floor_rel, f"random[{strategy.seed}]", Weight.diagonal)

    if np.abs(r).max() < _ZERO_RESIDUAL:
        return Weight.identity(tag=f"identity[degenerate:{kind}]")

    if kind in ("max-col", "min-col"):
        norms = np.linalg.norm(r, axis=0)
        t = int(np.argmax(norms) if kind == "max-col" else np.argmin(norms))
        if norms[t] == 0.0:
            return Weight.identity(tag=f"identity[degenerate:{kind}]")
        d = np.abs(r[:, t]) / norms[t]
        return _floored(d, strategy.floor_rel, kind, Weight.diagonal)

    # kind == "mean"
    d = np.abs(r.mean(axis=1))
    return _floored(d, strategy.floor_rel, "mean", Weight.diagonal)
