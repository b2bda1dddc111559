"""Weighted global GMRES with deflated restarting for AX + XB = C.

Quick start::

    import numpy as np
    from sylgmres import SylvesterOperator, SolverConfig, WeightStrategy, wglgmres_dr
    from sylgmres.problems import FdmSpec, fdm_matrix, gen_rhs

    a = fdm_matrix(FdmSpec(20))          # 400 x 400 Laplacian
    b = fdm_matrix(FdmSpec(2))           # 4 x 4
    op = SylvesterOperator(a, b)
    c = gen_rhs(op.n, op.s, seed=7)
    cfg = SolverConfig(m=10, k=5, strategy=WeightStrategy("mean"))
    report = wglgmres_dr(op, c, cfg)
    print(report.converged, report.cycles, report.true_resnorm)
"""

from .core import (
    SylvesterOperator,
    Weight,
    apply_sylvester,
    basis_combine,
    diamond_product,
    weighted_inner,
    weighted_norm,
)
from .arnoldi import ArnoldiDecomposition, arnoldi_extend, arnoldi_run
from .dense import (
    EigenPairSet,
    SingularMatrixError,
    hessenberg_lsq,
    reduced_qr,
    small_eig,
    small_solve,
)
from .problems import (
    FdmSpec,
    ProblemInstance,
    fdm_matrix,
    gen_rhs,
    kron_solve,
    read_matrix_market,
    write_matrix_market,
)
from .solver import (
    HarmonicSet,
    SolveReport,
    SolverConfig,
    collinearity_check,
    harmonic_pairs,
    restart_subspace,
    select_and_realify,
    wglgmres,
    wglgmres_dr,
)
from .weighting import WeightStrategy, make_weight

__version__ = "0.1.0"

__all__ = [
    "ArnoldiDecomposition",
    "EigenPairSet",
    "FdmSpec",
    "HarmonicSet",
    "ProblemInstance",
    "SingularMatrixError",
    "SolveReport",
    "SolverConfig",
    "SylvesterOperator",
    "Weight",
    "WeightStrategy",
    "apply_sylvester",
    "arnoldi_extend",
    "arnoldi_run",
    "basis_combine",
    "collinearity_check",
    "diamond_product",
    "fdm_matrix",
    "gen_rhs",
    "harmonic_pairs",
    "hessenberg_lsq",
    "kron_solve",
    "make_weight",
    "read_matrix_market",
    "reduced_qr",
    "restart_subspace",
    "select_and_realify",
    "small_eig",
    "small_solve",
    "weighted_inner",
    "weighted_norm",
    "wglgmres",
    "wglgmres_dr",
    "write_matrix_market",
]
