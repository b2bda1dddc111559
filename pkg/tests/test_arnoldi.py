"""Weighted global Arnoldi process."""

import numpy as np
import pytest

from sylgmres import SylvesterOperator, Weight, WeightStrategy, make_weight
from sylgmres.arnoldi import ArnoldiDecomposition, arnoldi_extend, arnoldi_run
from sylgmres.core import apply_sylvester, diamond_product, frob, weighted_norm
from sylgmres.dense import hessenberg_lsq
from sylgmres.solver import harmonic_pairs, restart_subspace, select_and_realify

from conftest import random_block, random_operator


def relation_residual(op, dec):
    """Largest per-column residual of op(V_j) = sum_i h[i,j] V_i."""
    worst = 0.0
    for j in range(dec.h.shape[1]):
        lhs = apply_sylvester(op, dec.basis[j])
        rhs = sum(dec.h[i, j] * dec.basis[i] for i in range(len(dec.basis)))
        worst = max(worst, frob(lhs - rhs) / frob(dec.basis[j]))
    return worst


def make_weight_for(kind, rng, r, c):
    seed = 11 if kind == "random" else None
    return make_weight(WeightStrategy(kind, seed=seed), residual=r, rhs=c)


class TestArnoldiRun:
    def test_scalar_operator_breaks_down(self, rng):
        op = SylvesterOperator(2.0 * np.eye(3), np.zeros((2, 2)))
        v = random_block(rng, 3, 2)
        dec = arnoldi_run(op, v, Weight.identity(), 1)
        assert dec.breakdown == 1
        assert len(dec.basis) == 1
        assert dec.h.shape == (2, 1)
        assert dec.h[0, 0] == pytest.approx(2.0, rel=1e-14)
        assert abs(dec.h[1, 0]) <= 1e-13

    def test_h_matches_diamond_recomputation(self, rng):
        op = random_operator(rng, 8, 2)
        v = random_block(rng, 8, 2)
        dec = arnoldi_run(op, v, Weight.identity(), 5)
        applied = [apply_sylvester(op, b) for b in dec.basis[:5]]
        expect = diamond_product(dec.basis, applied, Weight.identity())
        assert np.allclose(dec.h, expect, atol=1e-10)

    @pytest.mark.parametrize("kind", ["identity", "max-col", "min-col", "mean",
                                      "hadamard", "random"])
    def test_gram_identity_all_strategies(self, kind, rng):
        op = random_operator(rng, 10, 3)
        c = rng.random((10, 3))
        r = random_block(rng, 10, 3)
        w = make_weight_for(kind, rng, r, c)
        dec = arnoldi_run(op, r, w, 6)
        g = diamond_product(dec.basis, dec.basis, w)
        assert np.abs(g - np.eye(len(dec.basis))).max() <= 1e-10

    @pytest.mark.parametrize("kind", ["identity", "max-col", "min-col", "mean",
                                      "hadamard", "random"])
    def test_arnoldi_relation_all_strategies(self, kind, rng):
        op = random_operator(rng, 9, 2)
        c = rng.random((9, 2))
        r = random_block(rng, 9, 2)
        w = make_weight_for(kind, rng, r, c)
        dec = arnoldi_run(op, r, w, 6)
        assert relation_residual(op, dec) <= 1e-10 * op.frobenius_scale()

    def test_subdiagonal_nonnegative_and_structural_zeros(self, rng):
        op = random_operator(rng, 8, 2)
        dec = arnoldi_run(op, random_block(rng, 8, 2), Weight.identity(), 6)
        m = dec.h.shape[1]
        assert np.all(dec.h[np.arange(1, m + 1), np.arange(m)] >= 0.0)
        for j in range(m):
            assert np.all(dec.h[j + 2:, j] == 0.0)

    def test_block_norms_unit_in_construction_weight(self, rng):
        op = random_operator(rng, 8, 2)
        d = rng.uniform(0.2, 3.0, 8)
        w = Weight.diagonal(d)
        dec = arnoldi_run(op, random_block(rng, 8, 2), w, 5)
        for b in dec.basis:
            assert weighted_norm(b, w) == pytest.approx(1.0, abs=1e-10)

    def test_rejects_zero_start(self, rng):
        op = random_operator(rng, 4, 2)
        with pytest.raises(ValueError):
            arnoldi_run(op, np.zeros((4, 2)), Weight.identity(), 3)

    def test_basis_blocks_readonly(self, rng):
        op = random_operator(rng, 5, 2)
        dec = arnoldi_run(op, random_block(rng, 5, 2), Weight.identity(), 3)
        with pytest.raises(ValueError):
            dec.basis[0][0, 0] = 7.0


class TestArnoldiExtend:
    def test_degenerate_continuation_equals_run(self, rng):
        op = random_operator(rng, 7, 2)
        v = random_block(rng, 7, 2)
        w = Weight.identity()
        full = arnoldi_run(op, v, w, 5)
        beta = weighted_norm(v, w)
        seed = ArnoldiDecomposition([v / beta], np.zeros((1, 0)), [w.tag])
        seed.basis[0].flags.writeable = False
        ext = arnoldi_extend(seed, op, w, 1, 5)
        assert np.array_equal(full.h, ext.h)
        for a, b in zip(full.basis, ext.basis):
            assert np.array_equal(a, b)

    def _one_restart(self, rng, weight_new=None):
        """Run one cycle, build the deflated prefix, extend under weight_new."""
        op = random_operator(rng, 12, 2)
        v = random_block(rng, 12, 2)
        w_old = Weight.diagonal(rng.uniform(0.5, 2.0, 12))
        m, k = 6, 2
        dec = arnoldi_run(op, v, w_old, m)
        c = np.zeros(m + 1)
        c[0] = weighted_norm(v, w_old)
        sol = hessenberg_lsq(dec.h, c)
        hs = select_and_realify(harmonic_pairs(dec.h), k)
        blocks, new_h, q = restart_subspace(dec, hs, sol.residual)
        w_new = weight_new if weight_new is not None else w_old
        seed = ArnoldiDecomposition(blocks, new_h, ["old"] * len(blocks))
        for b in seed.basis:
            b.flags.writeable = False
        ext = arnoldi_extend(seed, op, w_new, len(blocks), m)
        return op, ext, w_old, w_new, len(blocks)

    def test_same_weight_restart_full_gram(self, rng):
        op, ext, w_old, w_new, _ = self._one_restart(rng)
        g = diamond_product(ext.basis, ext.basis, w_new)
        assert np.abs(g - np.eye(len(ext.basis))).max() <= 1e-10

    def test_mixed_weight_block_conditions(self, rng):
        w_new = Weight.diagonal(rng.uniform(0.1, 5.0, 12))
        op, ext, w_old, w_new, p = self._one_restart(rng, weight_new=w_new)
        prefix = ext.basis[:p]
        fresh = ext.basis[p:]
        # prefix orthonormal in the weight of its construction
        g_old = diamond_product(prefix, prefix, w_old)
        assert np.abs(g_old - np.eye(p)).max() <= 1e-10
        # fresh blocks orthonormal in the new weight
        g_new = diamond_product(fresh, fresh, w_new)
        assert np.abs(g_new - np.eye(len(fresh))).max() <= 1e-10
        # cross-orthogonality in the new weight
        g_cross = diamond_product(fresh, prefix, w_new)
        assert np.abs(g_cross).max() <= 1e-10

    def test_mixed_weight_relation_still_holds(self, rng):
        w_new = Weight.diagonal(rng.uniform(0.1, 5.0, 12))
        op, ext, _, _, _ = self._one_restart(rng, weight_new=w_new)
        assert relation_residual(op, ext) <= 1e-10 * op.frobenius_scale()

    def test_prefix_shape_validation(self, rng):
        op = random_operator(rng, 5, 2)
        dec = arnoldi_run(op, random_block(rng, 5, 2), Weight.identity(), 3)
        with pytest.raises(ValueError):
            arnoldi_extend(dec, op, Weight.identity(), 2, 5)
        with pytest.raises(ValueError):
            arnoldi_extend(dec, op, Weight.identity(), 4, 3)


class TestHappyBreakdown:
    def test_projected_solve_is_exact(self, rng):
        # operator with a 2-dimensional invariant Krylov block subspace
        n, s = 6, 2
        op = SylvesterOperator(np.diag([3.0] * 3 + [5.0] * 3), np.zeros((s, s)))
        v = np.zeros((n, s))
        v[0, 0] = 1.0
        v[3, 1] = 1.0
        w = Weight.identity()
        c_rhs = apply_sylvester(op, v)  # exact solution is v
        beta = weighted_norm(c_rhs, w)
        dec = arnoldi_run(op, c_rhs, w, 5)
        assert dec.breakdown is not None
        cols = dec.h.shape[1]
        cvec = np.zeros(dec.h.shape[0])
        cvec[0] = beta
        sol = hessenberg_lsq(dec.h, cvec)
        x = sum(sol.y[i] * dec.basis[i] for i in range(cols))
        resid = frob(c_rhs - apply_sylvester(op, x))
        assert resid <= 1e-8 * frob(c_rhs)
