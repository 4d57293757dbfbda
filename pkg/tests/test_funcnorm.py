import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morreylab.funcnorm import (EmptyGrid, GrandNormEvaluator, GrandParams,
                                GridFunction, TabulatedFunction, bmo_norm,
                                default_eps_grid, grand_lebesgue_norm,
                                grand_morrey_norm, lp_norm, morrey_norm,
                                morrey_norm_detail, phi_functional, s_max)
from morreylab.homspace import build_uniform_grid

from conftest import random_cloud


def naive_grand_morrey(space, f, params):
    """Independent oracle: explicit triple loop over (eps, center, radius),
    with ball membership recomputed from the raw distance rows."""
    f = np.abs(np.asarray(f, dtype=float))
    best = 0.0
    for eps in params.eps_grid:
        if eps >= params.smax:
            continue
        pe = params.p - eps
        le = max(params.lam - params.A(eps), 0.0)
        weight = params.phi(eps) ** (1.0 / pe)
        for c in range(space.n):
            row = space.dist[c]
            for rho in np.unique(row):
                members = row <= rho
                mu = space.weight[members].sum()
                s = (f[members] ** pe * space.weight[members]).sum()
                best = max(best, weight * (s / mu**le) ** (1.0 / pe))
    return best


class TestTabulatedFunction:
    def test_power_exact_at_knots(self):
        t = TabulatedFunction.power(2.0, [0.25, 0.5, 1.0])
        assert t(0.5) == 0.25
        assert t(1.0) == 1.0

    def test_head_interpolation(self):
        t = TabulatedFunction.linear(3.0, [1.0])
        assert t(0.5) == pytest.approx(1.5)
        assert t.right_derivative0 == pytest.approx(3.0)

    def test_right_extension_constant(self):
        t = TabulatedFunction.linear(1.0, [1.0, 2.0])
        assert t(5.0) == 2.0

    def test_rejects_bad_knots(self):
        with pytest.raises(ValueError):
            TabulatedFunction([1.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            TabulatedFunction([-1.0, 1.0], [0.0, 1.0])


class TestSMax:
    def test_zero_table_gives_p_minus_one(self):
        assert s_max(3.0, 0.5, TabulatedFunction.zero()) == pytest.approx(2.0)

    def test_identity_table(self):
        A = TabulatedFunction.linear(1.0, np.linspace(0.1, 1.0, 10))
        assert s_max(2.0, 0.5, A) == pytest.approx(0.5)

    def test_double_slope(self):
        A = TabulatedFunction.linear(2.0, np.linspace(0.1, 3.0, 30))
        assert s_max(4.0, 0.5, A) == pytest.approx(0.25)

    def test_plateau_takes_rightmost(self):
        A = TabulatedFunction([0.2, 0.5, 0.8], [0.5, 0.5, 1.0])
        assert s_max(3.0, 0.5, A) == pytest.approx(0.5)


class TestLpNorm:
    def test_zero(self, grid3):
        assert lp_norm(grid3, np.zeros(3), 2.0) == 0.0

    def test_constant_normalized(self, grid3):
        for p in (1.0, 1.5, 2.0, 7.0):
            assert lp_norm(grid3, np.ones(3), p) == pytest.approx(1.0)

    def test_two_atom_hand_value(self, two_atom):
        assert lp_norm(two_atom, [0.0, 2.0], 2.0) == pytest.approx(math.sqrt(2.0))

    def test_rejects_small_p(self, grid3):
        with pytest.raises(ValueError):
            lp_norm(grid3, np.ones(3), 0.5)


class TestMorreyNorm:
    def test_lambda_zero_constant(self, grid3):
        assert morrey_norm(grid3, np.ones(3), 2.0, 0.0) == pytest.approx(1.0)

    def test_three_point_hand_value(self, grid3):
        res = morrey_norm_detail(grid3, [1.0, 0.0, 0.0], 1.0, 0.5)
        assert res.value == pytest.approx(3.0 ** -0.5, abs=1e-12)
        assert res.center == 0 and res.rank == 0

    def test_zero_function(self, grid3):
        assert morrey_norm(grid3, np.zeros(3), 2.0, 0.3) == 0.0

    def test_rejects_bad_lambda(self, grid3):
        with pytest.raises(ValueError):
            morrey_norm(grid3, np.ones(3), 2.0, 1.0)

    def test_lambda_zero_equals_max_ball_lp(self, cloud20):
        # oracle: ball-restricted Lp norms computed from raw rows
        rng = np.random.default_rng(0)
        f = rng.normal(size=cloud20.n)
        best = 0.0
        for c in range(cloud20.n):
            row = cloud20.dist[c]
            for rho in np.unique(row):
                members = row <= rho
                best = max(best, ((np.abs(f[members]) ** 2
                                   * cloud20.weight[members]).sum()) ** 0.5)
        assert morrey_norm(cloud20, f, 2.0, 0.0) == pytest.approx(best, rel=1e-12)

    def test_monotone_in_lambda_when_measures_small(self, grid16):
        rng = np.random.default_rng(1)
        f = rng.normal(size=grid16.n)
        vals = [morrey_norm(grid16, f, 2.0, lam) for lam in (0.0, 0.2, 0.5, 0.8)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


class TestBmoNorm:
    def test_constant_vanishes(self, grid16):
        for variant in ("mean", "inf"):
            assert bmo_norm(grid16, np.full(16, 3.7), variant) == pytest.approx(0.0, abs=1e-14)
        assert bmo_norm(grid16, np.full(16, 3.7), "jn", p=2.0) == pytest.approx(0.0, abs=1e-14)

    def test_two_atom_mean(self, two_atom):
        assert bmo_norm(two_atom, [0.0, 1.0], "mean") == pytest.approx(0.5, abs=1e-12)

    def test_two_atom_inf(self, two_atom):
        assert bmo_norm(two_atom, [0.0, 1.0], "inf") == pytest.approx(0.5, abs=1e-12)

    def test_two_atom_jn2(self, two_atom):
        assert bmo_norm(two_atom, [0.0, 1.0], "jn", p=2.0) == pytest.approx(0.5, abs=1e-12)

    def test_jn_requires_p(self, grid3):
        with pytest.raises(ValueError):
            bmo_norm(grid3, np.ones(3), "jn")

    def test_inf_oracle_scan(self, grid3):
        # oracle: scan candidate constants c densely on each ball
        rng = np.random.default_rng(2)
        b = rng.normal(size=3)
        best = 0.0
        for c in range(3):
            row = grid3.dist[c]
            for rho in np.unique(row):
                members = row <= rho
                w = grid3.weight[members]
                v = b[members]
                cands = np.linspace(v.min(), v.max(), 4001)
                dev = (np.abs(v[None, :] - cands[:, None]) * w).sum(axis=1) / w.sum()
                best = max(best, dev.min())
        assert bmo_norm(grid3, b, "inf") == pytest.approx(best, abs=1e-5)

    def test_variant_equivalence(self, grid16, cloud20):
        rng = np.random.default_rng(3)
        for sp in (grid16, cloud20):
            for _ in range(5):
                b = rng.normal(size=sp.n)
                inf_v = bmo_norm(sp, b, "inf")
                mean_v = bmo_norm(sp, b, "mean")
                assert inf_v <= mean_v * (1 + 1e-12)
                assert mean_v <= 2.0 * inf_v * (1 + 1e-12)


class TestGrandLebesgue:
    def test_zero(self, grid3):
        grid = default_eps_grid(0.9)
        assert grand_lebesgue_norm(grid3, np.zeros(3), 2.0, 1.0, grid) == 0.0

    def test_constant_approaches_one(self, grid3):
        # sup over (0,1) of eps^(1/(2-eps)) is 1, attained at the right end
        grid = np.concatenate([default_eps_grid(0.9), [1.0 - 1e-6]])
        val = grand_lebesgue_norm(grid3, np.ones(3), 2.0, 1.0, grid)
        assert abs(val - 1.0) <= 1e-5

    def test_grid_refinement_monotone(self, grid16):
        rng = np.random.default_rng(4)
        f = rng.normal(size=16)
        coarse = default_eps_grid(0.999, ratio=0.7)
        fine = np.unique(np.concatenate([coarse, default_eps_grid(0.999, ratio=0.9)]))
        v1 = grand_lebesgue_norm(grid16, f, 2.0, 1.0, coarse)
        v2 = grand_lebesgue_norm(grid16, f, 2.0, 1.0, fine)
        assert v2 >= v1 - 1e-15

    def test_rejects_grid_outside_range(self, grid3):
        with pytest.raises(ValueError):
            grand_lebesgue_norm(grid3, np.ones(3), 2.0, 1.0, [0.5, 1.5])


class TestPhiFunctional:
    def test_zero_function(self, grid16):
        gp = GrandParams.power(2.0, 0.25, 1.0)
        assert phi_functional(grid16, np.zeros(16), gp, gp.smax) == 0.0

    def test_monotone_in_s(self, grid16):
        gp = GrandParams.power(2.0, 0.25, 1.0)
        rng = np.random.default_rng(5)
        f = rng.normal(size=16)
        s_vals = [0.3, 0.6, 0.9, gp.smax]
        vals = [phi_functional(grid16, f, gp, s) for s in s_vals]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_empty_grid(self, grid16):
        gp = GrandParams.power(2.0, 0.25, 1.0)
        with pytest.raises(EmptyGrid):
            phi_functional(grid16, np.ones(16), gp, float(gp.eps_grid[0]) * 0.5)

    def test_specializes_to_grand_morrey_loop(self, grid16):
        # A == 0 and phi = eps^theta: matches a direct per-eps Morrey loop
        gp = GrandParams.power(2.0, 0.25, 1.5, max_points=10)
        rng = np.random.default_rng(6)
        f = rng.normal(size=16)
        oracle = max(e ** (1.5 / (2 - e)) * morrey_norm(grid16, f, 2 - e, 0.25)
                     for e in gp.eps_grid if e < gp.smax)
        assert phi_functional(grid16, f, gp, gp.smax) == pytest.approx(oracle, rel=1e-13)


class TestGrandMorrey:
    def test_smax_from_identity_table(self):
        A = TabulatedFunction.linear(1.0, np.linspace(0.05, 1.0, 20))
        gp = GrandParams.power(2.0, 0.5, 1.0, A=A)
        assert gp.smax == pytest.approx(0.5)

    def test_reduces_to_grand_lebesgue(self, grid16):
        grid = default_eps_grid(0.999, ratio=0.75)
        gp = GrandParams.power(2.0, 0.0, 1.0, eps_grid=grid)
        rng = np.random.default_rng(7)
        f = rng.normal(size=16)
        lhs = grand_morrey_norm(grid16, f, gp)
        rhs = grand_lebesgue_norm(grid16, f, 2.0, 1.0, grid)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_triple_loop_oracle_small(self):
        sp = random_cloud(5, 17)
        gp = GrandParams.power(2.0, 0.3, 1.0, max_points=8)
        rng = np.random.default_rng(8)
        f = rng.normal(size=5)
        assert grand_morrey_norm(sp, f, gp) == pytest.approx(
            naive_grand_morrey(sp, f, gp), rel=1e-12)

    def test_evaluator_matches_reference(self, grid16, circle32):
        A = TabulatedFunction.linear(0.5, np.linspace(0.05, 1.0, 20))
        for sp in (grid16, circle32):
            gp = GrandParams.power(2.0, 0.25, 1.0, A=A, max_points=12)
            ev = GrandNormEvaluator(sp, gp)
            rng = np.random.default_rng(9)
            for _ in range(5):
                f = rng.normal(size=sp.n)
                assert ev(f) == pytest.approx(grand_morrey_norm(sp, f, gp), rel=1e-12)


class TestNormAxioms:
    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=-50, max_value=50).filter(lambda c: abs(c) > 1e-6),
           st.integers(min_value=0, max_value=10**6))
    def test_absolute_homogeneity(self, c, seed):
        sp = build_uniform_grid(12, 1, "interval")
        rng = np.random.default_rng(seed)
        f = rng.normal(size=12)
        gp = GrandParams.power(2.0, 0.25, 1.0, max_points=8)
        for norm in (lambda g: lp_norm(sp, g, 2.0),
                     lambda g: morrey_norm(sp, g, 2.0, 0.25),
                     lambda g: bmo_norm(sp, g, "mean"),
                     lambda g: grand_morrey_norm(sp, g, gp)):
            assert norm(c * f) == pytest.approx(abs(c) * norm(f), rel=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_triangle_inequality(self, seed):
        sp = build_uniform_grid(12, 1, "interval")
        rng = np.random.default_rng(seed)
        f, g = rng.normal(size=12), rng.normal(size=12)
        gp = GrandParams.power(2.0, 0.25, 1.0, max_points=8)
        for norm in (lambda u: lp_norm(sp, u, 2.0),
                     lambda u: morrey_norm(sp, u, 2.0, 0.25),
                     lambda u: grand_morrey_norm(sp, u, gp)):
            assert norm(f + g) <= norm(f) + norm(g) + 1e-12


class TestGridFunction:
    def test_validates_length(self, grid3):
        with pytest.raises(ValueError):
            GridFunction(grid3, [1.0, 2.0])

    def test_rejects_nonfinite(self, grid3):
        with pytest.raises(ValueError):
            GridFunction(grid3, [1.0, np.inf, 0.0])

    def test_accepted_by_norms(self, grid3):
        gf = GridFunction(grid3, [1.0, 0.0, 0.0])
        assert morrey_norm(grid3, gf, 1.0, 0.5) == pytest.approx(3.0 ** -0.5)
