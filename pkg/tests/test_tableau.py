import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkmor.exceptions import InvalidAdiParameter, InvalidStepSize, InvalidTableau
from rkmor.system import LtiSystem
from rkmor.tableau import (BUILTIN_NAMES, ButcherTableau, Side, assemble_composite, builtin,
                           check_adi_condition, check_eig_condition, dirk_from_adi_params,
                           predict_expansion_points, raw_point_count)
from rkmor.benchmarks import random_stable_system

S3 = math.sqrt(3.0)
positive = st.floats(0.05, 5.0)


class TestBuiltin:
    def test_gauss_legendre2(self):
        t = builtin("gauss_legendre2")
        np.testing.assert_allclose(t.lam, [[0.25, 0.25 - S3 / 6], [0.25 + S3 / 6, 0.25]])
        np.testing.assert_allclose(t.beta, [0.5, 0.5])

    def test_radau_ia2(self):
        t = builtin("RadauIA2")
        np.testing.assert_allclose(t.lam, [[0.25, -0.25], [0.25, 5 / 12]])
        np.testing.assert_allclose(t.beta, [0.25, 0.75])

    def test_explicit_euler(self):
        t = builtin("ExplicitEuler")
        assert t.lam.tolist() == [[0.0]] and t.beta.tolist() == [1.0]
        assert t.is_explicit

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_weights_default_to_beta(self, name):
        t = builtin(name)
        np.testing.assert_array_equal(t.beta_tilde, t.beta)

    def test_unknown(self):
        with pytest.raises(InvalidTableau):
            builtin("rk4")


class TestValidation:
    def test_shape(self):
        with pytest.raises(InvalidTableau):
            ButcherTableau([[1, 0]], [1, 1])
        with pytest.raises(InvalidTableau):
            ButcherTableau([[1]], [1, 2])

    def test_negative_weight(self):
        with pytest.raises(InvalidTableau):
            ButcherTableau([[1]], [1], [-1])

    def test_signed_beta_needs_weights(self):
        with pytest.raises(InvalidTableau):
            ButcherTableau([[1]], [-1])
        assert ButcherTableau([[1]], [-1], [0.5]).beta_tilde.tolist() == [0.5]


class TestDirk:
    def test_single(self):
        t = dirk_from_adi_params([1])
        assert t.lam.tolist() == [[1.0]]
        assert t.beta.tolist() == [2.0] and t.beta_tilde.tolist() == [2.0]

    def test_two(self):
        t = dirk_from_adi_params([1, 2])
        np.testing.assert_array_equal(t.lam, [[1, 0], [2, 2]])
        np.testing.assert_array_equal(t.beta, [2, 4])

    def test_left_half_plane(self):
        with pytest.raises(InvalidAdiParameter):
            dirk_from_adi_params([-1])

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(positive, st.floats(-3, 3)), min_size=1, max_size=4))
    def test_adi_condition_holds(self, parts):
        mu = [complex(re, im) for re, im in parts]
        assert check_adi_condition(dirk_from_adi_params(mu)) <= 1e-12 * max(1, max(map(abs, mu))) ** 2


class TestConditions:
    def test_adi_condition_values(self):
        assert check_adi_condition(builtin("implicit_midpoint")) == pytest.approx(0, abs=1e-15)
        assert check_adi_condition(builtin("gauss_legendre2")) == pytest.approx(0, abs=1e-15)
        assert check_adi_condition(builtin("explicit_euler")) == pytest.approx(1.0)
        assert check_adi_condition(builtin("be").with_beta_tilde([0.5])) == math.inf

    def test_eig_condition(self, rand_sys):
        assert check_eig_condition(builtin("backward_euler"), rand_sys, [0.1, 1, 10])
        assert check_eig_condition(builtin("explicit_euler"), rand_sys, [0.1, 1, 10])
        bad = ButcherTableau([[-1.0]], [1.0])
        assert not check_eig_condition(bad, LtiSystem([[-2.0]], [1.0], [1.0]), [0.5])

    def test_step_sizes(self):
        with pytest.raises(InvalidStepSize):
            assemble_composite(builtin("be"), [1.0, 0.0])
        with pytest.raises(InvalidStepSize):
            assemble_composite(builtin("be"), [1.0, -2.0])


class TestComposite:
    def test_single_block(self):
        c = assemble_composite(builtin("be"), [0.5])
        np.testing.assert_array_equal(c.lambda_hat, [[0.5]])

    def test_two_steps(self):
        c = assemble_composite(builtin("be"), [1, 2])
        np.testing.assert_array_equal(c.lambda_hat, [[1, 1], [0, 2]])
        np.testing.assert_array_equal(c.beta_hat, [1, 2])

    def test_block_triangular(self):
        t = builtin("gauss_legendre2")
        c = assemble_composite(t, [0.5, 1.0, 2.0])
        assert c.lambda_hat.shape == (6, 6)
        for j in range(3):
            for k in range(j):
                assert not c.lambda_hat[2 * j:2 * j + 2, 2 * k:2 * k + 2].any()
            np.testing.assert_allclose(c.lambda_hat[2 * j:2 * j + 2, 2 * j:2 * j + 2],
                                       c.steps[j] * t.lam.T)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(BUILTIN_NAMES), st.lists(positive, min_size=1, max_size=4))
    def test_spectrum_is_union(self, name, steps):
        t = builtin(name)
        c = assemble_composite(t, steps)
        ev = np.sort_complex(np.linalg.eigvals(c.lambda_hat))
        expect = np.sort_complex(np.concatenate([w * t.eigenvalues for w in steps]))
        # repeated eigenvalues of nontrivial Jordan blocks are only accurate to eps^(1/k)
        tol = 1e-10 if t.s * len(steps) == len(set(np.round(expect, 8))) else 1e-4
        np.testing.assert_allclose(ev, expect, atol=tol * max(1, np.abs(expect).max()))

    def test_jordan_structure(self):
        assert assemble_composite(builtin("be"), [1, 1]).jordan_block_sizes(1.0) == [2]
        assert assemble_composite(builtin("ee"), [1, 1, 1]).jordan_block_sizes(0.0) == [3]
        gl = assemble_composite(builtin("gl2"), [1, 1])
        for mu, mult in gl.eigenvalue_groups():
            assert mult == 2 and gl.jordan_block_sizes(mu) == [2]
        assert gl.is_observable()


class TestExpansionPoints:
    def test_gauss_legendre(self):
        pts = predict_expansion_points(builtin("gl2"), [1.0], builtin("gl2"), [1.0]).side("input")
        locs = sorted((p.location for p in pts), key=lambda z: z.imag)
        assert abs(locs[0] - (3 - S3 * 1j)) <= 1e-12
        assert abs(locs[1] - (3 + S3 * 1j)) <= 1e-12

    def test_radau_output_side(self):
        pts = predict_expansion_points(builtin("be"), [1.0], builtin("radau_ia2"), [0.5])
        out = sorted((p.location for p in pts.side(Side.OUTPUT)), key=lambda z: z.imag)
        np.testing.assert_allclose(out, [4 - 2 * math.sqrt(2) * 1j, 4 + 2 * math.sqrt(2) * 1j],
                                   atol=1e-12)

    def test_explicit_is_infinity(self):
        pts = predict_expansion_points(builtin("ee"), [1, 2, 3], builtin("ee"), [1.0])
        inp = pts.side("input")
        assert len(inp) == 1 and inp[0].is_infinite and inp[0].multiplicity == 3
        assert not pts.finite()

    def test_merging(self):
        t = builtin("be")
        pts = predict_expansion_points(t, [1.0, 1.0, 2.0], t, [1.0])
        assert [p.multiplicity for p in pts.side("input")] == [2, 1]
        assert raw_point_count(t, [1.0, 1.0, 2.0], t, [1.0]) == 4
        assert pts.combined()[0] == (1.0, 2, 1)

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(BUILTIN_NAMES), st.lists(positive, min_size=1, max_size=4),
           st.sampled_from(BUILTIN_NAMES), st.lists(positive, min_size=1, max_size=4))
    def test_never_zero_and_conjugate_closed(self, nc, sc, no, so):
        pts = predict_expansion_points(builtin(nc), sc, builtin(no), so)
        assert all(p.location != 0 for p in pts.points)
        for side in Side:
            fin = [p.location for p in pts.side(side) if not p.is_infinite]
            for z in fin:
                assert min(abs(np.conj(z) - y) for y in fin) <= 1e-9 * max(1, abs(z))
        total = sum(p.multiplicity for p in pts.points)
        assert total == raw_point_count(builtin(nc), sc, builtin(no), so)
