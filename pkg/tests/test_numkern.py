import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from agc.errors import DimensionError, IntegrationError, SingularMatrixError
from agc.numkern import (frobenius_norm, mat_mul, rk4_propagator, rk4_step, solve_linear,
                         transpose)
from agc.plant import paper_model

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def triple_loop(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return out


class TestMatMul:
    def test_identity(self, rng):
        m = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(mat_mul(np.eye(3), m), m)

    def test_hand_example(self):
        np.testing.assert_array_equal(mat_mul([[1, 2], [3, 4]], [[0], [1]]), [[2], [4]])

    def test_paper_sized_against_triple_loop(self, rng):
        a = paper_model().a
        p = rng.normal(size=(11, 11))
        np.testing.assert_allclose(mat_mul(a, p), triple_loop(a.tolist(), p.tolist()),
                                   rtol=1e-13, atol=1e-13)

    def test_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"2x3.*2x2"):
            mat_mul(np.ones((2, 3)), np.ones((2, 2)))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (3, 4), elements=finite), arrays(float, (4, 2), elements=finite),
           arrays(float, (2, 5), elements=finite))
    def test_associative(self, a, b, c):
        left = mat_mul(mat_mul(a, b), c)
        right = mat_mul(a, mat_mul(b, c))
        scale = np.abs(a).max() * np.abs(b).max() * np.abs(c).max() * 8 + 1e-300
        assert np.max(np.abs(left - right)) <= 1e-9 * max(scale, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (3, 4), elements=finite), arrays(float, (4, 2), elements=finite))
    def test_transpose_of_product(self, a, b):
        np.testing.assert_allclose(transpose(mat_mul(a, b)), mat_mul(transpose(b), transpose(a)),
                                   atol=1e-10)


class TestTranspose:
    def test_identity(self):
        np.testing.assert_array_equal(transpose(np.eye(4)), np.eye(4))

    def test_involution(self, rng):
        m = rng.normal(size=(3, 5))
        np.testing.assert_array_equal(transpose(transpose(m)), m)

    def test_row_to_column(self):
        np.testing.assert_array_equal(transpose([[1, 2, 3]]), [[1], [2], [3]])


class TestSolveLinear:
    def test_identity(self, rng):
        m = rng.normal(size=(4, 3))
        np.testing.assert_allclose(solve_linear(np.eye(4), m), m)

    def test_diagonal_inverse(self):
        np.testing.assert_allclose(solve_linear([[2, 0], [0, 4]], np.eye(2)), [[0.5, 0], [0, 0.25]])

    def test_random_residual(self, rng):
        a = rng.normal(size=(5, 5)) + 5 * np.eye(5)
        b = rng.normal(size=5)
        x = solve_linear(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_hundred_well_conditioned_systems(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = rng.integers(1, 9)
            q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            a = q @ np.diag(rng.uniform(0.5, 4.0, n)) @ q.T + rng.normal(scale=0.1, size=(n, n))
            b = rng.normal(size=(n, 2))
            x = solve_linear(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_singular(self):
        with pytest.raises(SingularMatrixError, match="cond"):
            solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])

    def test_non_square(self):
        with pytest.raises(DimensionError):
            solve_linear(np.ones((2, 3)), np.ones(2))


class TestFrobenius:
    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 3))) == 0.0

    def test_345(self):
        assert frobenius_norm([[3, 4]]) == 5.0

    def test_identity(self):
        assert frobenius_norm(np.eye(11)) == pytest.approx(math.sqrt(11), abs=1e-15)


class TestRk4:
    def test_zero_field(self):
        x0 = np.array([1.0, -2.0])
        np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros_like(x), x0, 0.0, 0.1), x0)

    def test_exponential_single_step(self):
        x = rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, 0.01)
        assert abs(x[0] - math.exp(-0.01)) <= 1e-10
        assert abs(x[0] - 0.99004983) < 1e-8

    def test_constant_derivative_exact(self):
        assert rk4_step(lambda t, x: np.ones_like(x), np.array([0.0]), 0.0, 0.5)[0] == 0.5

    def test_global_error(self):
        x, t, dt = np.array([1.0]), 0.0, 0.01
        for _ in range(100):
            x = rk4_step(lambda t, x: -x, x, t, dt)
            t += dt
        assert abs(x[0] - math.exp(-1.0)) <= 1e-8

    def test_nonfinite_derivative_reports_time(self):
        def field(t, x):
            return x * np.inf if t > 1.05 else x

        with pytest.raises(IntegrationError) as err:
            rk4_step(field, np.array([1.0]), 0.9, 0.2)
        assert err.value.t == pytest.approx(1.1)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            rk4_step(lambda t, x: x, np.array([1.0]), 0.0, 0.0)

    def test_propagator_matches_stagewise_step(self, rng):
        a = rng.normal(size=(6, 6))
        c = rng.normal(size=6)
        x = rng.normal(size=6)
        m, n = rk4_propagator(a, 0.01)
        expect = rk4_step(lambda t, y: a @ y + c, x, 0.0, 0.01)
        np.testing.assert_allclose(m @ x + n @ c, expect, rtol=1e-13, atol=1e-14)

    def test_propagator_batches(self, rng):
        a = rng.normal(size=(3, 4, 4))
        m, _ = rk4_propagator(a, 0.02)
        for i in range(3):
            np.testing.assert_allclose(m[i], rk4_propagator(a[i], 0.02)[0], rtol=1e-14)
