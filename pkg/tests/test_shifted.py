import threading

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from rkmor.benchmarks import diffusion_system, random_stable_system
from rkmor.exceptions import SingularShift, SingularShiftedOperator
from rkmor.shifted import Factorization, ShiftedSolver, solve_shifted


def test_scalar():
    np.testing.assert_allclose(solve_shifted(np.array([[-2.0]]), 0.5, [1.0]), [0.5])


def test_zero_shift_is_identity():
    rhs = np.arange(3.0)
    np.testing.assert_array_equal(solve_shifted(np.eye(3), 0.0, rhs), rhs)


def test_diagonal():
    np.testing.assert_allclose(solve_shifted(np.diag([-1.0, -2.0]), 1.0, [1.0, 1.0]), [0.5, 1 / 3])


def test_singular():
    with pytest.raises(SingularShiftedOperator) as info:
        solve_shifted(np.array([[2.0]]), 0.5, [1.0], solver=ShiftedSolver())
    assert isinstance(info.value, SingularShift)


def test_sparse_and_dense_agree():
    s = diffusion_system(40)
    rhs = np.random.default_rng(0).standard_normal((40, 3))
    x1 = ShiftedSolver().solve(s.a, 1e-3 + 2e-3j, rhs)
    x2 = ShiftedSolver().solve(s.dense_a(), 1e-3 + 2e-3j, rhs)
    np.testing.assert_allclose(x1, x2, rtol=1e-11)
    assert sp.issparse(s.a)


class TestCache:
    def test_fresh(self):
        assert tuple(ShiftedSolver().cache_stats()) == (0, 0, 0)

    def test_same_shift(self):
        solver, a = ShiftedSolver(), -np.eye(3)
        solver.solve(a, 0.5, np.ones(3))
        solver.solve(a, 0.5, np.ones(3))
        st_ = solver.cache_stats()
        assert (st_.hits, st_.misses) == (1, 1)

    def test_distinct_shifts(self):
        solver, a = ShiftedSolver(), -np.eye(3)
        solver.solve(a, 0.5, np.ones(3))
        solver.solve(a, 0.7, np.ones(3))
        assert tuple(solver.cache_stats()) == (2, 0, 2)

    def test_capacity_evicts(self):
        solver, a = ShiftedSolver(capacity=2), -np.eye(2)
        for w in (0.1, 0.2, 0.3):
            solver.solve(a, w, np.ones(2))
        assert solver.cache_stats().entries == 2
        solver.clear()
        assert tuple(solver.cache_stats()) == (0, 0, 0)

    def test_matrix_change_misses(self):
        solver = ShiftedSolver()
        solver.solve(-np.eye(2), 0.5, np.ones(2))
        solver.solve(-2 * np.eye(2), 0.5, np.ones(2))
        assert solver.cache_stats().misses == 2

    def test_cached_equals_fresh(self, rand_sys):
        a = rand_sys.dense_a()
        rhs = np.random.default_rng(1).standard_normal((a.shape[0], 4))
        solver = ShiftedSolver()
        solver.solve(a, 0.3 + 0.1j, rhs)
        cached = solver.solve(a, 0.3 + 0.1j, rhs)
        fresh = ShiftedSolver().solve(a, 0.3 + 0.1j, rhs)
        for j in range(4):
            assert np.linalg.norm(cached[:, j] - fresh[:, j]) <= 1e-12 * np.linalg.norm(fresh[:, j])

    def test_threads_share_cache(self, rand_sys):
        solver = ShiftedSolver()
        a = rand_sys.dense_a()
        out = []

        def work():
            out.append(solver.solve(a, 0.25, np.ones(a.shape[0])))

        threads = [threading.Thread(target=work) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(np.allclose(x, out[0]) for x in out)
        st_ = solver.cache_stats()
        assert st_.hits + st_.misses == 8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(0.01, 3), st.floats(0.01, 3))
def test_conjugate_shift_reuse(seed, re, im):
    rng = np.random.default_rng(seed)
    a = random_stable_system(8, rng=rng).dense_a()
    rhs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    solver = ShiftedSolver()
    s = complex(re, im)
    x = solver.solve(a, s, rhs)
    y = solver.solve(a, s.conjugate(), np.conj(rhs))
    assert solver.cache_stats().hits == 1
    assert np.linalg.norm(y - np.conj(x)) <= 1e-12 * np.linalg.norm(x)
    ref = Factorization(np.eye(8) - s.conjugate() * a).solve(np.conj(rhs))
    assert np.linalg.norm(y - ref) <= 1e-12 * np.linalg.norm(ref)
