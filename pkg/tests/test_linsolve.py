import numpy as np
import pytest

from axiwillmore import linsolve
from axiwillmore.errors import DimensionMismatch, NonFiniteSolution, SingularSystem


def coo_from_dense(a):
    r, c = np.nonzero(a)
    return linsolve.SparseMatrix.from_coo(a.shape[0], r, c, a[r, c]).finalize()


class TestFactor:
    def test_identity(self):
        m = coo_from_dense(np.eye(5))
        f = linsolve.factor(m)
        assert f.rcond == pytest.approx(1.0)
        x, rep = linsolve.solve(f, np.arange(5.0))
        np.testing.assert_array_equal(x, np.arange(5.0))
        assert rep.residual == 0.0

    def test_duplicate_entries_summed(self):
        m = linsolve.SparseMatrix.from_coo(2, [0, 0, 1], [0, 0, 1], [1.0, 2.0, 1.0])
        m.finalize()
        assert m.csc[0, 0] == 3.0

    def test_rank_deficient_rejected(self):
        a = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(SingularSystem):
            linsolve.factor(coo_from_dense(a))

    def test_tiny_pivot_rejected(self):
        a = np.diag([1.0, 1e-20, 1.0])
        with pytest.raises(SingularSystem) as err:
            linsolve.factor(coo_from_dense(a))
        assert err.value.rcond is not None

    def test_non_finite_entries_rejected(self):
        m = linsolve.SparseMatrix.from_coo(2, [0, 1], [0, 1], [1.0, np.nan])
        with pytest.raises(ValueError):
            m.finalize()


class TestSolve:
    def test_against_dense_reference(self, rng):
        n = 10
        a = rng.normal(size=(n, n))
        a = a @ a.T + n * np.eye(n)  # SPD
        b = rng.normal(size=n)
        f = linsolve.factor(coo_from_dense(a))
        x, rep = linsolve.solve(f, b)
        np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-12)
        assert rep.residual <= 1e-12

    def test_dimension_mismatch(self):
        f = linsolve.factor(coo_from_dense(np.eye(3)))
        with pytest.raises(DimensionMismatch):
            linsolve.solve(f, np.ones(4))

    def test_bitwise_deterministic(self, rng):
        n = 40
        a = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        m1 = coo_from_dense(a)
        m2 = coo_from_dense(a)
        x1, _ = linsolve.solve(linsolve.factor(m1), b)
        x2, _ = linsolve.solve(linsolve.factor(m2), b)
        assert np.array_equal(x1, x2)

    def test_non_finite_rhs_detected(self):
        f = linsolve.factor(coo_from_dense(np.eye(2)))
        with pytest.raises(NonFiniteSolution):
            linsolve.solve(f, np.array([1.0, np.inf]))

    def test_concurrent_reuse_of_factorization(self, rng):
        a = np.diag(rng.uniform(1.0, 2.0, size=6))
        f = linsolve.factor(coo_from_dense(a))
        for _ in range(3):
            b = rng.normal(size=6)
            x, _ = linsolve.solve(f, b)
            np.testing.assert_allclose(a @ x, b, atol=1e-14)
