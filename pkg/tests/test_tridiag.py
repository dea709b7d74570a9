import numpy as np
import pytest

from soilcolumn.tridiag import SingularMatrixError, Tridiagonal, solve


def random_system(rng, n):
    lower = rng.normal(size=n - 1)
    upper = rng.normal(size=n - 1)
    # diagonally dominant so the pivotless elimination is safe
    diag = 2.0 + np.abs(rng.normal(size=n))
    diag[:-1] += np.abs(upper)
    diag[1:] += np.abs(lower)
    return Tridiagonal(lower=lower, diag=diag, upper=upper)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 500])
def test_solve_matches_dense(n):
    rng = np.random.default_rng(n)
    tri = random_system(rng, n)
    b = rng.normal(size=n)
    x = solve(tri, b)
    np.testing.assert_allclose(x, np.linalg.solve(tri.to_dense(), b),
                               rtol=1e-12, atol=1e-12)


def test_matvec_roundtrip():
    rng = np.random.default_rng(3)
    tri = random_system(rng, 40)
    x = rng.normal(size=40)
    np.testing.assert_allclose(tri.matvec(x), tri.to_dense() @ x, rtol=1e-13)
    np.testing.assert_allclose(solve(tri, tri.matvec(x)), x, rtol=1e-10)


def test_singular_pivot_raises():
    tri = Tridiagonal(lower=np.array([1.0]), diag=np.array([0.0, 1.0]),
                      upper=np.array([1.0]))
    with pytest.raises(SingularMatrixError):
        solve(tri, np.array([1.0, 1.0]))
    with pytest.raises(SingularMatrixError):
        solve(Tridiagonal(np.empty(0), np.array([0.0]), np.empty(0)),
              np.array([1.0]))


def test_size_mismatch_raises():
    tri = Tridiagonal(lower=np.array([1.0]), diag=np.array([2.0, 2.0]),
                      upper=np.array([1.0]))
    with pytest.raises(ValueError):
        solve(tri, np.array([1.0, 1.0, 1.0]))
