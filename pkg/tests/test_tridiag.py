import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import dense_gauge, dense_hermitian_part, dense_sigma_min, small_model
from scipy import linalg

from mlcontour.errors import NotSymmetrizable, SingularShift
from mlcontour.models import ModelKind, ModelSpec, TridiagonalGenerator, build_generator
from mlcontour.tridiag import (
    ComplexTridiagonal,
    SymmetricTridiagonal,
    TridiagonalLU,
    numerical_abscissa,
    rotated_hermitian_part,
    shifted_matrix,
    smallest_singular_value,
    smallest_singular_values,
    solve_shifted,
    symm_eigenvalues,
    symm_extreme_eigenpair,
    symmetrize,
)

kinds = st.sampled_from(list(ModelKind))
MONO5 = build_generator(ModelSpec("mono", m=5))
BI5 = build_generator(ModelSpec("bi", m=5))


def model(kind, N):
    return build_generator(ModelSpec(kind, N=N))


class TestSolve:
    def test_scalar(self):
        A = TridiagonalGenerator([], [0.0], [])
        assert solve_shifted(A, 2.0, 1.0, [1.0]) == pytest.approx([0.5])

    def test_residual_mono5(self):
        e1 = np.zeros(6)
        e1[0] = 1
        u = solve_shifted(MONO5, 1.0, 1.0, e1)
        assert np.abs((np.eye(6) - MONO5.to_dense()) @ u - e1).max() < 1e-12

    def test_singular_shift(self):
        e1 = np.zeros(6)
        e1[0] = 1
        try:
            u = solve_shifted(MONO5, 0.0, 1.0, e1)
        except SingularShift as exc:
            assert exc.index is not None
        else:
            # if no pivot underflowed the solution must have blown up
            assert np.abs(u).max() > 1e10

    def test_conjugate_transpose_solve(self):
        rng = np.random.default_rng(0)
        n = 9
        M = ComplexTridiagonal(*(rng.standard_normal(k) + 1j * rng.standard_normal(k) for k in (n - 1, n, n - 1)))
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lu = TridiagonalLU(M)
        D = M.to_dense()
        assert np.allclose(lu.solve(b), np.linalg.solve(D, b), rtol=1e-12, atol=1e-12)
        assert np.allclose(lu.solve(b, conjugate_transpose=True), np.linalg.solve(D.conj().T, b), rtol=1e-12, atol=1e-12)

    @given(kind=kinds, N=st.integers(2, 400), seed=st.integers(0, 2**32 - 1))
    def test_random_shift_residuals(self, kind, N, seed):
        A = model(kind, N)
        rng = np.random.default_rng(seed)
        scale = A.norm_inf()
        for _ in range(5):
            # well separated from the nonpositive real spectrum
            z = complex(rng.uniform(-1, 1) * scale, rng.choice([-1, 1]) * rng.uniform(0.1, 1) * scale + 1.0)
            s = complex(np.exp(1j * rng.uniform(-0.5, 0.5)))
            rhs = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            u = solve_shifted(A, z, s, rhs)
            M = shifted_matrix(A, z, s)
            res = np.linalg.norm(M.matvec(u) - rhs)
            assert res <= 1e-10 * (abs(z) + abs(s) * scale) * np.linalg.norm(u)


class TestSymmetrize:
    def test_walk_is_already_symmetric(self):
        A = model("walk", 8)
        gauge, T = symmetrize(A)
        assert np.allclose(gauge.d, 1.0)
        assert np.array_equal(T.off, A.sup) and np.array_equal(T.diag, A.diag)

    def test_mono5(self):
        gauge, T = symmetrize(MONO5)
        assert np.allclose(T.off, np.sqrt([5, 8, 9, 8, 5]), rtol=1e-15)
        assert np.all(T.diag == -5)
        assert gauge.d[0] == 1.0

    def test_zero_product_rejected(self):
        A = TridiagonalGenerator([1.0, 0.0], [-1.0, -1.0, 0.0], [1.0, 1.0])
        with pytest.raises(NotSymmetrizable):
            symmetrize(A)

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_dense_similarity(self, kind):
        _, A = small_model(kind)
        gauge, T = symmetrize(A)
        Ad = A.to_dense()
        d = dense_gauge(Ad)
        assert np.allclose(gauge.d, d, rtol=1e-12)
        S = np.diag(d) @ Ad @ np.diag(1 / d)
        assert np.allclose(S, T.to_dense(), rtol=1e-12, atol=1e-12 * np.abs(Ad).max())


class TestEigen:
    def test_diagonal(self):
        T = SymmetricTridiagonal([-1.0, -2.0, -3.0], [0.0, 0.0])
        assert symm_eigenvalues(T) == pytest.approx([-3, -2, -1], abs=1e-14)

    def test_mono5_top_is_zero(self):
        lam = symm_eigenvalues(symmetrize(MONO5)[1])
        assert abs(lam[-1]) < 1e-10

    def test_bi5_gershgorin(self):
        lam = symm_eigenvalues(symmetrize(BI5)[1])
        assert np.all(lam <= 1e-10) and lam.min() >= -2 * np.abs(BI5.diag).max()

    @given(kind=kinds, N=st.integers(2, 200))
    def test_generator_spectrum(self, kind, N):
        A = model(kind, N)
        T = symmetrize(A)[1]
        lam = symm_eigenvalues(T)
        assert np.all(np.diff(lam) >= 0)
        assert np.all(lam <= 1e-10 * A.norm_inf())
        assert np.sum(np.abs(lam) <= 1e-10) == 1

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_matches_lapack(self, kind):
        A = model(kind, 200)
        T = symmetrize(A)[1]
        ref = linalg.eigvalsh_tridiagonal(T.diag, T.off)
        assert np.abs(symm_eigenvalues(T) - ref).max() <= 1e-12 * T.norm_inf()

    def test_extreme_pair_diagonal(self):
        lam, v = symm_extreme_eigenpair(SymmetricTridiagonal([1.0, 2.0, 3.0], [0.0, 0.0]), "max")
        assert lam == pytest.approx(3)
        assert np.allclose(np.abs(v), [0, 0, 1])
        lam, v = symm_extreme_eigenpair(SymmetricTridiagonal([1.0, 2.0, 3.0], [0.0, 0.0]), "min")
        assert lam == pytest.approx(1)

    def test_extreme_pair_stationary_vector(self):
        gauge, T = symmetrize(MONO5)
        lam, v = symm_extreme_eigenpair(T, "max")
        pi = linalg.null_space(MONO5.to_dense())[:, 0]
        w = gauge.d * pi
        w /= np.linalg.norm(w)
        assert abs(lam) < 1e-10
        assert abs(abs(np.dot(v, w)) - 1) < 1e-10

    def test_extreme_pair_walk(self):
        lam, v = symm_extreme_eigenpair(symmetrize(model("walk", 3))[1], "max")
        assert abs(lam) < 1e-12
        assert np.allclose(v, np.ones(3) / np.sqrt(3), atol=1e-10)

    @given(kind=kinds, N=st.integers(2, 200), which=st.sampled_from(["max", "min"]))
    def test_extreme_pair_residual(self, kind, N, which):
        T = symmetrize(model(kind, N))[1]
        lam, v = symm_extreme_eigenpair(T, which)
        assert np.linalg.norm(T.matvec(v) - lam * v) <= 1e-10 * T.norm_inf()
        assert np.linalg.norm(v) == pytest.approx(1, abs=1e-12)


class TestRotation:
    def test_theta_zero_and_pi(self):
        T0 = rotated_hermitian_part(MONO5, 0.0)
        assert np.array_equal(T0.diag, MONO5.diag)
        assert np.allclose(T0.off, (MONO5.sup + MONO5.sub) / 2)
        Tp = rotated_hermitian_part(MONO5, np.pi)
        assert np.allclose(Tp.diag, -MONO5.diag)
        assert np.allclose(Tp.off, (MONO5.sup + MONO5.sub) / 2)

    def test_theta_half_pi(self):
        T = rotated_hermitian_part(MONO5, np.pi / 2)
        assert np.allclose(T.diag, 0, atol=1e-15)
        assert np.allclose(T.off, [2, 1, 0, 1, 2], atol=1e-14)

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_matches_dense_hermitian(self, kind):
        _, A = small_model(kind)
        Ad = A.to_dense()
        for theta in np.linspace(0, 2 * np.pi, 16, endpoint=False):
            T, u = rotated_hermitian_part(A, theta, return_phases=True)
            H = dense_hermitian_part(Ad, theta)
            ref = np.linalg.eigvalsh(H)
            scale = max(1.0, np.abs(ref).max())
            assert np.abs(symm_eigenvalues(T) - ref).max() <= 1e-10 * scale
            U = np.diag(u)
            assert np.allclose(U @ T.to_dense() @ U.conj().T, H, atol=1e-12 * scale)

    def test_numerical_abscissa(self):
        assert abs(numerical_abscissa(model("walk", 10))) < 1e-12
        for A in (MONO5, BI5):
            Ad = A.to_dense()
            ref = np.linalg.eigvalsh((Ad + Ad.T) / 2)[-1]
            val = numerical_abscissa(A)
            assert val > 0
            assert val == pytest.approx(ref, abs=1e-12 * np.abs(Ad).max())


class TestSigmaMin:
    def test_diagonal(self):
        M = ComplexTridiagonal([0, 0], [3, 4j, -5], [0, 0])
        assert smallest_singular_value(M) == pytest.approx(3, rel=1e-10)

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_matches_dense_svd(self, kind):
        _, A = small_model(kind)
        Ad = A.to_dense()
        rng = np.random.default_rng(7)
        r = A.norm_inf()
        zs = rng.uniform(-r, 0.2 * r, 50) + 1j * rng.uniform(-0.5 * r, 0.5 * r, 50)
        for z in zs:
            ref = dense_sigma_min(z * np.eye(A.n) - Ad)
            assert smallest_singular_value(shifted_matrix(A, z)) == pytest.approx(ref, rel=1e-8)
        sig, conv = smallest_singular_values(A, zs)
        ref = [dense_sigma_min(z * np.eye(A.n) - Ad) for z in zs]
        assert np.allclose(sig, ref, rtol=1e-8)
        assert conv.all()

    def test_eigenvalue_shift(self):
        lam = symm_eigenvalues(symmetrize(MONO5)[1])
        for z in lam:
            assert smallest_singular_value(shifted_matrix(MONO5, z)) < 1e-8 * MONO5.norm_inf()
