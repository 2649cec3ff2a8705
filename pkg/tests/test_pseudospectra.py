import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlcontour.contours import hyperbola_nodes
from mlcontour.errors import ValidationError
from mlcontour.fov import fov_boundary
from mlcontour.models import ModelSpec, TridiagonalGenerator, build_generator
from mlcontour.pseudospectra import (
    DEFAULT_LEVELS,
    contour_resolvent_profile,
    default_window,
    level_heights,
    min_abs_imag_of_level,
    ps_grid,
    resolvent_norm,
)
from mlcontour.tridiag import symmetrize
from oracles import dense_resolvent_norm

MONO5 = build_generator(ModelSpec("mono", m=5))


def one_by_one(x):
    return TridiagonalGenerator(sub=np.zeros(0), diag=np.array([x]), sup=np.zeros(0))


class TestResolventNorm:
    def test_scalar(self):
        assert resolvent_norm(one_by_one(-1.0), 0.0) == pytest.approx(1.0, rel=1e-15)

    def test_eigenvalue_is_infinite(self):
        assert resolvent_norm(one_by_one(-1.0), -1.0) == np.inf
        # 0 is always an eigenvalue of a generator
        assert resolvent_norm(MONO5, 0.0) > 1e12

    def test_mono5_dense(self):
        ref = dense_resolvent_norm(MONO5.to_dense(), 1 + 1j)
        assert resolvent_norm(MONO5, 1 + 1j) == pytest.approx(ref, rel=1e-8)

    @settings(max_examples=20)
    @given(
        kind=st.sampled_from(["mono", "bi", "walk"]),
        N=st.integers(3, 40),
        x=st.floats(-100, 10),
        y=st.floats(-50, 50),
    )
    def test_lower_bound_on_symmetrized(self, kind, N, x, y):
        A = build_generator(ModelSpec(kind, N=N))
        _, T = symmetrize(A)
        S = T.to_dense()
        lam = np.linalg.eigvalsh(S)
        z = complex(x, y)
        d = np.abs(z - lam).min()
        if d < 1e-6 * A.norm_inf():
            return  # both sides are rounding noise at the spectrum
        Ts = TridiagonalGenerator(sub=T.off.copy(), diag=T.diag.copy(), sup=T.off.copy())
        # symmetric matrices are normal: equality
        assert resolvent_norm(Ts, z) == pytest.approx(1 / d, rel=1e-8)
        # the original matrix is similar: norm at least 1/dist/cond(D)
        assert resolvent_norm(A, z) >= (1 / d) / np.linalg.cond(np.diag(np.exp(symmetrize(A)[0].log_d))) * (1 - 1e-8)

    @settings(max_examples=10)
    @given(kind=st.sampled_from(["mono", "bi"]), N=st.integers(3, 30), seed=st.integers(0, 2**31))
    def test_upper_bound_outside_fov(self, kind, N, seed):
        A = build_generator(ModelSpec(kind, N=N))
        fov = fov_boundary(A, 128)
        rng = np.random.default_rng(seed)
        r = 2 * A.norm_inf()
        for z in r * (rng.uniform(-1, 1, 20) + 1j * rng.uniform(-1, 1, 20)):
            d = float(fov.distance(z))
            if d > 0:
                assert resolvent_norm(A, z) <= (1 + 1e-6) / d


class TestGrid:
    def test_normal_matrix_grid(self):
        A = build_generator(ModelSpec("walk", m=6))
        lam = np.linalg.eigvalsh(A.to_dense())
        g = ps_grid(A, (-5, 1), (0.5, 1.5), nx=2, ny=2)
        for i, x in enumerate(g.re):
            for j, y in enumerate(g.im):
                d = np.abs(complex(x, y) - lam).min()
                assert 10 ** g.values[i, j] == pytest.approx(1 / d, rel=1e-8)

    def test_mirror_equals_full(self):
        A = build_generator(ModelSpec("bi", m=20))
        a = ps_grid(A, (-200, 10), (-50, 50), nx=7, ny=9, mirror=True)
        b = ps_grid(A, (-200, 10), (-50, 50), nx=7, ny=9, mirror=False)
        assert np.array_equal(a.im, b.im)
        assert np.allclose(a.values, b.values, atol=1e-10)
        assert np.array_equal(a.values, a.values[:, ::-1])

    def test_even_mirror(self):
        A = build_generator(ModelSpec("mono", m=10))
        g = ps_grid(A, (-25, 2), (-5, 5), nx=3, ny=6)
        assert np.array_equal(g.im, -g.im[::-1])
        assert np.array_equal(g.values, g.values[:, ::-1])

    def test_default_window(self):
        (lo, hi), (ilo, ihi) = default_window(MONO5)
        lam = np.linalg.eigvals(MONO5.to_dense())
        assert lo <= lam.real.min() and hi >= lam.real.max()
        assert ilo == -ihi == -(hi - lo) / 4

    def test_validation(self):
        with pytest.raises(ValidationError):
            ps_grid(MONO5, nx=1)
        with pytest.raises(ValidationError):
            ps_grid(MONO5, (1, 0), (-1, 1))

    def test_level_measures(self):
        A = build_generator(ModelSpec("mono", m=10))
        g = ps_grid(A, (-25, 2), (-5, 5), nx=30, ny=21)
        h = [level_heights(g, L) for L in (1, 2)]
        both = np.isfinite(h[0]) & np.isfinite(h[1])
        assert np.all(h[1][both] <= h[0][both])
        assert min_abs_imag_of_level(g, 100.0) != min_abs_imag_of_level(g, 100.0)  # NaN
        assert DEFAULT_LEVELS == (2, 4, 6, 8, 10)


class TestProfile:
    def test_far_right_contour(self):
        A = build_generator(ModelSpec("mono", m=20))
        n = hyperbola_nodes(1.0, 8)
        shifted = type(n)(spec=n.spec, param=n.param, nodes=n.nodes + 100.0, dz=n.dz, coeffs=n.coeffs)
        prof = contour_resolvent_profile(A, shifted)
        assert np.all(prof.norms < 1)
        assert not prof.flagged.any()

    def test_node_at_eigenvalue(self):
        n = hyperbola_nodes(1.0, 1)
        at = type(n)(spec=n.spec, param=n.param, nodes=np.array([-1.0, 0.5, 2.0 + 0j]), dz=n.dz, coeffs=n.coeffs)
        prof = contour_resolvent_profile(one_by_one(-1.0), at)
        assert prof.norms[0] == np.inf and prof.flagged[0]

    def test_bimolecular_profile(self):
        A = build_generator(ModelSpec("bi", N=201))
        n = hyperbola_nodes(1.0, 16)
        prof = contour_resolvent_profile(A, n)
        d = prof.to_dict()
        assert np.isfinite(d["max"]) and d["max"] > 0
        assert 0 <= d["argmax"] < n.size
        dense = A.to_dense()
        k = prof.argmax
        assert prof.norms[k] == pytest.approx(dense_resolvent_norm(dense, n.nodes[k]), rel=1e-6)

    def test_fractional_profile(self):
        A = build_generator(ModelSpec("mono", m=10))
        n = hyperbola_nodes(1.0, 4)
        prof = contour_resolvent_profile(A, n, alpha=0.5)
        z = n.nodes[0]
        s = z**0.5
        ref = 1 / np.linalg.svd(z * np.eye(11) - s * A.to_dense(), compute_uv=False)[-1]
        assert prof.norms[0] == pytest.approx(ref, rel=1e-8)
        with pytest.raises(ValidationError):
            contour_resolvent_profile(A, n, threshold=0)
