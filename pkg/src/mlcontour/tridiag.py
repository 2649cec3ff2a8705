"""Tridiagonal kernels: pivoted complex solves, gauge symmetrization,
Sturm-bisection eigenvalues, numerical abscissa and smallest singular values.

Nothing here forms a dense matrix. The hot loops are compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConvergenceFailure, NotSymmetrizable, SingularShift, ValidationError
from .models import TridiagonalGenerator

__all__ = [
    "PIVOT_UNDERFLOW",
    "SINGULAR_SIGMA",
    "ComplexTridiagonal",
    "SymmetricTridiagonal",
    "GaugeScaling",
    "TridiagonalLU",
    "shifted_matrix",
    "solve_shifted",
    "symmetrize",
    "symm_eigenvalues",
    "symm_extreme_eigenpair",
    "rotated_hermitian_part",
    "numerical_abscissa",
    "smallest_singular_value",
    "smallest_singular_values",
]

# pivots below this magnitude mean the shift sits on the spectrum
PIVOT_UNDERFLOW = 1e-300
# returned by the sigma_min routines for numerically singular matrices
SINGULAR_SIGMA = 1e-300

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class ComplexTridiagonal:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        diag = np.array(self.diag, dtype=complex).ravel()
        sub = np.array(self.sub, dtype=complex).ravel()
        sup = np.array(self.sup, dtype=complex).ravel()
        if sub.size != diag.size - 1 or sup.size != diag.size - 1:
            raise ValidationError("sub and sup must have length n-1")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "sup", sup)

    @property
    def n(self):
        return self.diag.size

    def matvec(self, x):
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def norm_inf(self):
        row = np.abs(self.diag)
        row[1:] += np.abs(self.sub)
        row[:-1] += np.abs(self.sup)
        return float(row.max())


@dataclass(frozen=True)
class SymmetricTridiagonal:
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        diag = np.array(self.diag, dtype=float).ravel()
        off = np.array(self.off, dtype=float).ravel()
        if off.size != diag.size - 1:
            raise ValidationError("off must have length n-1")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)

    @property
    def n(self):
        return self.diag.size

    def matvec(self, x):
        y = self.diag * x
        y[1:] += self.off * x[:-1]
        y[:-1] += self.off * x[1:]
        return y

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, -1) + np.diag(self.off, 1)

    def norm_inf(self):
        row = np.abs(self.diag).copy()
        row[1:] += np.abs(self.off)
        row[:-1] += np.abs(self.off)
        return float(row.max())


@dataclass(frozen=True)
class GaugeScaling:
    """Positive diagonal ``D`` with ``D A D^-1`` symmetric.

    The entries are held as logarithms because for the bimolecular model the
    ratios span hundreds of orders of magnitude; ``d`` exponentiates.
    """

    log_d: np.ndarray

    @property
    def d(self):
        return np.exp(self.log_d)


# ---------------------------------------------------------------------------
# pivoted tridiagonal LU (the LAPACK gttrf/gttrs scheme)


@numba.njit(cache=True)
def _gttrf(dl, d, du):
    n = d.size
    du2 = np.zeros(max(n - 2, 0), dtype=d.dtype)
    ipiv = np.arange(n)
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] != 0:
                fact = dl[i] / d[i]
                dl[i] = fact
                d[i + 1] = d[i + 1] - fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = temp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            ipiv[i] = i + 1
    info = -1
    for i in range(n):
        if abs(d[i]) < PIVOT_UNDERFLOW:
            info = i
            break
    return du2, ipiv, info


@numba.njit(cache=True)
def _gttrs(dl, d, du, du2, ipiv, b):
    """Solve with the factored matrix, overwriting ``b``."""
    n = d.size
    for i in range(n - 1):
        if ipiv[i] == i:
            b[i + 1] = b[i + 1] - dl[i] * b[i]
        else:
            temp = b[i]
            b[i] = b[i + 1]
            b[i + 1] = temp - dl[i] * b[i]
    b[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i]


@numba.njit(cache=True)
def _gttrs_h(dl, d, du, du2, ipiv, b):
    """Solve with the conjugate transpose of the factored matrix."""
    n = d.size
    b[0] = b[0] / np.conj(d[0])
    if n > 1:
        b[1] = (b[1] - np.conj(du[0]) * b[0]) / np.conj(d[1])
    for i in range(2, n):
        b[i] = (b[i] - np.conj(du[i - 1]) * b[i - 1] - np.conj(du2[i - 2]) * b[i - 2]) / np.conj(d[i])
    for i in range(n - 2, -1, -1):
        if ipiv[i] == i:
            b[i] = b[i] - np.conj(dl[i]) * b[i + 1]
        else:
            temp = b[i + 1]
            b[i + 1] = b[i] - np.conj(dl[i]) * temp
            b[i] = temp


class TridiagonalLU:
    """Row-pivoted LU factors of a complex tridiagonal matrix.

    Raises :class:`SingularShift` when a pivot underflows.
    """

    def __init__(self, M: ComplexTridiagonal):
        self.n = M.n
        self.dl = M.sub.copy()
        self.d = M.diag.copy()
        self.du = M.sup.copy()
        self.du2, self.ipiv, info = _gttrf(self.dl, self.d, self.du)
        if info >= 0:
            raise SingularShift(f"pivot {info} underflowed below {PIVOT_UNDERFLOW:g}", index=int(info))

    def solve(self, rhs, conjugate_transpose=False):
        b = np.array(rhs, dtype=complex)
        if b.shape != (self.n,):
            raise ValidationError(f"right-hand side must have length {self.n}")
        if conjugate_transpose:
            _gttrs_h(self.dl, self.d, self.du, self.du2, self.ipiv, b)
        else:
            _gttrs(self.dl, self.d, self.du, self.du2, self.ipiv, b)
        return b


def shifted_matrix(A: TridiagonalGenerator, z: complex, s: complex = 1.0) -> ComplexTridiagonal:
    """``z I - s A`` as a :class:`ComplexTridiagonal`."""
    return ComplexTridiagonal(-s * A.sub, z - s * A.diag, -s * A.sup)


def solve_shifted(A: TridiagonalGenerator, z: complex, s: complex, rhs) -> np.ndarray:
    """Solve ``(z I - s A) u = rhs``."""
    return TridiagonalLU(shifted_matrix(A, z, s)).solve(rhs)


# ---------------------------------------------------------------------------
# symmetrization and Sturm bisection


def symmetrize(A: TridiagonalGenerator) -> tuple[GaugeScaling, SymmetricTridiagonal]:
    prod = A.sub * A.sup
    bad = np.flatnonzero(~(prod > 0))
    if bad.size:
        k = int(bad[0])
        raise NotSymmetrizable(f"off-diagonal product at {k} is {prod[k]!r}, must be positive")
    log_d = np.zeros(A.n)
    log_d[1:] = np.cumsum(0.5 * (np.log(A.sup) - np.log(A.sub)))
    return GaugeScaling(log_d), SymmetricTridiagonal(A.diag.copy(), np.sqrt(prod))


@numba.njit(cache=True)
def _sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues strictly less than ``x``."""
    count = 0
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, diag.size):
        q = diag[i] - x - off2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect(diag, off2, k, lo, hi, pivmin):
    """k-th smallest eigenvalue (0-based) inside the bracket ``[lo, hi]``."""
    for _ in range(2200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if hi - lo <= 2.0 * 2.220446049250313e-16 * max(abs(lo), abs(hi)):
            break
        if _sturm_count(diag, off2, mid, pivmin) >= k + 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True, parallel=True)
def _all_eigenvalues(diag, off2, lo, hi, pivmin):
    n = diag.size
    out = np.empty(n)
    for k in numba.prange(n):
        out[k] = _bisect(diag, off2, k, lo, hi, pivmin)
    return out


def _gershgorin(T):
    r = np.zeros(T.n)
    r[1:] += np.abs(T.off)
    r[:-1] += np.abs(T.off)
    lo = float(np.min(T.diag - r))
    hi = float(np.max(T.diag + r))
    pad = 2 * _EPS * max(abs(lo), abs(hi), 1e-300) + 1e-300
    return lo - pad, hi + pad


def _pivmin(T):
    big = float(np.max(T.off**2)) if T.n > 1 else 0.0
    return np.finfo(float).tiny * max(1.0, big)


def symm_eigenvalues(T: SymmetricTridiagonal) -> np.ndarray:
    """All eigenvalues, ascending, by Sturm-sequence bisection."""
    lo, hi = _gershgorin(T)
    return _all_eigenvalues(T.diag, T.off**2, lo, hi, _pivmin(T))


def _extreme_value(T, which):
    lo, hi = _gershgorin(T)
    k = T.n - 1 if which == "max" else 0
    return _bisect(T.diag, T.off**2, k, lo, hi, _pivmin(T))


def symm_extreme_eigenpair(T: SymmetricTridiagonal, which: str = "max", maxiter: int = 100):
    """Extreme eigenvalue by bisection and its unit eigenvector by inverse iteration."""
    if which not in ("max", "min"):
        raise ValidationError("which must be 'max' or 'min'")
    lam = _extreme_value(T, which)
    if T.n == 1:
        return lam, np.ones(1)
    scale = max(T.norm_inf(), np.finfo(float).tiny)
    # nudge the shift off the eigenvalue so the factorization stays regular
    nudge = 4 * _EPS * scale if which == "max" else -4 * _EPS * scale
    shift = lam + nudge
    M = ComplexTridiagonal(T.off, T.diag - shift, T.off)
    try:
        lu = TridiagonalLU(M)
    except SingularShift:
        shift = lam + 64 * nudge
        lu = TridiagonalLU(ComplexTridiagonal(T.off, T.diag - shift, T.off))
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(T.n)
    v /= np.linalg.norm(v)
    tol = 1e-10 * scale
    for _ in range(maxiter):
        w = lu.solve(v).real
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0:
            break
        v = w / nrm
        if np.linalg.norm(T.matvec(v) - lam * v) <= tol:
            i = int(np.argmax(np.abs(v)))
            return lam, v * np.sign(v[i])
    raise ConvergenceFailure(f"inverse iteration for the {which} eigenvector did not converge in {maxiter} steps")


def rotated_hermitian_part(A: TridiagonalGenerator, theta: float, return_phases: bool = False):
    """Real symmetric tridiagonal unitarily similar to ``(e^{it}A + e^{-it}A^T)/2``.

    With ``return_phases`` also returns the unit-modulus diagonal ``u`` such
    that ``H = diag(u) T diag(u)^*``; an eigenvector ``v`` of ``T`` maps to the
    eigenvector ``u * v`` of ``H``.
    """
    rot = np.exp(1j * theta)
    h = 0.5 * (rot * A.sup + np.conj(rot) * A.sub)
    off = np.abs(h)
    T = SymmetricTridiagonal(np.cos(theta) * A.diag, off)
    if not return_phases:
        return T
    phase = np.ones_like(h)
    nz = off > 0
    phase[nz] = np.conj(h[nz]) / off[nz]
    u = np.ones(A.n, dtype=complex)
    u[1:] = np.cumprod(phase)
    return T, u


def numerical_abscissa(A: TridiagonalGenerator) -> float:
    """Largest real part over the field of values, ``max eig((A + A^T)/2)``."""
    return float(_extreme_value(rotated_hermitian_part(A, 0.0), "max"))


# ---------------------------------------------------------------------------
# smallest singular value: Lanczos bidiagonalization of M^{-1}


@numba.njit(cache=True)
def _orthogonalize(x, Q, k):
    """Remove from ``x`` its components along the rows ``Q[:k]`` (Gram-Schmidt, twice)."""
    n = x.size
    for _ in range(2):
        for i in range(k):
            c = 0j
            for t in range(n):
                c += Q[i, t].conjugate() * x[t]
            for t in range(n):
                x[t] -= c * Q[i, t]


@numba.njit(cache=True)
def _sigma_min_kernel(sub, diag, sup, v0, tol, kmax, restarts):
    """Returns ``(sigma, converged)`` for the tridiagonal ``M``.

    Golub-Kahan-Lanczos bidiagonalization of ``B = M^{-1}`` (one plain and
    one conjugate-transpose solve per step, full reorthogonalization) gives
    Ritz approximations of ``||B|| = 1/sigma_min``. A Ritz value is accepted
    once its residual ``beta_k |p_k|`` is below ``tol`` times itself; if the
    Krylov space reaches ``kmax`` first, the process restarts from the best
    right Ritz vector.
    """
    n = diag.size
    dl = sub.copy()
    d = diag.copy()
    du = sup.copy()
    du2, ipiv, info = _gttrf(dl, d, du)
    if info >= 0:
        return SINGULAR_SIGMA, True
    k_cap = min(kmax, n)
    # Krylov bases stored by rows so every vector is contiguous
    U = np.empty((k_cap, n), dtype=np.complex128)
    V = np.empty((k_cap, n), dtype=np.complex128)
    alpha = np.zeros(k_cap)
    beta = np.zeros(k_cap)
    v = v0 / np.linalg.norm(v0)
    best = 0.0
    for _ in range(restarts + 1):
        V[0] = v
        q = np.ones(1)
        for j in range(k_cap):
            p = V[j].copy()
            _gttrs(dl, d, du, du2, ipiv, p)
            if j > 0:
                p -= beta[j - 1] * U[j - 1]
            _orthogonalize(p, U, j)
            a = np.linalg.norm(p)
            if not np.isfinite(a) or a == 0.0:
                return SINGULAR_SIGMA, True
            alpha[j] = a
            U[j] = p / a
            r = U[j].copy()
            _gttrs_h(dl, d, du, du2, ipiv, r)
            r -= a * V[j]
            _orthogonalize(r, V, j + 1)
            b = np.linalg.norm(r)
            beta[j] = b
            k = j + 1
            Bk = np.zeros((k, k))
            for i in range(k):
                Bk[i, i] = alpha[i]
                if i + 1 < k:
                    Bk[i, i + 1] = beta[i]
            P, S, Qt = np.linalg.svd(Bk)
            top = S[0]
            q = Qt[0, :].copy()
            if not np.isfinite(top):
                return SINGULAR_SIGMA, True
            if top > best:
                best = top
            if b * abs(P[k - 1, 0]) <= tol * top or b <= 1e-15 * top:
                sigma = 1.0 / top
                if sigma < SINGULAR_SIGMA:
                    return SINGULAR_SIGMA, True
                return sigma, True
            if j + 1 < k_cap:
                V[j + 1] = r / b
        # restart from the right Ritz vector of the largest Ritz value
        v = np.zeros(n, dtype=np.complex128)
        for i in range(q.size):
            v += q[i] * V[i]
        v /= np.linalg.norm(v)
    return 1.0 / best, False


@numba.njit(cache=True, parallel=True)
def _sigma_min_many(sub_base, diag_base, sup_base, zs, s, v0, tol, kmax, restarts):
    npts = zs.size
    sig = np.empty(npts)
    conv = np.empty(npts, dtype=np.bool_)
    for p in numba.prange(npts):
        z = zs[p]
        sub = -s * sub_base
        sup = -s * sup_base
        diag = z - s * diag_base
        sig[p], conv[p] = _sigma_min_kernel(sub, diag, sup, v0, tol, kmax, restarts)
    return sig, conv


def _start_vector(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def smallest_singular_value(
    M: ComplexTridiagonal,
    tol: float = 1e-10,
    maxiter: int = 64,
    restarts: int = 3,
    seed: int = 0,
    full_output: bool = False,
):
    """Smallest singular value of a complex tridiagonal matrix.

    ``maxiter`` caps the Krylov dimension of each restart cycle. A
    numerically singular ``M`` yields :data:`SINGULAR_SIGMA`; callers treat
    the resolvent norm as infinite there. With ``full_output`` a
    ``(sigma, converged)`` pair is returned, where ``converged=False`` flags
    an estimate accepted after all restarts were used.
    """
    v0 = _start_vector(M.n, seed)
    sigma, conv = _sigma_min_kernel(M.sub, M.diag, M.sup, v0, tol, maxiter, restarts)
    return (float(sigma), bool(conv)) if full_output else float(sigma)


def smallest_singular_values(
    A: TridiagonalGenerator,
    zs,
    s: complex = 1.0,
    tol: float = 1e-10,
    maxiter: int = 64,
    restarts: int = 3,
    seed: int = 0,
):
    """``sigma_min(z I - s A)`` for every ``z`` in ``zs`` (evaluated in parallel).

    Returns ``(sigma, converged)`` arrays shaped like ``zs``.
    """
    zs = np.asarray(zs, dtype=complex)
    v0 = _start_vector(A.n, seed)
    sig, conv = _sigma_min_many(
        A.sub.astype(complex), A.diag.astype(complex), A.sup.astype(complex),
        zs.ravel(), complex(s), v0, tol, maxiter, restarts,
    )
    return sig.reshape(zs.shape), conv.reshape(zs.shape)
