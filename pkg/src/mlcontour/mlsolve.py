"""Action of the Mittag-Leffler matrix function on a vector.

``p(t) = E_alpha(A t^alpha) p0`` is evaluated as the inverse Laplace integral

    p(t) = 1/(2 pi i) \\int exp(z t) (z I - z^(1-alpha) A)^{-1} p0 dz

by trapezoid quadrature on a contour (see :mod:`mlcontour.contours`). For
``alpha = 1`` this is the matrix exponential. Two independent oracles live
here too: a spectral evaluation through the symmetrized matrix, and an
explicit ODE integrator for ``alpha = 1``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .contours import QuadratureNodes
from .errors import (
    CancellationLoss,
    DivergenceGuard,
    NodeBranchCut,
    SingularShift,
    StepUnderflow,
    TrustRegionExceeded,
    ValidationError,
)
from .models import TridiagonalGenerator
from .tridiag import (
    SINGULAR_SIGMA,
    TridiagonalLU,
    shifted_matrix,
    smallest_singular_value,
    symmetrize,
)

__all__ = [
    "MlProblem",
    "MlSolution",
    "ml_action",
    "ml_scalar_series",
    "ml_scalar",
    "ml_negative_real_integral",
    "ml_action_spectral_oracle",
    "expm_ode_oracle",
    "clamp_and_renormalize",
    "SERIES_TRUST_RADIUS",
]

SERIES_TRUST_RADIUS = 30.0


@dataclass(frozen=True)
class MlProblem:
    A: TridiagonalGenerator
    alpha: float
    t: float
    p0: np.ndarray
    probability: bool = True

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError(f"alpha={self.alpha} must lie in (0, 1]")
        if not (math.isfinite(self.t) and self.t > 0):
            raise ValidationError("t must be positive")
        p0 = np.array(self.p0, dtype=float)
        if p0.shape != (self.A.n,):
            raise ValidationError(f"p0 must have length {self.A.n}")
        if self.probability:
            if p0.min() < 0 or abs(p0.sum() - 1) > 1e-12:
                raise ValidationError("p0 is flagged as a probability vector but is not one")
        object.__setattr__(self, "p0", p0)


@dataclass
class MlSolution:
    p: np.ndarray
    mass_defect: float
    negative_mass: float
    resolvent: np.ndarray | None = None
    imag_residue: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def max_resolvent(self):
        return None if self.resolvent is None else float(np.max(self.resolvent))


def _diagnostics(p, resolvent=None, imag_residue=None):
    return MlSolution(
        p=p,
        mass_defect=float(abs(1.0 - p.sum())),
        negative_mass=float(-p[p < 0].sum()) + 0.0,
        resolvent=resolvent,
        imag_residue=imag_residue,
    )


def _node_solve(A, p0, z, alpha):
    if z.imag == 0 and z.real < 0:
        raise NodeBranchCut(f"node {z} lies on the branch cut of z^(1-alpha)")
    s = z ** (1 - alpha) if alpha != 1 else 1.0
    return TridiagonalLU(shifted_matrix(A, z, s)).solve(p0)


def ml_action(
    problem: MlProblem,
    nodes: QuadratureNodes,
    full_sum: bool = False,
    resolvent: bool = False,
    workers: int | None = None,
) -> MlSolution:
    """Quadrature approximation of ``E_alpha(A t^alpha) p0``.

    The default assembly solves only at the nodes with negative parameter and
    the centre node, then forms ``2 Re(sum) + Re(c_0 u_0)``. ``full_sum``
    instead sums every node and records the relative size of the discarded
    imaginary part in ``imag_residue``. Per-node solves may run on
    ``workers`` threads; the reduction is always in ascending node order.
    """
    if nodes.spec.t != problem.t:
        raise ValidationError(f"contour was built for t={nodes.spec.t}, problem has t={problem.t}")
    A, p0, alpha = problem.A, problem.p0, problem.alpha
    if full_sum:
        idx = np.arange(nodes.size)
    else:
        idx = list(nodes.half())
        if nodes.center_index is not None:
            idx.append(nodes.center_index)
        idx = np.array(idx, dtype=int)

    def solve(k):
        try:
            return _node_solve(A, p0, nodes.nodes[k], alpha)
        except SingularShift as exc:
            raise SingularShift(f"node {k}: {exc}", index=exc.index, node=int(k)) from None

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            us = list(pool.map(solve, idx))
    else:
        us = [solve(k) for k in idx]

    residue = None
    if full_sum:
        acc = np.zeros(A.n, dtype=complex)
        for k, u in zip(idx, us):
            acc += nodes.coeffs[k] * u
        scale = max(np.abs(acc.real).max(), np.finfo(float).tiny)
        residue = float(np.abs(acc.imag).max() / scale)
        p = acc.real.copy()
    else:
        acc = np.zeros(A.n, dtype=complex)
        centre = None
        for k, u in zip(idx, us):
            if k == nodes.center_index:
                centre = nodes.coeffs[k] * u
            else:
                acc += nodes.coeffs[k] * u
        p = 2 * acc.real
        if centre is not None:
            p += centre.real

    res = None
    if resolvent:
        res = np.empty(idx.size)
        for i, k in enumerate(idx):
            z = nodes.nodes[k]
            s = z ** (1 - alpha) if alpha != 1 else 1.0
            sigma = smallest_singular_value(shifted_matrix(A, z, s))
            res[i] = np.inf if sigma <= SINGULAR_SIGMA else 1.0 / sigma
    return _diagnostics(p, res, residue)


def clamp_and_renormalize(solution: MlSolution) -> MlSolution:
    """Zero out negative entries and rescale to unit mass."""
    p = np.clip(solution.p, 0.0, None)
    total = p.sum()
    if total > 0:
        p = p / total
    out = _diagnostics(p, solution.resolvent, solution.imag_residue)
    out.extra = dict(solution.extra, clamped=True)
    return out


# ---------------------------------------------------------------------------
# scalar Mittag-Leffler function


def ml_scalar_series(alpha: float, z: complex, tol: float = 1e-16, guard: float = 1e12) -> complex:
    """Power series ``sum z^k / Gamma(alpha k + 1)``.

    Restricted to ``|z| <= 30``. ``math.gamma`` (a Lanczos approximation,
    good to about 1e-15 relative) supplies the denominators; terms that
    overflow raise :class:`DivergenceGuard`. If the largest term exceeds
    ``guard * |E|`` the alternating sum has lost too many digits and
    :class:`CancellationLoss` is raised.
    """
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    z = complex(z)
    r = abs(z)
    if r > SERIES_TRUST_RADIUS:
        raise DivergenceGuard(f"|z|={r:g} exceeds the series trust radius {SERIES_TRUST_RADIUS:g}")
    if r == 0:
        return 1.0 + 0.0j
    real = z.imag == 0
    zr = z.real
    total = 0.0 + 0.0j
    biggest = 0.0
    prev = math.inf
    power = 1.0 + 0.0j
    for k in range(20000):
        try:
            if real:
                term = zr**k / math.gamma(alpha * k + 1)
            else:
                term = power / math.gamma(alpha * k + 1)
                power *= z
        except OverflowError:
            raise DivergenceGuard(f"series terms overflow for alpha={alpha}, |z|={r:g}") from None
        mag = abs(term)
        if not math.isfinite(mag):
            raise DivergenceGuard(f"series terms overflow for alpha={alpha}, |z|={r:g}")
        total += term
        biggest = max(biggest, mag)
        if mag < prev and mag <= tol * (1 + abs(total)):
            break
        prev = mag
    if biggest > guard * abs(total):
        raise CancellationLoss(
            f"largest series term {biggest:.3g} swamps the result {abs(total):.3g}"
        )
    return total


def ml_negative_real_integral(alpha: float, y: float) -> float:
    """``E_alpha(-y)`` for ``y >= 0`` from its spectral-density integral.

    The density form ``sin(a pi)/(pi a) int_0^inf exp(-(y q)^(1/a)) /
    (q^2 + 2 q cos(a pi) + 1) dq`` is rewritten with
    ``q = sin(psi)/sin(a pi - psi)``, which absorbs the denominator:

        E_a(-y) = 1/(pi a) int_0^{a pi} exp(-(y q(psi))^(1/a)) dpsi.

    The integrand is bounded by one and smooth even as ``a -> 1``, where
    the original density collapses to a spike. Adaptive Gauss-Kronrod
    quadrature runs on geometric breakpoints around the decay scale
    ``q ~ 1/y``.
    """
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    if y < 0:
        raise ValidationError("y must be nonnegative")
    if y == 0:
        return 1.0
    if alpha == 1:
        return math.exp(-y)
    api = alpha * math.pi
    ca, sa = math.cos(api), math.sin(api)
    inv = 1.0 / alpha

    def f(psi):
        d = math.sin(api - psi)
        if d <= 0:
            return 0.0
        return math.exp(-((y * math.sin(psi) / d) ** inv))

    # psi(q) = atan2(q sin(a pi), 1 + q cos(a pi)) at q = 4^k / y
    cuts = {math.atan2(q * sa, 1 + q * ca) for q in (4.0**k / y for k in range(-30, 30)) if math.isfinite(q)}
    edges = [0.0] + sorted(c for c in cuts if 0 < c < api) + [api]
    total = 0.0
    with warnings.catch_warnings():
        # pieces where the integrand is ~1 trip quad's roundoff detector at this epsrel
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f, a, b, epsabs=1e-300, epsrel=1e-13, limit=200)
            total += val
    return total / api


def ml_scalar(alpha: float, x: float, method: str = "auto") -> float:
    """``E_alpha(x)`` for real ``x <= 0``.

    ``method="series"`` insists on the power series and raises
    :class:`TrustRegionExceeded` outside it; ``"auto"`` falls back to the
    spectral-density integral where the series is unusable.
    """
    if x > 0:
        raise ValidationError("only nonpositive arguments are supported")
    if alpha == 1:
        return math.exp(x)
    if method == "integral":
        return ml_negative_real_integral(alpha, -x)
    try:
        # at most ~1e-12 relative error from cancellation
        return ml_scalar_series(alpha, x, guard=1e4).real
    except (DivergenceGuard, CancellationLoss) as exc:
        if method == "series":
            raise TrustRegionExceeded(str(exc)) from None
        return ml_negative_real_integral(alpha, -x)


def ml_action_spectral_oracle(problem: MlProblem, method: str = "auto") -> np.ndarray:
    """``D^-1 V E_alpha(Lambda t^alpha) V^T D p0`` through the symmetrized matrix.

    The gauge is shifted so that ``D`` is at most one on the support of
    ``p0``; with a start concentrated where ``D`` is smallest (the centre of
    the monomolecular lattice, say) the back-transformation does not amplify
    rounding errors.
    """
    gauge, T = symmetrize(problem.A)
    log_d = gauge.log_d - gauge.log_d[problem.p0 != 0].max()
    d = np.exp(log_d)
    if not np.all(np.isfinite(1.0 / d)):
        raise TrustRegionExceeded("gauge scaling over/underflows for this matrix")
    lam, V = linalg.eigh_tridiagonal(T.diag, T.off)
    scale = problem.t**problem.alpha
    x = np.minimum(lam * scale, 0.0)
    if method == "series" and np.any(np.abs(x) > SERIES_TRUST_RADIUS):
        raise TrustRegionExceeded(
            f"|lambda| t^alpha reaches {np.abs(x).max():.3g} > {SERIES_TRUST_RADIUS:g}"
        )
    e = np.array([ml_scalar(problem.alpha, xi, method) for xi in x])
    y = V @ (e * (V.T @ (d * problem.p0)))
    return y / d


def expm_ode_oracle(A: TridiagonalGenerator, t: float, p0, tol: float = 1e-10) -> np.ndarray:
    """Integrate ``dp/dt = A p`` to time ``t`` with the explicit DOP853 scheme."""
    p0 = np.asarray(p0, dtype=float)
    if t == 0:
        return p0.copy()
    sol = integrate.solve_ivp(
        lambda _, y: A.matvec(y),
        (0.0, float(t)),
        p0,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3 * max(np.abs(p0).max(), 1e-300),
    )
    if sol.status != 0:
        raise StepUnderflow(f"explicit integration failed: {sol.message}")
    return sol.y[:, -1]
