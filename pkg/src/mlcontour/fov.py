"""Field of values by Johnson's rotation algorithm, and parabolic surrogates.

For each angle ``theta`` the largest eigenvalue ``h(theta)`` of the rotated
Hermitian part ``(e^{i theta} A + e^{-i theta} A^*)/2`` is the support
function of ``W(A)`` in direction ``e^{-i theta}``, and the matching unit
eigenvector ``v`` gives the boundary point ``v^* A v``. The boundary points
span an inscribed polygon; the supporting lines ``Re(e^{i theta} z) =
h(theta)`` cut out a circumscribed one. Distances are measured to the
circumscribed polygon, which never overestimates the distance to ``W(A)``,
so ``1/dist`` stays a valid resolvent bound.

The parabolic bounds describe a region ``Y^2 <= 2K(X + beta1) - beta0^2``
(Dirichlet) or ``Y^2 <= 2K(X + beta1)`` (zero flux) derived from the
Fokker-Planck coefficients; flipping ``X -> -X`` gives the matrix
convention used for contour placement.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .contours import QuadratureNodes, build_nodes
from .errors import AssumptionViolated, ConvergenceFailure, NoWideningSuffices, ValidationError
from .models import PdeCoefficients, TridiagonalGenerator
from .tridiag import rotated_hermitian_part, symm_extreme_eigenpair

__all__ = [
    "FovBoundary",
    "fov_boundary",
    "BoundaryCondition",
    "Orientation",
    "ParabolaBound",
    "parabola_from_coefficients",
    "flip_to_matrix_convention",
    "region_contains",
    "distance_outside",
    "ClearanceReport",
    "contour_clearance",
    "WIDEN_LADDER",
]

WIDEN_LADDER = (1.0, 1.25, 1.5, 2.0, 3.0, 5.0)


# ---------------------------------------------------------------------------
# field of values


def _quadratic_form(A, w):
    Aw = A.diag * w
    Aw[:-1] += A.sup * w[1:]
    Aw[1:] += A.sub * w[:-1]
    return np.vdot(w, Aw)


def _segment_distance(z, a, b):
    """Distance from each ``z`` to the segments ``[a_k, b_k]`` (broadcast)."""
    d = b - a
    L2 = (d * d.conj()).real
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(L2 > 0, ((z - a) * d.conj()).real / L2, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return np.abs(z - (a + s * d))


@dataclass(frozen=True)
class FovBoundary:
    """Boundary samples of ``W(A)`` ordered by angle.

    ``points[k]`` maximizes ``Re(e^{i angles[k]} z)`` over ``W(A)`` and
    ``support[k]`` is that maximum. ``hull`` is the inscribed polygon through
    the points and ``outer`` the circumscribed polygon of supporting lines.
    """

    points: np.ndarray
    angles: np.ndarray
    support: np.ndarray

    @property
    def hull(self):
        return self.points

    @property
    def outer(self):
        """Vertices where consecutive supporting lines meet."""
        th = self.angles
        th2 = np.roll(th, -1)
        h, h2 = self.support, np.roll(self.support, -1)
        # x cos t - y sin t = h
        det = -np.cos(th) * np.sin(th2) + np.sin(th) * np.cos(th2)
        x = (-h * np.sin(th2) + h2 * np.sin(th)) / det
        y = (np.cos(th) * h2 - np.cos(th2) * h) / det
        return x + 1j * y

    def _halfplane_excess(self, z):
        z = np.asarray(z, dtype=complex)[..., None]
        return (np.exp(1j * self.angles) * z).real - self.support

    def contains(self, z, tol: float = 1e-8):
        """True where ``z`` lies in the circumscribed polygon (within ``tol``)."""
        return np.all(self._halfplane_excess(z) <= tol, axis=-1)

    def hull_contains(self, z, tol: float = 1e-8):
        """True where ``z`` lies in the inscribed polygon (within ``tol``)."""
        z = np.asarray(z, dtype=complex)
        p = self.points
        q = np.roll(p, -1)
        area = 0.5 * np.sum((p.conj() * q).imag)
        sign = 1.0 if area >= 0 else -1.0
        edge = q - p
        cross = sign * (edge.conj()[None, :] * (z.reshape(-1, 1) - p[None, :])).imag
        inside = np.all(cross >= -tol * np.maximum(np.abs(edge), 1.0)[None, :], axis=-1)
        return (inside & self.contains(z.ravel(), tol)).reshape(z.shape)

    def distance(self, z):
        """Euclidean distance from ``z`` to the circumscribed polygon (0 inside)."""
        z = np.asarray(z, dtype=complex)
        v = self.outer
        w = np.roll(v, -1)
        flat = z.reshape(-1, 1)
        d = _segment_distance(flat, v[None, :], w[None, :]).min(axis=-1)
        d = np.where(self.contains(flat.ravel(), 0.0), 0.0, d)
        return d.reshape(z.shape)

    def convexity_defect(self):
        """Largest wrong-signed turn of the inscribed polygon, relative to its scale."""
        p = self.points
        e1 = np.roll(p, -1) - p
        e2 = np.roll(p, -2) - np.roll(p, -1)
        cross = (e1.conj() * e2).imag
        scale = max(np.abs(p).max(), np.finfo(float).tiny) ** 2
        # boundary is traversed clockwise as theta increases
        return float(max(cross.max(), 0.0) / scale)


def fov_boundary(A: TridiagonalGenerator, n_angles: int = 64) -> FovBoundary:
    """Boundary of the field of values at ``n_angles`` uniform angles on ``[0, 2 pi)``.

    Only ``theta in [0, pi]`` is computed; the rest follows from
    ``p(-theta) = conj(p(theta))`` for real ``A``.
    """
    if int(n_angles) != n_angles or n_angles < 4:
        raise ValidationError("n_angles must be an integer >= 4")
    n_angles = int(n_angles)
    k = np.arange(n_angles)
    angles = 2 * math.pi * k / n_angles
    half = n_angles // 2
    points = np.empty(n_angles, dtype=complex)
    support = np.empty(n_angles)
    for i in range(half + 1):
        T, u = rotated_hermitian_part(A, angles[i], return_phases=True)
        try:
            lam, v = symm_extreme_eigenpair(T, "max")
        except ConvergenceFailure as exc:
            raise ConvergenceFailure(f"theta={angles[i]:.17g}: {exc}", angle=float(angles[i])) from None
        points[i] = _quadratic_form(A, u * v)
        support[i] = lam
    for i in range(half + 1, n_angles):
        j = n_angles - i
        points[i] = np.conj(points[j])
        support[i] = support[j]
    # the mirror angle must be bitwise consistent with the computed one
    angles[half + 1 :] = 2 * math.pi - angles[1 : n_angles - half][::-1]
    return FovBoundary(points=points, angles=angles, support=support)


# ---------------------------------------------------------------------------
# parabolic bounds


class BoundaryCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    ZERO_FLUX = "zero-flux"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        if key in ("zeroflux", "zero-flux", "neumann"):
            return cls.ZERO_FLUX
        if key == "dirichlet":
            return cls.DIRICHLET
        raise ValidationError(f"unknown boundary condition {value!r}")


class Orientation(str, enum.Enum):
    OPERATOR = "operator"
    MATRIX = "matrix"


@dataclass(frozen=True)
class ParabolaBound:
    """Region ``Y^2 <= 2K(X + beta1) - s`` (operator) or ``2K(beta1 - X) - s`` (matrix).

    ``s = beta0^2`` for Dirichlet conditions and 0 for zero flux.
    """

    K: float
    beta0: float
    beta1: float
    bc: BoundaryCondition
    orientation: Orientation = Orientation.OPERATOR

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if not self.K > 0:
            raise ValidationError("K must be positive")
        if self.beta0 > self.beta1:
            raise ValidationError("beta0 must not exceed beta1")

    @property
    def offset(self):
        return self.beta0**2 if self.bc is BoundaryCondition.DIRICHLET else 0.0

    @property
    def vertex(self):
        """Real part of the parabola's vertex."""
        x = self.beta1 - self.offset / (2 * self.K)
        return x if self.orientation is Orientation.MATRIX else -x

    def to_dict(self):
        return {
            "K": self.K,
            "beta0": self.beta0,
            "beta1": self.beta1,
            "bc": self.bc.value,
            "convention": self.orientation.value,
        }


def _golden_max(f, a, b, tol=1e-12, maxiter=200):
    """Maximize a unimodal ``f`` on ``[a, b]`` by golden-section search."""
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _extremum(f, x, which):
    """Global max (or min) of ``f`` on the sample grid ``x`` with local refinement."""
    sign = 1.0 if which == "max" else -1.0
    g = lambda s: sign * float(f(s))  # noqa: E731
    y = sign * np.asarray(f(x), dtype=float)
    i = int(np.argmax(y))
    best_x, best = float(x[i]), float(y[i])
    # refine every interior local maximum of the sampled values
    for j in range(1, x.size - 1):
        if y[j] >= y[j - 1] and y[j] >= y[j + 1]:
            xr, yr = _golden_max(g, float(x[j - 1]), float(x[j + 1]))
            if yr > best:
                best_x, best = xr, yr
    return best_x, sign * best


def parabola_from_coefficients(
    coeffs: PdeCoefficients,
    domain_m: float | None = None,
    bc: BoundaryCondition | str = BoundaryCondition.ZERO_FLUX,
    samples: int = 1024,
) -> ParabolaBound:
    """``K = max B^2/b``, ``beta0 = min B'/2``, ``beta1 = max B'/2`` over ``[0, m]``.

    Raises :class:`AssumptionViolated` if ``b`` is not positive, ``B'/2`` has
    no positive lower bound, or (zero flux) ``B(0) <= 0 <= B(m)`` fails.
    """
    bc = BoundaryCondition.parse(bc)
    m = float(coeffs.m if domain_m is None else domain_m)
    if not (math.isfinite(m) and m > 0):
        raise ValidationError("domain_m must be positive")
    x = np.linspace(0.0, m, samples)
    bx = np.asarray(coeffs.b(x), dtype=float) * np.ones_like(x)
    if np.any(bx <= 0):
        i = int(np.argmin(bx))
        raise AssumptionViolated(f"b(x) = {bx[i]:.6g} is not positive at x = {x[i]:.6g}", which="b>0", x=float(x[i]))
    half_dB = lambda s: 0.5 * np.asarray(coeffs.dB(s), dtype=float)  # noqa: E731
    x0, beta0 = _extremum(half_dB, x, "min")
    if not beta0 > 0:
        raise AssumptionViolated(f"B'(x)/2 = {beta0:.6g} is not positive at x = {x0:.6g}", which="beta0>0", x=x0)
    _, beta1 = _extremum(half_dB, x, "max")
    _, K = _extremum(lambda s: np.asarray(coeffs.B(s), dtype=float) ** 2 / coeffs.b(s), x, "max")
    if bc is BoundaryCondition.ZERO_FLUX:
        B0, Bm = float(coeffs.B(0.0)), float(coeffs.B(m))
        if B0 > 0:
            raise AssumptionViolated(f"B(0) = {B0:.6g} > 0 violates the zero-flux condition", which="B(0)<=0", x=0.0)
        if Bm < 0:
            raise AssumptionViolated(f"B(m) = {Bm:.6g} < 0 violates the zero-flux condition", which="B(m)>=0", x=m)
    return ParabolaBound(K=float(K), beta0=float(beta0), beta1=float(max(beta1, beta0)), bc=bc)


def flip_to_matrix_convention(bound: ParabolaBound) -> ParabolaBound:
    """Map ``X -> -X``: the operator's region becomes one for ``W(A)``."""
    if bound.orientation is not Orientation.OPERATOR:
        raise ValidationError("bound is already in the matrix convention")
    return replace(bound, orientation=Orientation.MATRIX)


def _require_matrix(bound):
    if bound.orientation is not Orientation.MATRIX:
        raise ValidationError("region tests need the matrix convention; call flip_to_matrix_convention first")


def region_contains(bound: ParabolaBound, z) -> np.ndarray | bool:
    """``Y^2 <= 2K(beta1 - X) - s`` for ``z = X + iY``."""
    _require_matrix(bound)
    z = np.asarray(z, dtype=complex)
    out = z.imag**2 <= 2 * bound.K * (bound.beta1 - z.real) - bound.offset
    return bool(out) if out.ndim == 0 else out


def _parabola_distance(bound, z):
    # boundary X(Y) = c0 - a Y^2; stationary points of the squared distance
    # solve 2a^2 Y^3 + (1 - 2a(c0 - x0)) Y - y0 = 0
    a = 1.0 / (2 * bound.K)
    c0 = bound.beta1 - a * bound.offset
    x0, y0 = z.real, z.imag
    roots = np.roots([2 * a * a, 0.0, 1 - 2 * a * (c0 - x0), -y0])
    best = math.inf
    for r in roots:
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
            Y = r.real
            best = min(best, math.hypot(c0 - a * Y * Y - x0, Y - y0))
    return best


def distance_outside(bound: ParabolaBound, z) -> np.ndarray | float:
    """Euclidean distance from ``z`` to the region (0 inside)."""
    _require_matrix(bound)
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.zeros(flat.size)
    inside = np.atleast_1d(region_contains(bound, flat))
    for i in np.flatnonzero(~inside):
        out[i] = _parabola_distance(bound, complex(flat[i]))
    return float(out[0]) if z.ndim == 0 else out.reshape(z.shape)


# ---------------------------------------------------------------------------
# contour clearance


def _region_eval(region, z):
    if isinstance(region, ParabolaBound):
        return np.atleast_1d(region_contains(region, z)), np.atleast_1d(distance_outside(region, z))
    if isinstance(region, FovBoundary):
        d = region.distance(z)
        return d == 0, d
    raise ValidationError("region must be a ParabolaBound or a FovBoundary")


@dataclass
class ClearanceReport:
    """Per-node clearance of a contour from a region.

    ``resolvent_bound[k]`` is ``1/distance[k]`` for nodes outside the region
    and NaN (unavailable) for nodes inside it.
    """

    nodes: np.ndarray
    inside: np.ndarray
    distance: np.ndarray
    resolvent_bound: np.ndarray
    eps_target: float
    passes: bool
    min_distance: float
    worst_node: int
    suggested_widen: float | None
    ladder: tuple

    def to_dict(self):
        return {
            "n_nodes": int(self.nodes.size),
            "n_inside": int(self.inside.sum()),
            "min_distance": self.min_distance,
            "worst_node": self.worst_node,
            "eps_target": self.eps_target,
            "passes": self.passes,
            "suggested_widen": self.suggested_widen,
            "ladder": list(self.ladder),
        }


def _clears(region, nodes, eps_target):
    inside, d = _region_eval(region, nodes.nodes)
    return inside, d, bool(np.all(~inside & (d > eps_target)))


def contour_clearance(
    nodes: QuadratureNodes,
    region,
    eps_target: float = 1e-3,
    ladder=WIDEN_LADDER,
    raise_on_failure: bool = True,
) -> ClearanceReport:
    """Distances from the contour nodes to ``region`` and a widening suggestion.

    A node is acceptable if it lies outside the region at distance greater
    than ``eps_target`` (so the implied resolvent bound is below
    ``1/eps_target``). The suggestion is the smallest factor in ``ladder``
    (applied to the contour's own ``widen``) whose rebuilt contour, with the
    same cutoff, has only acceptable nodes.
    """
    if not eps_target > 0:
        raise ValidationError("eps_target must be positive")
    if isinstance(region, ParabolaBound):
        _require_matrix(region)
    inside, d, ok = _clears(region, nodes, eps_target)
    with np.errstate(divide="ignore"):
        bound = np.where(inside, np.nan, 1.0 / d)
    score = np.where(inside, -1.0, d)
    worst = int(np.argmin(score))
    suggestion = None
    for w in ladder:
        spec = replace(nodes.spec, widen=nodes.spec.widen * w)
        if _clears(region, build_nodes(spec), eps_target)[2]:
            suggestion = float(w)
            break
    report = ClearanceReport(
        nodes=nodes.nodes,
        inside=inside,
        distance=d,
        resolvent_bound=bound,
        eps_target=float(eps_target),
        passes=ok,
        min_distance=float(d.min()),
        worst_node=worst,
        suggested_widen=suggestion,
        ladder=tuple(float(w) for w in ladder),
    )
    if suggestion is None and raise_on_failure:
        raise NoWideningSuffices(
            f"no factor in {list(ladder)} clears the region; worst node {worst} at {nodes.nodes[worst]:.6g}",
            worst_node=worst,
        )
    return report
