"""Hyperbolic and parabolic inverse-Laplace contours with trapezoid nodes.

Each contour is parameterised by a real variable (``xi`` for the hyperbola,
``u`` for the parabola) sampled uniformly and symmetrically about zero. The
coefficient ``c_k`` folds together the trapezoid spacing, the contour
derivative, ``exp(z_k t)`` and ``1/(2 pi i)``, so that

    f(t) ~= sum_k c_k * F(z_k)

for a Laplace transform ``F``. Nodes are built for the nonnegative half of
the parameter and mirrored by conjugation, which makes the conjugate-pair
structure exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import AllNodesDropped, ValidationError

__all__ = [
    "ContourKind",
    "ContourSpec",
    "QuadratureNodes",
    "HYPERBOLA_DXI",
    "HYPERBOLA_DELTA",
    "HYPERBOLA_MU",
    "PARABOLA_CONSTANTS",
    "hyperbola_nodes",
    "parabola_nodes",
    "build_nodes",
    "nodes_for_negative_real_cutoff",
]

# optimised hyperbola of Le, McLean and Lamichhane: spacing 1.08179214/M,
# half-angle parameter delta and scale 4.49207528*M/t
HYPERBOLA_DXI = 1.08179214
HYPERBOLA_DELTA = 1.17210423
HYPERBOLA_MU = 4.49207528

# Trefethen-Weideman-Schmelzer parabola z(u) = L (p0 - p2 u^2 + i p1 u) / t
PARABOLA_CONSTANTS = (0.1309, 0.1194, 0.25)


class ContourKind(str, enum.Enum):
    HYPERBOLA = "hyperbola"
    PARABOLA = "parabola"


@dataclass(frozen=True)
class ContourSpec:
    kind: ContourKind = ContourKind.HYPERBOLA
    M: int = 16
    t: float = 1.0
    widen: float = 1.0
    cutoff: float | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ContourKind(self.kind))
        except ValueError:
            raise ValidationError(f"unknown contour kind {self.kind!r}") from None
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError("M must be a positive integer")
        object.__setattr__(self, "M", int(self.M))
        if not (math.isfinite(self.t) and self.t > 0):
            raise ValidationError("t must be positive")
        if not (math.isfinite(self.widen) and self.widen > 0):
            raise ValidationError("widen must be positive")
        if self.cutoff is not None and not math.isfinite(self.cutoff):
            raise ValidationError("cutoff must be finite")

    @property
    def mu(self):
        """Scale of the contour (the hyperbola's mu; for the parabola ``L widen / t``)."""
        if self.kind is ContourKind.HYPERBOLA:
            return self.widen * HYPERBOLA_MU * self.M / self.t
        return (2 * self.M + 1) * self.widen / self.t

    @property
    def delta(self):
        return HYPERBOLA_DELTA if self.kind is ContourKind.HYPERBOLA else None

    @property
    def dxi(self):
        if self.kind is ContourKind.HYPERBOLA:
            return HYPERBOLA_DXI / self.M
        return 2 * math.pi / (2 * self.M + 1)

    def to_dict(self):
        return {
            "contour": self.kind.value,
            "M": self.M,
            "t": self.t,
            "widen": self.widen,
            "cutoff": self.cutoff,
            "mu": self.mu,
            "delta": self.delta,
            "dxi": self.dxi,
        }


@dataclass(frozen=True)
class QuadratureNodes:
    """Contour nodes ordered by increasing parameter.

    ``param[k]`` is the real parameter of node ``k``; the conjugate of node
    ``k`` has parameter ``-param[k]``.
    """

    nodes: np.ndarray
    dz: np.ndarray
    coeffs: np.ndarray
    param: np.ndarray
    spec: ContourSpec
    dropped: int = 0
    symmetry: bool = True

    @property
    def center_index(self):
        hit = np.flatnonzero(self.param == 0)
        return int(hit[0]) if hit.size else None

    @property
    def size(self):
        return self.nodes.size

    def half(self):
        """Indices of the nodes with negative parameter (one per conjugate pair)."""
        return np.flatnonzero(self.param < 0)


def _mirror(param_pos, z_pos, dz_pos, c_pos):
    """Extend nonnegative-parameter data to the full symmetric set."""
    param = np.concatenate([-param_pos[:0:-1], param_pos])
    z = np.concatenate([np.conj(z_pos[:0:-1]), z_pos])
    dz = np.concatenate([-np.conj(dz_pos[:0:-1]), dz_pos])
    c = np.concatenate([np.conj(c_pos[:0:-1]), c_pos])
    return param, z, dz, c


def _finish(spec, param_pos, z_pos, dz_pos):
    c_pos = spec.dxi * dz_pos * np.exp(z_pos * spec.t) / (2j * math.pi)
    param, z, dz, c = _mirror(param_pos, z_pos, dz_pos, c_pos)
    nodes = QuadratureNodes(nodes=z, dz=dz, coeffs=c, param=param, spec=spec)
    if spec.cutoff is not None:
        nodes = nodes_for_negative_real_cutoff(nodes, spec.cutoff)
    return nodes


def hyperbola_nodes(t: float, M: int = 16, widen: float = 1.0, cutoff: float | None = None) -> QuadratureNodes:
    """Nodes ``z = mu (1 - sin(delta - i xi))`` for ``xi = k dxi``, ``k = -M..M``."""
    spec = ContourSpec(ContourKind.HYPERBOLA, M=M, t=t, widen=widen, cutoff=cutoff)
    if widen < 1:
        raise ValidationError("hyperbola widening factor must be at least 1")
    xi = np.arange(spec.M + 1) * spec.dxi
    mu, delta = spec.mu, spec.delta
    # sin(delta - i xi) = sin(delta) cosh(xi) - i cos(delta) sinh(xi)
    z = mu * (1 - math.sin(delta) * np.cosh(xi)) + 1j * mu * math.cos(delta) * np.sinh(xi)
    # dz/dxi = i mu cos(delta - i xi), cos(delta - i xi) = cos(delta) cosh(xi) + i sin(delta) sinh(xi)
    dz = -mu * math.sin(delta) * np.sinh(xi) + 1j * mu * math.cos(delta) * np.cosh(xi)
    return _finish(spec, xi, z, dz)


def parabola_nodes(
    t: float,
    M: int = 16,
    widen: float = 1.0,
    cutoff: float | None = None,
    constants: tuple[float, float, float] = PARABOLA_CONSTANTS,
) -> QuadratureNodes:
    """Parabola ``z(u) = (L widen / t)(p0 - p2 u^2 + i p1 u)`` with ``L = 2M+1``.

    The ``L`` nodes sit at ``u_k = k h`` with ``h = 2 pi / L``, so they cover
    ``(-pi, pi)``.
    """
    spec = ContourSpec(ContourKind.PARABOLA, M=M, t=t, widen=widen, cutoff=cutoff)
    p0, p2, p1 = constants
    scale = spec.mu
    u = np.arange(spec.M + 1) * spec.dxi
    z = scale * (p0 - p2 * u * u) + 1j * scale * p1 * u
    dz = -2 * scale * p2 * u + 1j * scale * p1
    return _finish(spec, u, z, dz)


def build_nodes(spec: ContourSpec) -> QuadratureNodes:
    if spec.kind is ContourKind.HYPERBOLA:
        return hyperbola_nodes(spec.t, spec.M, spec.widen, spec.cutoff)
    return parabola_nodes(spec.t, spec.M, spec.widen, spec.cutoff)


def nodes_for_negative_real_cutoff(nodes: QuadratureNodes, cutoff: float) -> QuadratureNodes:
    """Drop nodes whose real part lies left of ``cutoff``; coefficients unchanged.

    The intended use is a negative cutoff (``exp(z t)`` is negligible far
    left), but any finite value is accepted.
    """
    if not math.isfinite(cutoff):
        raise ValidationError("cutoff must be finite")
    keep = nodes.nodes.real >= cutoff
    if not keep.any():
        raise AllNodesDropped(f"every node lies left of {cutoff}")
    return replace(
        nodes,
        nodes=nodes.nodes[keep],
        dz=nodes.dz[keep],
        coeffs=nodes.coeffs[keep],
        param=nodes.param[keep],
        spec=replace(nodes.spec, cutoff=cutoff),
        dropped=nodes.dropped + int((~keep).sum()),
    )
