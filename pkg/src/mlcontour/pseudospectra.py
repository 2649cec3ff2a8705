"""Resolvent norms on points, grids and contours.

``||(zI - A)^{-1}||_2 = 1/sigma_min(zI - A)``, with ``sigma_min`` from
Lanczos bidiagonalization driven by tridiagonal solves. Singular shifts give ``+inf``
rather than an error because grids legitimately touch the spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import QuadratureNodes
from .errors import ValidationError
from .models import TridiagonalGenerator
from .tridiag import SINGULAR_SIGMA, shifted_matrix, smallest_singular_value, smallest_singular_values

__all__ = [
    "resolvent_norm",
    "PsGrid",
    "ps_grid",
    "default_window",
    "level_heights",
    "min_abs_imag_of_level",
    "ResolventProfile",
    "contour_resolvent_profile",
    "RESOLVENT_THRESHOLD",
    "DEFAULT_LEVELS",
]

RESOLVENT_THRESHOLD = 1e3
# log10 of the resolvent-norm levels 1/eps for eps = 1e-2, ..., 1e-10
DEFAULT_LEVELS = (2, 4, 6, 8, 10)


def _norm_from_sigma(sigma):
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(sigma <= SINGULAR_SIGMA, np.inf, 1.0 / sigma)


def resolvent_norm(A: TridiagonalGenerator, z: complex, s: complex = 1.0) -> float:
    """``||(zI - sA)^{-1}||_2``; ``inf`` at singular shifts."""
    sigma = smallest_singular_value(shifted_matrix(A, complex(z), s))
    return float(_norm_from_sigma(sigma))


@dataclass(frozen=True)
class PsGrid:
    """``values[i, j] = log10 ||(z I - A)^{-1}||`` at ``z = re[i] + i im[j]``."""

    re: np.ndarray
    im: np.ndarray
    values: np.ndarray
    converged: np.ndarray

    @property
    def re_range(self):
        return float(self.re[0]), float(self.re[-1])

    @property
    def im_range(self):
        return float(self.im[0]), float(self.im[-1])

    @property
    def nx(self):
        return self.re.size

    @property
    def ny(self):
        return self.im.size

    def points(self):
        return self.re[:, None] + 1j * self.im[None, :]


def default_window(A: TridiagonalGenerator):
    """Gershgorin real interval, and an imaginary window of a quarter of its width each way."""
    radius = np.zeros(A.n)
    radius[:-1] += np.abs(A.sup)
    radius[1:] += np.abs(A.sub)
    lo = float(np.min(A.diag - radius))
    hi = float(np.max(A.diag + radius))
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    half = 0.25 * (hi - lo)
    return (lo, hi), (-half, half)


def _symmetric_axis(lo, hi, n):
    """``linspace`` with exact sign symmetry when ``lo == -hi``."""
    x = np.linspace(lo, hi, n)
    if lo == -hi:
        k = n // 2
        x[n - k :] = -x[:k][::-1]
        if n % 2:
            x[k] = 0.0
    return x


def ps_grid(
    A: TridiagonalGenerator,
    re_range=None,
    im_range=None,
    nx: int = 200,
    ny: int = 200,
    mirror: bool = True,
    tol: float = 1e-8,
) -> PsGrid:
    """Log10 resolvent norms on an ``nx`` by ``ny`` grid.

    When ``im_range`` is symmetric about zero and ``mirror`` is set, only the
    points with ``Im z >= 0`` are evaluated and the rest are copied from
    their conjugates (``A`` is real). Missing ranges default to
    :func:`default_window`.
    """
    if nx < 2 or ny < 2:
        raise ValidationError("nx and ny must be at least 2")
    dre, dim = default_window(A)
    re_range = dre if re_range is None else tuple(map(float, re_range))
    im_range = dim if im_range is None else tuple(map(float, im_range))
    if not (re_range[0] < re_range[1] and im_range[0] < im_range[1]):
        raise ValidationError("ranges must be increasing intervals")
    re = np.linspace(re_range[0], re_range[1], nx)
    im = _symmetric_axis(im_range[0], im_range[1], ny)
    symmetric = mirror and im_range[0] == -im_range[1]
    first = ny // 2 if symmetric else 0
    Z = re[:, None] + 1j * im[None, first:]
    sig, conv = smallest_singular_values(A, Z, tol=tol)
    vals = np.empty((nx, ny))
    ok = np.empty((nx, ny), dtype=bool)
    with np.errstate(divide="ignore"):
        vals[:, first:] = np.log10(_norm_from_sigma(sig))
    ok[:, first:] = conv
    if symmetric:
        # column j mirrors column ny-1-j
        vals[:, :first] = vals[:, ny - 1 : ny - 1 - first : -1]
        ok[:, :first] = ok[:, ny - 1 : ny - 1 - first : -1]
    return PsGrid(re=re, im=im, values=vals, converged=ok)


def level_heights(grid: PsGrid, level: float) -> np.ndarray:
    """Per real-axis column, the largest ``|Im z|`` with ``log10 norm >= level``.

    NaN where the column never reaches the level. Smaller heights mean the
    level curve hugs the real axis more closely.
    """
    mask = grid.values >= level
    h = np.where(mask, np.abs(grid.im)[None, :], -np.inf).max(axis=1)
    return np.where(np.isfinite(h), h, np.nan)


@dataclass
class ResolventProfile:
    nodes: np.ndarray
    norms: np.ndarray
    flagged: np.ndarray
    threshold: float

    @property
    def max(self):
        return float(np.max(self.norms))

    @property
    def argmax(self):
        return int(np.argmax(self.norms))

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "max": self.max,
            "argmax": self.argmax,
            "n_flagged": int(self.flagged.sum()),
        }


def contour_resolvent_profile(
    A: TridiagonalGenerator,
    nodes: QuadratureNodes,
    threshold: float = RESOLVENT_THRESHOLD,
    alpha: float | None = None,
) -> ResolventProfile:
    """Resolvent norm at every contour node, flagging values above ``threshold``.

    With ``alpha`` given the matrix is the solver's ``zI - z^(1-alpha) A``.
    """
    if not threshold > 0:
        raise ValidationError("threshold must be positive")
    z = np.asarray(nodes.nodes, dtype=complex)
    if alpha is None or alpha == 1:
        sig, _ = smallest_singular_values(A, z)
    else:
        if not 0 < alpha <= 1:
            raise ValidationError("alpha must lie in (0, 1]")
        sig = np.array([smallest_singular_value(shifted_matrix(A, zk, zk ** (1 - alpha))) for zk in z])
    norms = _norm_from_sigma(sig)
    return ResolventProfile(nodes=z, norms=norms, flagged=norms > threshold, threshold=float(threshold))


def min_abs_imag_of_level(grid: PsGrid, level: float) -> float:
    """Smallest ``|Im z|`` over cells on the boundary of ``{log10 norm >= level}``."""
    mask = grid.values >= level
    edge = np.zeros_like(mask)
    edge[:-1] |= mask[:-1] & ~mask[1:]
    edge[1:] |= mask[1:] & ~mask[:-1]
    edge[:, :-1] |= mask[:, :-1] & ~mask[:, 1:]
    edge[:, 1:] |= mask[:, 1:] & ~mask[:, :-1]
    if not edge.any():
        return math.nan
    return float(np.abs(np.broadcast_to(grid.im, mask.shape)[edge]).min())
