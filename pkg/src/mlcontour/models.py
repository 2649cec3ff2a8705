"""Generator matrices, reaction propensities and Fokker-Planck coefficients.

Four one-dimensional reaction models are supported: the monomolecular
isomerisation S1 <-> S2, the bimolecular reaction S1 + S2 <-> S3, the
Schlogl trimolecular scheme and a reflecting random walk on 0..m.

State indexing: formulas use a 1-based column index ``j`` whose state holds
``j - 1`` molecules of the tracked species; storage is 0-based, so column
``j`` lives at array index ``j - 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "ModelKind",
    "ModelSpec",
    "TridiagonalGenerator",
    "PdeCoefficients",
    "build_monomolecular",
    "build_bimolecular",
    "build_schlogl",
    "build_random_walk",
    "build_generator",
    "propensities",
    "pde_coefficients",
    "initial_state",
    "state_index",
    "SCHLOGL_DEFAULTS",
]

SCHLOGL_DEFAULTS = dict(k1=3e-7, k2=1e-4, k3=1e-3, k4=3.5, B1=1e5, B2=2e5)
SCHLOGL_DEFAULT_N = 2000


class ModelKind(str, enum.Enum):
    MONOMOLECULAR = "mono"
    BIMOLECULAR = "bi"
    SCHLOGL = "schlogl"
    RANDOM_WALK = "walk"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "mono": cls.MONOMOLECULAR,
            "monomolecular": cls.MONOMOLECULAR,
            "bi": cls.BIMOLECULAR,
            "bimolecular": cls.BIMOLECULAR,
            "schlogl": cls.SCHLOGL,
            "tri": cls.SCHLOGL,
            "trimolecular": cls.SCHLOGL,
            "walk": cls.RANDOM_WALK,
            "randomwalk": cls.RANDOM_WALK,
            "random-walk": cls.RANDOM_WALK,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValidationError(f"unknown model kind {value!r}") from None


@dataclass(frozen=True)
class ModelSpec:
    """Which reaction model to build, with its rates and truncation size.

    ``N`` is the matrix dimension. For the monomolecular, bimolecular and
    random-walk models it is tied to ``m`` by ``N = m + 1`` and may be left
    as ``None``; for the Schlogl model it is the finite-section size and
    ``m`` is derived as ``N - 1``.
    """

    kind: ModelKind
    m: int | None = None
    c1: float = 1.0
    c2: float = 1.0
    k1: float = SCHLOGL_DEFAULTS["k1"]
    k2: float = SCHLOGL_DEFAULTS["k2"]
    k3: float = SCHLOGL_DEFAULTS["k3"]
    k4: float = SCHLOGL_DEFAULTS["k4"]
    B1: float = SCHLOGL_DEFAULTS["B1"]
    B2: float = SCHLOGL_DEFAULTS["B2"]
    N: int | None = None

    def __post_init__(self):
        kind = ModelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        m, N = self.m, self.N
        if kind is ModelKind.SCHLOGL:
            if N is None:
                N = SCHLOGL_DEFAULT_N if m is None else m + 1
            if m is None:
                m = N - 1
        else:
            if m is None and N is None:
                raise ValidationError(f"{kind.value}: one of m or N is required")
            if m is None:
                m = N - 1
            if N is None:
                N = m + 1
        if int(m) != m or int(N) != N:
            raise ValidationError("m and N must be integers")
        m, N = int(m), int(N)
        if m < 0:
            raise ValidationError("m must be nonnegative")
        if N < 2:
            raise ValidationError(f"matrix dimension N={N} must be at least 2")
        if N != m + 1:
            raise ValidationError(f"N={N} must equal m+1={m + 1}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "N", N)
        for name in self._rate_names():
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"rate parameter {name}={value} must be positive")

    def _rate_names(self):
        if self.kind in (ModelKind.MONOMOLECULAR, ModelKind.BIMOLECULAR):
            return ("c1", "c2")
        if self.kind is ModelKind.SCHLOGL:
            return ("k1", "k2", "k3", "k4", "B1", "B2")
        return ()

    def to_dict(self):
        out = {"model": self.kind.value, "m": self.m, "N": self.N}
        for name in self._rate_names():
            out[name] = getattr(self, name)
        return out


@dataclass(frozen=True)
class TridiagonalGenerator:
    """Tridiagonal matrix stored as three diagonals.

    ``sub[k]`` is ``A[k+1, k]`` and ``sup[k]`` is ``A[k, k+1]``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        sub = np.array(self.sub, dtype=float)
        diag = np.array(self.diag, dtype=float)
        sup = np.array(self.sup, dtype=float)
        if diag.ndim != 1 or diag.size < 1:
            raise ValidationError("diag must be a nonempty vector")
        if sub.shape != (diag.size - 1,) or sup.shape != (diag.size - 1,):
            raise ValidationError("sub and sup must have length n-1")
        for arr in (sub, diag, sup):
            arr.setflags(write=False)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "sup", sup)

    @property
    def n(self):
        return self.diag.size

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A, dtype=float)
        return cls(np.diag(A, -1), np.diag(A), np.diag(A, 1))

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def matvec(self, x):
        x = np.asarray(x)
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def rmatvec(self, x):
        """Product with the transpose."""
        x = np.asarray(x)
        y = self.diag * x
        y[:-1] += self.sub * x[1:]
        y[1:] += self.sup * x[:-1]
        return y

    def norm_inf(self):
        row = np.abs(self.diag).copy()
        row[1:] += np.abs(self.sub)
        row[:-1] += np.abs(self.sup)
        return float(row.max())

    def column_sums(self):
        s = self.diag.copy()
        s[:-1] += self.sub
        s[1:] += self.sup
        return s

    def is_generator(self):
        return bool(np.all(self.sub >= 0) and np.all(self.sup >= 0))

    def to_dict(self):
        return {
            "n": self.n,
            "sub": self.sub.tolist(),
            "diag": self.diag.tolist(),
            "sup": self.sup.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        gen = cls(data["sub"], data["diag"], data["sup"])
        if "n" in data and int(data["n"]) != gen.n:
            raise ValidationError(f"matrix record says n={data['n']} but has {gen.n} diagonal entries")
        return gen


def _close_columns(sub, sup):
    """Diagonal that makes every column sum to zero."""
    diag = np.zeros(sub.size + 1)
    diag[:-1] -= sub
    diag[1:] -= sup
    return diag


def _check_kind(spec, kind):
    if spec.kind is not kind:
        raise ValidationError(f"expected a {kind.value} model, got {spec.kind.value}")


def build_monomolecular(spec: ModelSpec) -> TridiagonalGenerator:
    _check_kind(spec, ModelKind.MONOMOLECULAR)
    m = spec.m
    j = np.arange(1, spec.N + 1, dtype=float)
    # column j -> state with j-1 molecules of S2
    sup = spec.c2 * (j[1:] - 1)
    sub = spec.c1 * (m - j[:-1] + 1)
    return TridiagonalGenerator(sub, _close_columns(sub, sup), sup)


def build_bimolecular(spec: ModelSpec) -> TridiagonalGenerator:
    _check_kind(spec, ModelKind.BIMOLECULAR)
    m = spec.m
    j = np.arange(1, spec.N + 1, dtype=float)
    # column j -> state with j-1 molecules of S3
    sup = spec.c1 * (j[1:] - 1)
    sub = spec.c2 * (m - j[:-1] + 1) ** 2
    return TridiagonalGenerator(sub, _close_columns(sub, sup), sup)


def _schlogl_rates(spec, x):
    """Birth and death rates of the Schlogl scheme at molecule count ``x``."""
    x = np.asarray(x, dtype=float)
    birth = spec.k3 * spec.B2 + 0.5 * spec.k1 * spec.B1 * x * (x - 1)
    death = spec.k2 / 6.0 * x * (x - 1) * (x - 2) + spec.k4 * x
    return birth, death


def build_schlogl(spec: ModelSpec, conservative: bool = True) -> TridiagonalGenerator:
    """Finite section of the Schlogl generator.

    With ``conservative=True`` (the default) the last column omits the birth
    rate out of the section, so every column sums to zero and the truncated
    chain keeps its probability mass. ``conservative=False`` keeps the full
    diagonal of the infinite matrix in the last column.
    """
    _check_kind(spec, ModelKind.SCHLOGL)
    x = np.arange(spec.N, dtype=float)
    birth, death = _schlogl_rates(spec, x)
    sub = birth[:-1]
    sup = death[1:]
    diag = _close_columns(sub, sup)
    if not conservative:
        diag[-1] -= birth[-1]
    if not (np.all(np.isfinite(sub)) and np.all(np.isfinite(sup)) and np.all(np.isfinite(diag))):
        raise NumericalError("Schlogl matrix entries overflowed")
    return TridiagonalGenerator(sub, diag, sup)


def build_random_walk(spec: ModelSpec) -> TridiagonalGenerator:
    _check_kind(spec, ModelKind.RANDOM_WALK)
    ones = np.ones(spec.N - 1)
    return TridiagonalGenerator(ones, _close_columns(ones, ones), ones)


_BUILDERS = {
    ModelKind.MONOMOLECULAR: build_monomolecular,
    ModelKind.BIMOLECULAR: build_bimolecular,
    ModelKind.SCHLOGL: build_schlogl,
    ModelKind.RANDOM_WALK: build_random_walk,
}


def build_generator(spec: ModelSpec) -> TridiagonalGenerator:
    return _BUILDERS[spec.kind](spec)


# -- stochastic simulation semantics ----------------------------------------

_CHANGES = {
    ModelKind.MONOMOLECULAR: np.array([[-1, 1], [1, -1]]),
    ModelKind.BIMOLECULAR: np.array([[1, 1, -1], [-1, -1, 1]]),
    ModelKind.SCHLOGL: np.array([[1], [-1], [1], [-1]]),
    ModelKind.RANDOM_WALK: np.array([[-1], [1]]),
}


def initial_state(spec: ModelSpec, index: int = 0) -> np.ndarray:
    """Species vector of the lattice state at storage ``index``.

    Monomolecular states are ``(S1, S2)`` with ``S2 = index``; bimolecular
    states are ``(S1, S2, S3)`` with ``S3 = index``; Schlogl and random-walk
    states are the single count ``(index,)``.
    """
    if not 0 <= index < spec.N:
        raise ValidationError(f"state index {index} outside 0..{spec.N - 1}")
    m = spec.m
    if spec.kind is ModelKind.MONOMOLECULAR:
        return np.array([m - index, index])
    if spec.kind is ModelKind.BIMOLECULAR:
        return np.array([m - index, m - index, index])
    return np.array([index])


def state_index(spec: ModelSpec, state) -> int:
    """Inverse of :func:`initial_state`; validates the lattice."""
    state = np.asarray(state)
    m = spec.m
    kind = spec.kind
    if kind is ModelKind.MONOMOLECULAR:
        ok = state.shape == (2,) and state[0] + state[1] == m and state.min() >= 0
        idx = state[1] if state.shape == (2,) else -1
    elif kind is ModelKind.BIMOLECULAR:
        ok = (
            state.shape == (3,)
            and state[0] == state[1]
            and state[0] + state[2] == m
            and state.min() >= 0
        )
        idx = state[2] if state.shape == (3,) else -1
    else:
        ok = state.shape == (1,) and 0 <= state[0] <= spec.N - 1
        idx = state[0] if state.shape == (1,) else -1
    if not ok:
        raise ValidationError(f"state {state.tolist()} is not on the {kind.value} lattice")
    return int(idx)


def propensities(spec: ModelSpec, state) -> tuple[np.ndarray, np.ndarray]:
    """Reaction-channel rates at ``state`` and the matching change vectors.

    Rows of the returned change array correspond to the channels.
    """
    state = np.asarray(state)
    idx = state_index(spec, state)
    kind = spec.kind
    if kind is ModelKind.MONOMOLECULAR:
        x1, x2 = state
        rates = np.array([spec.c1 * x1, spec.c2 * x2], dtype=float)
    elif kind is ModelKind.BIMOLECULAR:
        x1, x2, x3 = state
        rates = np.array([spec.c1 * x3, spec.c2 * x1 * x2], dtype=float)
    elif kind is ModelKind.SCHLOGL:
        x = float(state[0])
        births = 0.5 * spec.k1 * spec.B1 * x * (x - 1), spec.k3 * spec.B2
        deaths = spec.k2 / 6.0 * x * (x - 1) * (x - 2), spec.k4 * x
        rates = np.array([births[0], deaths[0], births[1], deaths[1]])
        if idx == spec.N - 1:
            # births would leave the finite section
            rates[0] = rates[2] = 0.0
    else:
        x = state[0]
        rates = np.array([float(x > 0), float(x < spec.m)])
    return rates, _CHANGES[kind]


# -- Fokker-Planck coefficients ----------------------------------------------


@dataclass(frozen=True)
class PdeCoefficients:
    """Drift ``a``, diffusion ``b`` and ``B = -a + b'/2`` on ``[0, m]``.

    The derivatives ``db`` and ``dB`` are analytic (all coefficients here are
    polynomials).
    """

    a: Callable
    b: Callable
    db: Callable
    B: Callable
    dB: Callable
    m: float
    kind: ModelKind = field(default=None)


def pde_coefficients(spec: ModelSpec) -> PdeCoefficients:
    kind = spec.kind
    m = float(spec.m)
    if kind is ModelKind.MONOMOLECULAR:
        c1, c2 = spec.c1, spec.c2

        def a(x):
            return -c1 * x + c2 * (m - x)

        def b(x):
            return c1 * x + c2 * (m - x)

        def db(x):
            return (c1 - c2) + 0.0 * np.asarray(x, dtype=float)

        def dB(x):
            return (c1 + c2) + 0.0 * np.asarray(x, dtype=float)

    elif kind is ModelKind.BIMOLECULAR:
        c1, c2 = spec.c1, spec.c2

        def a(x):
            return -c1 * x + c2 * (m - x) ** 2

        def b(x):
            return c1 * x + c2 * (m - x) ** 2

        def db(x):
            return c1 - 2 * c2 * (m - x)

        def dB(x):
            return c1 + 2 * c2 * (m - x) + c2

    elif kind is ModelKind.SCHLOGL:
        k1, k2, k3, k4, B1, B2 = spec.k1, spec.k2, spec.k3, spec.k4, spec.B1, spec.B2

        def a(x):
            return k3 * B2 + 0.5 * k1 * B1 * x * (x - 1) - k2 / 6.0 * x * (x - 1) * (x - 2) - k4 * x

        def b(x):
            return k3 * B2 + 0.5 * k1 * B1 * x * (x - 1) + k2 / 6.0 * x * (x - 1) * (x - 2) + k4 * x

        def da(x):
            return 0.5 * k1 * B1 * (2 * x - 1) - k2 / 6.0 * (3 * x * x - 6 * x + 2) - k4

        def db(x):
            return 0.5 * k1 * B1 * (2 * x - 1) + k2 / 6.0 * (3 * x * x - 6 * x + 2) + k4

        def d2b(x):
            return k1 * B1 + k2 / 6.0 * (6 * x - 6)

        def dB(x):
            return -da(x) + 0.5 * d2b(x)

    else:
        raise ValidationError(f"no Fokker-Planck coefficients are defined for the {kind.value} model")

    def B(x):
        return -a(x) + 0.5 * db(x)

    return PdeCoefficients(a=a, b=b, db=db, B=B, dB=dB, m=m, kind=kind)
