"""Mittag-Leffler stochastic simulation.

Waiting times are Mittag-Leffler distributed with survival function
``E_alpha(-a t^alpha)`` for total propensity ``a``; ``alpha = 1`` is the
exponential clock of the Gillespie algorithm. Each path draws from its own
Philox stream, so ensembles are reproducible and order independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PathTooLong, ValidationError
from .models import ModelKind, ModelSpec, initial_state, state_index

__all__ = [
    "RngStream",
    "ml_waiting_time",
    "ml_waiting_times",
    "SamplePath",
    "simulate_path",
    "EnsembleHistogram",
    "ensemble_histogram",
    "DEFAULT_MAX_EVENTS",
]

DEFAULT_MAX_EVENTS = 10_000_000


class RngStream:
    """Buffered uniforms on the open interval (0, 1) from a Philox stream.

    ``(seed, stream)`` fully determines the sequence.
    """

    def __init__(self, seed: int = 0, stream: int = 0, buffer: int = 4096):
        if not 0 <= int(seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if int(stream) < 0:
            raise ValidationError("stream id must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._size = int(buffer)
        self._buf = np.empty(0)
        self._pos = 0

    def _refill(self):
        buf = self._gen.random(self._size)
        # random() samples [0, 1); redraw the (unlikely) exact zeros
        while True:
            zero = buf == 0.0
            if not zero.any():
                break
            buf[zero] = self._gen.random(int(zero.sum()))
        self._buf = buf.tolist()
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        """The next ``n`` values of the same sequence :meth:`uniform` yields."""
        return np.array([self.uniform() for _ in range(int(n))])

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def _zeta(alpha, r2):
    api = alpha * math.pi
    return math.sin(api) / math.tan(api * r2) - math.cos(api)


def ml_waiting_time(rate_sum: float, alpha: float, rng: RngStream) -> float:
    """One Mittag-Leffler waiting time with total rate ``rate_sum``.

    ``tau = -(zeta/rate_sum)^(1/alpha) ln r1`` with
    ``zeta = sin(alpha pi)/tan(alpha pi r2) - cos(alpha pi)``. For
    ``alpha = 1`` only ``r1`` is drawn and ``tau = -ln(r1)/rate_sum``.
    """
    if not rate_sum > 0:
        raise ValidationError("rate_sum must be positive")
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    r1 = rng.uniform()
    if alpha == 1:
        return -math.log(r1) / rate_sum
    r2 = rng.uniform()
    return -((_zeta(alpha, r2) / rate_sum) ** (1.0 / alpha)) * math.log(r1)


def ml_waiting_times(rate_sum: float, alpha: float, rng: RngStream, size: int) -> np.ndarray:
    """``size`` consecutive draws of :func:`ml_waiting_time`, vectorized."""
    if not rate_sum > 0:
        raise ValidationError("rate_sum must be positive")
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    if alpha == 1:
        r1 = rng.uniforms(size)
        return -np.log(r1) / rate_sum
    u = rng.uniforms(2 * size).reshape(size, 2)
    r1, r2 = u[:, 0], u[:, 1]
    api = alpha * math.pi
    zeta = math.sin(api) / np.tan(api * r2) - math.cos(api)
    return -((zeta / rate_sum) ** (1.0 / alpha)) * np.log(r1)


@dataclass
class SamplePath:
    """Event times and the states entered at those times.

    If the last waiting time overshoots ``t_final`` the final entry is
    ``(t_final, pre-jump state)`` and ``truncated`` is set. Times are
    nondecreasing; for small ``alpha`` a waiting time can be below the float
    spacing at ``t`` and two events then share a time stamp.
    """

    times: np.ndarray
    states: np.ndarray
    t_final: float
    truncated: bool

    @property
    def n_events(self):
        return self.times.size - 1

    def state_at(self, t: float) -> np.ndarray:
        """State occupied at time ``t`` (right-continuous)."""
        if not 0 <= t <= self.t_final:
            raise ValidationError("t outside the simulated interval")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.states[k]


def _rate_kernel(spec: ModelSpec):
    """Scalar propensities on plain tuples; mirrors :func:`models.propensities`."""
    kind = spec.kind
    if kind is ModelKind.MONOMOLECULAR:
        c1, c2 = spec.c1, spec.c2
        changes = ((-1, 1), (1, -1))
        return (lambda x: (c1 * x[0], c2 * x[1])), changes
    if kind is ModelKind.BIMOLECULAR:
        c1, c2 = spec.c1, spec.c2
        changes = ((1, 1, -1), (-1, -1, 1))
        return (lambda x: (c1 * x[2], c2 * x[0] * x[1])), changes
    if kind is ModelKind.SCHLOGL:
        k1, k2, k3, k4, B1, B2 = spec.k1, spec.k2, spec.k3, spec.k4, spec.B1, spec.B2
        top = spec.N - 1
        changes = ((1,), (-1,), (1,), (-1,))

        def rates(x):
            n = x[0]
            birth = n < top
            return (
                0.5 * k1 * B1 * n * (n - 1) if birth else 0.0,
                k2 / 6.0 * n * (n - 1) * (n - 2),
                k3 * B2 if birth else 0.0,
                k4 * n,
            )

        return rates, changes
    m = spec.m
    changes = ((-1,), (1,))
    return (lambda x: (float(x[0] > 0), float(x[0] < m))), changes


def simulate_path(
    spec: ModelSpec,
    x0,
    t_final: float,
    alpha: float,
    rng: RngStream,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> SamplePath:
    """One sample path on ``[0, t_final]``.

    States with zero total propensity are absorbing: the path holds there
    until ``t_final``.
    """
    if not (math.isfinite(t_final) and t_final > 0):
        raise ValidationError("t_final must be positive")
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    x0 = np.asarray(x0, dtype=np.int64)
    state_index(spec, x0)
    rates, changes = _rate_kernel(spec)
    x = tuple(int(v) for v in x0)
    times = [0.0]
    states = [x]
    t = 0.0
    truncated = False
    while t < t_final:
        a = rates(x)
        asum = math.fsum(a)
        if asum <= 0:
            times.append(t_final)
            states.append(x)
            break
        tau = ml_waiting_time(asum, alpha, rng)
        r = rng.uniform() * asum
        acc = 0.0
        j = len(a) - 1
        for i, ai in enumerate(a):
            acc += ai
            if r < acc:
                j = i
                break
        while a[j] == 0:  # rounding pushed r past the last open channel
            j -= 1
        t_new = t + tau
        if t_new > t_final:
            times.append(t_final)
            states.append(x)
            truncated = True
            break
        x = tuple(xi + vi for xi, vi in zip(x, changes[j]))
        t = t_new
        times.append(t)
        states.append(x)
        if len(times) > max_events:
            raise PathTooLong(f"path exceeded {max_events} events before t={t_final}")
    return SamplePath(
        times=np.array(times),
        states=np.array(states, dtype=np.int64),
        t_final=float(t_final),
        truncated=truncated,
    )


@dataclass
class EnsembleHistogram:
    t: float
    counts: np.ndarray
    n_samples: int
    coordinate: str

    @property
    def normalized(self):
        return self.counts / self.n_samples


def _coordinate_reader(spec, coordinate):
    """Map a state to a histogram bin; ``None`` means the lattice index."""
    if coordinate is None or coordinate == "index":
        size = spec.N
        return "index", size, (lambda s: state_index(spec, s))
    c = int(coordinate)
    width = len(initial_state(spec, 0))
    if not 0 <= c < width:
        raise ValidationError(f"coordinate must lie in [0, {width})")
    size = spec.N if spec.kind is ModelKind.SCHLOGL else spec.m + 1
    return f"component {c}", size, (lambda s: int(s[c]))


def ensemble_histogram(
    spec: ModelSpec,
    x0,
    t_eval: float,
    alpha: float,
    n_samples: int,
    seed: int = 0,
    first_stream: int = 0,
    coordinate=None,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> EnsembleHistogram:
    """Histogram of the state at ``t_eval`` over ``n_samples`` independent paths.

    Path ``i`` uses ``RngStream(seed, first_stream + i)``. The default bins
    are lattice indices, which for the monomolecular model count ``S2``;
    pass ``coordinate=0`` for ``S1``.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValidationError("n_samples must be a positive integer")
    label, size, read = _coordinate_reader(spec, coordinate)
    counts = np.zeros(size, dtype=np.int64)
    for i in range(int(n_samples)):
        rng = RngStream(seed, first_stream + i)
        path = simulate_path(spec, x0, t_eval, alpha, rng, max_events=max_events)
        counts[read(path.states[-1])] += 1
    return EnsembleHistogram(t=float(t_eval), counts=counts, n_samples=int(n_samples), coordinate=label)
