"""Exact time evolution from one eigendecomposition per Hamiltonian draw."""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, HamiltonianDraw, sample
from .errors import ConfigurationError, NumericalError, ParameterError


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    seed: int | None = None

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    def phases(self, t) -> np.ndarray:
        return np.exp(-1j * self.eigenvalues * t)


def decompose(draw: HamiltonianDraw) -> SpectralDecomp:
    try:
        lam, V = np.linalg.eigh(draw.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed for seed {draw.seed}: {exc}") from exc
    return SpectralDecomp(lam, V, draw.seed)


def propagate(decomp: SpectralDecomp, t: float) -> np.ndarray:
    """U(t) = V exp(-i lambda t) V^dagger."""
    V = decomp.eigenvectors
    return (V * decomp.phases(t)) @ V.conj().T


@dataclass(frozen=True)
class QuenchSchedule:
    """Piecewise-constant evolution: segment r uses draw ``seeds[r]`` for ``durations[r]``."""

    spec: EnsembleSpec
    segments: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ParameterError("a schedule needs at least one segment")
        for _, dur in self.segments:
            if dur < 0:
                raise ParameterError(f"negative segment duration {dur}")

    @classmethod
    def single(cls, spec, seed1, seed2, t_s, t):
        if not 0 <= t_s <= t:
            raise ParameterError(f"need 0 <= t_s <= t, got t_s={t_s}, t={t}")
        return cls(spec, ((int(seed1), float(t_s)), (int(seed2), float(t - t_s))))

    @property
    def total_time(self) -> float:
        return float(sum(dur for _, dur in self.segments))

    @property
    def quenches(self) -> int:
        return len(self.segments) - 1


class DecompCache:
    """Spectral decompositions keyed by (ensemble spec, seed).

    With ``sample=False`` missing entries are an error instead of being drawn.
    """

    def __init__(self, sample: bool = True):
        self._store: dict = {}
        self._lock = threading.Lock()
        self._sample = sample

    def __len__(self):
        return len(self._store)

    def put(self, spec: EnsembleSpec, decomp: SpectralDecomp):
        with self._lock:
            self._store.setdefault((spec, decomp.seed), decomp)

    def get(self, spec: EnsembleSpec, seed: int) -> SpectralDecomp:
        key = (spec, int(seed))
        hit = self._store.get(key)
        if hit is not None:
            return hit
        if not self._sample:
            raise ConfigurationError(f"no decomposition cached for seed {seed}")
        dec = decompose(sample(spec, seed))
        with self._lock:
            return self._store.setdefault(key, dec)


def schedule_unitary(schedule: QuenchSchedule, cache: DecompCache | None = None) -> np.ndarray:
    """Total propagator, earliest segment applied first (rightmost)."""
    cache = DecompCache() if cache is None else cache
    U = None
    for seed, dur in schedule.segments:
        step = propagate(cache.get(schedule.spec, seed), dur)
        U = step if U is None else step @ U
    return U


def time_grid(t_min: float, t_max: float, points: int, scale: str = "linear") -> np.ndarray:
    if not t_min < t_max:
        raise ParameterError(f"need t_min < t_max, got {t_min}, {t_max}")
    if points < 2:
        raise ParameterError("a time grid needs at least two points")
    if scale == "linear":
        return np.linspace(t_min, t_max, points)
    if scale == "log":
        if t_min <= 0:
            raise ParameterError("log grids need t_min > 0")
        grid = np.geomspace(t_min, t_max, points)
        grid[0], grid[-1] = t_min, t_max
        return grid
    raise ParameterError(f"unknown grid scale {scale!r}")
