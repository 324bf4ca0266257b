"""Frame potentials, spectral form factors and their closed-form benchmarks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError, StatisticsError
from .evolve import SpectralDecomp


@dataclass(frozen=True)
class MomentSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    k: int | None = None
    pair_count: int = 0

    def __post_init__(self):
        if not len(self.times) == len(self.values) == len(self.stderr):
            raise ParameterError("times, values and stderr must have equal length")


@dataclass(frozen=True)
class GapSeries:
    switch_times: np.ndarray
    gaps: np.ndarray
    sigma: float
    k: int | None = None

    def __post_init__(self):
        if len(self.switch_times) != len(self.gaps):
            raise ParameterError("switch_times and gaps must have equal length")


def overlap_matrix(unitaries) -> np.ndarray:
    """G[i, j] = Tr(U_i^dagger U_j) for a stack of unitaries."""
    U = np.asarray(unitaries)
    A = U.reshape(U.shape[0], -1)
    return A.conj() @ A.T


def _pair_abs(G: np.ndarray) -> np.ndarray:
    """|G| made exactly symmetric by mirroring the strict upper triangle."""
    M = G.shape[0]
    iu = np.triu_indices(M, 1)
    out = np.zeros((M, M))
    out[iu] = np.abs(G[iu])
    return out + out.T


def fp_from_overlaps(G: np.ndarray, k: int) -> tuple[float, float]:
    M = G.shape[0]
    if M < 2:
        raise StatisticsError("frame potential needs at least two members")
    if k < 1:
        raise ParameterError("design order k must be >= 1")
    vals = _pair_abs(G) ** (2 * k)
    np.fill_diagonal(vals, 0.0)
    est = math.fsum(vals.ravel()) / (M * (M - 1))
    return est, uncertainty_for_members(k, M)


def frame_potential(unitaries, k: int) -> tuple[float, float]:
    """Mean of |Tr(U^dagger V)|^{2k} over ordered distinct member pairs.

    The second return value is the pair-count uncertainty
    ``uncertainty_for_members(k, M)``.
    """
    return fp_from_overlaps(overlap_matrix(unitaries), k)


def frame_potential_unordered(unitaries, k: int) -> float:
    """Same estimate computed over unordered pairs i < j (cross-check)."""
    G = overlap_matrix(unitaries)
    M = G.shape[0]
    iu = np.triu_indices(M, 1)
    vals = np.abs(G[iu]) ** (2 * k)
    return math.fsum(vals) / (M * (M - 1) // 2)


def overlap_no_quench(a: SpectralDecomp, b: SpectralDecomp, t: float) -> complex:
    """Tr(e^{iH_a t} e^{-iH_b t}) from eigen-data alone.

    Equals sum_{xy} e^{i(lambda_x - mu_y) t} |(V_a^dagger V_b)_{xy}|^2.
    """
    W = np.abs(a.eigenvectors.conj().T @ b.eigenvectors) ** 2
    return complex(np.exp(1j * a.eigenvalues * t) @ W @ np.exp(-1j * b.eigenvalues * t))


def sff(decomps, t: float) -> tuple[float, float]:
    """Disorder average of |sum_a e^{-i lambda_a t}|^2 with its standard error."""
    decomps = list(decomps)
    if len(decomps) < 2:
        raise StatisticsError("spectral form factor needs at least two draws")
    vals = np.array([abs(np.sum(dec.phases(t))) ** 2 for dec in decomps])
    return float(math.fsum(vals) / len(vals)), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def sff_curve(decomps, times) -> tuple[np.ndarray, np.ndarray]:
    lam = np.array([dec.eigenvalues for dec in decomps])
    if lam.shape[0] < 2:
        raise StatisticsError("spectral form factor needs at least two draws")
    times = np.asarray(times, dtype=float)
    tr = np.exp(-1j * lam[:, :, None] * times[None, None, :]).sum(axis=1)
    vals = np.abs(tr) ** 2
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(lam.shape[0])


def partitions(n: int, max_part: int | None = None):
    """Integer partitions of n in non-increasing order."""
    max_part = n if max_part is None else max_part
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def standard_tableaux(shape) -> int:
    """Number of standard Young tableaux f^lambda via the hook-length formula."""
    n = sum(shape)
    conj = [sum(1 for r in shape if r > c) for c in range(shape[0])] if shape else []
    hooks = 1
    for i, row in enumerate(shape):
        for j in range(row):
            hooks *= (row - j - 1) + (conj[j] - i - 1) + 1
    return math.factorial(n) // hooks


@lru_cache(maxsize=None)
def haar_fp(k: int, d: int) -> int:
    """F^(k) of the Haar measure on U(d)."""
    if k < 0 or d < 1:
        raise ParameterError("need k >= 0 and d >= 1")
    if d >= k:
        return math.factorial(k)
    return sum(standard_tableaux(lam) ** 2 for lam in partitions(k) if len(lam) <= d)


def gaussian_haar_fp(N: int, k: int, log: bool = False) -> float:
    """Frame potential of Gaussian (free-fermion) unitaries on N modes, all sectors.

    prod_{n=0}^{N-1} Gamma(n+2k+1) Gamma(n+1) / Gamma(n+k+1)^2, evaluated
    in log space.
    """
    if N < 1 or k < 0:
        raise ParameterError("need N >= 1 and k >= 0")
    lg = math.lgamma
    total = math.fsum(lg(n + 2 * k + 1) + lg(n + 1) - 2 * lg(n + k + 1) for n in range(N))
    if log:
        return total
    try:
        return math.exp(total)
    except OverflowError as exc:
        raise OverflowError("Gaussian-Haar value exceeds float range; use log=True") from exc


def majorana_haar_fp(k: int) -> int:
    if k < 0:
        raise ParameterError("k must be >= 0")
    return 2 ** k * math.factorial(k)


def uncertainty(k: int, n_rand: float) -> float:
    """sqrt(((2k)! - k!) / (sqrt(n_rand) (sqrt(n_rand) - 1))).

    ``n_rand`` counts member pairs M^2, so ``sqrt(n_rand)`` is the number of
    unitaries M in the ensemble.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    M = math.sqrt(n_rand)
    if M < 2:
        raise StatisticsError("uncertainty needs at least two members")
    return math.sqrt((math.factorial(2 * k) - math.factorial(k)) / (M * (M - 1)))


def uncertainty_for_members(k: int, members: int) -> float:
    return uncertainty(k, members * members)


def plateau(series: MomentSeries, window_fraction: float = 0.2) -> tuple[float, float]:
    """Mean over the final ``window_fraction`` of grid points.

    The window stderr is the mean of the point stderrs: neighbouring times
    reuse the same members, so errors are treated as fully correlated.
    """
    if not 0 < window_fraction <= 1:
        raise ParameterError("window_fraction must lie in (0, 1]")
    L = len(series.values)
    n = math.ceil(window_fraction * L - 1e-9)
    if n < 3:
        raise StatisticsError(f"plateau window holds {n} points, need at least 3")
    vals = np.asarray(series.values[-n:], dtype=float)
    errs = np.asarray(series.stderr[-n:], dtype=float)
    return math.fsum(vals) / n, math.fsum(errs) / n
