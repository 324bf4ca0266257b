"""Disorder ensembles of random Hamiltonians and the seed hierarchy.

Every realization is a pure function of ``(EnsembleSpec, seed)``.  Seeds for
individual realizations are derived from a master seed with
``numpy.random.SeedSequence`` spawn keys, so any subset of realizations can
be generated in any order (or in any worker) with identical results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis as B
from .errors import ParameterError, StatisticsError

GUE = "gue"
CSYK4 = "csyk4"
CSYK2 = "csyk2"
CSYK4_REDUCED = "csyk4-reduced"
MAJORANA_SYK4 = "majorana-syk4"
RICHARDSON = "richardson"
KINDS = (GUE, CSYK4, CSYK2, CSYK4_REDUCED, MAJORANA_SYK4, RICHARDSON)

_SECTOR_KIND = {
    CSYK4: B.COMPLEX_FERMION,
    CSYK2: B.COMPLEX_FERMION,
    CSYK4_REDUCED: B.COMPLEX_FERMION,
    MAJORANA_SYK4: B.MAJORANA,
    RICHARDSON: B.SPIN_HALF,
}


@dataclass(frozen=True)
class EnsembleSpec:
    """One random-Hamiltonian ensemble.

    ``d`` is only used by ``gue``; every other kind takes its dimension from
    ``sector``.  ``sigma_eps`` is the standard deviation of the Richardson
    on-site energies.
    """

    kind: str
    sector: B.SectorSpec | None = None
    d: int | None = None
    J: float = 1.0
    sigma_eps: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown ensemble kind {self.kind!r}")
        if not self.J > 0:
            raise ParameterError(f"coupling J must be positive, got {self.J}")
        if self.kind == GUE:
            if self.d is None or self.d < 2:
                raise ParameterError("gue requires d >= 2")
        else:
            if self.sector is None:
                raise ParameterError(f"{self.kind} requires a sector")
            if self.sector.model_kind != _SECTOR_KIND[self.kind]:
                raise ParameterError(
                    f"{self.kind} needs a {_SECTOR_KIND[self.kind]} sector, "
                    f"got {self.sector.model_kind}")
            if self.kind == MAJORANA_SYK4 and self.sector.N < 4:
                raise ParameterError("majorana-syk4 needs at least 4 Majoranas")
        if self.kind == RICHARDSON and not self.sigma_eps >= 0:
            raise ParameterError("sigma_eps must be non-negative")

    @property
    def dim(self) -> int:
        if self.kind == GUE:
            return int(self.d)
        return B.sector_dimension(self.sector)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "J": self.J}
        if self.kind == GUE:
            out["d"] = self.d
        else:
            out["model_kind"] = self.sector.model_kind
            out["N"] = self.sector.N
            out["q"] = self.sector.q
        if self.kind == RICHARDSON:
            out["sigma_eps"] = self.sigma_eps
        return out


@dataclass(frozen=True)
class HamiltonianDraw:
    matrix: np.ndarray
    ensemble: EnsembleSpec
    seed: int


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed for the realization addressed by ``keys`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def _complex_normal(rng, shape, var):
    """Circular complex Gaussian entries with E|z|^2 = var."""
    s = math.sqrt(var / 2)
    return rng.normal(0.0, s, shape) + 1j * rng.normal(0.0, s, shape)


def _hermitian_gaussian(rng, n, var):
    """Hermitian matrix, real diagonal of variance var, E|H_ij|^2 = var off it."""
    a = _complex_normal(rng, (n, n), var)
    return (a + a.conj().T) / math.sqrt(2)


def reduced_couplings(rank_two: np.ndarray) -> np.ndarray:
    """J^red_{ijkl} = J_ik J_jl - J_il J_jk as a full (n, n, n, n) array."""
    J = np.asarray(rank_two)
    return np.einsum("ik,jl->ijkl", J, J) - np.einsum("il,jk->ijkl", J, J)


def _sample_gue(spec, rng):
    return _hermitian_gaussian(rng, spec.d, 1.0 / spec.d)


def _sample_csyk4(spec, rng):
    n = spec.sector.N
    table = B.pair_hopping_table(spec.sector)
    n_pairs = n * (n - 1) // 2
    var = math.factorial(3) * spec.J ** 2 / n ** 3
    couplings = _hermitian_gaussian(rng, n_pairs, var)
    return table.assemble(couplings.ravel())


def _sample_csyk2(spec, rng):
    n = spec.sector.N
    h = _hermitian_gaussian(rng, n, spec.J ** 2 / n)
    return B.hopping_table(spec.sector).assemble(h.ravel())


def _sample_csyk4_reduced(spec, rng):
    n = spec.sector.N
    J = _hermitian_gaussian(rng, n, spec.J ** 2 / n)
    red = reduced_couplings(J)
    pairs = B.mode_pairs(n)
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    couplings = red[ii[:, None], jj[:, None], ii[None, :], jj[None, :]]
    return B.pair_hopping_table(spec.sector).assemble(couplings.ravel())


def _sample_majorana(spec, rng):
    n = spec.sector.N
    _, stack = B.majorana_quartets(spec.sector)
    J = rng.normal(0.0, math.sqrt(math.factorial(3) * spec.J ** 2 / n ** 3), len(stack))
    return np.tensordot(J, stack, axes=1)


def _sample_richardson(spec, rng):
    n = spec.sector.N
    ops = _spin_ops(spec.sector)
    eps = rng.normal(0.0, spec.sigma_eps, n)
    H = (spec.J / n) * ops.flip.sum(axis=(0, 1))
    H = H + np.tensordot(eps, ops.sz, axes=1)
    return H


_spin_cache: dict = {}


def _spin_ops(sector):
    if sector not in _spin_cache:
        _spin_cache[sector] = B.spin_operators(B.build_sector(sector))
    return _spin_cache[sector]


_SAMPLERS = {
    GUE: _sample_gue,
    CSYK4: _sample_csyk4,
    CSYK2: _sample_csyk2,
    CSYK4_REDUCED: _sample_csyk4_reduced,
    MAJORANA_SYK4: _sample_majorana,
    RICHARDSON: _sample_richardson,
}


def sample(spec: EnsembleSpec, seed: int) -> HamiltonianDraw:
    rng = np.random.default_rng(int(seed))
    H = _SAMPLERS[spec.kind](spec, rng)
    # symmetrise away round-off from the scatter so Hermiticity is exact
    H = (H + H.conj().T) / 2
    return HamiltonianDraw(H, spec, int(seed))


@dataclass(frozen=True)
class DensityCheck:
    eigenvalues: np.ndarray
    counts: np.ndarray
    edges: np.ndarray

    def fraction_outside(self, radius: float) -> float:
        return float(np.mean(np.abs(self.eigenvalues) > radius))

    @property
    def mean(self) -> float:
        return float(self.eigenvalues.mean())

    @property
    def mean_stderr(self) -> float:
        return float(self.eigenvalues.std(ddof=1) / math.sqrt(self.eigenvalues.size))


def gue_density_check(spec: EnsembleSpec, draws, bins: int = 80) -> DensityCheck:
    """Pool the eigenvalues of many GUE draws into a histogram."""
    if spec.kind != GUE:
        raise ParameterError("density check is defined for gue only")
    draws = list(draws)
    if len(draws) < 500:
        raise StatisticsError(f"need at least 500 draws, got {len(draws)}")
    ev = np.concatenate([np.linalg.eigvalsh(dr.matrix) for dr in draws])
    counts, edges = np.histogram(ev, bins=bins, range=(-2.5, 2.5))
    return DensityCheck(ev, counts, edges)
