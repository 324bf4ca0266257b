"""Quench protocols over disorder ensembles.

A member of the unitary ensemble is one independent schedule realization:
``m + 1`` Hamiltonian draws whose seeds come from
``derive_seed(master, *prefix, member, segment)``.  Drawing and diagonalising
members is the parallel axis; everything downstream runs in the calling
process in a fixed order so results do not depend on the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .ensembles import EnsembleSpec, derive_seed, sample
from .evolve import SpectralDecomp, decompose
from .moments import MomentSeries, fp_from_overlaps, overlap_matrix
from .errors import ParameterError

WORKERS_ENV = "QUENCHDESIGN_WORKERS"


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class ScheduleTemplate:
    """Times at which the Hamiltonian is redrawn; ``()`` means no quench."""

    quench_times: tuple[float, ...] = ()

    def __post_init__(self):
        qt = self.quench_times
        if any(t <= 0 for t in qt) or any(b <= a for a, b in zip(qt, qt[1:])):
            raise ParameterError("quench times must be positive and increasing")

    @classmethod
    def single(cls, t_s: float):
        return cls((float(t_s),))

    @classmethod
    def equal_segments(cls, m: int, dt: float):
        return cls(tuple(dt * (r + 1) for r in range(m)))

    @property
    def n_segments(self) -> int:
        return len(self.quench_times) + 1


def member_seeds(master: int, prefix: tuple, member: int, n_segments: int) -> list[int]:
    return [derive_seed(master, *prefix, member, r) for r in range(n_segments)]


def _draw(spec: EnsembleSpec, seeds) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    for s in seeds:
        dec = decompose(sample(spec, s))
        out.append((dec.eigenvalues, dec.eigenvectors))
    return out


def _draw_chunk(spec, master, prefix, members, n_segments):
    with threadpool_limits(1):
        return [_draw(spec, member_seeds(master, prefix, m, n_segments)) for m in members]


def _init_worker():
    threadpool_limits(1)


def draw_members(spec: EnsembleSpec, master: int, n_members: int, n_segments: int,
                 prefix: tuple = (), workers: int = 1, done: dict | None = None,
                 on_chunk=None, chunk: int = 16, pool=None) -> list[list[SpectralDecomp]]:
    """Diagonalise every segment Hamiltonian of members ``0..n_members-1``.

    ``done`` maps member index to already computed ``(eigenvalues, eigenvectors)``
    lists (e.g. from a checkpoint); ``on_chunk(members, results)`` is called
    for every newly computed chunk, in member order.
    """
    done = {} if done is None else dict(done)
    todo = [m for m in range(n_members) if m not in done]
    chunks = [todo[a:a + chunk] for a in range(0, len(todo), chunk)]
    if chunks:
        if workers > 1 or pool is not None:
            own = pool is None
            ex = pool or ProcessPoolExecutor(max_workers=workers, initializer=_init_worker)
            try:
                futures = [ex.submit(_draw_chunk, spec, master, prefix, c, n_segments)
                           for c in chunks]
                for c, fut in zip(chunks, futures):
                    res = fut.result()
                    done.update(zip(c, res))
                    if on_chunk is not None:
                        on_chunk(c, res)
            finally:
                if own:
                    ex.shutdown(cancel_futures=True)
        else:
            for c in chunks:
                res = _draw_chunk(spec, master, prefix, c, n_segments)
                done.update(zip(c, res))
                if on_chunk is not None:
                    on_chunk(c, res)
    seeds = lambda m: member_seeds(master, prefix, m, n_segments)
    return [[SpectralDecomp(lam, V, s) for (lam, V), s in zip(done[m], seeds(m))]
            for m in range(n_members)]


class QuenchEnsemble:
    """Unitaries U_m(t) of every member under a schedule template."""

    def __init__(self, members: list[list[SpectralDecomp]], template: ScheduleTemplate):
        if not members:
            raise ParameterError("empty ensemble")
        if any(len(m) != template.n_segments for m in members):
            raise ParameterError("members must carry one draw per segment")
        self.template = template
        self.bounds = (0.0,) + tuple(template.quench_times)
        M = len(members)
        d = members[0][0].d
        self.lam = np.array([[dec.eigenvalues for dec in mem] for mem in members])
        self.V = np.array([[dec.eigenvectors for dec in mem] for mem in members])
        # B[:, r] = V_r^dagger U(b_r): the state entering segment r, in its eigenbasis
        self.B = np.empty((M, template.n_segments, d, d), dtype=complex)
        prefix = np.broadcast_to(np.eye(d, dtype=complex), (M, d, d)).copy()
        for r in range(template.n_segments):
            Vr = self.V[:, r]
            self.B[:, r] = Vr.conj().transpose(0, 2, 1) @ prefix
            if r + 1 < template.n_segments:
                dur = self.bounds[r + 1] - self.bounds[r]
                ph = np.exp(-1j * self.lam[:, r] * dur)
                prefix = (Vr * ph[:, None, :]) @ self.B[:, r]

    @property
    def size(self) -> int:
        return self.lam.shape[0]

    def unitaries(self, t: float) -> np.ndarray:
        if t < 0:
            raise ParameterError("protocol times must be non-negative")
        r = int(np.searchsorted(self.bounds, t, side="right")) - 1
        ph = np.exp(-1j * self.lam[:, r] * (t - self.bounds[r]))
        return (self.V[:, r] * ph[:, None, :]) @ self.B[:, r]


def fp_series(ensemble: QuenchEnsemble, times, ks) -> dict[int, MomentSeries]:
    times = np.asarray(times, dtype=float)
    M = ensemble.size
    vals = {k: np.empty(len(times)) for k in ks}
    errs = {k: np.empty(len(times)) for k in ks}
    for a, t in enumerate(times):
        G = overlap_matrix(ensemble.unitaries(t))
        for k in ks:
            vals[k][a], errs[k][a] = fp_from_overlaps(G, k)
    return {k: MomentSeries(times, vals[k], errs[k], k, M * (M - 1)) for k in ks}


def run_fp_curve(spec: EnsembleSpec, template: ScheduleTemplate, times, ks, members: int,
                 master: int, workers: int = 1, prefix: tuple = (), **draw_kw):
    mem = draw_members(spec, master, members, template.n_segments, prefix, workers, **draw_kw)
    return fp_series(QuenchEnsemble(mem, template), times, ks)
