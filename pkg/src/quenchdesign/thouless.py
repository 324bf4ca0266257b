"""Switch-time sweeps of the late-time frame-potential gap and Thouless-time detection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .ensembles import EnsembleSpec
from .errors import ParameterError
from .evolve import time_grid
from .moments import (GapSeries, MomentSeries, fp_from_overlaps, haar_fp, overlap_matrix,
                      plateau, uncertainty_for_members)
from .protocol import QuenchEnsemble, ScheduleTemplate, draw_members


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of a gap sweep.

    For each switch time the late grid runs log-spaced from ``t_s`` to
    ``T = max(total_time_factor * t_s, t_s + min_late_duration)`` and the
    plateau is the mean over its final ``window_fraction``.
    ``min_late_duration`` keeps the post-quench segment long enough to reach
    the plateau when ``t_s`` itself is short.  ``benchmark`` overrides the
    Haar value the gap is measured against (e.g. ``2**k * k!`` for Majoranas).
    """

    ensemble: EnsembleSpec
    k: int
    switch_times: tuple[float, ...]
    total_time_factor: float = 10.0
    members: int = 64
    window_fraction: float = 0.2
    master_seed: int = 0
    late_points: int = 41
    min_late_duration: float = 0.0
    benchmark: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ts = np.asarray(self.switch_times, dtype=float)
        if len(ts) == 0 or np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
            raise ParameterError("switch_times must be positive and ascending")
        if not self.total_time_factor > 1:
            raise ParameterError("total_time_factor must exceed 1")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.members < 2:
            raise ParameterError("need at least two members")

    def late_window(self, t_s: float) -> np.ndarray:
        T = max(self.total_time_factor * t_s, t_s + self.min_late_duration)
        grid = time_grid(t_s, T, self.late_points, "log")
        n = math.ceil(self.window_fraction * len(grid) - 1e-9)
        return grid[-n:]

    def target(self) -> float:
        if self.benchmark is not None:
            return float(self.benchmark)
        return float(haar_fp(self.k, self.ensemble.dim))


UnitaryFn = Callable[[int, float, np.ndarray], list]


def gap_sweep(cfg: SweepConfig, workers: int = 1, unitaries_fn: UnitaryFn | None = None,
              on_point=None, done: dict | None = None) -> GapSeries:
    """Late-time FP gap for every switch time.

    ``unitaries_fn(index, t_s, times)`` may replace the Hamiltonian protocol
    with any source of member stacks (one (M, d, d) array per time).
    ``done`` maps already finished switch-time indices to their plateau value
    and ``on_point(index, plateau)`` reports new ones (checkpointing hooks).
    """
    done = {} if done is None else dict(done)
    target = cfg.target()
    gaps = []
    for i, t_s in enumerate(cfg.switch_times):
        times = cfg.late_window(t_s)
        if i in done:
            value = done[i]
        else:
            if unitaries_fn is None:
                tmpl = ScheduleTemplate.single(t_s)
                mem = draw_members(cfg.ensemble, cfg.master_seed, cfg.members,
                                   tmpl.n_segments, prefix=(i,), workers=workers)
                ens = QuenchEnsemble(mem, tmpl)
                stacks = (ens.unitaries(t) for t in times)
            else:
                stacks = unitaries_fn(i, t_s, times)
            vals, errs = [], []
            for U in stacks:
                v, e = fp_from_overlaps(overlap_matrix(U), cfg.k)
                vals.append(v)
                errs.append(e)
            series = MomentSeries(times, np.array(vals), np.array(errs), cfg.k)
            value, _ = plateau(series, 1.0)
            if on_point is not None:
                on_point(i, value)
        gaps.append(value - target)
    sigma = uncertainty_for_members(cfg.k, cfg.members)
    return GapSeries(np.asarray(cfg.switch_times, dtype=float), np.array(gaps), sigma, cfg.k)


class ThoulessResult(NamedTuple):
    t_th: float | None
    index: int | None

    @property
    def reached(self) -> bool:
        return self.index is not None


NOT_REACHED = ThoulessResult(None, None)


def detect_thouless(gaps: GapSeries) -> ThoulessResult:
    """First switch time whose gap is within sigma and stays within 2 sigma afterwards."""
    g = np.asarray(gaps.gaps, dtype=float)
    s = gaps.sigma
    for i in range(len(g)):
        if g[i] <= s and np.all(g[i + 1:] <= 2 * s):
            return ThoulessResult(float(gaps.switch_times[i]), i)
    return NOT_REACHED


def decreasing_fit(values) -> np.ndarray:
    """Least-squares non-increasing fit (pool-adjacent-violators)."""
    blocks: list[list[float]] = []
    for v in np.asarray(values, dtype=float):
        blocks.append([v, 1.0])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            v2, w2 = blocks.pop()
            v1, w1 = blocks.pop()
            blocks.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    return np.concatenate([np.full(int(w), v) for v, w in blocks])
