import numpy as np
import pytest

from quenchdesign.basis import COMPLEX_FERMION, SectorSpec
from quenchdesign.ensembles import CSYK4, GUE, EnsembleSpec
from quenchdesign.errors import ParameterError
from quenchdesign.evolve import DecompCache, QuenchSchedule, schedule_unitary
from quenchdesign.protocol import (WORKERS_ENV, QuenchEnsemble, ScheduleTemplate, default_workers,
                                   draw_members, fp_series, member_seeds, run_fp_curve)

SPEC = EnsembleSpec(CSYK4, SectorSpec(COMPLEX_FERMION, 5, 2))


def test_templates():
    assert ScheduleTemplate().n_segments == 1
    assert ScheduleTemplate.single(3.0).quench_times == (3.0,)
    assert ScheduleTemplate.equal_segments(3, 0.5).quench_times == (0.5, 1.0, 1.5)
    with pytest.raises(ParameterError):
        ScheduleTemplate((2.0, 1.0))


def test_unitaries_match_explicit_schedules():
    tmpl = ScheduleTemplate((1.0, 2.5))
    mem = draw_members(SPEC, 3, 4, tmpl.n_segments)
    ens = QuenchEnsemble(mem, tmpl)
    cache = DecompCache()
    for t in (0.0, 0.6, 1.0, 2.0, 7.0):
        U = ens.unitaries(t)
        for m in range(4):
            seeds = member_seeds(3, (), m, 3)
            bounds = [0.0, 1.0, 2.5]
            segs = []
            for r, s in enumerate(seeds):
                lo = bounds[r]
                hi = bounds[r + 1] if r + 1 < 3 else np.inf
                segs.append((s, max(0.0, min(t, hi) - lo)))
            ref = schedule_unitary(QuenchSchedule(SPEC, tuple(segs)), cache)
            assert np.max(np.abs(U[m] - ref)) <= 1e-10


def test_draw_members_checkpoint_hooks():
    seen = []
    full = draw_members(SPEC, 1, 10, 2, chunk=3, on_chunk=lambda c, r: seen.append(c))
    assert [m for c in seen for m in c] == list(range(10))
    done = {m: [(d.eigenvalues, d.eigenvectors) for d in full[m]] for m in range(5)}
    seen.clear()
    again = draw_members(SPEC, 1, 10, 2, chunk=3, done=done, on_chunk=lambda c, r: seen.append(c))
    assert [m for c in seen for m in c] == list(range(5, 10))
    for a, b in zip(full, again):
        for x, y in zip(a, b):
            assert np.array_equal(x.eigenvalues, y.eigenvalues)
            assert np.array_equal(x.eigenvectors, y.eigenvectors)


def test_worker_independence():
    times = np.geomspace(0.1, 50, 9)
    tmpl = ScheduleTemplate.single(2.0)
    a = run_fp_curve(SPEC, tmpl, times, (1, 2), 12, 5, workers=1)
    b = run_fp_curve(SPEC, tmpl, times, (1, 2), 12, 5, workers=3, chunk=2)
    for k in (1, 2):
        assert np.array_equal(a[k].values, b[k].values)


def test_fp_series_fields():
    ens = QuenchEnsemble(draw_members(EnsembleSpec(GUE, d=6), 0, 5, 1), ScheduleTemplate())
    s = fp_series(ens, [0.0, 1.0], (1,))[1]
    assert s.pair_count == 20 and s.values[0] == pytest.approx(36)


def test_default_workers(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.delenv(WORKERS_ENV)
    assert default_workers() == 1


def test_negative_time():
    ens = QuenchEnsemble(draw_members(SPEC, 0, 2, 1), ScheduleTemplate())
    with pytest.raises(ParameterError):
        ens.unitaries(-1.0)
