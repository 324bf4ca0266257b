"""Experiment configuration, orchestration, checkpointing and output files.

A run directory holds ``manifest.json`` (written at start, finalised at the
end), one CSV per series and a ``checkpoint/`` directory whose contents are
only trusted when its recorded config hash matches the current config.
"""
from __future__ import annotations

import hashlib
import json
import os
import shutil
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .basis import SectorSpec
from .ensembles import _SECTOR_KIND, GUE, MAJORANA_SYK4, EnsembleSpec, derive_seed, sample
from .errors import ConfigurationError, NumericalError, QuenchDesignError
from .evolve import decompose, propagate, time_grid
from .moments import frame_potential, haar_fp, majorana_haar_fp, plateau
from .oracle import (convolution_check, haar_projector, haar_samples,
                     weingarten2_mc_check)
from .protocol import QuenchEnsemble, ScheduleTemplate, default_workers, draw_members, fp_series
from .rmt import fp1_multi_quench, fp1_single_quench, sff_model
from .thouless import SweepConfig, detect_thouless, gap_sweep

EXPERIMENTS = ("fp-curve", "sweep-ts", "predict", "oracle", "haar-bench")
CSV_SCHEMA = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESUME = 4
EXIT_INTERRUPTED = 130


class ResumeRefused(QuenchDesignError):
    pass


class RunInterrupted(QuenchDesignError):
    pass


@dataclass(frozen=True)
class GridSpec:
    t_min: float = 0.1
    t_max: float = 1000.0
    points: int = 61
    scale: str = "log"

    def times(self) -> np.ndarray:
        return time_grid(self.t_min, self.t_max, self.points, self.scale)


@dataclass(frozen=True)
class SweepSpec:
    grid: GridSpec = GridSpec(0.1, 100.0, 25, "log")
    total_time_factor: float = 10.0
    min_late_duration: float = 0.0
    late_points: int = 41
    benchmark: str | float = "haar"


@dataclass(frozen=True)
class OracleSpec:
    mc_samples: int = 100_000
    conv_members: int = 50
    conv_d: int = 8
    conv_time: float = 0.3
    haar_members: int = 2000


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "fp-curve"
    ensemble: EnsembleSpec | None = None
    ks: tuple[int, ...] = (1,)
    grid: GridSpec = GridSpec()
    schedule: ScheduleTemplate = ScheduleTemplate()
    members: int = 64
    seed: int = 0
    workers: int = 1
    out: str = "run"
    window_fraction: float = 0.2
    sweep: SweepSpec = SweepSpec()
    haar_d: int = 16
    oracle: OracleSpec = OracleSpec()
    chunk: int = 16
    source: dict = field(default_factory=dict, compare=False)

    def identity(self) -> dict:
        """Everything that determines the numbers (not where or how fast)."""
        d = {
            "experiment": self.experiment,
            "ensemble": None if self.ensemble is None else self.ensemble.as_dict(),
            "k": list(self.ks),
            "grid": asdict(self.grid),
            "quench_times": list(self.schedule.quench_times),
            "members": self.members,
            "seed": self.seed,
            "window_fraction": self.window_fraction,
        }
        if self.experiment == "sweep-ts":
            d["sweep"] = asdict(self.sweep)
        if self.experiment == "haar-bench":
            d["haar_d"] = self.haar_d
        if self.experiment == "oracle":
            d["oracle"] = asdict(self.oracle)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------- parsing

def _take(table: dict, key: str, typ, where: str, default=None):
    if key not in table:
        return default
    val = table[key]
    try:
        if typ is float and isinstance(val, bool):
            raise TypeError
        if typ is int and (isinstance(val, bool) or (isinstance(val, float) and not val.is_integer())):
            raise TypeError
        return typ(val)
    except (TypeError, ValueError):
        raise ConfigurationError(f"field '{where}{key}' must be {typ.__name__}, got {val!r}")


def _check_keys(table: dict, allowed: set, where: str):
    extra = set(table) - allowed
    if extra:
        raise ConfigurationError(f"unknown field '{where}{sorted(extra)[0]}'")


def _parse_grid(table: dict, where: str, base: GridSpec) -> GridSpec:
    _check_keys(table, {"t_min", "t_max", "points", "scale"}, where)
    g = GridSpec(
        _take(table, "t_min", float, where, base.t_min),
        _take(table, "t_max", float, where, base.t_max),
        _take(table, "points", int, where, base.points),
        _take(table, "scale", str, where, base.scale),
    )
    try:
        g.times()
    except QuenchDesignError as exc:
        raise ConfigurationError(f"field '{where.rstrip('.')}': {exc}") from exc
    return g


def _parse_ensemble(table: dict) -> EnsembleSpec:
    where = "ensemble."
    _check_keys(table, {"kind", "d", "N", "q", "J", "sigma_eps"}, where)
    if "kind" not in table:
        raise ConfigurationError("field 'ensemble.kind' is required")
    kind = _take(table, "kind", str, where)
    J = _take(table, "J", float, where, 1.0)
    sig = _take(table, "sigma_eps", float, where, 1.0)
    try:
        if kind == GUE:
            return EnsembleSpec(kind, d=_take(table, "d", int, where), J=J)
        if kind not in _SECTOR_KIND:
            raise ConfigurationError(f"field 'ensemble.kind': unknown kind {kind!r}")
        sector = SectorSpec(_SECTOR_KIND[kind], _take(table, "N", int, where),
                            _take(table, "q", int, where))
        return EnsembleSpec(kind, sector=sector, J=J, sigma_eps=sig)
    except ConfigurationError:
        raise
    except (QuenchDesignError, TypeError) as exc:
        raise ConfigurationError(f"field 'ensemble': {exc}") from exc


def _parse_schedule(table: dict) -> ScheduleTemplate:
    where = "schedule."
    _check_keys(table, {"switch_time", "quench_times", "quenches", "segment"}, where)
    try:
        if "switch_time" in table:
            return ScheduleTemplate.single(_take(table, "switch_time", float, where))
        if "quench_times" in table:
            return ScheduleTemplate(tuple(float(x) for x in table["quench_times"]))
        if "quenches" in table:
            m = _take(table, "quenches", int, where)
            dt = _take(table, "segment", float, where)
            if dt is None:
                raise ConfigurationError("field 'schedule.segment' is required with quenches")
            return ScheduleTemplate.equal_segments(m, dt)
    except ConfigurationError:
        raise
    except (QuenchDesignError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"field 'schedule': {exc}") from exc
    return ScheduleTemplate()


def parse_config(data: dict, experiment: str | None = None) -> RunConfig:
    top = {"experiment", "seed", "workers", "out", "members", "k", "window_fraction",
           "ensemble", "schedule", "grid", "sweep", "haar_bench", "oracle", "chunk"}
    _check_keys(data, top, "")
    exp = experiment or _take(data, "experiment", str, "", "fp-curve")
    if exp not in EXPERIMENTS:
        raise ConfigurationError(f"field 'experiment': unknown experiment {exp!r}")
    ks = data.get("k", [1, 2, 3, 4] if exp == "haar-bench" else [1])
    if isinstance(ks, int):
        ks = [ks]
    if not isinstance(ks, list) or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in ks):
        raise ConfigurationError("field 'k' must be a positive integer or a list of them")
    cfg = RunConfig(
        experiment=exp,
        ks=tuple(ks),
        members=_take(data, "members", int, "", 64 if exp != "haar-bench" else 200),
        seed=_take(data, "seed", int, "", 0),
        workers=_take(data, "workers", int, "", default_workers()),
        out=_take(data, "out", str, "", "run"),
        window_fraction=_take(data, "window_fraction", float, "", 0.2),
        chunk=_take(data, "chunk", int, "", 16),
        source=data,
    )
    if cfg.members < 2:
        raise ConfigurationError("field 'members' must be at least 2")
    if not 0 < cfg.window_fraction <= 1:
        raise ConfigurationError("field 'window_fraction' must lie in (0, 1]")
    if cfg.workers < 1:
        raise ConfigurationError("field 'workers' must be at least 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigurationError("field 'seed' must be an unsigned 64-bit integer")
    changes = {}
    if "ensemble" in data:
        changes["ensemble"] = _parse_ensemble(data["ensemble"])
    if "schedule" in data:
        changes["schedule"] = _parse_schedule(data["schedule"])
    if "grid" in data:
        changes["grid"] = _parse_grid(data["grid"], "grid.", GridSpec())
    if "sweep" in data:
        sw = dict(data["sweep"])
        where = "sweep."
        _check_keys(sw, {"t_min", "t_max", "points", "scale", "total_time_factor",
                         "min_late_duration", "late_points", "benchmark"}, where)
        grid = _parse_grid({k: sw[k] for k in ("t_min", "t_max", "points", "scale") if k in sw},
                           where, SweepSpec().grid)
        bench = sw.get("benchmark", "haar")
        if not (bench in ("haar", "majorana") or isinstance(bench, (int, float))):
            raise ConfigurationError("field 'sweep.benchmark' must be 'haar', 'majorana' or a number")
        changes["sweep"] = SweepSpec(
            grid,
            _take(sw, "total_time_factor", float, where, 10.0),
            _take(sw, "min_late_duration", float, where, 0.0),
            _take(sw, "late_points", int, where, 41),
            bench,
        )
    if "haar_bench" in data:
        _check_keys(data["haar_bench"], {"d"}, "haar_bench.")
        changes["haar_d"] = _take(data["haar_bench"], "d", int, "haar_bench.", 16)
    if "oracle" in data:
        o = data["oracle"]
        where = "oracle."
        _check_keys(o, set(OracleSpec.__dataclass_fields__), where)
        base = OracleSpec()
        changes["oracle"] = OracleSpec(**{
            name: _take(o, name, type(getattr(base, name)), where, getattr(base, name))
            for name in OracleSpec.__dataclass_fields__})
    cfg = replace(cfg, **changes)
    if exp in ("fp-curve", "sweep-ts", "predict") and cfg.ensemble is None:
        raise ConfigurationError("field 'ensemble' is required for " + exp)
    if exp == "predict" and cfg.ensemble.kind != GUE:
        raise ConfigurationError("field 'ensemble.kind': predict supports gue only")
    return cfg


def load_config(path: str | os.PathLike | None, experiment: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid TOML: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    return parse_config(data, experiment)


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    return repr(float(x))


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="ascii")
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) else _fmt(v))
                              for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


class Manifest:
    def __init__(self, out: Path, cfg: RunConfig):
        self.path = out / "manifest.json"
        self.t0 = time.perf_counter()
        self.data = {
            "toolkit": "quenchdesign",
            "version": __version__,
            "csv_schema": CSV_SCHEMA,
            "experiment": cfg.experiment,
            "config": cfg.identity(),
            "config_hash": cfg.config_hash(),
            "master_seed": cfg.seed,
            "workers": cfg.workers,
            "started": datetime.now(timezone.utc).isoformat(),
            "finished": None,
            "status": "running",
            "timings": {},
            "artifacts": [],
            "summary": {},
        }
        self.write()

    def stage(self, name: str, seconds: float):
        self.data["timings"][name] = round(seconds, 6)

    def write(self):
        _atomic_write(self.path, json.dumps(self.data, indent=2, default=_json_default) + "\n")

    def finish(self, status: str):
        self.data["status"] = status
        self.data["finished"] = datetime.now(timezone.utc).isoformat()
        self.data["timings"]["total"] = round(time.perf_counter() - self.t0, 6)
        self.write()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


class Checkpoint:
    """Append-only store of finished realizations, guarded by the config hash."""

    def __init__(self, out: Path, cfg: RunConfig, resume: bool):
        self.dir = out / "checkpoint"
        self.hash = cfg.config_hash()
        stamp = self.dir / "config_hash"
        if resume and stamp.exists():
            old = stamp.read_text().strip()
            if old != self.hash:
                raise ResumeRefused(
                    f"checkpoint in {self.dir} was written by a different config "
                    f"(hash {old[:12]} != {self.hash[:12]}); refusing to resume")
        elif self.dir.exists():
            shutil.rmtree(self.dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(stamp, self.hash + "\n")

    def load_members(self) -> dict:
        done = {}
        for f in sorted(self.dir.glob("members_*.npz")):
            with np.load(f) as z:
                for m, lam, V in zip(z["members"], z["lam"], z["vec"]):
                    done[int(m)] = [(lam[r], V[r]) for r in range(lam.shape[0])]
        return done

    def save_members(self, members, results):
        lam = np.array([[x[0] for x in res] for res in results])
        vec = np.array([[x[1] for x in res] for res in results])
        path = self.dir / f"members_{members[0]:06d}.npz"
        tmp = self.dir / f"members_{members[0]:06d}.tmp.npz"
        np.savez(tmp, members=np.array(members), lam=lam, vec=vec)
        os.replace(tmp, path)

    def load_points(self) -> dict:
        done = {}
        for f in sorted(self.dir.glob("point_*.json")):
            rec = json.loads(f.read_text())
            done[int(rec["index"])] = float(rec["value"])
        return done

    def save_point(self, index: int, value: float):
        _atomic_write(self.dir / f"point_{index:05d}.json",
                      json.dumps({"index": index, "value": value}) + "\n")


class _Interrupter:
    def __init__(self, after: int | None):
        self.after = after
        self.count = 0

    def tick(self):
        self.count += 1
        if self.after is not None and self.count >= self.after:
            raise RunInterrupted(f"interrupted after {self.count} checkpoint writes")


# ---------------------------------------------------------------- experiments

def _benchmark(cfg: RunConfig, k: int) -> float:
    bench = cfg.sweep.benchmark
    if isinstance(bench, (int, float)):
        return float(bench)
    if bench == "majorana" or cfg.ensemble.kind == MAJORANA_SYK4:
        return float(majorana_haar_fp(k))
    return float(haar_fp(k, cfg.ensemble.dim))


def _run_fp_curve(cfg, out, manifest, ckpt, interrupter):
    done = ckpt.load_members()
    t = time.perf_counter()

    def on_chunk(members, results):
        ckpt.save_members(members, results)
        interrupter.tick()

    mem = draw_members(cfg.ensemble, cfg.seed, cfg.members, cfg.schedule.n_segments,
                       workers=cfg.workers, done=done, on_chunk=on_chunk, chunk=cfg.chunk)
    manifest.stage("draw_and_diagonalise", time.perf_counter() - t)
    t = time.perf_counter()
    series = fp_series(QuenchEnsemble(mem, cfg.schedule), cfg.grid.times(), cfg.ks)
    manifest.stage("frame_potentials", time.perf_counter() - t)
    summary = {}
    for k, s in series.items():
        name = f"fp_k{k}.csv"
        write_csv(out / name, ["time", "fp_estimate", "stderr", "pair_count"],
                  ((tt, v, e, s.pair_count) for tt, v, e in zip(s.times, s.values, s.stderr)))
        manifest.data["artifacts"].append(name)
        value, err = plateau(s, cfg.window_fraction)
        summary[f"k{k}"] = {"plateau": value, "sigma": err,
                            "benchmark": _benchmark(cfg, k)}
    manifest.data["summary"] = summary
    return series


def _run_sweep(cfg, out, manifest, ckpt, interrupter):
    results = {}
    for k in cfg.ks:
        scfg = SweepConfig(
            cfg.ensemble, k, tuple(float(x) for x in cfg.sweep.grid.times()),
            total_time_factor=cfg.sweep.total_time_factor, members=cfg.members,
            window_fraction=cfg.window_fraction, master_seed=cfg.seed,
            late_points=cfg.sweep.late_points, min_late_duration=cfg.sweep.min_late_duration,
            benchmark=_benchmark(cfg, k))
        # each k gets its own checkpoint namespace via the point index offset
        offset = 100_000 * k
        done = {i - offset: v for i, v in ckpt.load_points().items()
                if offset <= i < offset + 100_000}

        def on_point(i, value, offset=offset):
            ckpt.save_point(offset + i, value)
            interrupter.tick()

        t = time.perf_counter()
        gaps = gap_sweep(scfg, workers=cfg.workers, on_point=on_point, done=done)
        manifest.stage(f"sweep_k{k}", time.perf_counter() - t)
        name = f"gaps_k{k}.csv"
        write_csv(out / name, ["switch_time", "gap", "sigma"],
                  ((ts, g, gaps.sigma) for ts, g in zip(gaps.switch_times, gaps.gaps)))
        manifest.data["artifacts"].append(name)
        th = detect_thouless(gaps)
        manifest.data["summary"][f"k{k}"] = {"t_th": th.t_th, "index": th.index,
                                             "sigma": gaps.sigma}
        results[k] = gaps
    return results


def _run_predict(cfg, out, manifest):
    d = cfg.ensemble.dim
    qt = cfg.schedule.quench_times
    rows = []
    for t in cfg.grid.times():
        bounds = [0.0] + [b for b in qt if b < t] + [t]
        durs = [b - a for a, b in zip(bounds, bounds[1:])]
        if len(durs) <= 2:
            t_s = bounds[1] if len(durs) == 2 else t
            exact = fp1_single_quench(t, t_s, d)
            lead = fp1_single_quench(t, t_s, d, exact=False)
        else:
            exact = lead = fp1_multi_quench(durs, d)
        rows.append((t, exact, lead, sff_model(t, d)))
    write_csv(out / "prediction.csv", ["time", "fp1_exact_prefactor", "fp1_leading", "sff_model"], rows)
    manifest.data["artifacts"].append("prediction.csv")
    return rows


def _run_haar_bench(cfg, out, manifest):
    rng = np.random.default_rng(cfg.seed)
    U = haar_samples(cfg.haar_d, cfg.members, rng)
    rows = []
    for k in cfg.ks:
        est, err = frame_potential(U, k)
        rows.append((k, est, err, cfg.members * (cfg.members - 1), haar_fp(k, cfg.haar_d)))
        manifest.data["summary"][f"k{k}"] = {"estimate": est, "stderr": err,
                                             "haar": haar_fp(k, cfg.haar_d)}
    write_csv(out / "haar_bench.csv", ["k", "fp_estimate", "stderr", "pair_count", "haar_value"], rows)
    manifest.data["artifacts"].append("haar_bench.csv")
    return rows


def run_oracle_suite(o: OracleSpec, seed: int) -> list[dict]:
    checks = []
    for d, k in ((3, 1), (3, 2), (2, 3)):
        P = haar_projector(d, k).matrix
        tr = float(np.trace(P).real)
        idem = float(np.max(np.abs(P @ P - P)))
        checks.append({"check": f"trace_projector_d{d}_k{k}", "value": tr,
                       "expected": haar_fp(k, d), "pass": abs(tr - haar_fp(k, d)) <= 1e-9})
        checks.append({"check": f"idempotence_d{d}_k{k}", "value": idem,
                       "expected": 0.0, "pass": idem <= 1e-9})
    patterns = (("wg_d3_pairs", (1, 1, 2, 2, 1, 1, 2, 2), 3),
                ("wg_d2_zero", (1, 2, 1, 1, 1, 1, 1, 1), 2),
                ("wg_d4_coincident", (1, 1, 1, 1, 1, 1, 1, 1), 4))
    for n, (name, pat, d) in enumerate(patterns):
        mc = weingarten2_mc_check(pat, d, o.mc_samples, seed=[seed, n])
        checks.append({"check": name, "value": mc.empirical.real, "expected": mc.analytic,
                       "z": mc.z, "pass": mc.z <= 3})
    rng = np.random.default_rng([seed, 99])
    conv_sets = {
        "conv_haar_d3_k1": haar_samples(3, o.haar_members, rng),
        "conv_identity_d3_k1": np.eye(3, dtype=complex)[None],
        f"conv_gue_d{o.conv_d}_k1": gue_short_time_members(o.conv_d, o.conv_members,
                                                           o.conv_time, seed),
    }
    for name, members in conv_sets.items():
        c = convolution_check(members, 1)
        checks.append({"check": name, "value": c.F_convolved, "expected": c.F_haar,
                       "F_base": c.F_base, "delta": c.delta, "pass": c.bound_ok})
    return checks


def gue_short_time_members(d: int, n: int, t: float, seed: int) -> np.ndarray:
    spec = EnsembleSpec(GUE, d=d)
    return np.array([propagate(decompose(sample(spec, derive_seed(seed, 7, m))), t)
                     for m in range(n)])


def _run_oracle(cfg, out, manifest):
    checks = run_oracle_suite(cfg.oracle, cfg.seed)
    write_csv(out / "oracle.csv", ["check", "value", "expected", "pass"],
              ((c["check"], c["value"], c["expected"], str(bool(c["pass"])).lower()) for c in checks))
    manifest.data["artifacts"].append("oracle.csv")
    manifest.data["summary"] = {c["check"]: bool(c["pass"]) for c in checks}
    return checks


def run(cfg: RunConfig, resume: bool = False, interrupt_after: int | None = None):
    """Execute one experiment; returns the in-memory results.

    ``interrupt_after`` aborts after that many checkpoint writes (used to
    exercise resume).
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = None
    if cfg.experiment in ("fp-curve", "sweep-ts"):
        ckpt = Checkpoint(out, cfg, resume)
    manifest = Manifest(out, cfg)
    interrupter = _Interrupter(interrupt_after)
    try:
        if cfg.experiment == "fp-curve":
            res = _run_fp_curve(cfg, out, manifest, ckpt, interrupter)
        elif cfg.experiment == "sweep-ts":
            res = _run_sweep(cfg, out, manifest, ckpt, interrupter)
        elif cfg.experiment == "predict":
            res = _run_predict(cfg, out, manifest)
        elif cfg.experiment == "haar-bench":
            res = _run_haar_bench(cfg, out, manifest)
        else:
            res = _run_oracle(cfg, out, manifest)
    except (RunInterrupted, KeyboardInterrupt):
        manifest.finish("interrupted")
        raise
    except Exception:
        manifest.finish("failed")
        raise
    manifest.finish("complete")
    return res


def main_run(cfg: RunConfig, resume: bool) -> int:
    try:
        run(cfg, resume=resume)
    except ResumeRefused as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESUME
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RunInterrupted, KeyboardInterrupt):
        print("interrupted; partial checkpoint kept, rerun with --resume", file=sys.stderr)
        return EXIT_INTERRUPTED
    return EXIT_OK
