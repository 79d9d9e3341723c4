"""Experiment orchestration: specs, sweeps, a resumable results store, FSS reports.

Layout of a results directory::

    manifest.json            spec, spec hash, master seed, code version
    cells/<cell>.csv         one row per trajectory (snapshot-averaged observables)
    cells/<cell>.done        completion marker holding the experiment hash
    aggregate.csv            one row per (size, point)

A cell whose marker carries the current spec hash is never recomputed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tricode import __version__
from tricode.analysis import (
    FssInput,
    FssResult,
    bootstrap_fss,
    bootstrap_variance,
    error_floor,
    fit_collapse,
)
from tricode.circuit import OBSERVABLES, CircuitConfig, InitialState, run_trajectory, trace
from tricode.errors import AnalysisError, ConfigError
from tricode.lattice import build, kp_regions
from tricode.observables import ensemble_stats

log = logging.getLogger(__name__)

LINES = ("px+pg=1", "pz+pg=1", "fixed_pg", "simplex")

TRAJECTORY_COLUMNS = ("trajectory_id",) + OBSERVABLES
AGGREGATE_COLUMNS = (
    "l_x", "l_y", "p_x", "p_z", "p_g", "n_traj",
    "tee_mean", "tee_var", "tee_var_err_boot",
    "chi_z_mean", "chi_z_sem", "chi_x_mean", "chi_x_sem",
    "wloop_mean", "wloop_sem", "tloop_mean", "tloop_sem", "tloop_var",
)  # fmt: skip
TRACE_COLUMNS = ("trajectory_id", "step") + OBSERVABLES
BOOT_SAMPLES = 1000


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    os.replace(tmp, path)


def read_csv(path) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# --------------------------------------------------------------------------
# spec


@dataclass(frozen=True)
class ExperimentSpec:
    sizes: tuple[tuple[int, int], ...]
    line: str = "px+pg=1"
    grid: tuple[float, ...] = ()
    fixed_pg: float | None = None
    resolution: int | None = None
    initial: str | None = None
    trajectory_count: int = 500
    n_snapshots: int = 10
    n_record: int | None = None
    burn_in_factor: float = 10.0
    seed: int = 0
    regions: str = "auto"
    out: str = "results"
    workers: int | None = None

    def __post_init__(self):
        sizes = tuple((int(a), int(b)) for a, b in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if not sizes:
            raise ConfigError("spec lists no sizes")
        if any(a < 3 or b < 3 for a, b in sizes):
            raise ConfigError("sizes must be at least 3x3")
        if self.line not in LINES:
            raise ConfigError(f"unknown line {self.line!r}; expected one of {LINES}")
        if self.line == "fixed_pg" and (self.fixed_pg is None or not 0 <= self.fixed_pg <= 1):
            raise ConfigError("fixed_pg line needs 0 <= fixed_pg <= 1")
        if self.line == "simplex":
            if self.resolution is None or self.resolution < 5:
                raise ConfigError("phase-diagram grid resolution must be >= 5")
        elif not self.grid:
            raise ConfigError("spec has an empty grid")
        if self.trajectory_count < 2:
            raise ConfigError("trajectory_count must be >= 2")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.initial is not None:
            try:
                InitialState(self.initial)
            except ValueError:
                raise ConfigError(f"unknown initial state {self.initial!r}") from None
        for pt in self.points():
            if min(pt) < 0 or abs(sum(pt) - 1) > 1e-12:
                raise ConfigError(f"grid point {pt} violates p_x + p_z + p_g = 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        grid = d.get("grid", ())
        if isinstance(grid, dict):
            d["grid"] = tuple(np.round(np.linspace(grid["start"], grid["stop"], int(grid["num"])), 12))
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read spec {path}: {exc}") from None

    @property
    def initial_state(self) -> InitialState:
        if self.initial is not None:
            return InitialState(self.initial)
        return InitialState.PRODUCT_X if self.line == "pz+pg=1" else InitialState.PRODUCT_Z

    def points(self) -> list[tuple[float, float, float]]:
        """(p_x, p_z, p_g) triples in sweep order."""
        r = lambda v: round(float(v), 12)  # noqa: E731
        if self.line == "px+pg=1":
            return [(r(1 - g), 0.0, r(g)) for g in self.grid]
        if self.line == "pz+pg=1":
            return [(0.0, r(1 - g), r(g)) for g in self.grid]
        if self.line == "fixed_pg":
            pg = float(self.fixed_pg)
            return [(r(px), r(1 - pg - px), r(pg)) for px in self.grid]
        n = self.resolution
        return [(r(i / n), r((n - i - k) / n), r(k / n)) for k in range(n + 1) for i in range(n - k + 1)]

    def config(self, size: tuple[int, int], point: tuple[float, float, float]) -> CircuitConfig:
        return CircuitConfig(
            l_x=size[0],
            l_y=size[1],
            p_x=point[0],
            p_z=point[1],
            p_g=point[2],
            initial=self.initial_state,
            burn_in_factor=self.burn_in_factor,
            n_record=self.n_record,
            n_snapshots=self.n_snapshots,
            seed=cell_seed(self.seed, size, point),
            trajectory_count=self.trajectory_count,
        )

    def physics_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d["sizes"] = [list(s) for s in self.sizes]
        d["grid"] = list(self.grid)
        return d

    def spec_hash(self) -> str:
        blob = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cell_seed(master: int, size: tuple[int, int], point: tuple[float, float, float]) -> int:
    """64-bit seed for one (size, point) cell derived from the master seed."""
    key = [int(master), size[0], size[1]] + [int(round(p * 10**9)) for p in point]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def cell_name(size: tuple[int, int], point: tuple[float, float, float]) -> str:
    return f"L{size[0]}x{size[1]}_px{point[0]:.6f}_pz{point[1]:.6f}_pg{point[2]:.6f}"


def default_workers() -> int:
    env = os.environ.get("TRICODE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# execution


def _run_chunk(cfg: CircuitConfig, regions: str, ids: Sequence[int]) -> list[tuple]:
    lat = build(cfg.l_x, cfg.l_y)
    reg = kp_regions(lat, regions)
    rows = []
    for tid in ids:
        res = run_trajectory(cfg, lat, reg, tid)
        m = res.mean()
        rows.append((tid,) + tuple(getattr(m, k) for k in OBSERVABLES))
    return rows


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(n, i + size)) for i in range(0, n, size)]


class ResultsStore:
    def __init__(self, root, spec: ExperimentSpec):
        self.root = Path(root)
        self.spec = spec
        self.cells = self.root / "cells"
        self.hash = spec.spec_hash()

    def prepare(self) -> None:
        self.cells.mkdir(parents=True, exist_ok=True)
        manifest = {
            "spec": self.spec.physics_dict(),
            "spec_hash": self.hash,
            "seed": self.spec.seed,
            "version": f"tricode-{__version__}",
        }
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        path = self.root / "manifest.json"
        if not path.exists() or path.read_text() != text:
            path.write_text(text)

    def cell_path(self, size, point) -> Path:
        return self.cells / (cell_name(size, point) + ".csv")

    def is_done(self, size, point) -> bool:
        marker = self.cell_path(size, point).with_suffix(".done")
        return marker.exists() and marker.read_text().strip() == self.hash

    def write_cell(self, size, point, rows) -> None:
        rows = sorted(rows, key=lambda r: r[0])
        path = self.cell_path(size, point)
        _write_csv(path, TRAJECTORY_COLUMNS, rows)
        path.with_suffix(".done").write_text(self.hash + "\n")

    def read_cell(self, size, point) -> dict[str, np.ndarray]:
        rows = read_csv(self.cell_path(size, point))
        return {k: np.array([r[k] for r in rows]) for k in TRAJECTORY_COLUMNS}


def execute(spec: ExperimentSpec, out=None, workers: int | None = None, chunk: int = 25) -> ResultsStore:
    """Run every missing (size, point) cell of ``spec``; returns the store."""
    for size in spec.sizes:
        kp_regions(build(*size), spec.regions)  # fail fast on bad geometry
    store = ResultsStore(out or spec.out, spec)
    store.prepare()
    todo = [(size, pt) for size in spec.sizes for pt in spec.points() if not store.is_done(size, pt)]
    workers = workers or spec.workers or default_workers()
    log.info("%d cells to run (%d already done) on %d workers", len(todo), len(spec.sizes) * len(spec.points()) - len(todo), workers)
    jobs = [(size, pt, ids) for size, pt in todo for ids in _chunks(spec.trajectory_count, chunk)]
    pending = {(size, pt): [] for size, pt in todo}
    remaining = {(size, pt): len(_chunks(spec.trajectory_count, chunk)) for size, pt in todo}

    def collect(key, rows):
        pending[key].extend(rows)
        remaining[key] -= 1
        if remaining[key] == 0:
            store.write_cell(key[0], key[1], pending.pop(key))

    if workers == 1:
        for size, pt, ids in jobs:
            collect((size, pt), _run_chunk(spec.config(size, pt), spec.regions, ids))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_run_chunk, spec.config(size, pt), spec.regions, list(ids)): (size, pt) for size, pt, ids in jobs}
            for fut in as_completed(futs):
                collect(futs[fut], fut.result())
    write_aggregate(store)
    return store


def aggregate_row(spec: ExperimentSpec, size, point, data: dict[str, np.ndarray]) -> tuple:
    n = len(data["trajectory_id"])
    tee_m, tee_v, _ = ensemble_stats(data["s_t"])
    rng = np.random.default_rng(cell_seed(spec.seed, size, point))
    _, tee_v_err = bootstrap_variance(data["s_t"], BOOT_SAMPLES, rng)
    cz_m, _, cz_s = ensemble_stats(data["chi_z"])
    cx_m, _, cx_s = ensemble_stats(data["chi_x"])
    w_m, _, w_s = ensemble_stats(data["w_loop"])
    t_m, t_v, t_s = ensemble_stats(data["t_loop"])
    return (size[0], size[1], *point, n, tee_m, tee_v, tee_v_err, cz_m, cz_s, cx_m, cx_s, w_m, w_s, t_m, t_s, t_v)


def write_aggregate(store: ResultsStore) -> Path:
    spec = store.spec
    rows = [
        aggregate_row(spec, size, pt, store.read_cell(size, pt))
        for size in spec.sizes
        for pt in spec.points()
    ]
    path = store.root / "aggregate.csv"
    _write_csv(path, AGGREGATE_COLUMNS, rows)
    return path


def cmd_run(spec: ExperimentSpec, out=None, workers: int | None = None) -> Path:
    return execute(spec, out, workers).root


def cmd_phase_diagram(spec: ExperimentSpec, out=None, workers: int | None = None) -> Path:
    """Sweep the probability simplex; writes aggregate.csv and a long-format phase_diagram.csv."""
    if spec.line != "simplex":
        spec = replace(spec, line="simplex", resolution=spec.resolution or 10, grid=())
    store = execute(spec, out, workers)
    rows = []
    names = {"s_t": "tee", "chi_z": "chi_z", "chi_x": "chi_x", "w_loop": "wloop", "t_loop": "tloop"}
    for size in spec.sizes:
        for pt in spec.points():
            data = store.read_cell(size, pt)
            for k in OBSERVABLES:
                m, v, s = ensemble_stats(data[k])
                rows.append((size[0], size[1], *pt, names[k], m, s, v))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("l_x", "l_y", "p_x", "p_z", "p_g", "observable", "mean", "sem", "var"))
    for r in rows:
        w.writerow([r[5] if i == 5 else _fmt(v) for i, v in enumerate(r)])
    path = store.root / "phase_diagram.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def cmd_trace(spec: ExperimentSpec, out=None, total_steps: int | None = None) -> Path:
    """Observables every N steps from step 0 for one (size, point)."""
    pts = spec.points()
    if len(spec.sizes) != 1 or len(pts) != 1:
        raise ConfigError("trace needs exactly one size and one grid point")
    size, pt = spec.sizes[0], pts[0]
    cfg = spec.config(size, pt)
    lat = build(*size)
    reg = kp_regions(lat, spec.regions)
    root = Path(out or spec.out)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for tid in range(spec.trajectory_count):
        for stp, rec in trace(cfg, lat, reg, tid, total_steps=total_steps):
            rows.append((tid, stp) + tuple(getattr(rec, k) for k in OBSERVABLES))
    path = root / "trace.csv"
    _write_csv(path, TRACE_COLUMNS, rows)
    steps = sorted({r[1] for r in rows})
    mean_rows = []
    for stp in steps:
        sel = np.array([r[2:] for r in rows if r[1] == stp])
        mean_rows.append((stp, *sel.mean(axis=0)))
    _write_csv(root / "trace_mean.csv", ("step",) + OBSERVABLES, mean_rows)
    return path


# --------------------------------------------------------------------------
# finite-size scaling on stored results


@dataclass(frozen=True)
class ObservableSpec:
    column: str
    trajectory_column: str
    statistic: str  # "variance" or "mean"
    size_mode: str  # "region" or "lattice"

    @property
    def default_zeta(self):
        return "free" if self.statistic == "variance" else 0.0


OBSERVABLE_SPECS = {
    "tee_var": ObservableSpec("tee_var", "s_t", "variance", "region"),
    "tee_mean": ObservableSpec("tee_mean", "s_t", "mean", "region"),
    "chi_x_mean": ObservableSpec("chi_x_mean", "chi_x", "mean", "lattice"),
    "chi_z_mean": ObservableSpec("chi_z_mean", "chi_z", "mean", "lattice"),
    "wloop_mean": ObservableSpec("wloop_mean", "w_loop", "mean", "lattice"),
    "tloop_mean": ObservableSpec("tloop_mean", "t_loop", "mean", "lattice"),
    "tloop_var": ObservableSpec("tloop_var", "t_loop", "variance", "lattice"),
}
ALIASES = {
    "tee": "tee_var", "chi_te": "tee_var", "chi_x": "chi_x_mean", "chi_z": "chi_z_mean",
    "wloop": "wloop_mean", "tloop": "tloop_mean", "xstring": "chi_x_mean", "zstring": "chi_z_mean",
    "xloop": "tloop_mean", "zloop": "wloop_mean", "xloop_var": "tloop_var",
}  # fmt: skip


def observable_spec(name: str) -> ObservableSpec:
    key = ALIASES.get(name, name)
    if key not in OBSERVABLE_SPECS:
        raise ConfigError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLE_SPECS)}")
    return OBSERVABLE_SPECS[key]


def _row_error(obs: ObservableSpec, row: dict) -> float:
    n = row["n_traj"]
    if obs.column == "tee_var":
        return row["tee_var_err_boot"]
    if obs.column == "tee_mean":
        return float(np.sqrt(row["tee_var"] / n))
    if obs.column == "tloop_var":
        return 0.5 * row["tloop_sem"]
    return row[obs.column.replace("_mean", "_sem")]


def detect_line(rows: list[dict]) -> tuple[str, str]:
    """(line label, parameter column) for a set of aggregate rows."""
    if all(r["p_z"] == 0 for r in rows):
        return "px+pg=1", "p_g"
    if all(r["p_x"] == 0 for r in rows):
        return "pz+pg=1", "p_g"
    pgs = {r["p_g"] for r in rows}
    if len(pgs) == 1:
        return f"fixed_pg={pgs.pop()}", "p_x"
    raise AnalysisError("aggregate rows do not lie on a single line")


def size_of(l_x: int, l_y: int, mode: str, regions: str = "auto") -> float:
    if mode == "lattice":
        return float(l_x)
    return kp_regions(build(int(l_x), int(l_y)), regions).size


def fss_input(rows: list[dict], obs: ObservableSpec, regions: str = "auto", size_mode: str | None = None) -> tuple[FssInput, str, str]:
    line, pcol = detect_line(rows)
    mode = size_mode or obs.size_mode
    errs = np.array([_row_error(obs, r) for r in rows])
    floor = error_floor(errs)
    sizes = [size_of(r["l_x"], r["l_y"], mode, regions) for r in rows]
    data = FssInput.from_arrays(
        sizes,
        [r[pcol] for r in rows],
        [r[obs.column] for r in rows],
        np.maximum(errs, floor),
    )
    return data, line, pcol


def default_init(data: FssInput, obs: ObservableSpec) -> tuple[float, float, float]:
    """Data-driven start: variance peak or half-height crossing of the largest size."""
    s = max(data.series, key=lambda s: s.size)
    if obs.statistic == "variance":
        p0 = float(s.p[np.argmax(s.value)])
    else:
        mid = 0.5 * (s.value.max() + s.value.min())
        p0 = float(s.p[np.argmin(np.abs(s.value - mid))])
    return (p0, 1.5, 0.0)


def collapse_table(data: FssInput, res: FssResult) -> list[tuple]:
    rows = []
    for s, (x, y, dy) in zip(data.series, data.scaled(res.p_c, res.nu, res.zeta)):
        rows.extend((s.size, p, xi, yi, di) for p, xi, yi, di in zip(s.p, x, y, dy))
    return rows


def cmd_fss(
    aggregate,
    observable: str,
    zeta_mode=None,
    init: Sequence[float] | None = None,
    out=None,
    *,
    regions: str = "auto",
    size_mode: str | None = None,
    n_boot: int = 0,
    seed: int = 0,
    require_trajectories: bool = False,
) -> dict:
    """Collapse one observable column; writes fss_<obs>.json and fss_<obs>_collapse.csv."""
    aggregate = Path(aggregate)
    root = aggregate if aggregate.is_dir() else aggregate.parent
    agg_path = aggregate / "aggregate.csv" if aggregate.is_dir() else aggregate
    obs = observable_spec(observable)
    rows = read_csv(agg_path)
    manifest = root / "manifest.json"
    spec = None
    if manifest.exists():
        spec = ExperimentSpec.from_dict(json.loads(manifest.read_text())["spec"])
        regions = spec.regions
    data, line, pcol = fss_input(rows, obs, regions, size_mode)
    if zeta_mode is None:
        zeta_mode = obs.default_zeta
    if init is None:
        init = default_init(data, obs)
    res = fit_collapse(data, init, zeta_mode, seed=seed)
    report = {"observable": obs.column, "line": line, "parameter": pcol, **res.as_dict()}
    if require_trajectories and spec is None:
        raise AnalysisError(f"no trajectory files next to {agg_path}; bootstrap needs a results directory")
    if n_boot > 0 and spec is not None:
        store = ResultsStore(root, spec)
        mode = size_mode or obs.size_mode
        cells = {}
        for r in rows:
            size = (int(r["l_x"]), int(r["l_y"]))
            pt = (r["p_x"], r["p_z"], r["p_g"])
            cells[(size_of(*size, mode, regions), r[pcol])] = store.read_cell(size, pt)[obs.trajectory_column]
        floor = error_floor([_row_error(obs, r) for r in rows])
        boot = bootstrap_fss(
            cells,
            n_boot,
            np.random.default_rng(seed),
            statistic=obs.statistic,
            init=(res.p_c, res.nu, res.zeta),
            zeta_mode=zeta_mode,
            floor=floor,
        )
        report = {"observable": obs.column, "line": line, "parameter": pcol, **boot.as_dict(), "profile": res.as_dict()}
    out = Path(out) if out else root
    out.mkdir(parents=True, exist_ok=True)
    (out / f"fss_{obs.column}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_csv(out / f"fss_{obs.column}_collapse.csv", ("size", "p", "x", "y", "dy"), collapse_table(data, res))
    return report
