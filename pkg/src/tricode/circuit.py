"""Measurement-only circuit driver.

Each step measures one operator drawn from four classes with probabilities
``(p_x, p_z, p_g/2, p_g/2)``: single-edge ``X_e``, single-edge ``Z_e``, star
``A_s`` and plaquette ``B_p``; the location is uniform within the class.
A trajectory burns in for ``burn_in_factor * N`` measurements and then records
``n_snapshots`` observable snapshots spaced ``n_record`` measurements apart.

Random streams are Philox generators keyed by ``(seed, trajectory_id)``, so a
trajectory is reproducible no matter which worker runs it.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from tricode import _kernels as K
from tricode.errors import ConfigError
from tricode.lattice import KpRegions, Lattice, build, kp_regions
from tricode.observables import ObservableRecord, ensemble_stats, observe
from tricode.pauli import PauliOperator, Tableau, pack_bits, product_state

OBSERVABLES = ("s_t", "chi_z", "chi_x", "w_loop", "t_loop")


class InitialState(str, enum.Enum):
    PRODUCT_X = "ProductX"
    PRODUCT_Z = "ProductZ"
    EXACT_TC = "ExactTC"


@dataclass(frozen=True)
class CircuitConfig:
    l_x: int
    l_y: int
    p_x: float
    p_z: float
    p_g: float
    initial: InitialState = InitialState.PRODUCT_Z
    burn_in_factor: float = 10.0
    n_record: int | None = None
    n_snapshots: int = 10
    seed: int = 0
    trajectory_count: int = 500

    def __post_init__(self):
        try:
            object.__setattr__(self, "initial", InitialState(self.initial))
        except ValueError:
            raise ConfigError(f"unknown initial state {self.initial!r}") from None
        if self.l_x < 3 or self.l_y < 3:
            raise ConfigError(f"lattice ({self.l_x}, {self.l_y}) too small; need >= 3x3")
        probs = (self.p_x, self.p_z, self.p_g)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigError(f"probabilities {probs} must be non-negative and sum to 1")
        if self.burn_in_factor < 0:
            raise ConfigError("burn_in_factor must be >= 0")
        if self.n_snapshots < 1:
            raise ConfigError("n_snapshots must be >= 1")
        if self.n_record is not None and self.n_record < 0:
            raise ConfigError("n_record must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trajectory_count < 1:
            raise ConfigError("trajectory_count must be >= 1")

    @property
    def n_qubits(self) -> int:
        return 3 * self.l_x * self.l_y

    @property
    def burn_in_steps(self) -> int:
        return int(round(self.burn_in_factor * self.n_qubits))

    @property
    def record_spacing(self) -> int:
        return self.n_qubits if self.n_record is None else self.n_record

    @property
    def class_probabilities(self) -> np.ndarray:
        p = np.array([self.p_x, self.p_z, self.p_g / 2, self.p_g / 2])
        return p / p.sum()


@dataclass
class TrajectoryResult:
    trajectory_id: int
    snapshots: list[ObservableRecord]
    wall_time: float = 0.0
    n_random: int = 0
    state: Tableau | None = field(default=None, repr=False)

    def values(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.snapshots], dtype=float)

    def mean(self) -> ObservableRecord:
        return ObservableRecord(**{k: float(self.values(k).mean()) for k in OBSERVABLES})

    @property
    def final(self) -> ObservableRecord:
        return self.snapshots[-1]


@dataclass(frozen=True, eq=False)
class OperatorTable:
    """Packed measurement operators in class order X_e, Z_e, A_s, B_p."""

    x: np.ndarray
    z: np.ndarray
    words: np.ndarray
    nwords: np.ndarray
    offsets: np.ndarray
    counts: np.ndarray

    def operator(self, index: int, n_qubits: int) -> PauliOperator:
        return PauliOperator(self.x[index].copy(), self.z[index].copy(), 1, n_qubits)


@lru_cache(maxsize=16)
def operator_table(lat: Lattice) -> OperatorTable:
    n, nv, nt = lat.n_edges, lat.n_vertices, lat.n_triangles
    m = 2 * n + nv + nt
    xb = np.zeros((m, n), dtype=bool)
    zb = np.zeros((m, n), dtype=bool)
    idx = np.arange(n)
    xb[idx, idx] = True
    zb[n + idx, idx] = True
    xb[2 * n + np.arange(nv)[:, None], lat.star_edges] = True
    zb[2 * n + nv + np.arange(nt)[:, None], lat.triangle_edges] = True
    x = pack_bits(xb)
    z = pack_bits(zb)
    active = (x | z) != 0
    nwords = active.sum(axis=1).astype(np.int64)
    words = np.zeros((m, int(nwords.max())), dtype=np.int64)
    for i, row in enumerate(active):
        w = np.flatnonzero(row)
        words[i, : w.size] = w
    return OperatorTable(
        x=x,
        z=z,
        words=words,
        nwords=nwords,
        offsets=np.array([0, n, 2 * n, 2 * n + nv], dtype=np.int64),
        counts=np.array([n, n, nv, nt], dtype=np.int64),
    )


def trajectory_rng(seed: int, trajectory_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trajectory_id)])))


def draw_schedule(rng: np.random.Generator, table: OperatorTable, probs: np.ndarray, n: int):
    """Operator indices and outcome bits for ``n`` measurement steps."""
    cls = rng.choice(4, size=n, p=probs)
    loc = (rng.random(n) * table.counts[cls]).astype(np.int64)
    ops = table.offsets[cls] + loc
    bits = rng.integers(0, 2, size=n, dtype=np.uint8)
    return ops, bits


def advance(t: Tableau, lat: Lattice, cfg: CircuitConfig, rng: np.random.Generator, n_steps: int) -> int:
    """Run ``n_steps`` measurement steps; returns how many had random outcomes."""
    if n_steps <= 0:
        return 0
    table = operator_table(lat)
    ops, bits = draw_schedule(rng, table, cfg.class_probabilities, n_steps)
    return int(K.run_steps(t.x, t.z, t.r, table.x, table.z, table.words, table.nwords, ops, bits))


def step(t: Tableau, lat: Lattice, cfg: CircuitConfig, rng: np.random.Generator) -> None:
    """One measurement step."""
    advance(t, lat, cfg, rng, 1)


@lru_cache(maxsize=8)
def _tc_reference(lat: Lattice) -> Tableau:
    t = product_state(lat.n_edges, "Z")
    ops = (
        [lat.star_operator(v) for v in range(lat.n_vertices)]
        + [lat.plaquette_operator(p) for p in range(lat.n_triangles)]
        + [lat.zigzag_loop(0, "Z"), lat.zigzag_loop(0, "X")]
    )
    for o in ops:
        # random outcomes are post-selected to +1; the deterministic ones are then
        # products of +1 operators (prod A_s = prod B_p = 1) and come out +1 too
        if t.measure(o, forced=1).value != 1:
            raise RuntimeError("post-selection failed to fix a +1 eigenvalue")
    return t


def prepare_tc_reference(lat: Lattice) -> Tableau:
    """Exact toric-code state with every A_s, B_p, W^c(0), T^c(0) at +1."""
    return _tc_reference(lat).copy()


def initial_state(lat: Lattice, initial: InitialState | str) -> Tableau:
    initial = InitialState(initial)
    if initial is InitialState.PRODUCT_X:
        return product_state(lat.n_edges, "X")
    if initial is InitialState.PRODUCT_Z:
        return product_state(lat.n_edges, "Z")
    return prepare_tc_reference(lat)


def _setup(cfg: CircuitConfig, lat: Lattice | None, regions: KpRegions | None):
    if lat is None:
        lat = build(cfg.l_x, cfg.l_y)
    elif (lat.l_x, lat.l_y) != (cfg.l_x, cfg.l_y):
        raise ConfigError("lattice does not match the configured size")
    if regions is None:
        regions = kp_regions(lat, "auto")
    return lat, regions


def run_trajectory(
    cfg: CircuitConfig,
    lat: Lattice | None = None,
    regions: KpRegions | None = None,
    trajectory_id: int = 0,
    *,
    keep_state: bool = False,
    check_invariants: bool = False,
) -> TrajectoryResult:
    lat, regions = _setup(cfg, lat, regions)
    t0 = time.perf_counter()
    rng = trajectory_rng(cfg.seed, trajectory_id)
    t = initial_state(lat, cfg.initial)
    n_random = advance(t, lat, cfg, rng, cfg.burn_in_steps)
    snaps = []
    for k in range(cfg.n_snapshots):
        if k:
            n_random += advance(t, lat, cfg, rng, cfg.record_spacing)
        if check_invariants:
            t.check_invariants()
        snaps.append(observe(t, lat, regions))
    return TrajectoryResult(
        trajectory_id=trajectory_id,
        snapshots=snaps,
        wall_time=time.perf_counter() - t0,
        n_random=n_random,
        state=t if keep_state else None,
    )


def trace(
    cfg: CircuitConfig,
    lat: Lattice | None = None,
    regions: KpRegions | None = None,
    trajectory_id: int = 0,
    total_steps: int | None = None,
    every: int | None = None,
) -> list[tuple[int, ObservableRecord]]:
    """Observables vs. measurement count, sampled every ``every`` steps from step 0."""
    lat, regions = _setup(cfg, lat, regions)
    every = cfg.n_qubits if every is None else every
    if every < 1:
        raise ConfigError("trace spacing must be >= 1")
    if total_steps is None:
        total_steps = cfg.burn_in_steps + (cfg.n_snapshots - 1) * cfg.record_spacing
    rng = trajectory_rng(cfg.seed, trajectory_id)
    t = initial_state(lat, cfg.initial)
    out = [(0, observe(t, lat, regions))]
    done = 0
    while done + every <= total_steps:
        advance(t, lat, cfg, rng, every)
        done += every
        out.append((done, observe(t, lat, regions)))
    return out


def stationarity_check(results: list[TrajectoryResult], n_sigma: float = 3.0) -> dict[str, tuple[float, float, bool]]:
    """Compare first-half and second-half snapshot means across trajectories.

    Returns ``{observable: (difference, pooled standard error, passed)}``.
    """
    out = {}
    for name in OBSERVABLES:
        first, second = [], []
        for res in results:
            v = res.values(name)
            h = len(v) // 2
            if h == 0:
                raise ValueError("need at least 2 snapshots per trajectory")
            first.append(v[:h].mean())
            second.append(v[h:].mean())
        m1, _, se1 = ensemble_stats(first)
        m2, _, se2 = ensemble_stats(second)
        diff = abs(m1 - m2)
        pooled = float(np.hypot(se1, se2))
        out[name] = (diff, pooled, diff <= n_sigma * pooled or diff < 1e-12)
    return out


def with_seed(cfg: CircuitConfig, seed: int) -> CircuitConfig:
    return replace(cfg, seed=seed)
