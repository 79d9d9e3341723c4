"""Finite-size-scaling collapse and bootstrap error estimation.

The scaling ansatz is ``value = L**zeta * F((p - p_c) * L**(1/nu))``. Collapse
quality follows the Houdayer-Hartmann construction: every rescaled point is
compared with a weighted straight line through the two bracketing points of
each other size, and the squared deviations are normalized by the combined
variance. A perfect collapse with correctly sized error bars scores about 1.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from tricode.errors import AnalysisError, FitFailure, InsufficientDataError, NoOverlapError

log = logging.getLogger(__name__)

BOUNDS = ((0.0, 1.0), (0.3, 5.0), (-2.0, 4.0))
_BAD = 1e12


@dataclass(frozen=True)
class FssSeries:
    size: float
    p: np.ndarray
    value: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.value, dtype=float)
        e = np.asarray(self.stderr, dtype=float)
        if not (p.shape == v.shape == e.shape) or p.ndim != 1:
            raise ValueError("p, value and stderr must be 1-d arrays of equal length")
        if self.size <= 0:
            raise ValueError("size must be positive")
        if np.any(~(e > 0)):
            raise ValueError("stderr must be strictly positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        order = np.argsort(p, kind="stable")
        object.__setattr__(self, "p", p[order])
        object.__setattr__(self, "value", v[order])
        object.__setattr__(self, "stderr", e[order])


@dataclass(frozen=True)
class FssInput:
    series: tuple[FssSeries, ...]

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise InsufficientDataError("no data series")

    @classmethod
    def from_arrays(cls, sizes, p, value, stderr) -> "FssInput":
        sizes = np.asarray(sizes, dtype=float)
        p, value, stderr = (np.asarray(a, dtype=float) for a in (p, value, stderr))
        out = []
        for s in np.unique(sizes):
            m = sizes == s
            out.append(FssSeries(float(s), p[m], value[m], stderr[m]))
        return cls(tuple(out))

    @property
    def sizes(self) -> list[float]:
        return [s.size for s in self.series]

    @property
    def n_points(self) -> int:
        return sum(len(s.p) for s in self.series)

    def require(self, min_sizes: int = 3, min_points: int = 5) -> None:
        if len(set(self.sizes)) < min_sizes:
            raise InsufficientDataError(f"need >= {min_sizes} distinct sizes, got {len(set(self.sizes))}")
        for s in self.series:
            if len(s.p) < min_points:
                raise InsufficientDataError(f"size {s.size}: need >= {min_points} points, got {len(s.p)}")

    def scaled(self, p_c: float, nu: float, zeta: float) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        out = []
        for s in self.series:
            f = s.size ** (-zeta)
            out.append(((s.p - p_c) * s.size ** (1.0 / nu), s.value * f, s.stderr * f))
        return out


@dataclass(frozen=True)
class FssResult:
    p_c: float
    nu: float
    zeta: float
    p_c_err: float
    nu_err: float
    zeta_err: float
    quality: float
    method: str = "profile"
    zeta_fixed: bool = False
    n_boot: int = 0
    n_failed: int = 0
    warnings: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "p_c": self.p_c,
            "p_c_err": self.p_c_err,
            "nu": self.nu,
            "nu_err": self.nu_err,
            "zeta": self.zeta,
            "zeta_err": self.zeta_err,
            "quality": self.quality,
            "method": self.method,
            "zeta_fixed": self.zeta_fixed,
            "n_boot": self.n_boot,
            "n_failed": self.n_failed,
            "warnings": list(self.warnings),
        }


def collapse_quality(data: FssInput, p_c: float, nu: float, zeta: float) -> float:
    if not nu > 0:
        raise ValueError("nu must be positive")
    scaled = data.scaled(p_c, nu, zeta)
    terms = []
    for i, (xi, yi, ei) in enumerate(scaled):
        k0 = np.zeros_like(xi)
        kx = np.zeros_like(xi)
        kxx = np.zeros_like(xi)
        ky = np.zeros_like(xi)
        kxy = np.zeros_like(xi)
        hits = np.zeros(xi.shape, dtype=int)
        for j, (xo, yo, eo) in enumerate(scaled):
            if j == i or len(xo) < 2:
                continue
            k = np.searchsorted(xo, xi, side="right")
            ok = (k >= 1) & (k < len(xo))
            if not ok.any():
                continue
            hits += ok
            for idx in (k[ok] - 1, k[ok]):
                w = 1.0 / eo[idx] ** 2
                x = xo[idx]
                k0[ok] += w
                kx[ok] += w * x
                kxx[ok] += w * x * x
                ky[ok] += w * yo[idx]
                kxy[ok] += w * x * yo[idx]
        delta = k0 * kxx - kx * kx
        use = (hits > 0) & (delta > 1e-12 * np.maximum(k0 * kxx, 1e-300))
        if not use.any():
            continue
        x = xi[use]
        d = delta[use]
        y_fit = (kxx[use] * ky[use] - kx[use] * kxy[use] + x * (k0[use] * kxy[use] - kx[use] * ky[use])) / d
        var_fit = (kxx[use] - 2 * x * kx[use] + x * x * k0[use]) / d
        terms.append((yi[use] - y_fit) ** 2 / (ei[use] ** 2 + var_fit))
    if not terms:
        raise NoOverlapError("rescaled curves of different sizes do not overlap")
    return float(np.concatenate(terms).mean())


def _zeta_spec(zeta_mode) -> float | None:
    if zeta_mode in (None, "free"):
        return None
    if isinstance(zeta_mode, str) and zeta_mode.startswith("fixed"):
        inner = zeta_mode[5:].strip("():= ")
        return float(inner) if inner else 0.0
    return float(zeta_mode)


def _profile_errors(f, best: np.ndarray, s_min: float, bounds) -> np.ndarray:
    """Half-width of the region where quality stays within +1 of its minimum."""
    errs = np.zeros(len(best))
    for k, (lo, hi) in enumerate(bounds):
        widths = []
        for direction, limit in ((1.0, hi), (-1.0, lo)):
            room = (limit - best[k]) * direction
            if room <= 0:
                widths.append(0.0)
                continue

            def g(d, k=k, direction=direction):
                th = best.copy()
                th[k] += direction * d
                return f(th) - s_min - 1.0

            step = min(room, 1e-3 * max(1.0, abs(best[k])))
            d_prev = 0.0
            found = None
            while True:
                if g(step) > 0:
                    found = brentq(g, d_prev, step, xtol=1e-6) if g(d_prev) < 0 else step
                    break
                if step >= room:
                    break
                d_prev = step
                step = min(room, step * 2)
            widths.append(room if found is None else found)
        errs[k] = 0.5 * sum(widths)
    return errs


def fit_collapse(
    data: FssInput,
    init: Sequence[float] = (0.5, 1.0, 0.0),
    zeta_mode="free",
    *,
    seed: int = 0,
    restarts: int = 3,
    max_iter: int = 2000,
    profile: bool = True,
    bounds=BOUNDS,
) -> FssResult:
    """Minimize collapse quality over (p_c, nu[, zeta]) by bounded Nelder-Mead.

    ``zeta_mode`` is ``"free"`` or a fixed value (``0.0``, ``"fixed"``,
    ``"fixed(0.5)"``). The best of ``1 + restarts`` starts is kept; errors come
    from the quality profile along each free axis.
    """
    data.require()
    fixed = _zeta_spec(zeta_mode)
    init = np.asarray(init, dtype=float)
    if init.shape != (3,):
        raise ValueError("init must be (p_c, nu, zeta)")
    free_bounds = list(bounds[:2]) if fixed is not None else list(bounds)
    x0 = init[:2] if fixed is not None else init.copy()
    for v, (lo, hi) in zip(x0, free_bounds):
        if not lo <= v <= hi:
            raise ValueError(f"initial value {v} outside bounds [{lo}, {hi}]")

    def full(th):
        return (th[0], th[1], fixed) if fixed is not None else (th[0], th[1], th[2])

    def f(th):
        for v, (lo, hi) in zip(th, free_bounds):
            if not lo <= v <= hi:
                return _BAD
        try:
            return collapse_quality(data, *full(th))
        except NoOverlapError:
            return _BAD

    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in free_bounds])
    hi = np.array([b[1] for b in free_bounds])
    steps = np.array([0.02, 0.1 * x0[1], 0.1][: len(x0)])
    starts = [x0]
    for _ in range(restarts):
        jitter = np.array([rng.uniform(-0.05, 0.05), x0[1] * (rng.uniform(0.8, 1.25) - 1), rng.uniform(-0.2, 0.2)])[: len(x0)]
        starts.append(np.clip(x0 + jitter, lo, hi))

    best_x, best_f, converged = None, np.inf, False
    for s in starts:
        simplex = np.vstack([s] + [np.clip(s + np.eye(len(s))[k] * steps[k], lo, hi) for k in range(len(s))])
        for k in range(1, len(simplex)):
            if np.allclose(simplex[k], s):
                simplex[k] = np.clip(s - np.eye(len(s))[k - 1] * steps[k - 1], lo, hi)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                f,
                s,
                method="Nelder-Mead",
                bounds=free_bounds,
                options={"maxiter": max_iter, "xatol": 1e-6, "fatol": 1e-9, "initial_simplex": simplex},
            )
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        converged |= bool(res.success) and res.fun < _BAD
    if not converged or best_f >= _BAD:
        raise FitFailure("collapse fit did not converge", best=None if best_x is None else full(best_x), quality=best_f)

    errs = _profile_errors(f, best_x, best_f, free_bounds) if profile else np.zeros(len(best_x))
    p_c, nu, zeta = full(best_x)
    return FssResult(
        p_c=float(p_c),
        nu=float(nu),
        zeta=float(zeta),
        p_c_err=float(errs[0]),
        nu_err=float(errs[1]),
        zeta_err=float(errs[2]) if fixed is None else 0.0,
        quality=best_f,
        method="profile" if profile else "none",
        zeta_fixed=fixed is not None,
    )


def bootstrap_variance(samples, n_boot: int = 1000, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Mean and spread of the unbiased variance over ``n_boot`` resamples."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientDataError("need at least 2 samples")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    v = x[idx].var(axis=1, ddof=1)
    return float(v.mean()), float(v.std(ddof=1)) if n_boot > 1 else 0.0


def sem_variance_error(samples) -> float:
    """Half the standard error of the mean, used as a cheap variance error bar."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientDataError("need at least 2 samples")
    return 0.5 * float(x.std(ddof=1)) / np.sqrt(x.size)


def _cell_stat(x: np.ndarray, statistic: str) -> tuple[float, float]:
    if statistic == "variance":
        return float(x.var(ddof=1)), sem_variance_error(x)
    if statistic == "mean":
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))
    raise ValueError(f"unknown statistic {statistic!r}")


def error_floor(errs) -> float:
    """Smallest positive error bar in a data set (1 if there is none).

    Cells with zero spread (every trajectory identical) get this floor so that
    the collapse weights stay finite.
    """
    e = np.asarray(errs, dtype=float)
    pos = e[e > 0]
    return float(pos.min()) if pos.size else 1.0


def fss_input_from_samples(cells: Mapping[tuple[float, float], np.ndarray], statistic: str = "variance", floor: float | None = None) -> FssInput:
    """Build an FssInput from raw per-cell samples keyed by ``(size, p)``."""
    keys = sorted(cells)
    stats = [_cell_stat(np.asarray(cells[k], dtype=float), statistic) for k in keys]
    errs = np.array([e for _, e in stats])
    if floor is None:
        floor = error_floor(errs)
    return FssInput.from_arrays(
        [k[0] for k in keys],
        [k[1] for k in keys],
        [v for v, _ in stats],
        np.maximum(errs, floor),
    )


def bootstrap_fss(
    cells: Mapping[tuple[float, float], np.ndarray],
    n_boot: int = 1000,
    rng: np.random.Generator | None = None,
    *,
    statistic: str = "variance",
    init: Sequence[float] = (0.5, 1.0, 0.0),
    zeta_mode="free",
    max_fail_fraction: float = 0.2,
    floor: float | None = None,
) -> FssResult:
    """Bootstrap the whole collapse: resample trajectories per cell and refit.

    Reports the mean and standard deviation of (p_c, nu, zeta) over the
    pseudo-ensembles; ``quality`` is that of the fit to the original data.
    """
    if rng is None:
        rng = np.random.default_rng()
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    if floor is None:
        floor = error_floor([_cell_stat(np.asarray(x, dtype=float), statistic)[1] for x in cells.values()])
    base = fit_collapse(fss_input_from_samples(cells, statistic, floor), init, zeta_mode, profile=False)
    start = (base.p_c, base.nu, base.zeta)
    keys = sorted(cells)
    arrays = [np.asarray(cells[k], dtype=float) for k in keys]
    fits, failed = [], 0
    for b in range(n_boot):
        pseudo = {k: x[rng.integers(0, x.size, size=x.size)] for k, x in zip(keys, arrays)}
        try:
            r = fit_collapse(fss_input_from_samples(pseudo, statistic, floor), start, zeta_mode, seed=b, profile=False)
        except FitFailure:
            failed += 1
            continue
        fits.append((r.p_c, r.nu, r.zeta))
    if failed > max_fail_fraction * n_boot:
        raise AnalysisError(f"{failed} of {n_boot} bootstrap fits failed")
    if failed:
        log.warning("dropped %d failed bootstrap fits", failed)
    arr = np.array(fits)
    flags = []
    if len(arr) < 2:
        flags.append("degenerate bootstrap: fewer than 2 pseudo-ensembles, errors set to 0")
        err = np.zeros(3)
    else:
        err = arr.std(axis=0, ddof=1)
    mean = arr.mean(axis=0)
    return FssResult(
        p_c=float(mean[0]),
        nu=float(mean[1]),
        zeta=float(mean[2]),
        p_c_err=float(err[0]),
        nu_err=float(err[1]),
        zeta_err=0.0 if base.zeta_fixed else float(err[2]),
        quality=base.quality,
        method="bootstrap",
        zeta_fixed=base.zeta_fixed,
        n_boot=n_boot,
        n_failed=failed,
        warnings=tuple(flags),
    )
