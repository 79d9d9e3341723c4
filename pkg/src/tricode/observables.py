"""Observables of a stabilizer snapshot: TEE, string and loop Renyi-2 correlators.

For a pure stabilizer state the Renyi-2 correlator ``Tr[rho O rho O]`` is 1
when ``O`` commutes with every generator and 0 otherwise, so all correlators
here are sign-free commutation tests.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from tricode import _kernels as K
from tricode.errors import InsufficientDataError
from tricode.lattice import KpRegions, Lattice, _normalize_kind
from tricode.pauli import PauliOperator, Tableau

TEE_TERMS = (("A", 1), ("B", 1), ("C", 1), ("AB", -1), ("BC", -1), ("CA", -1), ("ABC", 1))


@dataclass(frozen=True)
class ObservableRecord:
    s_t: float
    chi_z: float
    chi_x: float
    w_loop: float
    t_loop: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def tee(t: Tableau, regions: KpRegions) -> float:
    """Kitaev-Preskill combination S_A + S_B + S_C - S_AB - S_BC - S_CA + S_ABC, in bits."""
    unions = regions.unions()
    total = 0.0
    for name, coef in TEE_TERMS:
        edges = unions[name].edge_array()
        if edges.size and edges.max() >= t.n_qubits:
            raise ValueError("regions do not fit the tableau's lattice")
        total += coef * t.entanglement_entropy(edges)
    return total


def renyi2(t: Tableau, o: PauliOperator) -> int:
    if o.is_identity():
        raise ValueError("identity operator is not a valid argument")
    if o.n_qubits != t.n_qubits:
        raise ValueError("dimension mismatch")
    return int(t.commutes_with_all(o))


@lru_cache(maxsize=32)
def _string_table(lat: Lattice) -> np.ndarray:
    return np.stack([lat.zigzag_edges((0, y), lat.l_x - 1) for y in range(lat.l_y)])


@lru_cache(maxsize=32)
def _loop_table(lat: Lattice) -> np.ndarray:
    return np.stack([lat.loop_edges(y) for y in range(lat.l_y)])


def string_correlators(t: Tableau, lat: Lattice, kind: str) -> np.ndarray:
    """``(l_y, l_x - 1)`` array of C(r, y) for strings starting at x = 0."""
    # Z strings flip on generators with an X bit on the string, and vice versa
    use_z_plane = _normalize_kind(kind) == "X"
    table = _string_table(lat)
    return np.stack([K.prefix_commutes(t.x, t.z, row, use_z_plane, 2) for row in table])


def string_susceptibility(t: Tableau, lat: Lattice, kind: str) -> float:
    return float(string_correlators(t, lat, kind).mean())


def loop_values(t: Tableau, lat: Lattice, kind: str) -> np.ndarray:
    use_z_plane = _normalize_kind(kind) == "X"
    table = _loop_table(lat)
    return np.array([K.prefix_commutes(t.x, t.z, row, use_z_plane, row.shape[0])[0] for row in table])


def loop_average(t: Tableau, lat: Lattice, kind: str) -> float:
    return float(loop_values(t, lat, kind).mean())


def observe(t: Tableau, lat: Lattice, regions: KpRegions) -> ObservableRecord:
    return ObservableRecord(
        s_t=tee(t, regions),
        chi_z=string_susceptibility(t, lat, "Z"),
        chi_x=string_susceptibility(t, lat, "X"),
        w_loop=loop_average(t, lat, "Z"),
        t_loop=loop_average(t, lat, "X"),
    )


def ensemble_stats(values) -> tuple[float, float, float]:
    """(mean, unbiased variance, standard error of the mean)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise InsufficientDataError("need at least 2 values")
    var = float(v.var(ddof=1))
    return float(v.mean()), var, float(np.sqrt(var / v.size))
