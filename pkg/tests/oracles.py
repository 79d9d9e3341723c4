"""Independent reference implementations used only by the tests.

Nothing here imports the engine's kernels: dense state vectors, Python-int
bitsets and brute-force group enumeration.
"""

from __future__ import annotations

import itertools

import numpy as np

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
PY = 1j * PX @ PZ  # Y = iXZ


def pauli_matrix(x_bits, z_bits, sign=1) -> np.ndarray:
    """Dense 2^n matrix; qubit 0 is the leftmost tensor factor."""
    out = np.array([[1.0 + 0j]])
    for xb, zb in zip(x_bits, z_bits):
        m = PY if (xb and zb) else PX if xb else PZ if zb else I2
        out = np.kron(out, m)
    return sign * out


def operator_matrix(op) -> np.ndarray:
    return pauli_matrix(op.x_bits, op.z_bits, op.sign)


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    return psi


def plus_state(n: int) -> np.ndarray:
    return np.full(2**n, 2 ** (-n / 2), dtype=complex)


def project(psi: np.ndarray, mat: np.ndarray, value: int) -> tuple[np.ndarray, float]:
    """Apply (1 + value*P)/2 and renormalize; returns (state, Born probability)."""
    out = 0.5 * (psi + value * (mat @ psi))
    prob = float(np.vdot(out, out).real)
    if prob < 1e-12:
        return out, 0.0
    return out / np.sqrt(prob), prob


def von_neumann_bits(psi: np.ndarray, n: int, subset) -> float:
    subset = sorted(set(subset))
    rest = [q for q in range(n) if q not in subset]
    t = psi.reshape([2] * n).transpose(subset + rest).reshape(2 ** len(subset), -1)
    s = np.linalg.svd(t, compute_uv=False) ** 2
    s = s[s > 1e-12]
    return float(-(s * np.log2(s)).sum())


def expectation(psi: np.ndarray, mat: np.ndarray) -> float:
    return float(np.vdot(psi, mat @ psi).real)


def to_int(bits) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b)


def gf2_rank(rows) -> int:
    """Rank of a list of Python-int bit rows by textbook elimination."""
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def restricted_rank(x_rows, z_rows, subset) -> int:
    subset = sorted(subset)
    rows = []
    for xr, zr in zip(x_rows, z_rows):
        v = 0
        for k, q in enumerate(subset):
            v |= int(xr[q]) << (2 * k) | int(zr[q]) << (2 * k + 1)
        rows.append(v)
    return gf2_rank(rows)


def group_elements(x_rows, z_rows) -> set[tuple[int, int]]:
    """All 2^n sign-free products of the generators, as (x, z) bitsets."""
    gens = [(to_int(x), to_int(z)) for x, z in zip(x_rows, z_rows)]
    out = set()
    for mask in itertools.product((0, 1), repeat=len(gens)):
        x = z = 0
        for m, (gx, gz) in zip(mask, gens):
            if m:
                x ^= gx
                z ^= gz
        out.add((x, z))
    return out


def symplectic(x1, z1, x2, z2) -> int:
    return (sum(int(a) & int(b) for a, b in zip(x1, z2)) + sum(int(a) & int(b) for a, b in zip(z1, x2))) & 1


def master_curve(x):
    return 1.0 / (1.0 + np.exp(-x))


def synthetic_fss(p_c=0.5, nu=1.5, zeta=0.0, sizes=(8, 16, 32, 64), n_points=31, sigma=0.01, seed=0, span=0.15):
    """(sizes, p, value, stderr) drawn from value = L^zeta F((p - p_c) L^(1/nu)) + noise."""
    rng = np.random.default_rng(seed)
    # offset so no grid point sits exactly on p_c (aligned abscissas bias the quality minimum)
    ps = np.linspace(p_c - span, p_c + span, n_points) + 0.0031
    s_all, p_all, v_all, e_all = [], [], [], []
    for L in sizes:
        v = L**zeta * master_curve((ps - p_c) * L ** (1 / nu))
        e = np.full_like(ps, sigma * L**zeta)
        s_all.append(np.full_like(ps, L))
        p_all.append(ps)
        v_all.append(v + rng.normal(0, 1, ps.size) * e)
        e_all.append(e)
    return tuple(np.concatenate(a) for a in (s_all, p_all, v_all, e_all))
