"""Bit-packed Pauli operators and stabilizer tableaux.

A Pauli operator on ``n`` qubits is stored as two packed bit-vectors (X part
and Z part, 64 qubits per uint64 word) plus a sign. A qubit with both bits set
carries ``Y = iXZ``. A :class:`Tableau` holds ``n`` commuting, independent,
signed generators describing a pure stabilizer state; only the stabilizer half
is kept, and deterministic measurement outcomes are recovered by Gaussian
elimination when asked for.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from tricode import _kernels as K


def n_words(n: int) -> int:
    return (n + 63) >> 6


def pack_bits(bits) -> np.ndarray:
    """Pack a length-n boolean vector into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    padded = np.zeros(bits.shape[:-1] + (n_words(n) * 64,), dtype=bool)
    padded[..., :n] = bits
    return np.packbits(padded, axis=-1, bitorder="little").view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :n].astype(bool)


class PauliOperator:
    """Signed Hermitian Pauli operator on ``n_qubits`` qubits."""

    __slots__ = ("x", "z", "sign", "n_qubits")

    def __init__(self, x: np.ndarray, z: np.ndarray, sign: int = 1, n_qubits: int | None = None):
        x = np.ascontiguousarray(x, dtype=np.uint64)
        z = np.ascontiguousarray(z, dtype=np.uint64)
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z parts must be 1-d word arrays of equal length")
        if n_qubits is None:
            n_qubits = 64 * x.shape[0]
        if n_words(n_qubits) != x.shape[0]:
            raise ValueError("word count does not match n_qubits")
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        self.x = x
        self.z = z
        self.sign = int(sign)
        self.n_qubits = int(n_qubits)

    @classmethod
    def from_bits(cls, x_bits, z_bits, sign: int = 1) -> "PauliOperator":
        x_bits = np.asarray(x_bits, dtype=bool)
        z_bits = np.asarray(z_bits, dtype=bool)
        if x_bits.shape != z_bits.shape:
            raise ValueError("x_bits and z_bits must have identical length")
        n = x_bits.shape[0]
        return cls(pack_bits(x_bits), pack_bits(z_bits), sign, n)

    @classmethod
    def from_qubits(cls, n: int, x: Iterable[int] = (), z: Iterable[int] = (), sign: int = 1) -> "PauliOperator":
        """Build from qubit lists; a qubit listed in both gets Y."""
        xb = np.zeros(n, dtype=bool)
        zb = np.zeros(n, dtype=bool)
        for q in x:
            xb[q] ^= True
        for q in z:
            zb[q] ^= True
        return cls.from_bits(xb, zb, sign)

    @classmethod
    def from_label(cls, label: str) -> "PauliOperator":
        """Parse labels like ``"+XIZ"``, ``"-YY"`` or ``"ZZ"`` (qubit 0 first)."""
        sign = 1
        if label[:1] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        table = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
        try:
            bits = np.array([table[c] for c in label.upper()], dtype=bool).reshape(-1, 2)
        except KeyError as exc:
            raise ValueError(f"bad Pauli label {label!r}") from exc
        return cls.from_bits(bits[:, 0], bits[:, 1], sign)

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        w = n_words(n)
        return cls(np.zeros(w, np.uint64), np.zeros(w, np.uint64), 1, n)

    @property
    def x_bits(self) -> np.ndarray:
        return unpack_bits(self.x, self.n_qubits)

    @property
    def z_bits(self) -> np.ndarray:
        return unpack_bits(self.z, self.n_qubits)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x_bits | self.z_bits)

    @property
    def weight(self) -> int:
        return int(np.bitwise_count(self.x | self.z).sum())

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def active_words(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z).astype(np.int64)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.x.copy(), self.z.copy(), -self.sign, self.n_qubits)

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        _check_dims(self, other)
        e = K.product_phase(self.x, self.z, other.x, other.z)
        e += 2 * (self.sign < 0) + 2 * (other.sign < 0)
        if e & 1:
            raise ValueError("product of anticommuting Paulis is not Hermitian")
        return PauliOperator(self.x ^ other.x, self.z ^ other.z, -1 if e & 2 else 1, self.n_qubits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.sign, self.x.tobytes(), self.z.tobytes()))

    def to_label(self) -> str:
        chars = np.array(["I", "X", "Z", "Y"])
        idx = self.x_bits.astype(int) + 2 * self.z_bits.astype(int)
        return ("+" if self.sign > 0 else "-") + "".join(chars[idx])

    def __repr__(self) -> str:
        if self.n_qubits <= 64:
            return f"PauliOperator({self.to_label()!r})"
        return f"PauliOperator(n_qubits={self.n_qubits}, weight={self.weight}, sign={self.sign:+d})"


def _check_dims(a: PauliOperator, b: PauliOperator) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def commutes(a: PauliOperator, b: PauliOperator) -> bool:
    """True iff the symplectic product of ``a`` and ``b`` vanishes; signs are ignored."""
    _check_dims(a, b)
    return not K.anticommutes(a.x, a.z, b.x, b.z)


class Membership(enum.Enum):
    IN_GROUP_PLUS = "InGroupPlus"
    IN_GROUP_MINUS = "InGroupMinus"
    ANTICOMMUTING = "Anticommuting"


@dataclass(frozen=True)
class MeasurementOutcome:
    value: int
    deterministic: bool


class Tableau:
    """Pure stabilizer state as ``n`` signed generators on ``n`` qubits.

    The arrays are owned by the tableau and mutated in place by measurements.
    """

    __slots__ = ("x", "z", "r", "n_qubits")

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray, n_qubits: int):
        self.x = np.ascontiguousarray(x, dtype=np.uint64)
        self.z = np.ascontiguousarray(z, dtype=np.uint64)
        self.r = np.ascontiguousarray(r, dtype=np.uint8)
        self.n_qubits = int(n_qubits)

    @classmethod
    def from_generators(cls, generators: Sequence[PauliOperator]) -> "Tableau":
        if not generators:
            raise ValueError("need at least one generator")
        n = generators[0].n_qubits
        if len(generators) != n:
            raise ValueError(f"a pure state on {n} qubits needs {n} generators, got {len(generators)}")
        for g in generators:
            if g.n_qubits != n:
                raise ValueError("generators act on different qubit counts")
        x = np.stack([g.x for g in generators])
        z = np.stack([g.z for g in generators])
        r = np.array([g.sign < 0 for g in generators], dtype=np.uint8)
        return cls(x, z, r, n)

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "Tableau":
        return cls.from_generators([PauliOperator.from_label(s) for s in labels])

    def copy(self) -> "Tableau":
        return Tableau(self.x.copy(), self.z.copy(), self.r.copy(), self.n_qubits)

    def __len__(self) -> int:
        return self.x.shape[0]

    def generator(self, i: int) -> PauliOperator:
        return PauliOperator(self.x[i].copy(), self.z[i].copy(), -1 if self.r[i] else 1, self.n_qubits)

    @property
    def generators(self) -> list[PauliOperator]:
        return [self.generator(i) for i in range(len(self))]

    def x_matrix(self) -> np.ndarray:
        return unpack_bits(self.x, self.n_qubits)

    def z_matrix(self) -> np.ndarray:
        return unpack_bits(self.z, self.n_qubits)

    def to_text(self) -> str:
        """Debug dump: one signed ``{I,X,Y,Z}^N`` line per generator."""
        chars = np.array(["I", "X", "Z", "Y"])
        idx = self.x_matrix().astype(np.int8) + 2 * self.z_matrix().astype(np.int8)
        return "\n".join(("-" if s else "+") + "".join(chars[row]) for s, row in zip(self.r, idx))

    @classmethod
    def from_text(cls, text: str) -> "Tableau":
        return cls.from_labels([line.strip() for line in text.splitlines() if line.strip()])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    def _check(self, p: PauliOperator) -> None:
        if p.n_qubits != self.n_qubits:
            raise ValueError(f"dimension mismatch: tableau has {self.n_qubits} qubits, operator {p.n_qubits}")
        if p.is_identity():
            raise ValueError("identity operator is not a valid argument")

    def anticommuting(self, p: PauliOperator) -> np.ndarray:
        """Indices of generators that anticommute with ``p``."""
        flags = K.anticommuting_rows(self.x, self.z, p.x, p.z, p.active_words())
        return np.flatnonzero(flags)

    def commutes_with_all(self, p: PauliOperator) -> bool:
        return not K.anticommuting_rows(self.x, self.z, p.x, p.z, p.active_words()).any()

    def membership(self, p: PauliOperator) -> Membership:
        self._check(p)
        if not self.commutes_with_all(p):
            return Membership.ANTICOMMUTING
        s = K.decompose(self.x, self.z, self.r, p.x, p.z)
        if s < 0:
            # commutes with every generator but outside the group: impossible for a pure state
            raise RuntimeError("tableau is not a pure state (operator commutes but is not generated)")
        group_sign = -1 if s & 2 else 1
        return Membership.IN_GROUP_PLUS if group_sign == p.sign else Membership.IN_GROUP_MINUS

    def project(self, p: PauliOperator, sign_bit: int) -> bool:
        """Collapse onto eigenvalue ``(-1)**sign_bit`` of ``p`` if the outcome is random.

        Returns True when the outcome was random (state updated) and False when
        it was already fixed (state untouched, outcome not computed). This is
        the fast path used by the circuit driver.
        """
        k = K.project(self.x, self.z, self.r, p.x, p.z, p.active_words(), (sign_bit ^ (p.sign < 0)) & 1)
        return k >= 0

    def measure(self, p: PauliOperator, rng: np.random.Generator | None = None, forced: int | None = None) -> MeasurementOutcome:
        """Projective measurement of ``p``.

        A random outcome is drawn from ``rng``, unless ``forced`` (+1 or -1)
        post-selects it. ``forced`` is ignored for deterministic outcomes.
        """
        self._check(p)
        if not self.commutes_with_all(p):
            if forced is not None:
                if forced not in (1, -1):
                    raise ValueError("forced outcome must be +1 or -1")
                value = forced
            else:
                if rng is None:
                    raise ValueError("a random generator is required for random outcomes")
                value = 1 - 2 * int(rng.integers(2))
            self.project(p, 0 if value > 0 else 1)
            return MeasurementOutcome(value, False)
        m = self.membership(p)
        return MeasurementOutcome(1 if m is Membership.IN_GROUP_PLUS else -1, True)

    def rank_restricted(self, qubits) -> int:
        q = np.asarray(qubits, dtype=np.int64).ravel()
        if q.size == 0:
            raise ValueError("qubit subset must be non-empty")
        if q.min() < 0 or q.max() >= self.n_qubits:
            raise IndexError(f"qubit index out of range 0..{self.n_qubits - 1}")
        return int(K.restricted_rank(self.x, self.z, np.unique(q)))

    def entanglement_entropy(self, qubits) -> float:
        """Entanglement entropy (bits) of the given qubit subset."""
        q = np.unique(np.asarray(qubits, dtype=np.int64).ravel())
        return float(self.rank_restricted(q) - q.size)

    def symplectic_gram(self) -> np.ndarray:
        """Pairwise anticommutation matrix of the generators (0/1)."""
        xm = self.x_matrix().astype(np.float32)
        zm = self.z_matrix().astype(np.float32)
        return ((xm @ zm.T + zm @ xm.T) % 2).astype(np.uint8)

    def rank(self) -> int:
        mat = np.concatenate([self.x, self.z], axis=1).copy()
        return int(K.gf2_rank_inplace(mat, mat.shape[1] * 64))

    def check_invariants(self) -> None:
        """Raise AssertionError unless generators commute and are independent."""
        if len(self) != self.n_qubits:
            raise AssertionError(f"{len(self)} generators for {self.n_qubits} qubits")
        if self.symplectic_gram().any():
            raise AssertionError("generators do not pairwise commute")
        rk = self.rank()
        if rk != self.n_qubits:
            raise AssertionError(f"generators are dependent: rank {rk} < {self.n_qubits}")


def product_state(n: int, basis: str = "Z", sign: int = 1) -> Tableau:
    """``|0...0>``-type product state: every qubit stabilized by ``sign * basis``."""
    if n < 1:
        raise ValueError(f"invalid size: n must be >= 1, got {n}")
    basis = basis.upper()
    if basis not in ("X", "Z"):
        raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    eye = pack_bits(np.eye(n, dtype=bool))
    zero = np.zeros_like(eye)
    r = np.full(n, sign < 0, dtype=np.uint8)
    if basis == "X":
        return Tableau(eye, zero, r, n)
    return Tableau(zero, eye, r, n)


def group_membership(t: Tableau, p: PauliOperator) -> Membership:
    return t.membership(p)


def measure(t: Tableau, p: PauliOperator, rng: np.random.Generator | None = None, forced: int | None = None) -> MeasurementOutcome:
    return t.measure(p, rng, forced)


def rank_restricted(t: Tableau, qubits) -> int:
    return t.rank_restricted(qubits)


def entanglement_entropy(t: Tableau, qubits) -> float:
    return t.entanglement_entropy(qubits)
