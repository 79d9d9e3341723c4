import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    expectation,
    gf2_rank,
    group_elements,
    operator_matrix,
    pauli_matrix,
    project,
    restricted_rank,
    to_int,
    von_neumann_bits,
    zero_state,
)
from tricode.pauli import (
    Membership,
    PauliOperator,
    Tableau,
    commutes,
    entanglement_entropy,
    group_membership,
    measure,
    pack_bits,
    product_state,
    rank_restricted,
    unpack_bits,
)


def random_pauli(rng, n):
    while True:
        x = rng.integers(0, 2, n).astype(bool)
        z = rng.integers(0, 2, n).astype(bool)
        if x.any() or z.any():
            return PauliOperator.from_bits(x, z)


def random_measured_state(rng, n, steps):
    """Tableau and matching dense vector after random measurements from |0..0>."""
    t = product_state(n, "Z")
    psi = zero_state(n)
    for _ in range(steps):
        p = random_pauli(rng, n)
        out = t.measure(p, rng)
        psi, prob = project(psi, operator_matrix(p), out.value)
        assert prob > 0
        if out.deterministic:
            assert prob == pytest.approx(1.0)
        else:
            assert prob == pytest.approx(0.5)
    return t, psi


# -- packing and operators


def test_pack_roundtrip():
    rng = np.random.default_rng(1)
    for n in (1, 63, 64, 65, 130):
        bits = rng.integers(0, 2, (3, n)).astype(bool)
        assert np.array_equal(unpack_bits(pack_bits(bits), n), bits)


def test_label_roundtrip():
    for label in ("+XZY", "-IIZ", "+YYYYYYYY"):
        assert PauliOperator.from_label(label).to_label() == label


def test_commutes_examples():
    x0 = PauliOperator.from_label("XI")
    z0 = PauliOperator.from_label("ZI")
    assert commutes(x0, x0)
    assert not commutes(x0, z0)
    assert commutes(PauliOperator.from_label("XX"), PauliOperator.from_label("ZZ"))


def test_commutes_dimension_mismatch():
    with pytest.raises(ValueError):
        commutes(PauliOperator.from_label("X"), PauliOperator.from_label("XX"))


def test_product_matches_dense():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b = random_pauli(rng, 4), random_pauli(rng, 4)
        if not commutes(a, b):
            with pytest.raises(ValueError):
                a * b
            continue
        assert np.allclose(operator_matrix(a * b), operator_matrix(a) @ operator_matrix(b))


def test_y_is_i_x_z():
    y = PauliOperator.from_label("Y")
    assert np.allclose(operator_matrix(y), 1j * pauli_matrix([1], [0]) @ pauli_matrix([0], [1]))


# -- product states


def test_product_state_examples():
    assert product_state(1, "Z").to_text() == "+Z"
    assert product_state(3, "X").to_text() == "+XII\n+IXI\n+IIX"
    t = product_state(48, "X")
    assert t.n_qubits == 48 and len(t) == 48
    t.check_invariants()


def test_product_state_rejects_zero():
    with pytest.raises(ValueError, match="invalid size"):
        product_state(0)


# -- membership and measurement examples


def test_membership_examples():
    t = Tableau.from_labels(["+Z"])
    assert group_membership(t, PauliOperator.from_label("Z")) is Membership.IN_GROUP_PLUS
    assert group_membership(t, PauliOperator.from_label("X")) is Membership.ANTICOMMUTING
    t2 = Tableau.from_labels(["-ZI", "+IZ"])
    assert group_membership(t2, PauliOperator.from_label("ZZ")) is Membership.IN_GROUP_MINUS
    assert Membership.IN_GROUP_PLUS.value == "InGroupPlus"


def test_membership_with_y_phases():
    ghz = Tableau.from_labels(["XXX", "ZZI", "IZZ"])
    # XXX * ZZI = (XZ)(XZ)X = (-iY)(-iY)X = -YYX
    assert ghz.membership(PauliOperator.from_label("YYX")) is Membership.IN_GROUP_MINUS
    assert ghz.membership(PauliOperator.from_label("-YYX")) is Membership.IN_GROUP_PLUS


def test_identity_rejected():
    t = product_state(2)
    with pytest.raises(ValueError):
        t.membership(PauliOperator.identity(2))
    with pytest.raises(ValueError):
        t.measure(PauliOperator.identity(2), np.random.default_rng(0))


def test_measure_deterministic_leaves_state():
    t = Tableau.from_labels(["+Z"])
    before = t.copy()
    out = measure(t, PauliOperator.from_label("Z"), np.random.default_rng(0))
    assert out.value == 1 and out.deterministic
    assert t == before


def test_measure_random_born_rule():
    rng = np.random.default_rng(5)
    values = []
    for _ in range(400):
        t = Tableau.from_labels(["+Z"])
        out = t.measure(PauliOperator.from_label("X"), rng)
        assert not out.deterministic
        assert t.to_text() == ("+X" if out.value == 1 else "-X")
        values.append(out.value)
    assert abs(np.mean(values)) < 0.15


def test_forced_outcome():
    t = Tableau.from_labels(["+Z"])
    assert t.measure(PauliOperator.from_label("X"), forced=-1).value == -1
    assert t.to_text() == "-X"


def test_lowest_index_pivot():
    t = Tableau.from_labels(["ZII", "IZI", "IIZ"])
    t.project(PauliOperator.from_label("XXI"), 0)
    # g0 is replaced by the measured operator, g1 absorbs g0
    assert t.to_text().splitlines()[:2] == ["+XXI", "+ZZI"]


# -- entropy and rank examples


def test_rank_examples():
    t = product_state(5, "X")
    assert rank_restricted(t, [0, 3]) == 2
    bell = Tableau.from_labels(["XX", "ZZ"])
    assert rank_restricted(bell, [0]) == 2
    assert entanglement_entropy(bell, [0]) == 1.0
    ghz = Tableau.from_labels(["XXX", "ZZI", "IZZ"])
    assert entanglement_entropy(ghz, [0]) == 1.0
    assert entanglement_entropy(product_state(6), [1, 2, 4]) == 0.0


def test_rank_errors():
    t = product_state(4)
    with pytest.raises(IndexError):
        t.rank_restricted([0, 4])
    with pytest.raises(ValueError):
        t.rank_restricted([])


def test_rank_does_not_mutate():
    rng = np.random.default_rng(3)
    t, _ = random_measured_state(rng, 8, 30)
    before = t.copy()
    t.rank_restricted([0, 2, 5])
    assert t == before


def test_ghz_entropy_matches_dense():
    ghz = Tableau.from_labels(["XXX", "ZZI", "IZZ"])
    psi = np.zeros(8, dtype=complex)
    psi[[0, 7]] = 2**-0.5
    for g in ghz.generators:
        assert np.allclose(operator_matrix(g) @ psi, psi)
    assert von_neumann_bits(psi, 3, [0]) == pytest.approx(entanglement_entropy(ghz, [0]))


# -- oracle equivalence on random measurement circuits


def test_random_circuits_match_dense_state():
    rng = np.random.default_rng(11)
    for trial in range(200):
        n = int(rng.integers(1, 7))
        t, psi = random_measured_state(rng, n, int(rng.integers(1, 51)))
        t.check_invariants()
        for g in t.generators:
            assert np.allclose(operator_matrix(g) @ psi, psi), t.to_text()
        for _ in range(3):
            k = int(rng.integers(1, n + 1))
            sub = sorted(rng.choice(n, size=k, replace=False).tolist())
            assert t.entanglement_entropy(sub) == pytest.approx(von_neumann_bits(psi, n, sub), abs=1e-9)


def test_membership_matches_dense_expectation():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        t, psi = random_measured_state(rng, n, 20)
        p = random_pauli(rng, n)
        ev = expectation(psi, operator_matrix(p))
        m = t.membership(p)
        expected = {Membership.IN_GROUP_PLUS: 1.0, Membership.IN_GROUP_MINUS: -1.0, Membership.ANTICOMMUTING: 0.0}[m]
        assert ev == pytest.approx(expected, abs=1e-9)


def test_restricted_rank_matches_python_oracle():
    rng = np.random.default_rng(13)
    for _ in range(60):
        n = int(rng.integers(2, 140))
        t = product_state(n, "Z")
        for _ in range(3 * n):
            t.measure(random_pauli(rng, n), rng)
        xm, zm = t.x_matrix(), t.z_matrix()
        assert t.rank() == gf2_rank([to_int(x) | to_int(z) << n for x, z in zip(xm, zm)]) == n
        sub = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        assert t.rank_restricted(sub) == restricted_rank(xm, zm, sub)


def test_commutation_matches_group_enumeration():
    rng = np.random.default_rng(14)
    for _ in range(40):
        n = int(rng.integers(2, 11))
        t = product_state(n, "Z")
        for _ in range(2 * n):
            t.measure(random_pauli(rng, n), rng)
        group = group_elements(t.x_matrix(), t.z_matrix())
        assert len(group) == 2**n
        for _ in range(30):
            p = random_pauli(rng, n)
            inside = (to_int(p.x_bits), to_int(p.z_bits)) in group
            assert t.commutes_with_all(p) == inside


# -- invariants


def test_repeat_measurement_is_deterministic():
    rng = np.random.default_rng(15)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        t = product_state(n, "X")
        p = random_pauli(rng, n)
        first = t.measure(p, rng)
        again = t.measure(p, rng)
        assert again.deterministic and again.value == first.value


def test_generators_are_in_group_plus():
    rng = np.random.default_rng(16)
    t = product_state(30)
    for _ in range(100):
        t.measure(random_pauli(rng, 30), rng)
    for g in t.generators:
        assert t.membership(g) is Membership.IN_GROUP_PLUS


def test_invariant_check_detects_bad_tableau():
    with pytest.raises(AssertionError, match="commute"):
        Tableau.from_labels(["XI", "ZI"]).check_invariants()
    with pytest.raises(AssertionError):
        Tableau.from_labels(["ZI", "ZI"]).check_invariants()


def test_text_roundtrip():
    t = Tableau.from_labels(["+XXI", "-ZZI", "+IYY"])
    assert Tableau.from_text(t.to_text()) == t


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 70), steps=st.integers(0, 120))
def test_entropy_complement_symmetry(seed, n, steps):
    rng = np.random.default_rng(seed)
    t = product_state(n, "Z")
    for _ in range(steps):
        t.measure(random_pauli(rng, n), rng)
    t.check_invariants()
    sub = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    rest = np.setdiff1d(np.arange(n), sub)
    s = t.entanglement_entropy(sub)
    assert s == t.entanglement_entropy(rest)
    assert 0 <= s <= min(sub.size, rest.size)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 100))
def test_signs_do_not_change_commutation(seed, n):
    rng = np.random.default_rng(seed)
    t = product_state(n, "X")
    for _ in range(n):
        t.measure(random_pauli(rng, n), rng)
    p = random_pauli(rng, n)
    assert t.commutes_with_all(p) == t.commutes_with_all(-p)
