import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dense_oracle import basis_vector, cx_matrix, exponent_of, pauli_matrix, projector_matrix
from stabsse.errors import CapabilityError
from stabsse.pauli import PauliString, multiply, parity
from stabsse.stabilizer import (MatrixElement, StabilizerState, from_basis_state,
                                inner_product, pow_sqrt_half)

P = PauliString.from_label


def gens(state):
    return [str(g) for g in state.generators]


def gf2_rank(rows):
    rows, rank = list(rows), 0
    while rows:
        piv = rows.pop()
        if piv == 0:
            continue
        rank += 1
        low = piv & -piv
        rows = [r ^ piv if r & low else r for r in rows]
    return rank


# -- Pauli strings -----------------------------------------------------------

def test_multiply_examples():
    assert multiply(P("Z"), P("X")) == PauliString(1, x=1, z=1, sign=-1)
    assert multiply(P("X"), P("Z")) == PauliString(1, x=1, z=1, sign=1)
    zz_xx = multiply(P("ZZ"), P("XX"))
    assert zz_xx == PauliString(2, x=3, z=3, sign=1)
    np.testing.assert_array_equal(pauli_matrix(zz_xx), pauli_matrix(P("ZZ")) @ pauli_matrix(P("XX")))


def test_label_and_str_roundtrip():
    for label in ("+XIZ", "-ZZ", "+I", "-XXXX"):
        assert str(P(label)) == label
    with pytest.raises(ValueError):
        P("XY")


def test_pauli_validation():
    with pytest.raises(ValueError):
        PauliString(2, x=4)
    with pytest.raises(ValueError):
        PauliString(2, sign=0)
    with pytest.raises(ValueError):
        PauliString.from_sites(2, x_sites=[2])


def paulis(n):
    full = (1 << n) - 1
    return st.builds(lambda x, z, s: PauliString(n, x, z, s),
                     st.integers(0, full), st.integers(0, full), st.sampled_from([1, -1]))


@st.composite
def pauli_triples(draw):
    n = draw(st.integers(1, 5))
    return draw(paulis(n)), draw(paulis(n)), draw(paulis(n))


@given(pauli_triples())
def test_multiply_matches_dense_and_is_associative(t):
    a, b, c = t
    np.testing.assert_array_equal(pauli_matrix(a * b), pauli_matrix(a) @ pauli_matrix(b))
    assert multiply(a, multiply(b, c)) == multiply(multiply(a, b), c)


@given(pauli_triples())
def test_commutation_matches_dense(t):
    a, b, _ = t
    ma, mb = pauli_matrix(a), pauli_matrix(b)
    assert a.commutes_with(b) == np.array_equal(ma @ mb, mb @ ma)
    assert a.squares_to_identity == np.array_equal(ma @ ma, np.eye(len(ma)))


# -- tableau examples --------------------------------------------------------

def test_from_basis_state_examples():
    s = from_basis_state((1, 1))
    assert gens(s) == ["+ZI", "+IZ"] and s.halving == 0 and not s.is_zero
    assert gens(from_basis_state((-1,))) == ["-Z"]
    assert gens(from_basis_state((1, -1, 1))) == ["+ZII", "-IZI", "+IIZ"]
    with pytest.raises(ValueError):
        from_basis_state((1, 0))


def test_cx_examples():
    s = StabilizerState.from_generators([P("XI"), P("IZ")])
    s.apply_cx(0, 1)
    assert gens(s) == ["+XX", "+ZZ"]
    s = from_basis_state((1, 1))
    s.apply_cx(0, 1)
    assert gens(s) == ["+ZI", "+ZZ"]
    s.apply_cx(0, 1)
    assert gens(s) == ["+ZI", "+IZ"]
    with pytest.raises(ValueError):
        s.apply_cx(1, 1)
    with pytest.raises(ValueError):
        s.apply_cx(0, 2)


def test_projector_examples():
    s = from_basis_state((1, 1))
    s.apply_pauli_projector(P("XI"))
    assert gens(s) == ["+XI", "+IZ"] and s.halving == 1

    s = StabilizerState.from_generators([P("-X")])
    s.apply_pauli_projector(P("X"))
    assert s.is_zero

    s = StabilizerState.from_generators([P("X")])
    s.apply_pauli_projector(P("X"))
    assert gens(s) == ["+X"] and s.halving == 0 and not s.is_zero

    s = from_basis_state((1, 1))
    s.apply_pauli_projector(P("ZZ"))
    assert gens(s) == ["+ZI", "+IZ"] and s.halving == 0

    s = from_basis_state((1, -1))
    s.apply_pauli_projector(P("ZZ"))
    assert s.is_zero


def test_projector_rejects_bad_generators():
    s = from_basis_state((1, 1))
    with pytest.raises(ValueError):
        s.apply_pauli_projector(P("-XI"))
    with pytest.raises(ValueError):
        s.apply_pauli_projector(PauliString(2, x=1, z=1))


def test_overlap_examples():
    bell = StabilizerState.from_generators([P("XX"), P("ZZ")], halving=1)
    assert bell.overlap_with_basis((1, 1)) == MatrixElement(2)
    assert bell.overlap_with_basis((1, 1)).value == 0.5
    assert from_basis_state((1, -1)).overlap_with_basis((1, -1)) == MatrixElement(0)
    assert from_basis_state((1,)).overlap_with_basis((-1,)).is_zero
    with pytest.raises(ValueError):
        bell.overlap_with_basis((1,))


def test_to_dense_examples():
    np.testing.assert_array_equal(from_basis_state((1,)).to_dense(), [1.0, 0.0])
    bell = StabilizerState.from_generators([P("XX"), P("ZZ")], halving=1)
    np.testing.assert_allclose(bell.to_dense(), [0.5, 0, 0, 0.5], atol=1e-15)
    plus = StabilizerState.from_generators([P("X")], halving=1)
    np.testing.assert_allclose(plus.to_dense(), [0.5, 0.5], atol=1e-15)
    zero = StabilizerState.from_generators([P("-X")])
    zero.apply_pauli_projector(P("X"))
    np.testing.assert_array_equal(zero.to_dense(), [0.0, 0.0])
    with pytest.raises(CapabilityError):
        from_basis_state((1,) * 13).to_dense()


def test_matrix_element_values():
    assert MatrixElement(0).value == 1.0
    assert MatrixElement(3).value == pytest.approx(2 ** -1.5, rel=1e-15)
    assert MatrixElement.zero().value == 0.0
    assert pow_sqrt_half(-2) == 2.0
    for k in range(-10, 40):
        assert pow_sqrt_half(k) == pytest.approx(2.0 ** (-k / 2), rel=1e-15)


# -- random strings against the dense oracle ---------------------------------

@st.composite
def circuits(draw, mixed=False):
    """(n, bits, ops); ops is a list of ("cx", c, t) or ("proj", PauliString)."""
    n = draw(st.integers(1, 6))
    bits = draw(st.integers(0, (1 << n) - 1))
    full = (1 << n) - 1
    op = st.one_of(
        st.builds(lambda m: ("proj", PauliString(n, x=m)), st.integers(1, full)),
        st.builds(lambda m: ("proj", PauliString(n, z=m)), st.integers(1, full)),
    )
    if mixed:
        op = st.one_of(op, st.builds(lambda x, z: ("proj", PauliString(n, x=x, z=z)),
                                     st.integers(0, full), st.integers(0, full))
                       .filter(lambda o: o[1].squares_to_identity and (o[1].x or o[1].z)))
    if n >= 2:
        op = st.one_of(op, st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
                       .filter(lambda p: p[0] != p[1]).map(lambda p: ("cx", *p)))
    return n, bits, draw(st.lists(op, max_size=20))


def run_circuit(n, bits, ops):
    state = StabilizerState.from_bits(n, bits)
    vec = basis_vector(n, bits)
    for op in ops:
        if op[0] == "cx":
            state.apply_cx(op[1], op[2])
            vec = cx_matrix(n, op[1], op[2]) @ vec
        else:
            state.apply_pauli_projector(op[1])
            vec = projector_matrix(op[1]) @ vec
    return state, vec


def check_invariants(state):
    g = state.generators
    for a in g:
        assert a.squares_to_identity
        for b in g:
            assert a.commutes_with(b)
    rows = [a.x | (a.z << state.n_qubits) for a in g]
    assert gf2_rank(rows) == state.n_qubits


@settings(max_examples=300, deadline=None)
@given(circuits())
def test_dense_equivalence_nonnegative_terms(c):
    n, bits, ops = c
    state, vec = run_circuit(n, bits, ops)
    check_invariants(state)
    np.testing.assert_allclose(state.to_dense(), vec, rtol=0, atol=1e-12)
    for probe in range(1 << n):
        got = state.overlap_with_bits(probe)
        assert got.exponent == exponent_of(basis_vector(n, probe) @ vec)


@settings(max_examples=200, deadline=None)
@given(circuits(mixed=True))
def test_dense_equivalence_mixed_projectors_up_to_sign(c):
    n, bits, ops = c
    state, vec = run_circuit(n, bits, ops)
    check_invariants(state)
    dense = state.to_dense()
    sign = 1.0 if np.allclose(dense, vec, atol=1e-12) else -1.0
    np.testing.assert_allclose(sign * dense, vec, rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(circuits(), st.data())
def test_inner_product_matches_dense(c, data):
    n, bits, ops = c
    a, va = run_circuit(n, bits, ops)
    ops_b = data.draw(st.lists(st.sampled_from(ops), max_size=8)) if ops else []
    b, vb = run_circuit(n, data.draw(st.integers(0, (1 << n) - 1)), ops_b)
    got = inner_product(a, b)
    assert got.exponent == exponent_of(abs(va @ vb))
    assert inner_product(b, a) == got


@settings(max_examples=200, deadline=None)
@given(circuits())
def test_projector_idempotent_and_cx_preserves_halving(c):
    n, bits, ops = c
    state, _ = run_circuit(n, bits, ops)
    for op in ops:
        if op[0] == "cx":
            before = (state.halving, state.is_zero)
            state.apply_cx(op[1], op[2])
            assert (state.halving, state.is_zero) == before
        else:
            once = state.copy()
            once.apply_pauli_projector(op[1])
            twice = once.copy()
            twice.apply_pauli_projector(op[1])
            assert twice.halving == once.halving and twice.is_zero == once.is_zero
            np.testing.assert_array_equal(twice.to_dense(), once.to_dense())
            assert once.halving - state.halving in (0, 1) or once.is_zero
            state = twice


def test_cx_never_zeroes():
    s = from_basis_state((-1, 1, -1))
    for c, t in [(0, 1), (1, 2), (2, 0), (0, 2)]:
        s.apply_cx(c, t)
        assert not s.is_zero and s.halving == 0


def test_parity():
    assert [parity(v) for v in (0, 1, 3, 7, 0b1011)] == [0, 1, 0, 1, 1]
