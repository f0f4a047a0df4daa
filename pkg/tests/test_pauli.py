import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import label_matrix
from tvha_bench.pauli import (
    CommutingGroups,
    DimensionError,
    EmptyInputError,
    InvalidGroupError,
    PauliString,
    PauliTerm,
    commutes,
    format_terms,
    group_commuting,
    measurement_rotation,
    parse_terms,
    pauli_product,
    x_classes,
)

labels = st.integers(1, 5).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def label_pair():
    return st.integers(1, 5).flatmap(
        lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n))
    )


def P(label):
    return PauliString.from_label(label)


def test_label_round_trip_and_qubit_order():
    s = P("ZIXY")
    assert s.label == "ZIXY"
    assert [s.axis(q) for q in range(4)] == ["Y", "X", "I", "Z"]
    assert PauliString.from_sparse({0: "X", 2: "Z"}, 3).label == "ZIX"


@pytest.mark.parametrize("bad", ["", "XA", "12"])
def test_invalid_labels(bad):
    with pytest.raises(ValueError):
        P(bad)


def test_term_rejects_non_finite():
    with pytest.raises(ValueError):
        PauliTerm(float("nan"), P("X"))
    with pytest.raises(ValueError):
        PauliTerm(float("inf"), P("X"))


def test_identity_is_multiplicative_unit():
    s = P("XYZI")
    assert pauli_product(PauliString.identity(4), s) == (1, s)
    assert pauli_product(s, PauliString.identity(4)) == (1, s)


@given(label_pair())
def test_product_matches_matrices(pair):
    a, b = pair
    phase, c = pauli_product(P(a), P(b))
    np.testing.assert_allclose(
        label_matrix(a) @ label_matrix(b), phase * label_matrix(c.label), atol=1e-12
    )


def _matrix_commutes(a, b):
    A, B = label_matrix(a), label_matrix(b)
    return np.allclose(A @ B, B @ A)


def _qubitwise_reference(a, b):
    return all(x == "I" or y == "I" or x == y for x, y in zip(a, b))


@given(label_pair())
def test_general_commutation_matches_matrix_commutator(pair):
    a, b = pair
    assert commutes(P(a), P(b), "general") == _matrix_commutes(a, b)
    assert commutes(P(a), P(b), "qubit-wise") == _qubitwise_reference(a, b)


def test_commutation_examples():
    assert commutes(P("ZI"), P("IZ"), "qubit-wise")
    assert commutes(P("XX"), P("ZZ"), "general")
    assert not commutes(P("XX"), P("ZZ"), "qubit-wise")
    for mode in ("general", "qubit-wise"):
        assert commutes(P("X"), P("X"), mode)


def test_qubitwise_implies_general_all_two_qubit_pairs():
    strings = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    cases = 0
    for a in strings:
        for b in strings:
            cases += 1
            qw = commutes(P(a), P(b), "qubit-wise")
            assert qw == commutes(P(b), P(a), "qubit-wise")
            assert commutes(P(a), P(b), "general") == commutes(P(b), P(a), "general")
            if qw:
                assert commutes(P(a), P(b), "general")
    assert cases == 256


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutes(P("X"), P("XX"))
    with pytest.raises(DimensionError):
        pauli_product(P("X"), P("XX"))


def test_unknown_mode():
    with pytest.raises(ValueError):
        commutes(P("X"), P("Z"), "sideways")


def _sparse_term(c, ops, n=2):
    return PauliTerm(c, PauliString.from_sparse(ops, n))


def test_grouping_examples():
    diag = [_sparse_term(1.0, {0: "Z", 1: "Z"}), _sparse_term(0.5, {0: "Z"}), _sparse_term(0.2, {1: "Z"})]
    assert group_commuting(diag).groups == ((0, 1, 2),)

    terms = [
        _sparse_term(1.0, {0: "Z", 1: "Z"}),
        _sparse_term(0.5, {0: "X", 1: "X"}),
        _sparse_term(0.3, {0: "Z"}),
    ]
    assert group_commuting(terms, "qubit-wise").groups == ((0, 2), (1,))
    assert group_commuting([terms[1]]).groups == ((0,),)


def test_grouping_ties_break_by_label():
    terms = [PauliTerm.from_label(0.5, "ZI"), PauliTerm.from_label(0.5, "XI"), PauliTerm.from_label(-0.5, "IX")]
    # visit order: IX, XI, ZI
    assert group_commuting(terms).groups == ((2, 1), (0,))


def test_grouping_empty_input():
    with pytest.raises(EmptyInputError):
        group_commuting([])


term_lists = st.integers(1, 4).flatmap(
    lambda n: st.lists(
        st.tuples(st.floats(-2, 2, allow_nan=False), st.text("IXYZ", min_size=n, max_size=n)),
        min_size=1, max_size=12,
    )
)


@given(term_lists, st.sampled_from(["qubit-wise", "general"]))
def test_grouping_is_commuting_partition(raw, mode):
    terms = [PauliTerm.from_label(c, lab) for c, lab in raw]
    result = group_commuting(terms, mode)
    assert isinstance(result, CommutingGroups)
    assert sorted(result.indices) == list(range(len(terms)))
    for g in result:
        for i, j in itertools.combinations(g, 2):
            assert commutes(terms[i].string, terms[j].string, mode)
    assert group_commuting(list(terms), mode) == result


def test_units_stay_together():
    terms = [PauliTerm.from_label(c, lab) for c, lab in [(1.0, "XX"), (0.9, "YY"), (0.5, "ZI"), (0.4, "IZ")]]
    cg = group_commuting(terms, "general", units=x_classes(terms))
    assert any({0, 1} <= set(g) for g in cg)
    with pytest.raises(InvalidGroupError):
        group_commuting(terms, "qubit-wise", units=[[0, 1], [2], [3]])
    with pytest.raises(InvalidGroupError):
        group_commuting(terms, "general", units=[[0, 1], [2]])


def test_x_classes():
    terms = [PauliTerm.from_label(1, lab) for lab in ["XX", "ZI", "YY", "IZ", "XY"]]
    assert x_classes(terms) == [[0, 2, 4], [1, 3]]


_ROT = {
    "I": np.eye(2),
    "X": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "Y": np.array([[1, 1], [1, -1]]) / np.sqrt(2) @ np.diag([1, -1j]),
}


def _rotation_matrix(basis):
    out = np.eye(1)
    for q in reversed(range(len(basis))):
        out = np.kron(out, _ROT[basis[q]])
    return out


def test_measurement_rotation_examples():
    zz = [P("ZZ"), P("IZ")]
    assert measurement_rotation(zz) == ["I", "I"]
    xi = PauliString.from_sparse({0: "X"}, 2)
    assert measurement_rotation([xi]) == ["X", "I"]
    xy = PauliString.from_sparse({0: "X", 1: "Y"}, 2)
    basis = measurement_rotation([xy])
    assert basis == ["X", "Y"]
    U = _rotation_matrix(basis)
    rotated = U @ label_matrix(xy.label) @ U.conj().T
    np.testing.assert_allclose(rotated, np.diag(np.diag(rotated)), atol=1e-12)


@given(term_lists)
def test_rotation_diagonalises_qubitwise_groups(raw):
    terms = [PauliTerm.from_label(c, lab) for c, lab in raw]
    for g in group_commuting(terms, "qubit-wise"):
        strings = [terms[i].string for i in g]
        U = _rotation_matrix(measurement_rotation(strings))
        for s in strings:
            m = U @ label_matrix(s.label) @ U.conj().T
            np.testing.assert_allclose(m, np.diag(np.diag(m)), atol=1e-12)


def test_rotation_rejects_non_qubitwise_group():
    with pytest.raises(InvalidGroupError):
        measurement_rotation([P("XX"), P("ZZ")])
    with pytest.raises(InvalidGroupError):
        measurement_rotation([P("XI"), P("ZI")])


def test_text_round_trip():
    text = "# header\n-0.2257 ZIII\n0.5 XXYY  # trailing\n\n"
    terms = parse_terms(text.splitlines())
    assert [t.string.label for t in terms] == ["ZIII", "XXYY"]
    assert parse_terms(format_terms(terms).splitlines()) == terms
    with pytest.raises(ValueError, match="line 1"):
        parse_terms(["0.5"])
