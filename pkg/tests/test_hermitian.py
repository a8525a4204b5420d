import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entcert.hermitian import (
    LayoutError,
    NotHermitianError,
    TensorLayout,
    expand_in_basis,
    hermitian,
    hermitian_basis,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    reconstruct,
    symmetric_index_map,
    tensor_product,
)
from entcert.serialize import FormatError, matrix_from_json, matrix_to_json

from conftest import bell, random_hermitian, random_state

AB = TensorLayout.bipartite(2, 2)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_basis_gram_and_trace(d):
    b = hermitian_basis(d)
    gram = np.einsum("iab,jba->ij", b.elements, b.elements)
    assert np.allclose(gram, b.alpha * np.eye(d * d), atol=1e-12)
    assert b.alpha == pytest.approx(1 / d)
    tr = np.einsum("iaa->i", b.elements)
    assert np.allclose(tr, np.eye(d * d)[0], atol=1e-12)
    assert np.allclose(b.elements[0], np.eye(d) / d)


def test_qubit_basis_is_half_paulis():
    b = hermitian_basis(2).elements
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    for p in paulis:
        # each Pauli/2 appears up to sign
        assert any(np.allclose(e, p / 2) or np.allclose(e, -p / 2) for e in b[1:])


def test_hermitian_validation():
    with pytest.raises(NotHermitianError):
        hermitian(np.array([[0, 1], [0, 0]]))
    x = np.array([[1, 1e-14], [0, 2]])
    assert np.allclose(hermitian(x), hermitian(x).conj().T)


def test_tensor_product(rng):
    assert np.allclose(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    X, Y, X2, Y2 = (random_hermitian(rng, n) for n in (2, 3, 2, 3))
    assert np.trace(tensor_product(X, Y)) == pytest.approx(np.trace(X) * np.trace(Y))
    assert np.allclose(tensor_product(X, Y) @ tensor_product(X2, Y2), tensor_product(X @ X2, Y @ Y2), atol=1e-12)


def test_partial_trace_examples(rng):
    ra, rb = random_state(rng, 2), random_hermitian(rng, 3)
    lay = TensorLayout.bipartite(2, 3)
    assert np.allclose(partial_trace(np.kron(ra, rb), lay, ["B"]), np.trace(rb) * ra)
    assert np.allclose(partial_trace(bell(), AB, ["B"]), np.eye(2) / 2)
    three = TensorLayout((2, 2, 2))
    assert np.allclose(partial_trace(np.eye(8) / 8, three, [0, 2]), np.eye(2) / 2)
    with pytest.raises(LayoutError):
        partial_trace(np.eye(8), AB, ["B"])
    with pytest.raises(LayoutError):
        partial_trace(np.eye(4), AB, ["A", "B"])


def test_partial_trace_matches_index_sum(rng):
    x = random_hermitian(rng, 6).reshape(2, 3, 2, 3)
    oracle = np.zeros((2, 2), complex)
    for i in range(2):
        for j in range(2):
            oracle[i, j] = sum(x[i, b, j, b] for b in range(3))
    assert np.allclose(partial_trace(x.reshape(6, 6), TensorLayout.bipartite(2, 3), ["B"]), oracle)


def test_partial_transpose_examples(rng):
    assert min_eigenvalue(partial_transpose(bell(), AB, ["B"])) == pytest.approx(-0.5)
    prod = np.kron(random_state(rng, 2), random_state(rng, 2))
    assert min_eigenvalue(partial_transpose(prod, AB, ["B"])) > -1e-12
    with pytest.raises(LayoutError):
        partial_transpose(np.eye(3), AB, ["A"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2, 2), (2, 3, 2), (3, 2, 2)]))
def test_transpose_involution_and_commutes_with_trace(seed, dims):
    rng = np.random.default_rng(seed)
    lay = TensorLayout(dims)
    x = random_hermitian(rng, lay.dim)
    t = partial_transpose(x, lay, [0])
    assert np.allclose(partial_transpose(t, lay, [0]), x, atol=0)
    assert np.allclose(t, t.conj().T, atol=1e-12)
    rest = TensorLayout(dims[:2])
    lhs = partial_trace(partial_transpose(x, lay, [0]), lay, [2])
    rhs = partial_transpose(partial_trace(x, lay, [2]), rest, [0])
    assert np.allclose(lhs, rhs, atol=1e-10)
    assert np.trace(partial_trace(x, lay, [1])) == pytest.approx(np.trace(x))


def test_expand_examples():
    b = hermitian_basis(2)
    c = expand_in_basis(np.eye(4) / 4, b, b)
    expect = np.zeros((4, 4))
    expect[0, 0] = 1
    assert np.allclose(c, expect, atol=1e-12)
    c = expand_in_basis(np.kron(b.elements[1], b.elements[1]), b, b)
    expect = np.zeros((4, 4))
    expect[1, 1] = 1
    assert np.allclose(c, expect, atol=1e-12)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_expand_round_trip(dims, rng):
    ba, bb = hermitian_basis(dims[0]), hermitian_basis(dims[1])
    for _ in range(100):
        x = random_hermitian(rng, dims[0] * dims[1])
        c = expand_in_basis(x, ba, bb)
        assert np.isrealobj(c)
        assert np.abs(reconstruct(c, ba, bb) - x).max() < 1e-10


def test_min_eigenvalue():
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1)
    assert min_eigenvalue(np.diag([3.0, -7.0])) == pytest.approx(-7)


def test_symmetric_index_examples():
    assert len(symmetric_index_map(4, 1, 4)) == 16
    assert len(symmetric_index_map(4, 2, 4)) == 40
    assert len(symmetric_index_map(1, 5, 9)) == 9


@pytest.mark.parametrize("d2", range(1, 10))
@pytest.mark.parametrize("k", range(1, 5))
def test_symmetric_index_brute_force(d2, k):
    brute = {tuple(sorted(w)) for w in itertools.product(range(d2), repeat=k)}
    idx = symmetric_index_map(d2, k, 3)
    assert set(idx.multisets) == brute
    assert len(idx) == comb(d2 + k - 1, k) * 3
    assert idx.multisets[0] == (0,) * k


def test_matrix_json_round_trip(rng):
    x = random_hermitian(rng, 3)
    assert np.array_equal(matrix_from_json(matrix_to_json(x)), x)
    real = matrix_to_json(np.eye(2))
    assert "im" not in real
    with pytest.raises(FormatError):
        matrix_from_json({"dim": 3, "re": [[1]]})
    with pytest.raises(NotHermitianError):
        matrix_from_json({"dim": 2, "re": [[0, 1], [0, 0]]})
