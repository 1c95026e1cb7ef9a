import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chancap.densemath import (
    ValidationError,
    dagger,
    eigh,
    eigvalsh,
    is_unitary,
    partial_trace,
    permute_subsystems,
    polar_unitary,
    tensor,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


def random_matrix(rng, r, c):
    return rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))


def test_eigh_diagonal():
    e = eigh(np.diag([0.3, 0.7]))
    np.testing.assert_allclose(e.eigenvalues, [0.3, 0.7], atol=1e-15)


def test_eigh_pauli_x():
    np.testing.assert_allclose(eigh(X).eigenvalues, [-1.0, 1.0], atol=1e-15)


def test_eigh_reconstruction_random():
    rng = np.random.default_rng(4)
    h = random_hermitian(rng, 4)
    w, v = eigh(h)
    assert np.max(np.abs(v @ np.diag(w) @ dagger(v) - h)) <= 1e-10
    assert np.max(np.abs(dagger(v) @ v - np.eye(4))) <= 1e-10
    assert np.all(np.diff(w) >= 0)


def test_eigh_rejects_non_square():
    with pytest.raises(ValidationError, match="square"):
        eigh(np.zeros((2, 3)))


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValidationError, match="Hermitian"):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


def test_eigh_rejects_nan():
    with pytest.raises(ValidationError):
        eigh(np.array([[np.nan, 0], [0, 1]]))


def test_eigh_tolerates_tiny_asymmetry():
    h = np.array([[1.0, 0.5 + 1e-10], [0.5, 2.0]])
    w = eigh(h).eigenvalues
    assert abs(w.sum() - 3.0) < 1e-12


def test_eigh_is_deterministic():
    rng = np.random.default_rng(9)
    h = random_hermitian(rng, 6)
    a, b = eigh(h), eigh(h.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_eigh_trace_equals_eigenvalue_sum(n, seed):
    h = random_hermitian(np.random.default_rng(seed), n)
    assert abs(eigvalsh(h).sum() - np.trace(h).real) <= 1e-10 * max(1.0, np.abs(h).max())


def test_tensor_identity():
    np.testing.assert_array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_projectors():
    np.testing.assert_array_equal(tensor(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))


def test_tensor_index_convention():
    rng = np.random.default_rng(1)
    a, b = random_matrix(rng, 2, 3), random_matrix(rng, 3, 2)
    t = tensor(a, b)
    rb, cb = b.shape
    for i in range(2):
        for j in range(3):
            for k in range(3):
                for l in range(2):
                    assert abs(t[i * rb + k, j * cb + l] - a[i, j] * b[k, l]) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_tensor_trace_multiplicative(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = random_matrix(rng, n, n), random_matrix(rng, m, m)
    assert abs(np.trace(tensor(a, b)) - np.trace(a) * np.trace(b)) < 1e-10 * (1 + abs(np.trace(a) * np.trace(b)))


def test_tensor_associative():
    rng = np.random.default_rng(2)
    a, b, c = (random_matrix(rng, 2, 2) for _ in range(3))
    np.testing.assert_allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)), rtol=0, atol=1e-13)


def test_tensor_variadic():
    rng = np.random.default_rng(3)
    a, b, c = (random_matrix(rng, 2, 2) for _ in range(3))
    np.testing.assert_array_equal(tensor(a, b, c), tensor(tensor(a, b), c))


def test_partial_trace_bell():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(partial_trace(np.outer(phi, phi), (2, 2), [0]), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_product():
    rng = np.random.default_rng(5)
    ra = random_hermitian(rng, 3)
    ra = ra @ ra
    ra /= np.trace(ra)
    rb = np.diag([0.2, 0.8])
    np.testing.assert_allclose(partial_trace(np.kron(ra, rb), (3, 2), [0]), ra, atol=1e-14)


def _summation_oracle(m, dims, keep):
    # explicit loop over basis indices
    n = len(dims)
    out_dims = [dims[k] for k in keep]
    dout = int(np.prod(out_dims))
    out = np.zeros((dout, dout), dtype=complex)
    for row in np.ndindex(*dims):
        for col in np.ndindex(*dims):
            if any(row[k] != col[k] for k in range(n) if k not in keep):
                continue
            r = np.ravel_multi_index([row[k] for k in keep], out_dims)
            c = np.ravel_multi_index([col[k] for k in keep], out_dims)
            out[r, c] += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


@pytest.mark.parametrize("keep", [[0], [1], [2], [0, 1], [0, 2], [1, 2], [0, 1, 2]])
def test_partial_trace_matches_summation(keep):
    rng = np.random.default_rng(11)
    dims = (2, 3, 2)
    m = random_matrix(rng, 12, 12)
    np.testing.assert_allclose(partial_trace(m, dims, keep), _summation_oracle(m, dims, keep), atol=1e-12)


def test_partial_trace_commutes():
    rng = np.random.default_rng(12)
    m = random_hermitian(rng, 8)
    step = partial_trace(partial_trace(m, (2, 2, 2), [0, 1]), (2, 2), [0])
    assert np.max(np.abs(step - partial_trace(m, (2, 2, 2), [0]))) <= 1e-12


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(13)
    m = random_hermitian(rng, 6)
    assert abs(np.trace(partial_trace(m, (3, 2), [1])) - np.trace(m)) < 1e-12


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 3), [0])


def test_partial_trace_empty_keep():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 2), [])


def test_partial_trace_bad_keep_index():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 2), [2])


def test_permute_swap():
    rng = np.random.default_rng(14)
    a, b = random_matrix(rng, 2, 2), random_matrix(rng, 3, 3)
    np.testing.assert_allclose(permute_subsystems(np.kron(a, b), (2, 3), (1, 0)), np.kron(b, a), atol=1e-14)


def test_polar_unitary():
    rng = np.random.default_rng(15)
    u = polar_unitary(random_matrix(rng, 4, 4))
    assert is_unitary(u)

