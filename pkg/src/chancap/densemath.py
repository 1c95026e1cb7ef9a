"""Dense complex matrix kernel.

Everything above this module works on plain ``numpy.ndarray`` values of
dtype ``complex128``.  The helpers here validate shapes, take tensor
products and partial traces over an arbitrary list of subsystem dimensions,
and wrap the Hermitian eigensolver.
"""

from __future__ import annotations

from math import prod
from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-8


class ValidationError(ValueError):
    """Raised when an input violates a documented numerical bound."""


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite 2-d complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {a.shape}")
    if a.size == 0:
        raise ValidationError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def hermitian_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def eigh(h) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrised as (H + H^dagger)/2 before calling LAPACK, which
    removes the small asymmetry that builds up after repeated channel
    applications.  Eigenvalues come back in ascending order.

    Raises
    ------
    ValidationError
        If ``h`` is not square or ``max|H - H^dagger| > 1e-8``.
    """
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValidationError(f"eigh needs a square matrix, got {h.shape}")
    res = hermitian_residual(h)
    if res > HERMITIAN_TOL:
        raise ValidationError(
            f"matrix is not Hermitian: max|H - H^dagger| = {res:.3e} > {HERMITIAN_TOL:g}"
        )
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return HermitianEigen(w, v)


def eigvalsh(h: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of an (already trusted) Hermitian matrix."""
    return np.linalg.eigvalsh(0.5 * (h + dagger(h)))


def tensor(*ms) -> np.ndarray:
    """Kronecker product, left factor most significant."""
    if not ms:
        raise ValidationError("tensor needs at least one factor")
    out = as_matrix(ms[0])
    for m in ms[1:]:
        out = np.kron(out, as_matrix(m))
    return out


def _check_dims(n: int, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValidationError(f"subsystem dimensions must be positive, got {dims}")
    if prod(dims) != n:
        raise ValidationError(
            f"product of subsystem dimensions {dims} = {prod(dims)} does not match matrix dimension {n}"
        )
    return dims


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order and ``keep`` is
    a non-empty collection of indices into it.  The kept factors stay in
    their original relative order.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"partial_trace needs a square matrix, got {m.shape}")
    dims = _check_dims(m.shape[0], dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValidationError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    n = len(dims)
    t = m.reshape(dims + dims)
    gone = [i for i in range(n) if i not in keep]
    # einsum labels: row indices 0..n-1, column indices n..2n-1; traced
    # subsystems share a label between row and column.
    row = list(range(n))
    col = [i if i in gone else n + i for i in range(n)]
    out_labels = keep + [n + k for k in keep]
    t = np.einsum(t, row + col, out_labels)
    d = prod(dims[k] for k in keep)
    return t.reshape(d, d)


def permute_subsystems(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator: new factor j is old ``order[j]``."""
    m = as_matrix(m)
    dims = _check_dims(m.shape[0], dims)
    order = list(order)
    if sorted(order) != list(range(len(dims))):
        raise ValidationError(f"order {order} is not a permutation of {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims).transpose(order + [n + k for k in order])
    return t.reshape(m.shape)


def is_unitary(u: np.ndarray, tol: float = 1e-8) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition of a square matrix."""
    w, _, vh = np.linalg.svd(m)
    return w @ vh
