"""Density matrices, bipartite splits and entropy functionals.

All entropies are in bits.  Also holds the two explicit two-qubit state
families used by the capacity searches: the ten-parameter family with
diagonal marginals and the Bell-diagonal family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log2

import numpy as np

from .densemath import (
    ValidationError,
    as_matrix,
    dagger,
    eigvalsh,
    hermitian_residual,
    partial_trace,
    permute_subsystems,
)

STATE_TOL = 1e-8
ZERO_EIG = 1e-12


class NotPositiveError(ValidationError):
    """An assembled matrix failed the positivity check; the caller resamples."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive, unit-trace Hermitian operator.

    The spectrum is computed once at construction (it is needed for the
    positivity check anyway) and reused by :func:`von_neumann_entropy`.
    """

    mat: np.ndarray
    spectrum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = as_matrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        res = hermitian_residual(m)
        if res > STATE_TOL:
            raise ValidationError(f"density matrix not Hermitian: residual {res:.3e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STATE_TOL:
            raise ValidationError(f"density matrix trace {tr!r} differs from 1 by more than {STATE_TOL:g}")
        w = eigvalsh(m)
        if w[0] < -STATE_TOL:
            raise ValidationError(f"density matrix has negative eigenvalue {w[0]:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "spectrum", w)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def as_density(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    if isinstance(rho, PureState):
        return rho.density()
    return DensityMatrix(np.asarray(rho, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class BipartiteState:
    state: DensityMatrix
    dimA: int
    dimB: int

    def __post_init__(self):
        object.__setattr__(self, "state", as_density(self.state))
        if self.dimA < 1 or self.dimB < 1 or self.dimA * self.dimB != self.state.dim:
            raise ValidationError(
                f"split {self.dimA}x{self.dimB} does not match state dimension {self.state.dim}"
            )

    @property
    def mat(self) -> np.ndarray:
        return self.state.mat

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dimA, self.dimB)

    def marginal_a(self) -> DensityMatrix:
        return DensityMatrix(partial_trace(self.mat, self.dims, [0]))

    def marginal_b(self) -> DensityMatrix:
        return DensityMatrix(partial_trace(self.mat, self.dims, [1]))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"pure state norm {norm!r} is not 1")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()))


def tensor_bipartite(first: BipartiteState, second: BipartiteState) -> BipartiteState:
    """first (x) second regrouped as (A1 A2) | (B1 B2)."""
    m = np.kron(first.mat, second.mat)
    dims = (first.dimA, first.dimB, second.dimA, second.dimB)
    m = permute_subsystems(m, dims, (0, 2, 1, 3))
    return BipartiteState(DensityMatrix(m), first.dimA * second.dimA, first.dimB * second.dimB)


# -- entropies ---------------------------------------------------------------


def entropy_of_spectrum(w) -> float:
    w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
    w = w[w > ZERO_EIG]
    return float(-np.sum(w * np.log2(w))) + 0.0


def von_neumann_entropy(rho) -> float:
    """S(rho) = -sum lambda log2 lambda, eigenvalues clipped to [0, 1]."""
    return entropy_of_spectrum(as_density(rho).spectrum)


def matrix_entropy(m: np.ndarray) -> float:
    """Entropy of a trusted matrix (internal hot path; no validation)."""
    return entropy_of_spectrum(eigvalsh(m))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy needs p in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * log2(p) - (1.0 - p) * log2(1.0 - p)


def mutual_information(rho: BipartiteState) -> float:
    """I(A:B) = S(A) + S(B) - S(AB)."""
    m, dims = rho.mat, rho.dims
    return (
        matrix_entropy(partial_trace(m, dims, [0]))
        + matrix_entropy(partial_trace(m, dims, [1]))
        - von_neumann_entropy(rho.state)
    )


def conditional_mutual_information(rho, dims) -> float:
    """I(A:B|C) = S(AC) + S(BC) - S(ABC) - S(C) for a tripartite state."""
    rho = as_density(rho)
    dims = tuple(dims)
    if len(dims) != 3:
        raise ValidationError(f"conditional mutual information needs three subsystems, got {dims}")
    m = rho.mat
    return (
        matrix_entropy(partial_trace(m, dims, [0, 2]))
        + matrix_entropy(partial_trace(m, dims, [1, 2]))
        - von_neumann_entropy(rho)
        - matrix_entropy(partial_trace(m, dims, [2]))
    )


# -- purification and random states -------------------------------------------


def purify(rho) -> PureState:
    """Purification |psi> = sum_i sqrt(l_i) |v_i>|i> on the doubled space.

    The purifying factor is the right tensor factor.
    """
    rho = as_density(rho)
    w, v = np.linalg.eigh(0.5 * (rho.mat + dagger(rho.mat)))
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    d = rho.dim
    psi = np.zeros(d * d, dtype=np.complex128)
    for i in range(d):
        psi += np.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[i])
    return PureState(psi / np.linalg.norm(psi))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_pure_state(dim: int, seed=None) -> PureState:
    rng = _rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v))


def random_state(dim: int, purity_env: int, seed=None) -> DensityMatrix:
    """Marginal of a Haar-random pure state on ``dim x purity_env``.

    ``purity_env = 1`` gives a pure state; large ``purity_env`` concentrates
    around I/dim.  ``seed`` may be an int, a tuple of ints (used for
    per-index derived streams) or a ``numpy.random.Generator``.
    """
    if dim < 1 or purity_env < 1:
        raise ValidationError(f"dim and purity_env must be >= 1, got {dim}, {purity_env}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, purity_env)) + 1j * rng.standard_normal((dim, purity_env))
    m = g @ dagger(g)
    m /= np.trace(m).real
    return DensityMatrix(0.5 * (m + dagger(m)))


# -- explicit two-qubit families ----------------------------------------------


@dataclass(frozen=True)
class TenParamSpec:
    a: float
    p1: float
    p2: float
    r1: float = 0.0
    r2: float = 0.0
    c1: float = 0.0
    c3: float = 0.0
    theta: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        tol = 1e-12
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not -tol <= v <= 1 + tol:
                raise ValidationError(f"{name}={v!r} outside [0, 1]")
        for name in ("r1", "r2", "c1", "c3"):
            v = getattr(self, name)
            if not -tol <= v <= 0.5 + tol:
                raise ValidationError(f"{name}={v!r} outside [0, 1/2]")
        lo, hi = self.a_interval(self.p1, self.p2)
        if not lo - tol <= self.a <= hi + tol:
            raise ValidationError(f"a={self.a!r} outside [{lo!r}, {hi!r}] for p1={self.p1!r}, p2={self.p2!r}")

    @staticmethod
    def a_interval(p1: float, p2: float) -> tuple[float, float]:
        return max(0.0, p1 + p2 - 1.0), min(p1, p2)

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "TenParamSpec":
        """Uniform over the parameter box, with ``a`` drawn from its (p1, p2) interval."""
        p1, p2 = rng.uniform(0.0, 1.0, size=2)
        lo, hi = cls.a_interval(p1, p2)
        a = rng.uniform(lo, hi)
        r1, r2, c1, c3 = rng.uniform(0.0, 0.5, size=4)
        theta, alpha, beta = rng.uniform(0.0, 2 * np.pi, size=3)
        return cls(a, p1, p2, r1, r2, c1, c3, theta, alpha, beta)


def ten_param_matrix(s: TenParamSpec) -> np.ndarray:
    """The 4x4 layout in the |00>, |01>, |10>, |11> (signal, witness) basis.

    With this layout the signal marginal is diag(p2, 1-p2) and the witness
    marginal is diag(p1, 1-p1).
    """
    ea, eb, et = np.exp(1j * s.alpha), np.exp(1j * s.beta), np.exp(1j * s.theta)
    c1, c3, r1, r2, a = s.c1, s.c3, s.r1, s.r2, s.a
    return np.array(
        [
            [a, c3 / ea, c1 / eb, r1],
            [c3 * ea, s.p2 - a, r2 * et, -c1 / eb],
            [c1 * eb, r2 / et, s.p1 - a, -c3 / ea],
            [r1, -c1 * eb, -c3 * ea, 1 + a - s.p1 - s.p2],
        ],
        dtype=np.complex128,
    )


def ten_param_state(spec: TenParamSpec) -> BipartiteState:
    m = ten_param_matrix(spec)
    w = eigvalsh(m)
    if w[0] < -1e-10:
        raise NotPositiveError(f"ten-parameter assembly has eigenvalue {w[0]:.3e}")
    return BipartiteState(DensityMatrix(m), 2, 2)


def principal_minors_ok(m: np.ndarray, shift: float = 1e-10) -> np.ndarray:
    # necessary for min eigenvalue >= -shift: every 2x2 principal minor of
    # m + shift*I is non-negative
    d = m[:, [0, 1, 2, 3], [0, 1, 2, 3]].real + shift
    ok = np.all(d >= 0, axis=1)
    for i in range(4):
        for j in range(i + 1, 4):
            ok &= d[:, i] * d[:, j] >= np.abs(m[:, i, j]) ** 2
    return ok


def sample_ten_param_state(
    rng: np.random.Generator, block: int = 1024, max_blocks: int = 1000
) -> tuple[TenParamSpec, BipartiteState]:
    """First positive assembly from a stream of uniform parameter draws.

    Candidates are drawn ``block`` at a time and screened with a batched
    eigensolver; roughly 0.2% of uniform draws are positive.
    """
    for _ in range(max_blocks):
        x = sample_ten_param_block(rng, block)
        m = ten_param_matrices(x)
        idx = np.flatnonzero(principal_minors_ok(m))
        if idx.size:
            ok = idx[np.linalg.eigvalsh(m[idx])[:, 0] >= -1e-10]
            if ok.size:
                spec = TenParamSpec(*x[ok[0]])
                return spec, ten_param_state(spec)
    raise RuntimeError("ten-parameter sampler exhausted its retry budget")


_S = 1 / np.sqrt(2)
# Phi+, Phi-, Psi+, Psi-
BELL_VECTORS = np.array(
    [[_S, 0, 0, _S], [_S, 0, 0, -_S], [0, _S, _S, 0], [0, _S, -_S, 0]], dtype=np.complex128
)


def bell_diagonal(p) -> BipartiteState:
    """Mixture of the four Bell projectors with weights ``p``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (4,) or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError(f"bell_diagonal needs a 4-outcome distribution, got {p!r}")
    p = np.clip(p, 0.0, None)
    phi, psi = 0.5 * (p[0] + p[1]), 0.5 * (p[2] + p[3])
    m = np.diag([phi, psi, psi, phi]).astype(np.complex128)
    m[0, 3] = m[3, 0] = 0.5 * (p[0] - p[1])
    m[1, 2] = m[2, 1] = 0.5 * (p[2] - p[3])
    return BipartiteState(DensityMatrix(m), 2, 2)


def ten_param_matrices(x: np.ndarray) -> np.ndarray:
    """Batched assembly from rows (a, p1, p2, r1, r2, c1, c3, theta, alpha, beta)."""
    a, p1, p2, r1, r2, c1, c3, th, al, be = x.T
    ea, eb, et = np.exp(1j * al), np.exp(1j * be), np.exp(1j * th)
    m = np.empty((x.shape[0], 4, 4), dtype=np.complex128)
    m[:, 0] = np.stack([a, c3 / ea, c1 / eb, r1], axis=1)
    m[:, 1] = np.stack([c3 * ea, p2 - a, r2 * et, -c1 / eb], axis=1)
    m[:, 2] = np.stack([c1 * eb, r2 / et, p1 - a, -c3 / ea], axis=1)
    m[:, 3] = np.stack([r1, -c1 * eb, -c3 * ea, 1 + a - p1 - p2], axis=1)
    return m


def ten_param_from_unit(u: np.ndarray) -> np.ndarray:
    """Map rows of the unit box [0,1]^10 to (a, p1, p2, r1, r2, c1, c3, theta, alpha, beta).

    The first coordinate positions ``a`` inside its (p1, p2)-dependent interval.
    """
    x = np.array(u, dtype=float, ndmin=2)
    p1, p2 = x[:, 1], x[:, 2]
    lo = np.maximum(0.0, p1 + p2 - 1.0)
    hi = np.minimum(p1, p2)
    x[:, 0] = lo + x[:, 0] * (hi - lo)
    x[:, 3:7] *= 0.5
    x[:, 7:] *= 2 * np.pi
    return x


def sample_ten_param_block(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` uniform draws from the parameter box, as rows of ten values."""
    return ten_param_from_unit(rng.uniform(0.0, 1.0, size=(size, 10)))
