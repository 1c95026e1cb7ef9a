"""Quantum channels in Kraus form.

A :class:`KrausChannel` is an immutable tuple of ``dout x din`` operators
obeying sum K^dagger K = I.  The complementary channel is read off the
canonical Stinespring isometry V = sum_i K_i (x) |i>_env, with the output
factor to the left of the environment factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .densemath import ValidationError, as_matrix, dagger, is_unitary, polar_unitary
from .states import BipartiteState, DensityMatrix, as_density

COMPLETENESS_TOL = 1e-8
COVARIANCE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus: tuple

    def __post_init__(self):
        ops = [as_matrix(k) for k in self.kraus]
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValidationError("Kraus operators must share one shape")
        stack = np.stack(ops)
        stack.setflags(write=False)
        gram = np.einsum("kji,kjl->il", stack.conj(), stack)
        err = float(np.max(np.abs(gram - np.eye(shape[1]))))
        if err > COMPLETENESS_TOL:
            raise ValidationError(
                f"Kraus family is not trace preserving: max|sum K^dagger K - I| = {err:.3e}"
            )
        object.__setattr__(self, "kraus", tuple(stack))
        object.__setattr__(self, "_stack", stack)

    @property
    def din(self) -> int:
        return self._stack.shape[2]

    @property
    def dout(self) -> int:
        return self._stack.shape[1]

    @property
    def stack(self) -> np.ndarray:
        """Kraus operators as one ``(n, dout, din)`` array."""
        return self._stack

    def __len__(self):
        return self._stack.shape[0]

    def __repr__(self):
        return f"KrausChannel(din={self.din}, dout={self.dout}, n_kraus={len(self)})"


class StinespringIsometry(NamedTuple):
    V: np.ndarray
    dout: int
    denv: int


# -- action -------------------------------------------------------------------


def _act(stack: np.ndarray, m: np.ndarray) -> np.ndarray:
    out = np.einsum("kij,jl,kml->im", stack, m, stack.conj())
    return 0.5 * (out + dagger(out))


def apply(ch: KrausChannel, rho) -> DensityMatrix:
    rho = as_density(rho)
    if rho.dim != ch.din:
        raise ValidationError(f"state dimension {rho.dim} does not match channel input {ch.din}")
    return DensityMatrix(_act(ch.stack, rho.mat))


def apply_matrix(ch: KrausChannel, m: np.ndarray) -> np.ndarray:
    """Unvalidated action on any square matrix (linear extension)."""
    return np.einsum("kij,jl,kml->im", ch.stack, m, ch.stack.conj())


def _act_extended(stack: np.ndarray, m: np.ndarray, da: int, db: int, side: str) -> np.ndarray:
    t = m.reshape(da, db, da, db)
    if side == "A":
        out = np.einsum("kia,abcd,kjc->ibjd", stack, t, stack.conj())
        d = (stack.shape[1], db)
    else:
        out = np.einsum("kib,abcd,kjd->aicj", stack, t, stack.conj())
        d = (da, stack.shape[1])
    n = d[0] * d[1]
    out = out.reshape(n, n)
    return 0.5 * (out + dagger(out)), d


def apply_extended(ch: KrausChannel, rho: BipartiteState, side: str = "A") -> BipartiteState:
    """(ch (x) id)[rho] for side A, (id (x) ch)[rho] for side B."""
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    dside = rho.dimA if side == "A" else rho.dimB
    if dside != ch.din:
        raise ValidationError(f"side {side} has dimension {dside}, channel expects {ch.din}")
    out, (da, db) = _act_extended(ch.stack, rho.mat, rho.dimA, rho.dimB, side)
    return BipartiteState(DensityMatrix(out), da, db)


def extended_output_matrix(ch: KrausChannel, m: np.ndarray, da: int, db: int, side: str = "A") -> np.ndarray:
    return _act_extended(ch.stack, m, da, db, side)[0]


# -- dilation, complement, composition ---------------------------------------------


def stinespring(ch: KrausChannel) -> StinespringIsometry:
    """Isometry V with V[(o * denv + i), k] = K_i[o, k]."""
    n, dout, din = ch.stack.shape
    V = ch.stack.transpose(1, 0, 2).reshape(dout * n, din)
    return StinespringIsometry(V, dout, n)


def complementary(ch: KrausChannel) -> KrausChannel:
    """Channel to the environment of the canonical dilation.

    Its Kraus operators are R_j[i, k] = K_i[j, k], one per output basis
    vector j.
    """
    return KrausChannel(tuple(ch.stack.transpose(1, 0, 2)))


def compose(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """``second`` after ``first``; Kraus family {K_j L_i} with j major."""
    if first.dout != second.din:
        raise ValidationError(f"cannot compose: first outputs {first.dout}, second takes {second.din}")
    ops = np.einsum("jab,ibc->jiac", second.stack, first.stack)
    return KrausChannel(tuple(ops.reshape(-1, second.dout, first.din)))


def tensor_channels(*chs: KrausChannel) -> KrausChannel:
    ops = [np.eye(1, dtype=np.complex128)]
    for ch in chs:
        ops = [np.kron(a, k) for a in ops for k in ch.stack]
    return KrausChannel(tuple(ops))


# -- built-in channels ----------------------------------------------------------------


def identity(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d, dtype=np.complex128),))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel((as_matrix(u),))


def reset(d: int, target: int = 0) -> KrausChannel:
    """Replace every input by the basis state |target>."""
    ops = []
    for i in range(d):
        k = np.zeros((d, d), dtype=np.complex128)
        k[target, i] = 1.0
        ops.append(k)
    return KrausChannel(tuple(ops))


def _check_prob(name: str, v: float, hi: float = 1.0):
    if not 0.0 <= v <= hi:
        raise ValueError(f"{name}={v!r} outside [0, {hi:g}]")


def erasure(d: int, eps: float) -> KrausChannel:
    """Erasure channel rho -> (1-eps) rho (+) eps |e><e| with |e> = basis vector d."""
    if d < 2:
        raise ValueError(f"erasure needs d >= 2, got {d}")
    _check_prob("eps", eps)
    embed = np.zeros((d + 1, d), dtype=np.complex128)
    embed[:d, :d] = np.eye(d)
    ops = [np.sqrt(1.0 - eps) * embed]
    for i in range(d):
        k = np.zeros((d + 1, d), dtype=np.complex128)
        k[d, i] = np.sqrt(eps)
        ops.append(k)
    return KrausChannel(tuple(ops))


def weyl_operators(d: int) -> list[np.ndarray]:
    """X^a Z^b for a, b in 0..d-1, ordered with a major."""
    w = np.exp(2j * np.pi / d)
    X = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    Z = np.diag(w ** np.arange(d))
    return [
        np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b) for a in range(d) for b in range(d)
    ]


def depolarizing(d: int, lam: float) -> KrausChannel:
    """rho -> lam I/d + (1-lam) rho as a Weyl (Pauli for d=2) mixture.

    Complete positivity holds for lam in [0, d^2/(d^2-1)].
    """
    if d < 2:
        raise ValueError(f"depolarizing needs d >= 2, got {d}")
    _check_prob("lam", lam, d * d / (d * d - 1))
    weights = np.full(d * d, lam / (d * d))
    weights[0] = 1.0 - lam + lam / (d * d)
    weights = np.clip(weights, 0.0, None)
    return KrausChannel(tuple(np.sqrt(p) * u for p, u in zip(weights, weyl_operators(d))))


def dephasing(gamma: float) -> KrausChannel:
    """Qubit phase damping: off-diagonals scaled by sqrt(1-gamma)."""
    _check_prob("gamma", gamma)
    k0 = np.diag([1.0, np.sqrt(1.0 - gamma)]).astype(np.complex128)
    k1 = np.diag([0.0, np.sqrt(gamma)]).astype(np.complex128)
    return KrausChannel((k0, k1))


def random_channel(din: int, dout: int, denv: int = 2, seed=None) -> KrausChannel:
    """Channel from a Haar-like random isometry din -> dout (x) denv."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = dout * denv
    if n < din:
        raise ValidationError(f"dout*denv = {n} too small for an isometry from {din}")
    z = (rng.standard_normal((n, din)) + 1j * rng.standard_normal((n, din))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    ops = q.reshape(dout, denv, din).transpose(1, 0, 2)
    return KrausChannel(tuple(ops))


BUILTINS = {
    "identity": lambda d=2: identity(int(d)),
    "erasure": lambda d=2, eps=0.0: erasure(int(d), float(eps)),
    "depolarizing": lambda d=2, lam=0.0: depolarizing(int(d), float(lam)),
    "dephasing": lambda gamma=0.0: dephasing(float(gamma)),
    "reset": lambda d=2: reset(int(d)),
}


def builtin(name: str, **params) -> KrausChannel:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown channel {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


# -- JSON ---------------------------------------------------------------------------


def channel_to_dict(ch: KrausChannel) -> dict:
    return {
        "din": ch.din,
        "dout": ch.dout,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.stack],
    }


def channel_from_dict(doc: dict) -> KrausChannel:
    """Build a channel from ``{"din", "dout", "kraus"}`` or a named builtin."""
    if not isinstance(doc, dict):
        raise ValidationError("channel spec must be a JSON object")
    if "name" in doc:
        params = {k: v for k, v in doc.items() if k != "name"}
        return builtin(doc["name"], **params)
    for key in ("din", "dout", "kraus"):
        if key not in doc:
            raise ValidationError(f"channel spec missing {key!r}")
    din, dout = int(doc["din"]), int(doc["dout"])
    ops = []
    for n, k in enumerate(doc["kraus"]):
        try:
            a = np.array(k, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"Kraus operator {n} is not a nested [re, im] array") from None
        if a.shape != (dout, din, 2):
            raise ValidationError(f"Kraus operator {n} has shape {a.shape[:2]}, expected ({dout}, {din})")
        ops.append(a[..., 0] + 1j * a[..., 1])
    return KrausChannel(tuple(ops))


def channel_to_json(ch: KrausChannel) -> str:
    return json.dumps(channel_to_dict(ch))


# -- covariance -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovariantGroup:
    """Unitary set whose conjugation average annihilates traceless matrices."""

    unitaries: tuple
    validate: bool = True

    def __post_init__(self):
        us = tuple(as_matrix(u) for u in self.unitaries)
        if not us:
            raise ValidationError("empty unitary set")
        for n, u in enumerate(us):
            if not is_unitary(u):
                raise ValidationError(f"member {n} is not unitary")
        object.__setattr__(self, "unitaries", us)
        if self.validate:
            res = self.annihilation_residual()
            if res > 1e-8:
                raise ValidationError(f"unitary set does not annihilate traceless matrices (residual {res:.3e})")

    @property
    def dim(self) -> int:
        return self.unitaries[0].shape[0]

    def __len__(self):
        return len(self.unitaries)

    def __iter__(self):
        return iter(self.unitaries)

    def annihilation_residual(self) -> float:
        worst = 0.0
        for m in traceless_basis(self.dim):
            s = sum(u @ m @ dagger(u) for u in self.unitaries)
            worst = max(worst, float(np.max(np.abs(s))))
        return worst


def traceless_basis(d: int) -> list[np.ndarray]:
    """Generalised Gell-Mann matrices (d^2 - 1 of them)."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=np.complex128)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), dtype=np.complex128)
            a[j, k], a[k, j] = -1j, 1j
            out += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        out.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(np.complex128))
    return out


def weyl_group(d: int) -> CovariantGroup:
    if d < 2:
        raise ValueError(f"weyl_group needs d >= 2, got {d}")
    return CovariantGroup(tuple(weyl_operators(d)))


def twirl(group, rho) -> DensityMatrix:
    """Uniform average of U rho U^dagger over the members of ``group``."""
    us = list(group)
    rho = as_density(rho)
    if us[0].shape[0] != rho.dim:
        raise ValidationError(f"group acts on dimension {us[0].shape[0]}, state has {rho.dim}")
    m = sum(u @ rho.mat @ dagger(u) for u in us) / len(us)
    return DensityMatrix(0.5 * (m + dagger(m)))


def spanning_states(d: int) -> list[np.ndarray]:
    """d^2 density matrices spanning all d x d matrices."""
    e = np.eye(d, dtype=np.complex128)
    out = [np.outer(e[i], e[i]) for i in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            for ph in (1.0, 1j):
                v = (e[j] + ph * e[k]) / np.sqrt(2)
                out.append(np.outer(v, v.conj()))
    return out


class CovarianceCheck(NamedTuple):
    covariant: bool
    residual: float


def _matching_unitary(As, Bs) -> tuple[np.ndarray, float]:
    """Unitary V with V A_k V^dagger ~ B_k, via the null space of X A_k - B_k X."""
    n = As[0].shape[0]
    eye = np.eye(n)
    L = np.vstack([np.kron(eye, A.T) - np.kron(B, eye) for A, B in zip(As, Bs)])
    _, s, vh = np.linalg.svd(L)
    null = vh[s <= 1e-8 * max(1.0, s[0])]
    if len(null) == 0:
        null = vh[-1:]
    # fixed generic combination so degenerate null spaces (e.g. U (+) c on the
    # erasure flag) still give an invertible X
    coef = np.random.default_rng(20170101).standard_normal((len(null), 2)) @ np.array([1.0, 1j])
    X = (coef @ null.conj()).reshape(n, n)
    V = polar_unitary(X)
    res = max(float(np.max(np.abs(V @ A @ dagger(V) - B))) for A, B in zip(As, Bs))
    return V, res


def check_generalized_covariance(ch: KrausChannel, group) -> CovarianceCheck:
    """Test Psi(U rho U^dagger) = V Psi(rho) V^dagger for every U in ``group``.

    Square channels and erasure-style outputs (dout = din + 1) are supported;
    any other shape returns ``(False, inf)``.
    """
    us = list(group)
    if ch.dout not in (ch.din, ch.din + 1) or us[0].shape[0] != ch.din:
        return CovarianceCheck(False, float("inf"))
    basis = spanning_states(ch.din)
    As = [apply_matrix(ch, r) for r in basis]
    worst = 0.0
    for u in us:
        Bs = [apply_matrix(ch, u @ r @ dagger(u)) for r in basis]
        _, res = _matching_unitary(As, Bs)
        worst = max(worst, res)
    return CovarianceCheck(worst <= COVARIANCE_TOL, worst)
