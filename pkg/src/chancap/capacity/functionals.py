"""Entropy gain, Holevo quantity and the F functional."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..channels import (
    KrausChannel,
    apply,
    complementary,
    compose,
    extended_output_matrix,
    identity,
    reset,
    tensor_channels,
    unitary_channel,
    weyl_operators,
    _act,
)
from ..densemath import ValidationError, partial_trace
from ..states import (
    BipartiteState,
    as_density,
    matrix_entropy,
    purify,
    von_neumann_entropy,
)


@dataclass(frozen=True, eq=False)
class EncodingEnsemble:
    """Probability-weighted encoding operations (P_X(x), eps_x) on the signal."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(p), op) for p, op in self.entries)
        if not entries:
            raise ValidationError("empty encoding ensemble")
        probs = np.array([p for p, _ in entries])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-10:
            raise ValidationError(f"encoding probabilities must be >= 0 and sum to 1, got {probs}")
        shapes = {(op.din, op.dout) for _, op in entries}
        if len(shapes) != 1:
            raise ValidationError(f"encoding operations disagree on dimensions: {sorted(shapes)}")
        object.__setattr__(self, "entries", entries)

    @property
    def din(self) -> int:
        return self.entries[0][1].din

    @property
    def dout(self) -> int:
        return self.entries[0][1].dout

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def identity_encoding(d: int) -> EncodingEnsemble:
    return EncodingEnsemble(((1.0, identity(d)),))


def reset_encoding(d: int) -> EncodingEnsemble:
    return EncodingEnsemble(((1.0, reset(d)),))


def weyl_encoding(d: int, first: KrausChannel | None = None) -> EncodingEnsemble:
    """Uniform Weyl unitaries, optionally preceded by a fixed operation ``first``."""
    ops = [unitary_channel(u) for u in weyl_operators(d)]
    if first is not None:
        ops = [compose(u, first) for u in ops]
    return EncodingEnsemble(tuple((1.0 / len(ops), op) for op in ops))


def product_ensemble(first: EncodingEnsemble, second: EncodingEnsemble) -> EncodingEnsemble:
    """Two-use ensemble {(p q, eps_x (x) delta_y)}."""
    return EncodingEnsemble(tuple((p * q, tensor_channels(a, b)) for p, a in first for q, b in second))


ENCODINGS = {"identity": identity_encoding, "weyl": weyl_encoding, "reset": reset_encoding}


def entropy_gain(ch: KrausChannel, rho) -> float:
    """S(ch[rho]) - S(rho); negative for maps that purify."""
    rho = as_density(rho)
    return von_neumann_entropy(apply(ch, rho)) - von_neumann_entropy(rho)


def extended_entropy_gain(ch: KrausChannel, rho: BipartiteState, side: str = "A") -> float:
    """Entropy gain of ch (x) id acting on one side of a bipartite state."""
    dside = rho.dimA if side == "A" else rho.dimB
    if dside != ch.din:
        raise ValidationError(f"side {side} has dimension {dside}, channel expects {ch.din}")
    out = extended_output_matrix(ch, rho.mat, rho.dimA, rho.dimB, side)
    return matrix_entropy(out) - von_neumann_entropy(rho.state)


def holevo(states: Sequence) -> float:
    """S(sum p rho) - sum p S(rho) for ``[(p, rho), ...]``."""
    pairs = [(float(p), as_density(r)) for p, r in states]
    probs = np.array([p for p, _ in pairs])
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-10:
        raise ValidationError("holevo probabilities must be >= 0 and sum to 1")
    dims = {r.dim for _, r in pairs}
    if len(dims) != 1:
        raise ValidationError(f"holevo states have mismatched dimensions {sorted(dims)}")
    avg = sum(p * r.mat for p, r in pairs)
    return von_neumann_entropy(avg) - sum(p * von_neumann_entropy(r) for p, r in pairs)


def _check_signal(ch: KrausChannel, rho_sw: BipartiteState, enc: EncodingEnsemble):
    if enc.din != rho_sw.dimA:
        raise ValidationError(f"encoding acts on dimension {enc.din}, signal has {rho_sw.dimA}")
    if ch.din != enc.dout:
        raise ValidationError(f"channel takes dimension {ch.din}, encoding outputs {enc.dout}")


def F_functional(ch: KrausChannel, rho_sw: BipartiteState, enc: EncodingEnsemble) -> float:
    """S(rho_B) - sum_x P(x) E_{Phi_x (x) id}[rho_SW].

    rho_B is the explicitly mixed channel output sum_x P(x) (ch o eps_x)[rho_S]
    and Phi_x is the complement of ch o eps_x, whose environment collects
    both the channel's and the encoder's environments.
    """
    _check_signal(ch, rho_sw, enc)
    rho_s = partial_trace(rho_sw.mat, rho_sw.dims, [0])
    rho_b = np.zeros((ch.dout, ch.dout), dtype=np.complex128)
    gain = 0.0
    s_sw = von_neumann_entropy(rho_sw.state)
    for p, op in enc:
        full = compose(ch, op)
        rho_b += p * _act(full.stack, rho_s)
        out = extended_output_matrix(complementary(full), rho_sw.mat, rho_sw.dimA, rho_sw.dimB, "A")
        gain += p * (matrix_entropy(out) - s_sw)
    return matrix_entropy(rho_b) - gain


def hsw_chi(ch: KrausChannel, rho_sw: BipartiteState, enc: EncodingEnsemble) -> float:
    """Holevo quantity of the ensemble {(P(x), rho_BE^x)} with E purifying SW.

    The ancilla E is the purifying factor of rho_SW, so rho_SE is obtained by
    tracing W out of the purification.  Always bounded above by
    :func:`F_functional` (subadditivity of S(rho_BE)).
    """
    _check_signal(ch, rho_sw, enc)
    ds, dw = rho_sw.dims
    psi = purify(rho_sw.state).amplitudes
    de = ds * dw
    full = np.outer(psi, psi.conj())
    rho_se = partial_trace(full, (ds, dw, de), [0, 2])
    outs = []
    for p, op in enc:
        m = extended_output_matrix(compose(ch, op), rho_se, ds, de, "A")
        outs.append((p, m))
    avg = sum(p * m for p, m in outs)
    return matrix_entropy(avg) - sum(p * matrix_entropy(m) for p, m in outs)


def covariant_evaluator(ch: KrausChannel, eps_op: KrausChannel) -> Callable[[BipartiteState], float]:
    """Precompute S(ch(I/d)) and the complement of ch o eps_op for repeated use."""
    if ch.din != eps_op.dout:
        raise ValidationError(f"channel takes dimension {ch.din}, encoding outputs {eps_op.dout}")
    d = ch.din
    first = von_neumann_entropy(apply(ch, np.eye(d) / d))
    comp = complementary(compose(ch, eps_op))

    def evaluate(rho_sw: BipartiteState) -> float:
        if rho_sw.dimA != eps_op.din:
            raise ValidationError(f"signal dimension {rho_sw.dimA} does not match encoding input {eps_op.din}")
        out = extended_output_matrix(comp, rho_sw.mat, rho_sw.dimA, rho_sw.dimB, "A")
        return first - (matrix_entropy(out) - von_neumann_entropy(rho_sw.state))

    return evaluate


def chi_covariant_inner(ch: KrausChannel, eps_op: KrausChannel, rho_sw: BipartiteState) -> float:
    """S(ch(I/d)) - E_{Phi_eps (x) id}[rho_SW] for a generalized covariant channel."""
    return covariant_evaluator(ch, eps_op)(rho_sw)
