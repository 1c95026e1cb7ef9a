"""Seeded numerical checks of entropy inequalities.

Every check draws instance ``i`` from ``default_rng([seed, i])`` and reports
the smallest slack seen; an instance fails when its slack drops below
``-SLACK_TOL``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .capacity.search import _map
from .channels import (
    KrausChannel,
    apply_matrix,
    check_generalized_covariance,
    identity,
    random_channel,
    tensor_channels,
)
from .densemath import ValidationError, partial_trace, tensor
from .states import (
    BipartiteState,
    DensityMatrix,
    as_density,
    conditional_mutual_information,
    matrix_entropy,
    mutual_information,
    random_state,
)

SLACK_TOL = 1e-9


class HypothesisError(ValidationError):
    """The channel does not satisfy the premise of the check."""


@dataclass(frozen=True)
class PropertyReport:
    name: str
    instances: int
    min_slack: float
    failures: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return asdict(self)


def _report(name: str, slacks: Sequence[float], seed: int) -> PropertyReport:
    slacks = np.asarray(slacks, dtype=float)
    return PropertyReport(name, int(slacks.size), float(slacks.min()), int(np.sum(slacks < -SLACK_TOL)), seed)


def _check_n(n: int):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def _mixed(rng: np.random.Generator, dim: int) -> DensityMatrix:
    # rank anywhere from pure to full
    return random_state(dim, int(rng.integers(1, dim + 1)), rng)


def _gain(ch: KrausChannel, m: np.ndarray) -> float:
    return matrix_entropy(apply_matrix(ch, m)) - matrix_entropy(m)


# -- data processing --------------------------------------------------------------


def _dpi_slack(rho: np.ndarray, phi_a: KrausChannel, phi_b: KrausChannel) -> float:
    dims = (2, 2, 2)
    out = apply_matrix(tensor_channels(phi_a, phi_b, identity(2)), rho)
    ab, ab_out = partial_trace(rho, dims, [0, 1]), partial_trace(out, dims, [0, 1])
    plain = mutual_information(BipartiteState(DensityMatrix(ab), 2, 2)) - mutual_information(
        BipartiteState(DensityMatrix(ab_out), 2, 2)
    )
    cond = conditional_mutual_information(rho, dims) - conditional_mutual_information(out, dims)
    return min(plain, cond)


def check_dpi(
    n: int, seed: int, local_channels: tuple[KrausChannel, KrausChannel] | None = None, workers: int | None = None
) -> PropertyReport:
    """I(A:B) and I(A:B|C) cannot grow under local channels on A and B.

    Tripartite qubit states are random; so are the local channels unless
    ``local_channels`` fixes them.
    """
    _check_n(n)

    def one(i: int) -> float:
        rng = np.random.default_rng([seed, i])
        rho = _mixed(rng, 8).mat
        if local_channels is None:
            pa, pb = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
        else:
            pa, pb = local_channels
        return _dpi_slack(rho, pa, pb)

    return _report("dpi", _map(one, range(n), workers), seed)


# -- superadditivity of entropy gain ---------------------------------------------


def check_superadditivity_I(
    n: int, seed: int, product: bool = False, channels: tuple | None = None, workers: int | None = None
) -> PropertyReport:
    """E_{phi1 (x) phi2}[rho_12] >= E_{phi1}[rho_1] + E_{phi2}[rho_2].

    Each block holds two qubits and each phi_k is a random channel on it.
    Every instance also evaluates rho_1 (x) rho_2, where the two sides must
    agree within the tolerance; a mismatch counts as a failure.  With
    ``product`` set, only the product states are evaluated.
    """
    _check_n(n)
    d = 4

    def one(i: int) -> float:
        rng = np.random.default_rng([seed, i])
        rho = _mixed(rng, d * d).mat
        if channels is None:
            p1, p2 = random_channel(d, d, 2, rng), random_channel(d, d, 2, rng)
        else:
            p1, p2 = channels
        both = tensor_channels(p1, p2)
        r1, r2 = partial_trace(rho, (d, d), [0]), partial_trace(rho, (d, d), [1])
        parts = _gain(p1, r1) + _gain(p2, r2)
        prod_gap = -abs(_gain(both, tensor(r1, r2)) - parts)
        if product:
            return prod_gap
        return min(_gain(both, rho) - parts, prod_gap)

    return _report("superadditivity_I", _map(one, range(n), workers), seed)


def check_superadditivity_II(
    n: int, seed: int, channels: tuple | None = None, workers: int | None = None
) -> PropertyReport:
    """E_{phi1 (x) phi2 (x) id}[rho_{A1 A2 R}] >= sum_k E_{phi_k (x) id}[rho_{A_k R}] on qubits."""
    _check_n(n)
    dims = (2, 2, 2)

    def one(i: int) -> float:
        rng = np.random.default_rng([seed, i])
        rho = _mixed(rng, 8).mat
        if channels is None:
            p1, p2 = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
        else:
            p1, p2 = channels
        whole = _gain(tensor_channels(p1, p2, identity(2)), rho)
        a1r = partial_trace(rho, dims, [0, 2])
        a2r = partial_trace(rho, dims, [1, 2])
        return whole - _gain(tensor_channels(p1, identity(2)), a1r) - _gain(tensor_channels(p2, identity(2)), a2r)

    return _report("superadditivity_II", _map(one, range(n), workers), seed)


# -- covariant channels and subadditivity ----------------------------------------


def check_lemma1(
    ch: KrausChannel,
    group,
    n: int,
    seed: int,
    states: Iterable | None = None,
    workers: int | None = None,
) -> PropertyReport:
    """S(Psi(rho)) <= S(Psi(I/d)) for a generalized covariant channel.

    Refuses channels that fail the covariance check against ``group``.
    ``states`` replaces the random inputs when given.
    """
    verdict = check_generalized_covariance(ch, group)
    if not verdict.covariant:
        raise HypothesisError(f"channel is not generalized covariant for this set (residual {verdict.residual:.3e})")
    top = matrix_entropy(apply_matrix(ch, np.eye(ch.din) / ch.din))
    if states is not None:
        slacks = [top - matrix_entropy(apply_matrix(ch, as_density(s).mat)) for s in states]
        return _report("lemma1", slacks, seed)
    _check_n(n)

    def one(i: int) -> float:
        rng = np.random.default_rng([seed, i])
        return top - matrix_entropy(apply_matrix(ch, _mixed(rng, ch.din).mat))

    return _report("lemma1", _map(one, range(n), workers), seed)


def check_subadditivity(
    n: int, seed: int, dims: tuple[int, int] = (2, 2), states: Iterable | None = None, workers: int | None = None
) -> PropertyReport:
    """S(rho_A) + S(rho_B) - S(rho_AB) >= 0 on random bipartite states."""

    def slack(st: BipartiteState) -> float:
        return mutual_information(st)

    if states is not None:
        return _report("subadditivity", [slack(s) for s in states], seed)
    _check_n(n)

    def one(i: int) -> float:
        rng = np.random.default_rng([seed, i])
        return slack(BipartiteState(_mixed(rng, dims[0] * dims[1]), *dims))

    return _report("subadditivity", _map(one, range(n), workers), seed)


def run_all(n: int, seed: int, lemma_channel: KrausChannel, lemma_group, workers: int | None = None) -> list[PropertyReport]:
    return [
        check_dpi(n, seed, workers=workers),
        check_superadditivity_I(n, seed, workers=workers),
        check_superadditivity_II(n, seed, workers=workers),
        check_lemma1(lemma_channel, lemma_group, n, seed, workers=workers),
        check_subadditivity(n, seed, workers=workers),
    ]
