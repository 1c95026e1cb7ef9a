"""Constrained Monte Carlo search over two-qubit signal-witness states.

Sampling is seeded per index (``default_rng([seed, i])``), so results do not
depend on how many worker threads evaluate them.  After sampling, the best
candidate is polished by a bounded Nelder-Mead run on a penalised objective.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import floor, log2
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from ..channels import KrausChannel, identity
from ..densemath import ValidationError, dagger, partial_trace
from ..states import (
    BipartiteState,
    DensityMatrix,
    NotPositiveError,
    TenParamSpec,
    principal_minors_ok,
    as_density,
    bell_diagonal,
    mutual_information,
    ten_param_from_unit,
    ten_param_matrices,
    ten_param_state,
)
from .functionals import EncodingEnsemble, F_functional, covariant_evaluator

PENALTY = 1e3
REFINE_ITERS = 200
BUILD_FAILURE = 1e6
DEFAULT_EQ_TOL = 0.02


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get("CHANCAP_THREADS", "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"CHANCAP_THREADS must be an integer >= 1, got {raw!r}") from None
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _map(fn, items, workers: int | None):
    workers = resolve_workers(workers)
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=64))


# -- state families -------------------------------------------------------------------


class BellDiagonalFamily:
    """Bell-diagonal states, weights p = u / sum(u) for u in the unit box."""

    name = "bell_diagonal"
    n_params = 4
    dims = (2, 2)

    def build(self, u) -> BipartiteState:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        total = u.sum()
        if total <= 0.0:
            raise NotPositiveError("all Bell weights are zero")
        return bell_diagonal(u / total)

    def sample(self, rng: np.random.Generator):
        while True:
            u = rng.uniform(0.0, 1.0, size=4)
            if u.sum() > 0.0:
                return u, self.build(u)


class TenParamFamily:
    """Two-qubit states with diagonal marginals, parametrised on [0,1]^10.

    ``witness_p`` pins the witness marginal to diag(p, 1-p); ``witness_basis``
    then rotates the witness so that marginal becomes
    basis diag(p, 1-p) basis^dagger.  Both rotations leave mutual information
    and every entropy gain acting on the signal side unchanged.
    """

    name = "ten_param"
    dims = (2, 2)

    def __init__(self, witness_p: float | None = None, witness_basis=None, block: int = 1024):
        self.witness_p = witness_p
        self.block = block
        self._rot = None
        if witness_basis is not None:
            self._rot = np.kron(np.eye(2), np.asarray(witness_basis, dtype=np.complex128))

    @property
    def n_params(self) -> int:
        return 10 if self.witness_p is None else 9

    def _full(self, u: np.ndarray) -> np.ndarray:
        u = np.array(u, dtype=float, ndmin=2)
        if self.witness_p is None:
            return u
        # witness marginal is diag(p1, 1-p1) in this layout
        return np.insert(u, 1, self.witness_p, axis=1)

    def _finish(self, m: np.ndarray) -> BipartiteState:
        if self._rot is not None:
            m = self._rot @ m @ dagger(self._rot)
        return BipartiteState(DensityMatrix(0.5 * (m + dagger(m))), 2, 2)

    def build(self, u) -> BipartiteState:
        x = ten_param_from_unit(np.clip(self._full(u), 0.0, 1.0))[0]
        st = ten_param_state(TenParamSpec(*x))
        return self._finish(st.mat.copy()) if self._rot is not None else st

    def sample(self, rng: np.random.Generator, max_blocks: int = 10_000):
        for _ in range(max_blocks):
            u = rng.uniform(0.0, 1.0, size=(self.block, self.n_params))
            m = ten_param_matrices(ten_param_from_unit(self._full(u)))
            idx = np.flatnonzero(principal_minors_ok(m))
            if idx.size:
                ok = idx[np.linalg.eigvalsh(m[idx])[:, 0] >= -1e-10]
                if ok.size:
                    k = ok[0]
                    return u[k], self.build(u[k])
        raise RuntimeError("ten-parameter sampler exhausted its retry budget")


class ProductFamily:
    """Product states rho_S (x) witness with rho_S a qubit Bloch vector.

    u = (r, c, phi) maps to radius r**(1/3), polar cosine 2c - 1 and azimuth
    2 pi phi, so uniform u gives a uniform point in the Bloch ball.
    """

    name = "product"
    n_params = 3

    def __init__(self, witness):
        self.witness = as_density(witness)
        self.dims = (2, self.witness.dim)

    def build(self, u) -> BipartiteState:
        r, c, phi = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        r = r ** (1.0 / 3.0)
        cz = 2.0 * c - 1.0
        sz = np.sqrt(max(0.0, 1.0 - cz * cz))
        x, y, z = r * sz * np.cos(2 * np.pi * phi), r * sz * np.sin(2 * np.pi * phi), r * cz
        rho_s = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
        return BipartiteState(DensityMatrix(np.kron(rho_s, self.witness.mat)), 2, self.witness.dim)

    def sample(self, rng: np.random.Generator):
        u = rng.uniform(0.0, 1.0, size=3)
        return u, self.build(u)


FAMILIES = {"bell_diagonal": BellDiagonalFamily, "ten_param": TenParamFamily}


def get_family(family):
    if isinstance(family, str):
        try:
            return FAMILIES[family]()
        except KeyError:
            raise ValueError(f"unknown state family {family!r}; known: {', '.join(FAMILIES)}") from None
    return family


# -- constraints ------------------------------------------------------------------------

FUNCTIONALS = {"mutual_information": mutual_information}


@dataclass(frozen=True)
class Clause:
    """Q(rho_SW) >= y, or |Q(rho_SW) - y| <= tolerance for comparator '='."""

    threshold: float
    comparator: str = ">="
    tolerance: float | None = None
    functional: str = "mutual_information"

    def __post_init__(self):
        if self.comparator not in (">=", "="):
            raise ValueError(f"comparator must be '>=' or '=', got {self.comparator!r}")
        if self.functional not in FUNCTIONALS:
            raise ValueError(f"unknown functional {self.functional!r}")
        if self.tolerance is None:
            object.__setattr__(self, "tolerance", DEFAULT_EQ_TOL if self.comparator == "=" else 0.0)
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")

    def slack(self, state: BipartiteState) -> float:
        q = FUNCTIONALS[self.functional](state)
        if self.comparator == "=":
            return -abs(q - self.threshold)
        return q - self.threshold


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    clauses: tuple = ()
    fixed_marginal_W: DensityMatrix | None = None
    marginal_tolerance: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.fixed_marginal_W is not None:
            object.__setattr__(self, "fixed_marginal_W", as_density(self.fixed_marginal_W))

    def validate(self, dimA: int, dimB: int):
        top = 2 * log2(min(dimA, dimB))
        for c in self.clauses:
            if not 0.0 <= c.threshold <= top + 1e-12:
                raise ValidationError(f"threshold {c.threshold} outside [0, {top:g}] for {dimA}x{dimB}")
        if self.fixed_marginal_W is not None and self.fixed_marginal_W.dim != dimB:
            raise ValidationError(f"fixed witness marginal has dimension {self.fixed_marginal_W.dim}, expected {dimB}")

    @property
    def tolerances(self) -> list[float]:
        tols = [c.tolerance for c in self.clauses]
        if self.fixed_marginal_W is not None:
            tols.append(self.marginal_tolerance)
        return tols

    def slacks(self, state: BipartiteState) -> list[float]:
        out = [c.slack(state) for c in self.clauses]
        if self.fixed_marginal_W is not None:
            w = partial_trace(state.mat, state.dims, [1])
            out.append(-float(np.max(np.abs(w - self.fixed_marginal_W.mat))))
        return out

    def violation(self, slacks: Sequence[float]) -> float:
        return float(sum(max(0.0, -t - s) for s, t in zip(slacks, self.tolerances)))

    def margin(self, slacks: Sequence[float]) -> float:
        """Smallest slack + tolerance; negative means infeasible."""
        if not slacks:
            return float("inf")
        return float(min(s + t for s, t in zip(slacks, self.tolerances)))


@dataclass
class CapacityResult:
    value: float
    argmax_params: list
    samples_evaluated: int
    constraint_slacks: list
    seed: int
    feasible: bool = True
    nearest_miss: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# -- optimiser --------------------------------------------------------------------------


class _Candidate(NamedTuple):
    index: int
    u: np.ndarray
    value: float
    slacks: list
    violation: float


def optimize_constrained(
    objective: Callable[[BipartiteState], float],
    family,
    cons: ConstraintSpec,
    budget: int,
    seed: int,
    refine_iters: int = REFINE_ITERS,
    workers: int | None = None,
) -> CapacityResult:
    """Maximise ``objective`` over a state family subject to ``cons``.

    ``budget`` uniform samples are drawn (index i uses ``default_rng([seed, i])``);
    infeasible ones are kept only as refinement starting points.  The best
    candidate, feasible first, seeds ``refine_iters`` bounded Nelder-Mead
    iterations on ``-objective + 1e3 * violation``.  The best feasible point
    seen anywhere is reported; if there is none the result is flagged
    infeasible and carries the nearest-miss margin.
    """
    fam = get_family(family)
    cons.validate(*fam.dims)
    if budget < 1:
        return CapacityResult(float("nan"), [], 0, [], seed, feasible=False, nearest_miss=None)

    def draw(i: int) -> _Candidate:
        u, st = fam.sample(np.random.default_rng([seed, i]))
        sl = cons.slacks(st)
        return _Candidate(i, u, float(objective(st)), sl, cons.violation(sl))

    cands = _map(draw, range(budget), workers)
    evaluated = len(cands)

    feasible = [c for c in cands if c.violation == 0.0]
    if feasible:
        start = max(feasible, key=lambda c: (c.value, -c.index))
    else:
        start = min(cands, key=lambda c: (c.violation, -c.value, c.index))
    best = start if start.violation == 0.0 else None
    nearest = max(cons.margin(c.slacks) for c in cands)

    if refine_iters > 0:
        seen = []

        def penalised(u):
            try:
                st = fam.build(u)
            except NotPositiveError:
                return BUILD_FAILURE
            sl = cons.slacks(st)
            val = float(objective(st))
            viol = cons.violation(sl)
            seen.append(_Candidate(-1, np.array(u, dtype=float), val, sl, viol))
            return -val + PENALTY * viol

        minimize(
            penalised,
            np.asarray(start.u, dtype=float),
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * fam.n_params,
            options={"maxiter": refine_iters, "xatol": 1e-12, "fatol": 1e-14},
        )
        evaluated += len(seen)
        for c in seen:
            nearest = max(nearest, cons.margin(c.slacks))
            if c.violation == 0.0 and (best is None or c.value > best.value):
                best = c

    if best is None:
        return CapacityResult(
            float("nan"), [float(v) for v in start.u], evaluated, list(start.slacks), seed,
            feasible=False, nearest_miss=nearest,
        )
    return CapacityResult(best.value, [float(v) for v in best.u], evaluated, list(best.slacks), seed)


# -- scan ----------------------------------------------------------------------------------


def mc_scan(
    ch: KrausChannel,
    family="ten_param",
    n: int = 10_000,
    seed: int = 0,
    eps_op: KrausChannel | None = None,
    workers: int | None = None,
) -> list[tuple[float, float]]:
    """(q, F) for ``n`` random states: q = I(S:W), F the covariant-channel integrand."""
    fam = get_family(family)
    evaluate = covariant_evaluator(ch, eps_op if eps_op is not None else identity(ch.din))

    def one(i: int):
        _, st = fam.sample(np.random.default_rng([seed, i]))
        return (mutual_information(st), evaluate(st))

    return _map(one, range(n), workers)


class BinMax(NamedTuple):
    q_bin: float
    count: int
    q_at_max: float
    F_max: float
    reference: float
    deviation: float


def bin_maxima(records, width: float = 0.1, reference: Callable[[float], float] | None = None) -> list[BinMax]:
    """Per-bin maximum of F, with the reference line evaluated at the maximiser's q."""
    bins: dict[int, list] = {}
    for q, f in records:
        k = int(floor(max(q, 0.0) / width + 1e-9))
        slot = bins.setdefault(k, [0, q, f])
        slot[0] += 1
        if f > slot[2]:
            slot[1], slot[2] = q, f
    out = []
    for k in sorted(bins):
        count, q, f = bins[k]
        ref = reference(q) if reference is not None else float("nan")
        out.append(BinMax(round(k * width, 12), count, q, f, ref, f - ref))
    return out


# -- eavesdropper bound -------------------------------------------------------------------


def eve_bound(
    ch: KrausChannel,
    enc: EncodingEnsemble,
    cons: ConstraintSpec,
    budget: int,
    seed: int,
    refine_iters: int = REFINE_ITERS,
    workers: int | None = None,
) -> CapacityResult:
    """Maximise F over qubit rho_SW with Q(rho_SW) = y and rho_W fixed.

    The ten-parameter family is pinned so its witness marginal has the
    target spectrum and is rotated into the target eigenbasis; the
    marginal-match clause (max-abs error <= 1e-3) is still enforced.  A
    pure target admits only product states, which the ten-parameter box
    reaches with probability zero, so that case searches rho_S (x) target.
    """
    if not any(c.comparator == "=" for c in cons.clauses):
        raise ValueError("eve_bound needs at least one equality clause")
    if cons.fixed_marginal_W is None:
        raise ValueError("eve_bound needs a fixed witness marginal")
    if enc.din != 2 or ch.din != enc.dout:
        raise ValidationError("eve_bound works on a qubit signal with matching channel/encoding dimensions")
    w, v = np.linalg.eigh(cons.fixed_marginal_W.mat)
    if w[0] <= 1e-12:
        fam = ProductFamily(cons.fixed_marginal_W)
    else:
        fam = TenParamFamily(witness_p=float(np.clip(w[0], 0.0, 1.0)), witness_basis=v)
    return optimize_constrained(
        lambda st: F_functional(ch, st, enc), fam, cons, budget, seed, refine_iters, workers
    )
