"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line; run with ``pytest -s`` to see them.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from chancap.capacity import (
    BellDiagonalFamily,
    Clause,
    ConstraintSpec,
    EncodingEnsemble,
    F_functional,
    bin_maxima,
    depolarizing_closed_forms,
    mc_scan,
    optimize_constrained,
    product_ensemble,
    qec_chi_integrand,
    qec_closed_forms,
)
from chancap.channels import (
    apply,
    apply_extended,
    complementary,
    dephasing,
    depolarizing,
    erasure,
    identity,
    random_channel,
    reset,
    tensor_channels,
    unitary_channel,
    weyl_group,
)
from chancap.cli import main
from chancap.states import (
    BipartiteState,
    binary_entropy,
    random_pure_state,
    random_state,
    random_unitary,
    tensor_bipartite,
    von_neumann_entropy,
)
from chancap import verify

Y_GRID = (0.0, 0.5, 1.0, 1.5, 2.0)
SCAN_SEED = 3
SCAN_N = 10_000


def report(n, ok, detail, elapsed=None):
    timing = "" if elapsed is None else f" [{elapsed:.2f} s]"
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}{timing}")
    assert ok, detail


@pytest.fixture(scope="module")
def depolarizing_scan():
    t0 = time.perf_counter()
    recs = mc_scan(depolarizing(2, 0.2), n=SCAN_N, seed=SCAN_SEED)
    return recs, time.perf_counter() - t0


def test_criterion_1_qec_closed_form_line():
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (0.0, 0.1, 0.25, 0.5):
        for y in Y_GRID:
            forms = qec_closed_forms(eps, 2, y)
            worst = max(worst, abs(forms.chi_L_I - (1 - eps) * 2 * (1 - y / 2)))
        worst = max(worst, abs(qec_closed_forms(eps, 2, 0.0).chi_L_I - qec_closed_forms(eps, 2, 0.0).C_E))
        worst = max(worst, abs(qec_closed_forms(eps, 2, 2.0).chi_L_I))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-12 and elapsed < 1.0, f"max deviation {worst:.3g} (tol 1e-12)", elapsed)


def test_criterion_2_qec_optimizer_agreement():
    eps = 0.25
    t0 = time.perf_counter()
    devs = []
    for y in Y_GRID:
        res = optimize_constrained(
            lambda st: qec_chi_integrand(eps, 2, identity(2), st),
            BellDiagonalFamily(),
            ConstraintSpec((Clause(y, "="),)),
            5000,
            seed=1,
        )
        target = qec_closed_forms(eps, 2, y).chi_L_I
        devs.append(abs(res.value - target) if res.feasible else np.inf)
    elapsed = time.perf_counter() - t0
    ok = max(devs) <= 0.02 and elapsed < 120.0
    report(2, ok, "deviations " + ", ".join(f"{d:.4f}" for d in devs) + " (tol 0.02)", elapsed)


def test_criterion_3_depolarizing_scan(depolarizing_scan):
    recs, elapsed = depolarizing_scan
    forms = depolarizing_closed_forms(0.2)
    bins = [b for b in bin_maxima(recs, 0.1, reference=forms.chi_star) if b.count >= 50]
    worst = max(abs(b.deviation) for b in bins)
    ok = bool(bins) and worst <= 0.05 and elapsed < 300.0
    report(3, ok, f"{len(bins)} populated bins, max |F_max - chi_star| {worst:.4f} (tol 0.05)", elapsed)


def test_criterion_4_no_states_below_C(depolarizing_scan):
    recs, _ = depolarizing_scan
    floor = depolarizing_closed_forms(0.2).C - 0.05
    near_zero = [f for q, f in recs if q <= 0.05]
    lowest = min(near_zero)
    report(4, bool(near_zero) and lowest >= floor, f"{len(near_zero)} records with q<=0.05, min F {lowest:.4f} >= {floor:.4f}")


def test_criterion_5_property_suites():
    t0 = time.perf_counter()
    failures = {}
    worst = np.inf
    lemma_channels = {"depolarizing 0.3": depolarizing(2, 0.3), "erasure 0.25": erasure(2, 0.25), "dephasing 0.5": dephasing(0.5)}
    for seed in (1, 2, 3):
        reports = [
            verify.check_dpi(200, seed),
            verify.check_superadditivity_I(200, seed),
            verify.check_superadditivity_II(200, seed),
            verify.check_subadditivity(200, seed),
        ]
        for label, ch in lemma_channels.items():
            reports.append(replace(verify.check_lemma1(ch, weyl_group(2), 200, seed), name=f"lemma1 {label}"))
        for r in reports:
            failures[(r.name, seed)] = r.failures
            worst = min(worst, r.min_slack)
    elapsed = time.perf_counter() - t0
    total = sum(failures.values())
    ok = total == 0 and elapsed < 120.0
    report(5, ok, f"{len(failures)} reports, {total} failures, min slack {worst:.3g} (tol 1e-9)", elapsed)


def test_criterion_6_complement_correctness():
    channels = {
        "identity": identity(2),
        "erasure": erasure(2, 0.3),
        "depolarizing": depolarizing(2, 0.2),
        "dephasing": dephasing(0.4),
        "reset": reset(2),
    }
    worst_pure = 0.0
    for k, ch in enumerate(channels.values()):
        comp = complementary(ch)
        for i in range(100):
            psi = random_pure_state(ch.din, (60, k, i)).density()
            worst_pure = max(worst_pure, abs(von_neumann_entropy(apply(ch, psi)) - von_neumann_entropy(apply(comp, psi))))

    # the complement of an erasure channel is an erasure channel with the flipped
    # parameter; the identity is checked in both parameterizations
    worst_id = 0.0
    for eps in (0.25, 0.5, 0.75):
        own, flipped = complementary(erasure(2, eps)), complementary(erasure(2, 1 - eps))
        for i in range(100):
            rng = np.random.default_rng([61, i])
            rho = BipartiteState(random_state(4, int(rng.integers(1, 5)), rng), 2, 2)
            s_sw, s_w = von_neumann_entropy(rho.state), von_neumann_entropy(rho.marginal_b())
            literal = binary_entropy(eps) + (1 - eps) * s_sw + eps * s_w
            swapped = binary_entropy(eps) + eps * s_sw + (1 - eps) * s_w
            worst_id = max(
                worst_id,
                abs(von_neumann_entropy(apply_extended(flipped, rho).state) - literal),
                abs(von_neumann_entropy(apply_extended(own, rho).state) - swapped),
            )
    ok = worst_pure <= 1e-9 and worst_id <= 1e-8
    report(6, ok, f"pure-input gap {worst_pure:.3g} (tol 1e-9), erasure identity gap {worst_id:.3g} (tol 1e-8)")


def _unitary_ensemble(rng):
    p = rng.dirichlet(np.ones(2))
    return EncodingEnsemble(tuple((p[i], unitary_channel(random_unitary(2, rng))) for i in range(2)))


def test_criterion_7_two_use_additivity():
    worst = 0.0
    for i in range(50):
        rng = np.random.default_rng([70, i])
        c1, c2 = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
        r1 = BipartiteState(random_state(4, int(rng.integers(1, 5)), rng), 2, 2)
        r2 = BipartiteState(random_state(4, int(rng.integers(1, 5)), rng), 2, 2)
        e1, e2 = _unitary_ensemble(rng), _unitary_ensemble(rng)
        two = F_functional(tensor_channels(c1, c2), tensor_bipartite(r1, r2), product_ensemble(e1, e2))
        worst = max(worst, abs(two - F_functional(c1, r1, e1) - F_functional(c2, r2, e2)))
    sup = verify.check_superadditivity_II(50, 71)
    ok = worst <= 1e-8 and sup.min_slack >= -1e-9
    report(7, ok, f"product gap {worst:.3g} (tol 1e-8), correlated min slack {sup.min_slack:.3g} (tol -1e-9)")


def test_criterion_8_determinism(tmp_path):
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        cc = main(["capcurve", "--channel", "erasure:d=2,eps=0.25", "--grid", "0:2:0.5", "--budget", "5000",
                   "--seed", "1", "--out", str(d / "capcurve.csv")])
        sc = main(["scan", "--channel", "depolarizing:lam=0.2", "--n", str(SCAN_N), "--seed", str(SCAN_SEED),
                   "--out", str(d / "scan.csv")])
        assert cc == 0 and sc == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    same = outputs[0] == outputs[1]
    report(8, same and len(outputs[0]) == 3, f"{len(outputs[0])} files compared, byte-identical: {same}")
