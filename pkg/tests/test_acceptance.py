"""Acceptance criteria, one test each.

Every test records a ``[PASS]``/``[FAIL]`` line that the terminal summary
prints (see ``conftest.py``), then asserts.
"""
import math
import time

import numpy as np
from scipy import stats

from sqkd.adversary import (CTRL, SIFT, DoubleCnotAttack, EntangleMeasureAttack, InterceptResendAttack, NoAttack,
                            conditional_probe_states, final_probe_state)
from sqkd.analysis import (FAMILIES, VIOLATION, efficiency_table, exact_detection, format_efficiency_table,
                           random_attack, random_attack_suite, theorem1_verify)
from sqkd.protocol import Mode, ProtocolParams, choose_bob_actions, estimate_detection, prepare_batch, run_session
from sqkd.quantum import ProductBasis, basis_state, holevo, measure, outcome_probabilities, random_state

import oracles
from conftest import ACCEPTANCE_RESULTS


def record(name, ok, detail):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_c1_efficiency():
    t0 = time.perf_counter()
    rows = efficiency_table()
    text = format_efficiency_table(rows)
    elapsed = time.perf_counter() - t0
    etas = [r.eta() for r in rows]
    ok = (all(abs(e - w) <= 0.01 for e, w in zip(etas, (8.33, 8.33, 11.11)))
          and [r.c_q for r in rows] == [1, 2, 2] and all(r.b_k == "n" for r in rows)
          and all(f"{w}%" in text for w in ("8.33", "11.11"))
          and elapsed < 1.0)
    record("C1 efficiency", ok,
           f"eta={[round(e, 4) for e in etas]} c_q={[r.c_q for r in rows]} time={elapsed:.3f}s")


def test_c2_honest_completeness():
    t0 = time.perf_counter()
    bad = []
    for seed in range(100):
        r = run_session(ProtocolParams(128, 0.1, seed=seed), NoAttack())
        if not (r.verdict == "Accept" and r.errors.rates() == (0.0, 0.0, 0.0)
                and r.key is not None and len(r.key) == 128 and r.key.alice == r.key.bob):
            bad.append(seed)
    elapsed = time.perf_counter() - t0
    record("C2 honest completeness", not bad and elapsed < 5.0,
           f"100 sessions, failing seeds={bad}, time={elapsed:.2f}s")


def test_c3_double_cnot():
    t0 = time.perf_counter()
    attack = DoubleCnotAttack()
    profile = exact_detection(attack)
    fids = [final_probe_state(attack, b, k, a)[0, 0].real
            for b in ProductBasis for k in range(4) for a in (CTRL, SIFT)]
    sift = conditional_probe_states(attack, SIFT)
    chi = holevo([(0.25, sift[k]) for k in range(4)])
    elapsed = time.perf_counter() - t0
    ok = (len(profile.cells) == 32 and profile.max_detection <= 1e-12 and min(fids) >= 1 - 1e-10
          and chi <= 1e-10 and elapsed < 1.0)
    record("C3 double CNOT", ok,
           f"max detection={profile.max_detection:.2e} min fidelity={min(fids):.15f} "
           f"holevo={chi:.2e} time={elapsed:.3f}s")


def test_c4_intercept_resend():
    attack = InterceptResendAttack(ProductBasis.ZZ)
    profile = exact_detection(attack)
    want = {"ZZ": 0.0, "ZX": 0.5, "XZ": 0.5, "XX": 0.75}
    worst_exact = 0.0
    for b in ProductBasis:
        for k in range(4):
            oracle = oracles.detection_cell(np.eye(16), attack.backward_matrix, attack.initial_probe.amps,
                                            (b.pol, b.spat), k, "CTRL", intercept=("Z", "Z"))
            got = profile.cell(b, k, CTRL)
            worst_exact = max(worst_exact, abs(got - oracle), abs(got - want[b.name]))
    rng = np.random.default_rng(4)
    rounds = 10_000
    z_scores = []
    for b in ProductBasis:
        p = want[b.name]
        est = estimate_detection(attack, b, 1, CTRL, rounds, rng)
        sigma = math.sqrt(p * (1 - p) / rounds)
        z_scores.append(0.0 if sigma == 0 and est == p else (abs(est - p) / sigma if sigma else math.inf))
    ok = worst_exact <= 1e-12 and max(z_scores) <= 4
    record("C4 intercept-resend", ok,
           f"max |exact - oracle| = {worst_exact:.1e}, Monte-Carlo |z| = {[round(z, 2) for z in z_scores]}")


def test_c5_robustness_property():
    t0 = time.perf_counter()
    suite = random_attack_suite(500, seed=2024)
    grid = np.linspace(0, math.pi, 33)
    family_reports = [theorem1_verify(FAMILIES[f].build(t)) for f in sorted(FAMILIES) for t in grid]
    reports = [r for _, r in suite] + family_reports
    violations = sum(r.verdict == VIOLATION for r in reports)
    undetectable = [r for r in reports if r.max_detection <= 1e-9]
    worst_info = max((r.max_pairwise_probe_trace_distance for r in undetectable), default=0.0)
    elapsed = time.perf_counter() - t0
    record("C5 robustness property", violations == 0 and elapsed < 60,
           f"{len(reports)} attacks ({len(undetectable)} undetectable), violations={violations}, "
           f"max probe trace distance when undetectable={worst_info:.1e}, time={elapsed:.1f}s")


def test_c6_statistical_laws():
    n, delta, seeds = 100, 0.2, 200
    counts = []
    for seed in range(seeds):
        params = ProtocolParams(n, delta, seed=seed, mode=Mode.MONTE_CARLO)
        rng = np.random.default_rng(seed)
        photons = prepare_batch(params, rng)
        sift = choose_bob_actions(photons, params, rng)
        counts.append(sum(bool(sift[p.index]) for p in photons if p.basis is ProductBasis.ZZ))
    target = 0.75 * n * (1 + delta)
    sigma = math.sqrt(ProtocolParams(n, delta).count(ProductBasis.ZZ) * 0.25)
    z = abs(np.mean(counts) - target) / sigma

    rng = np.random.default_rng(6)
    psi = basis_state(ProductBasis.XX, 0)
    samples = 100_000
    hist = np.bincount([measure(psi, ProductBasis.ZZ, rng).outcome for _ in range(samples)], minlength=4)
    p_value = stats.chisquare(hist).pvalue
    record("C6 statistical laws", z <= 4 and p_value > 0.001,
           f"mean |ZZ and SIFT|={np.mean(counts):.2f} vs {target:.1f} (sigma={sigma:.2f}, z={z:.3f}); "
           f"R(x)s histogram={hist.tolist()} chi2 p={p_value:.3f}")


def test_c7_oracle_equivalence():
    worst = 0.0
    rng = np.random.default_rng(7)
    states = [basis_state(b, k) for b in ProductBasis for k in range(4)]
    states += [random_state(4, rng) for _ in range(50)]
    for psi in states:
        for b in ProductBasis:
            got = outcome_probabilities(psi, b)
            want = oracles.probs_direct(psi.amps, (b.pol, b.spat))
            worst = max(worst, float(np.max(np.abs(np.asarray(got) - want))))
    prob_worst = worst

    attacks = [NoAttack(), DoubleCnotAttack(), EntangleMeasureAttack(0.4, 1.3),
               EntangleMeasureAttack(1.1, 0.2, backward=EntangleMeasureAttack(0.6, 0.6).forward_matrix)]
    attacks += [random_attack(kind, rng, probe_dim=2) for kind in ("haar-pair", "haar-identity", "controlled-undo")]
    worst = 0.0
    for attack in attacks:
        profile = exact_detection(attack)
        for (b, k, a), p in profile.cells.items():
            want = oracles.detection_cell(attack.forward_matrix, attack.backward_matrix,
                                          attack.initial_probe.amps, (b.pol, b.spat), k, a)
            worst = max(worst, abs(p - want))
    for basis in ProductBasis:
        attack = InterceptResendAttack(basis)
        for (b, k, a), p in exact_detection(attack).cells.items():
            want = oracles.detection_cell(np.eye(16), attack.backward_matrix, attack.initial_probe.amps,
                                          (b.pol, b.spat), k, a, intercept=(basis.pol, basis.spat))
            worst = max(worst, abs(p - want))
    record("C7 oracle equivalence", prob_worst <= 1e-12 and worst <= 1e-12,
           f"outcome_probabilities max dev={prob_worst:.1e} over {len(states)}x4, "
           f"exact_detection max dev={worst:.1e} over {len(attacks) + 4} attacks x 32 cells")
