"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
(they are also printed when output capture is on).
"""

import math
import time

import numpy as np
import pytest

from designham_sim.designham import (
    EffectiveZHamiltonian,
    design_timeline,
    effective_z_hamiltonian,
    sample_lambda,
)
from designham_sim.mqc import (
    deviation_epsilon,
    mq_signal,
    mqc_spectrum,
    spectrum_from_signal,
    typical_profile,
)
from designham_sim.propagate import (
    LayeredPropagator,
    PauliString,
    conjugate_operator,
    design_propagator,
    oracle_refocusing_propagator,
    phase_distance,
    z_phase_diagonal,
)
from designham_sim.randomness import (
    ScheduleFamily,
    UnitaryEnsemble,
    convergence_curves,
    design_ensemble,
    frame_potential_estimate,
    frame_potential_estimates,
    frame_potential_exact,
    haar_ensemble,
    haar_monomial_check,
)
from designham_sim.seeding import child_rng, child_seed
from designham_sim.spinsys import SlotMap, SpinSystem, builtin_12spin, random_system

T = 0.030
MASTER = 20240611


def report(capsys, number, title, ok, detail, started):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} " \
           f"[{time.perf_counter() - started:.1f} s]"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_criterion_01_typical_profile(capsys):
    t0 = time.perf_counter()
    prof = typical_profile(12)
    printed = {0: 0.1612, 1: 0.1488, 2: 0.1169, 3: 0.0779, 4: 0.0438, 5: 0.0206, 6: 0.0080,
               7: 0.0025, 8: 0.0006, 9: 0.0001}
    floats = {10: 1.65e-5, 11: 1.43e-6, 12: 5.96e-8}
    bad = [nu for nu, v in printed.items()
           if round(prof[nu], 4) != v or round(prof[-nu], 4) != v]
    bad += [nu for nu, v in floats.items()
            if float(f"{prof[nu]:.2e}") != v or float(f"{prof[-nu]:.2e}") != v]
    elapsed = time.perf_counter() - t0
    report(capsys, 1, "typical MQC profile n=12", not bad and elapsed < 1.0,
           f"mismatched orders {bad}, {elapsed * 1e3:.1f} ms", t0)


def test_criterion_02_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n, trials in ((2, 50), (3, 20)):
        for trial in range(trials):
            rng = child_rng(MASTER, 2, n, trial)
            system = random_system(n, rng)
            slots = SlotMap.one_per_qubit(n)
            lam = rng.uniform(size=n)
            t_half = rng.uniform(0.05, 1.0) * T / 2
            exact = oracle_refocusing_propagator(system, lam, slots, t_half)
            h = effective_z_hamiltonian(system, lam, slots)
            worst = max(worst, phase_distance(exact, np.diag(z_phase_diagonal(h, t_half).phases)))
    elapsed = time.perf_counter() - t0
    report(capsys, 2, "pulse oracle vs effective Hamiltonian", worst < 1e-10 and elapsed < 10,
           f"max distance {worst:.2e} over 70 instances", t0)


def test_criterion_03_zero_points(capsys):
    t0 = time.perf_counter()
    system, slots = builtin_12spin()
    lam = np.full(8, 0.5)
    zero_offset = np.all(effective_z_hamiltonian(system, lam, slots).a == 0.0)
    # dyadic entries so every gap is computed exactly
    lam = np.array([0.0, 0.5, 0.125, 0.625, 0.25, 0.75, 0.375, 0.875])
    h = effective_z_hamiltonian(system, lam, slots)
    per_qubit = slots.expand(lam)
    gap = np.abs(per_qubit[:, None] - per_qubit[None, :])
    half = gap == 0.5
    zero_coupling = bool(np.any(half)) and np.all(h.b[half] == 0.0)
    report(capsys, 3, "lambda=1/2 and gap=1/2 zero points", bool(zero_offset and zero_coupling),
           f"offsets zeroed={bool(zero_offset)}, {int(half.sum()) // 2} half-gap couplings "
           f"zeroed={bool(zero_coupling)}", t0)


def test_criterion_04_frame_potential_convergence(capsys):
    t0 = time.perf_counter()
    n = 6
    system = random_system(n, child_seed(MASTER, 4, 0))
    family = ScheduleFamily(SlotMap.one_per_qubit(n), T, 4)
    design = design_ensemble(system, family, 2 * T, 120, child_seed(MASTER, 4, 1))
    haar = haar_ensemble(n, 120, child_seed(MASTER, 4, 2))
    d_est = frame_potential_estimates(design, [1, 2])
    h_est = frame_potential_estimates(haar, [1, 2])
    d1, d2 = d_est[1].f_tilde, d_est[2].f_tilde
    h1, h2 = h_est[1].f_tilde, h_est[2].f_tilde
    ok = (0.7 <= d1 <= 1.3 and 1.4 <= d2 <= 2.8 and 0.9 <= h1 <= 1.1 and 1.7 <= h2 <= 2.3
          and time.perf_counter() - t0 < 300)
    report(capsys, 4, "frame potentials after 2 rounds, n=6", ok,
           f"design F1={d1:.3f} F2={d2:.3f}; Haar F1={h1:.3f} F2={h2:.3f}", t0)


def test_criterion_05_basis_change_drop(capsys):
    t0 = time.perf_counter()
    n, reps = 6, 20
    family = ScheduleFamily(SlotMap.one_per_qubit(n), T, 4)
    drops = 0
    ratios = []
    for rep in range(reps):
        system = random_system(n, child_seed(MASTER, 5, rep, 0))
        curve = convergence_curves(system, family, [T / 2, T], [1], 120,
                                   child_seed(MASTER, 5, rep, 1))[1]
        before, after = curve.values
        drops += after < before
        ratios.append(after / before)
    ok = drops >= math.ceil(0.95 * reps) and time.perf_counter() - t0 < 600
    report(capsys, 5, "F1 drop across the first Hadamard half-period", ok,
           f"{drops}/{reps} repetitions dropped, median after/before {np.median(ratios):.3g}",
           t0)


def test_criterion_06_mqc_typicality(capsys):
    t0 = time.perf_counter()
    system, slots = builtin_12spin()
    ref = typical_profile(12)
    eps = []
    for case in range(10):
        rng = child_rng(MASTER, 6, case)
        op = PauliString.random(12, rng)
        sched = sample_lambda(child_seed(MASTER, 6, case, 1), 8, 4, T, slots)
        U = design_propagator(design_timeline(sched, system), 4)
        rho = conjugate_operator(U, op.to_dense(normalized=True))
        eps.append(deviation_epsilon(mqc_spectrum(rho), ref))
    good = sum(e < 0.05 for e in eps)
    ok = good >= 9 and time.perf_counter() - t0 < 1800
    report(capsys, 6, "epsilon(2T) for random Pauli strings, n=12", ok,
           f"{good}/10 below 0.05, max {max(eps):.4f}, median {np.median(eps):.4f}", t0)


def test_criterion_07_dual_path(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(10):
        rng = child_rng(MASTER, 7, case)
        n = int(rng.integers(1, 7))
        d = 1 << n
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho0 = a + a.conj().T
        rho0 /= np.linalg.norm(rho0)
        sched = sample_lambda(child_seed(MASTER, 7, case, 1), n, 4, T)
        U = design_propagator(design_timeline(sched, random_system(n, rng)), 4)
        direct = mqc_spectrum(conjugate_operator(U, rho0))
        fourier = spectrum_from_signal(mq_signal(rho0, U), n)
        worst = max(worst, np.max(np.abs(direct.intensities - fourier.intensities)))
    small = worst
    system, slots = builtin_12spin()
    sched = sample_lambda(child_seed(MASTER, 7, 99), 8, 2, T, slots)
    U = design_propagator(design_timeline(sched, system), 2)
    rho0 = PauliString.parse("Z7", 12)
    direct = mqc_spectrum(conjugate_operator(U, rho0))
    fourier = spectrum_from_signal(mq_signal(rho0, U), 12)
    big = float(np.max(np.abs(direct.intensities - fourier.intensities)))
    worst = max(worst, big)
    ok = worst < 1e-10 and time.perf_counter() - t0 < 300
    report(capsys, 7, "block decomposition vs Fourier extraction", ok,
           f"max difference {small:.1e} (n<=6), {big:.1e} (Z7, n=12, one round)", t0)


def test_criterion_08_otoc_identity(capsys):
    from designham_sim.randomness import otoc_frame_potential

    t0 = time.perf_counter()
    worst = 0.0
    for n, k in ((1, 1), (2, 1), (1, 2)):
        ens = haar_ensemble(n, 10, child_seed(MASTER, 8, n, k))
        worst = max(worst, abs(otoc_frame_potential(ens, k) - frame_potential_exact(ens, k)))
    ok = worst < 1e-8 and time.perf_counter() - t0 < 120
    report(capsys, 8, "OTOC sum equals frame potential", ok, f"max difference {worst:.1e}", t0)


def test_criterion_09_haar_monomial(capsys):
    t0 = time.perf_counter()
    value = haar_monomial_check(4, PauliString.parse("Z1", 4), 10_000, child_seed(MASTER, 9))
    rel = abs(value - 1 / 256) * 256
    ok = rel < 0.10 and time.perf_counter() - t0 < 120
    report(capsys, 9, "Haar monomial moment n=4", ok,
           f"mean {value:.6f} vs 1/256={1 / 256:.6f} ({100 * rel:.1f}% off)", t0)


def test_criterion_10_invariant_suites(capsys):
    t0 = time.perf_counter()
    failures = []
    family = {n: ScheduleFamily(SlotMap.one_per_qubit(n), T, 4) for n in (1, 2, 3)}
    for case in range(40):
        rng = child_rng(MASTER, 10, case)
        n = int(rng.integers(1, 4))
        size = int(rng.integers(1, 10))
        if case % 2:
            ens = haar_ensemble(n, size, child_seed(MASTER, 10, case, 1))
        else:
            t = float(rng.choice([0.0, 0.01, 0.02, 0.03, 0.05, 0.06]))
            ens = design_ensemble(random_system(n, rng), family[n], t, size,
                                  child_seed(MASTER, 10, case, 1))
        for k in (1, 2, 3):
            if k > ens.dim:
                continue
            if frame_potential_exact(ens, k) < math.factorial(k) - 1e-9:
                failures.append(f"lower bound case {case} k={k}")
            if size >= 2:
                est = frame_potential_estimate(ens, k)
                N, d = est.ensemble_size, est.dim
                if est.f != d ** (2 * k) / N + (N - 1) / N * est.f_tilde:
                    failures.append(f"reconstruction case {case} k={k}")

    for case in range(40):
        rng = child_rng(MASTER, 10, 1000 + case)
        n = int(rng.integers(1, 7))
        d = 1 << n
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = a + a.conj().T
        rho /= np.linalg.norm(rho)
        sched = sample_lambda(child_seed(MASTER, 10, 1000 + case), n, 4, T)
        U = design_propagator(design_timeline(sched, random_system(n, rng)), 4)
        spectrum = mqc_spectrum(conjugate_operator(U, rho))
        if abs(spectrum.total() - 1) > 1e-9:
            failures.append(f"norm case {case}")
        if np.max(np.abs(spectrum.intensities - spectrum.intensities[::-1])) > 1e-9:
            failures.append(f"symmetry case {case}")
        upper = np.triu(rng.normal(size=(n, n)) * 300, 1)
        h = EffectiveZHamiltonian(rng.normal(size=n) * 1e4, upper + upper.T)
        V = LayeredPropagator(n, (z_phase_diagonal(h, rng.uniform(0, 0.03)),))
        rotated = mqc_spectrum(conjugate_operator(V, rho)).intensities
        if np.max(np.abs(rotated - mqc_spectrum(rho).intensities)) > 1e-9:
            failures.append(f"Z invariance case {case}")
    report(capsys, 10, "invariant suites", not failures,
           f"{len(failures)} violations over 80 seeded instances {failures[:3]}", t0)
