"""Acceptance criteria 1-9, each printed as one PASS/FAIL line.

The trained-run criteria (5-8) share one set of runs per module, so the
whole file takes roughly a quarter of an hour on one CPU.
"""
import math
import time

import numpy as np
import pytest

from conftest import ket, proj, random_density, random_unitary
from deqnn.bounds import SLACK, continuity_bound, lemma1_bound
from deqnn.circuit import build_ansatz, initialize_parameters
from deqnn.cost import CostSpec, common_witness, cost, swap_expectation, witness_error
from deqnn.harness import ExperimentConfig, run_experiment
from deqnn.linalg import QubitPartition, partial_trace, unitarity_residual
from deqnn.optimizer import deqnn_gradient, finite_difference_gradient
from deqnn.quantities import (
    QuantityKind,
    bures_angle,
    bures_distance,
    default_quantities,
    fidelity,
    renyi,
    trace_distance,
    tsallis,
    von_neumann,
)
from deqnn.stategen import perfect_disentangler, product_with_pure, random_mixed_state, required_preserved_qubits

pytestmark = pytest.mark.slow

CONVERGED = 1e-2


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def _run(qubits, rank, seed, **kw):
    cfg = ExperimentConfig(qubits=qubits, rank=rank, seed=seed, **kw)
    t0 = time.perf_counter()
    rep = run_experiment(cfg)
    return rep, time.perf_counter() - t0


def _max_dev(rep):
    return max(q["deviation"] for q in rep.quantities)


def _reached(rep, epochs):
    return rep.final_cost < CONVERGED and rep.epochs <= epochs


@pytest.fixture(scope="module")
def four_qubit_runs():
    """Criterion 6 runs: ranks 4 and 2, 20 seeds each, 300 epochs."""
    runs = {4: [], 2: []}
    t0 = time.perf_counter()
    for rank in runs:
        for seed in range(20):
            runs[rank].append(_run(4, rank, seed, epochs=300)[0])
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def six_qubit_runs():
    """Criterion 7 runs: ranks 4 and 2, 10 seeds each, 1000 epochs."""
    runs = {4: [], 2: []}
    t0 = time.perf_counter()
    for rank in runs:
        for seed in range(10):
            runs[rank].append(_run(6, rank, seed, epochs=1000)[0])
    return runs, time.perf_counter() - t0


def test_criterion_1_oracle_identities(verdict):
    t0 = time.perf_counter()
    errs = []
    for n in range(1, 6):
        mixed = np.eye(2**n) / 2**n
        errs.append(abs(von_neumann(mixed) - n))
        for a in (0.5, 2.0, 3.0):
            errs.append(abs(renyi(mixed, a) - n))
        for q in (0.5, 1.5, 2.0):
            errs.append(abs(tsallis(mixed, q) - (1 - 2 ** (n * (1 - q))) / (q - 1)))
        pure = proj(ket([0] * n))
        errs += [abs(von_neumann(pure)), abs(renyi(pure, 0.5)), abs(tsallis(pure, 1.5))]
    rng = np.random.default_rng(1)
    for _ in range(50):
        rho = random_density(2, rng=rng)
        errs += [abs(trace_distance(rho, rho)), abs(fidelity(rho, rho) - 1), abs(bures_angle(rho, rho))]
    a, b = proj(ket([0])), proj(ket([1]))
    plus = proj(np.array([1, 1]) / math.sqrt(2))
    errs += [abs(trace_distance(a, b) - 1), abs(fidelity(a, b)), abs(bures_angle(a, b) - math.pi / 2),
             abs(bures_distance(a, b) - math.sqrt(2)), abs(fidelity(a, plus) - 0.5),
             abs(trace_distance(a, plus) - math.sqrt(0.5)), abs(bures_angle(a, plus) - math.acos(0.5))]
    worst, took = max(errs), time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and took < 5, f"max error {worst:.1e} over {len(errs)} identities in {took:.2f}s")


def _swap_oracle(n, discarded):
    d = 2**n
    out = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            for q in discarded:
                bi[q], bj[q] = bj[q], bi[q]
            out[int("".join(map(str, bi)), 2) * d + int("".join(map(str, bj)), 2), i * d + j] = 1
    return out


def test_criterion_2_swap_identity(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    swaps = {}
    for k in range(200):
        n = 2 + k % 3
        disc = tuple(sorted(rng.choice(n, size=1 + k % (n - 1), replace=False).tolist()))
        part = QubitPartition(disc, tuple(q for q in range(n) if q not in disc))
        s = swaps.setdefault((n, disc), _swap_oracle(n, disc))
        rho, sigma = random_density(n, rng=rng), random_density(n, rank=1 + k % 4, rng=rng)
        lhs = np.trace(s @ np.kron(rho, sigma)).real
        rhs = np.trace(partial_trace(rho, part, "discarded") @ partial_trace(sigma, part, "discarded")).real
        worst = max(worst, abs(lhs - rhs), abs(swap_expectation(rho, sigma, part) - lhs))
    verdict(2, worst <= 1e-10, f"max |Tr(S_A ρ⊗σ) - Tr(ρ_A σ_A)| = {worst:.1e} on 200 pairs")


def test_criterion_3_gradient_fidelity(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(300 + seed)
        a = build_ansatz(2, 2)
        spec = CostSpec(tuple(random_density(2, rng=rng) for _ in range(2)), QubitPartition.leading(2, 1))
        theta = initialize_parameters(a, rng)
        _, grad, _ = deqnn_gradient(theta, a, spec)
        fd = finite_difference_gradient(lambda t: cost(t, a, spec), theta, h=1e-5)
        worst = max(worst, float(np.max(np.abs(grad - fd))))
    took = time.perf_counter() - t0
    verdict(3, worst <= 1e-6 and took < 30, f"max |shift - FD| = {worst:.1e} on 20 instances in {took:.1f}s")


def test_criterion_4_constructive_oracle(verdict):
    t0 = time.perf_counter()
    kinds = default_quantities(0.5, 1.5)
    res = err = pres = 0.0
    for k in range(50):
        n, rank, m = 2 + k % 5, (1, 2, 4)[k % 3], 1 + k % 3
        states = [random_mixed_state(n, rank, seed=[400 + k, i]).matrix for i in range(m)]
        need = required_preserved_qubits(states)
        if need >= n:
            n += 2
            states = [random_mixed_state(n, rank, seed=[400 + k, i]).matrix for i in range(m)]
            need = required_preserved_qubits(states)
        part = QubitPartition.leading(n, n - need)
        u = perfect_disentangler(states, part)
        res = max(res, unitarity_residual(u))
        outs = [u @ s @ u.conj().T for s in states]
        for o in outs:
            ra = partial_trace(o, part, "discarded")
            err = max(err, 1 - ra[0, 0].real)
        red = [partial_trace(o, part) for o in outs]
        for kind in kinds:
            if kind.two_state:
                for i in range(m):
                    for j in range(i + 1, m):
                        pres = max(pres, abs(kind.evaluate(red[i], red[j]) - kind.evaluate(states[i], states[j])))
            else:
                for s, r in zip(states, red):
                    pres = max(pres, abs(kind.evaluate(r) - kind.evaluate(s)))
    took = time.perf_counter() - t0
    ok = res <= 1e-10 and err <= 1e-9 and pres <= 1e-8 and took < 120
    verdict(4, ok, f"residual {res:.1e}, disentanglement error {err:.1e}, preservation {pres:.1e}, {took:.1f}s")


def test_criterion_5_certification(verdict, four_qubit_runs):
    runs = [r for rank in (4, 2) for r in four_qubit_runs[0][rank]]
    runs += [_run(4, 1, seed, epochs=300)[0] for seed in range(10)]
    trained = [r for r in runs if r.final_cost < CONVERGED][:50]
    failures = [(r.config["rank"], r.config["seed"], q["label"])
                for r in trained for q in r.quantities if not q["satisfied"]]
    ok = len(trained) == 50 and not failures
    verdict(5, ok, f"{len(trained)} trained runs with eps < 1e-2, {len(failures)} bound violations")


def test_criterion_6_four_qubit_reproduction(verdict, four_qubit_runs):
    runs, took = four_qubit_runs
    rates = {}
    for rank, reps in runs.items():
        good = [r for r in reps if _reached(r, 300) and _max_dev(r) <= 0.05]
        rates[rank] = len(good) / len(reps)
    ok = all(v >= 0.9 for v in rates.values()) and took <= 300
    detail = ", ".join(f"rank {k}: {v:.0%}" for k, v in rates.items())
    verdict(6, ok, f"{detail} of 20 seeds converged with deviation <= 0.05, {took:.0f}s total")


def test_criterion_7_six_qubit_reproduction(verdict, six_qubit_runs):
    runs, took = six_qubit_runs
    rates = {}
    for rank, reps in runs.items():
        good = [r for r in reps if _reached(r, 1000) and _max_dev(r) <= 0.1]
        rates[rank] = len(good) / len(reps)
    ok = all(v >= 0.8 for v in rates.values()) and took <= 1800
    detail = ", ".join(f"rank {k}: {v:.0%}" for k, v in rates.items())
    verdict(7, ok, f"{detail} of 10 seeds converged with deviation <= 0.1, {took:.0f}s total")


def _continuity_pairs(count, seed):
    rng = np.random.default_rng(seed)
    kinds = [QuantityKind("von_neumann"), QuantityKind("renyi", 0.5), QuantityKind("renyi", 2.0),
             QuantityKind("tsallis", 0.5), QuantityKind("tsallis", 1.5)]
    bad = 0
    for k in range(count):
        n = 1 + k % 3
        rho = random_density(n, rank=1 + k % 2**n, rng=rng)
        # mix of near and far pairs
        if k % 2:
            sigma = random_density(n, rng=rng)
        else:
            t = 10 ** rng.uniform(-4, -0.5)
            sigma = (1 - t) * rho + t * random_density(n, rng=rng)
        T = trace_distance(rho, sigma)
        r = 2**n
        for kind in kinds:
            if abs(kind.evaluate(rho) - kind.evaluate(sigma)) > continuity_bound(kind, T, r=r) + SLACK:
                bad += 1
        # two-state rows, with the second argument fixed
        tau = random_density(n, rng=rng)
        T2 = trace_distance(tau, tau)
        for kind in (QuantityKind("trace_distance"), QuantityKind("fidelity")):
            dev = abs(kind.evaluate(rho, tau) - kind.evaluate(sigma, tau))
            if dev > continuity_bound(kind, T, T2, r) + SLACK:
                bad += 1
    return bad


def _product_distance_samples(count, seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for k in range(count):
        n, rank = 2 + k % 3, (1, 2)[k % 2]
        rho = random_mixed_state(n, rank, seed=[seed, k]).matrix
        part = QubitPartition.leading(n, n - required_preserved_qubits([rho]))
        u0 = perfect_disentangler([rho], part)
        # approximate disentangler: small random unitary noise after the perfect one
        h = random_density(n, rng=rng)
        w_, v_ = np.linalg.eigh(h)
        noise = (v_ * np.exp(-1j * 10 ** rng.uniform(-3, 0) * w_ * 2**n)) @ v_.conj().T
        u = noise @ u0
        out = u @ rho @ u.conj().T
        w = common_witness([partial_trace(out, part, "discarded")])
        eps = witness_error(u, rho, part, w)
        t = trace_distance(out, product_with_pure(w, partial_trace(out, part), part))
        bad += t > lemma1_bound(rank, eps) + SLACK
    return bad


def test_criterion_8_bound_suites(verdict, four_qubit_runs, six_qubit_runs):
    cont_bad = _continuity_pairs(1000, 8)
    l1_bad = _product_distance_samples(200, 80)
    reps = [r for runs in (four_qubit_runs[0], six_qubit_runs[0]) for rank in runs for r in runs[rank]]
    trained = [r for r in reps if r.final_cost < CONVERGED]
    l2_bad = sum(not r.overlap_check["satisfied"] for r in trained)
    ok = cont_bad == 0 and l1_bad == 0 and l2_bad == 0 and trained
    verdict(8, bool(ok), f"continuity violations {cont_bad}/1000 pairs, product-distance violations {l1_bad}/200, "
                         f"witness-overlap violations {l2_bad}/{len(trained)} trained runs")


def test_criterion_9_determinism(verdict, tmp_path):
    cfg = ExperimentConfig(qubits=4, rank=2, seed=11, epochs=40)
    run_experiment(cfg, out_dir=tmp_path / "a")
    run_experiment(cfg, out_dir=tmp_path / "b")
    a, b = (tmp_path / d / "trace.csv" for d in "ab")
    same = a.read_bytes() == b.read_bytes()
    verdict(9, same, f"trace CSVs {'identical' if same else 'differ'} ({len(a.read_bytes())} bytes)")
