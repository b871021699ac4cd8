"""Acceptance criteria, each at its stated tolerance.

Every test is tagged with ``@criterion``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import json
import time

import numpy as np
import pytest

from bridgehack import classical, imaging, quantum
from conftest import criterion
from corpus import improving_qubit_channel, positive_instance, qubit_pair, sparse_instance
from golden import CASES, GOLDEN, run_case, suffix

POSITIVE_SEEDS = range(100)


@pytest.fixture(scope="module")
def positive_solutions():
    out = []
    for seed in POSITIVE_SEEDS:
        e, p, q = positive_instance(seed)
        start = time.perf_counter()
        sol = classical.prior_hack_ras(e, p, q, max_iter=10_000)
        out.append((e, p, q, sol, time.perf_counter() - start))
    return out


@criterion("1. classical RAS converges on 100 strictly positive channels")
def test_criterion_01_ras_convergence(positive_solutions):
    for e, p, q, sol, elapsed in positive_solutions:
        assert sol.status is classical.Status.CONVERGED
        assert sol.residual < 1e-8
        assert sol.iterations <= 10_000
        assert elapsed < 1.0


@criterion("2. classical bridge duality and forward map")
def test_criterion_02_bridge_duality(positive_solutions):
    for e, p, q, sol, _ in positive_solutions:
        bridge = classical.bridge_from_prior(e, sol, p, q)
        gap = classical.bayes_inverse(bridge, p) - classical.bayes_inverse(e, sol.prior)
        assert np.max(np.abs(gap)) < 1e-8
        assert np.sum(np.abs(bridge @ p - q)) < 1e-8


@criterion("3. feasibility checker agrees with the solver on 200 sparse instances")
def test_criterion_03_feasibility_agreement():
    disagreements = []
    for seed in range(200):
        e, p, q = sparse_instance(seed)
        verdict = classical.check_feasibility(e, p, q)
        sol = classical.prior_hack_ras(e, p, q)
        if verdict.feasible != sol.converged:
            disagreements.append((seed, verdict.violation, sol.status.value))
    assert disagreements == []


def _kl_over_coupling_family(p, q, reference, n_grid=200_001):
    """Brute-force minimum of KL(B || reference) over 2x2 couplings with marginals (p, q)."""
    lo, hi = max(0.0, p[0] + q[0] - 1.0), min(p[0], q[0])
    t = np.linspace(lo, hi, n_grid)
    cells = np.stack([t, p[0] - t, q[0] - t, 1.0 - p[0] - q[0] + t])
    cells = np.clip(cells, 0.0, None)
    ref = reference.reshape(4, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(cells > 0, cells * np.log(cells / ref), 0.0)
    return float(np.min(terms.sum(axis=0)))


@criterion("4. bridge coupling attains the minimal KL divergence (2x2)")
def test_criterion_04_kl_optimality():
    for seed in range(20):
        rng = np.random.default_rng(700 + seed)
        e = classical.random_positive_channel(2, seed=800 + seed)
        p, q = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
        sol = classical.prior_hack_ras(e, p, q)
        assert sol.converged
        coupling = classical.coupling_from(e, sol.prior, sol.potential)
        np.testing.assert_allclose(coupling.sum(axis=1), p, atol=1e-9)
        np.testing.assert_allclose(coupling.sum(axis=0), q, atol=1e-9)
        reference = p[:, None] * e.T
        kl = classical.coupling_kl(coupling, reference)
        assert abs(kl - _kl_over_coupling_family(p, q, reference)) < 1e-4


def _primitivity_corpus():
    mats = []
    for d in range(2, 7):
        cycle = np.roll(np.eye(d), 1, axis=0)
        mats.append(cycle)
        lazy = 0.5 * cycle + 0.5 * np.eye(d)
        mats.append(lazy)
        wielandt = cycle.copy()
        wielandt[:, 0] = 0.0
        wielandt[[1, 2 % d], 0] = 0.5  # the cycle plus one chord: exponent (d-1)^2 + 1
        mats.append(wielandt / wielandt.sum(axis=0))
        mats.append(classical.absorber_channel(d, [0], 0.5))
    rng = np.random.default_rng(900)
    while len(mats) < 50:
        d = int(rng.integers(2, 6))
        mask = rng.random((d, d)) < 0.4
        mask[rng.integers(d, size=d), np.arange(d)] = True
        e = np.where(mask, 1.0 - rng.random((d, d)), 0.0)
        mats.append(e / e.sum(axis=0))
    return mats


def _power_positive(e):
    d = e.shape[0]
    power = np.eye(d)
    for n in range(1, (d - 1) ** 2 + 2):
        power = power @ e
        if np.all(power > 0):
            return True, n
    return False, None


@criterion("5. primitivity test agrees with direct powers up to the Wielandt bound")
def test_criterion_05_primitivity():
    mats = _primitivity_corpus()
    assert len(mats) == 50
    for e in mats:
        assert classical.is_primitive(e) == _power_positive(e)


@criterion("6. Petz prior consistency and scale invariance")
def test_criterion_06_petz_consistency_and_scale():
    for seed in range(100):
        rng = np.random.default_rng(1_000 + seed)
        d = 2 + seed % 2
        e = quantum.random_channel(d, seed=1_100 + seed, env_dim=2 + seed % 3)
        gamma = quantum.random_density(d, rng)
        np.testing.assert_allclose(quantum.petz_map(e, gamma, e(gamma)), gamma, atol=1e-10, rtol=0)
        c = float(rng.uniform(0.1, 10.0))
        for x in quantum.hermitian_basis(e.out_dim):
            np.testing.assert_allclose(
                quantum.petz_map(e, c * gamma, x), quantum.petz_map(e, gamma, x), atol=1e-10, rtol=0
            )


@criterion("7. quantum hacking converges through depolarising channels")
def test_criterion_07_quantum_hack_depolarising():
    for lam in (0.3, 0.6, 0.9):
        e = quantum.depolarising_channel(lam)
        for seed in range(50):
            rho, omega = qubit_pair(1_200 + seed)
            first = quantum.quantum_prior_hack(e, rho, omega, max_iter=5_000)
            second = quantum.quantum_prior_hack(e, rho, omega, max_iter=5_000, seed=1_300 + seed)
            for sol in (first, second):
                assert sol.converged
                assert np.linalg.norm(quantum.petz_map(e, sol.prior, omega) - rho) < 1e-6
            assert np.linalg.norm(first.prior - second.prior) < 1e-5


def _random_bloch(rng, max_radius=0.999):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v) * rng.uniform(0.0, max_radius)


@criterion("8. depolarising closed form matches the Petz map and its limits")
def test_criterion_08_closed_form():
    rng = np.random.default_rng(1_400)
    for _ in range(1_000):
        r, s, lam = _random_bloch(rng), rng.uniform(-0.999, 0.999), rng.uniform(0.05, 1.0)
        petz = quantum.petz_map(
            quantum.depolarising_channel(lam), quantum.density_from_bloch(r), quantum.density_from_bloch([0, 0, s])
        )
        np.testing.assert_allclose(
            quantum.bloch_vector(petz), quantum.depolarising_petz_bloch(r, s, lam), atol=1e-10, rtol=0
        )
    for _ in range(100):
        r, s, lam = _random_bloch(rng), rng.uniform(-1, 1), rng.uniform(0, 1)
        zhat = np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(quantum.depolarising_petz_bloch(r, s, 1.0), r, atol=1e-12, rtol=0)
        np.testing.assert_allclose(quantum.depolarising_petz_bloch(r, s, 0.0), s * zhat, atol=1e-12, rtol=0)
        np.testing.assert_allclose(
            quantum.depolarising_petz_bloch(np.zeros(3), s, lam), (1 - lam) * s * zhat, atol=1e-12, rtol=0
        )


@criterion("9. dephasing feasibility agrees with the quantum solver")
def test_criterion_09_dephasing():
    e = quantum.dephasing_channel(1.0)
    grid = np.linspace(0.05, 0.95, 10)
    disagreements = []
    for a in grid:
        for b in grid:
            rho, omega = np.diag([a, 1 - a]), np.diag([b, 1 - b])
            sol = quantum.quantum_prior_hack(e, rho, omega, max_iter=5_000)
            if quantum.dephasing_feasible(rho, omega) != sol.converged:
                disagreements.append((a, b, sol.status.value))
    assert disagreements == []


@criterion("10. quantum bridge residuals (Hermitian and inference-consistent)")
def test_criterion_10_bridges():
    for seed in range(30):
        e = improving_qubit_channel(1_500 + seed)
        rho, omega = qubit_pair(1_600 + seed)
        herm = quantum.qsb_hermitian(e, rho, omega)
        assert herm.converged
        assert herm.forward_residual < 1e-6 and herm.tp_residual < 1e-8
        ic = quantum.qsb_inference_consistent(e, rho, omega)
        assert ic.converged
        assert ic.forward_residual < 1e-6 and ic.tp_residual < 1e-8
        assert ic.duality_residual < 1e-8


@criterion("11. substituted Hermitian bridge: exact when commuting, wrong generically")
def test_criterion_11_substitution_separation():
    for seed in range(10):
        rng = np.random.default_rng(1_700 + seed)
        if seed % 2:
            d = 2 + seed % 3
            e = quantum.KrausChannel.from_stochastic(classical.random_positive_channel(d, seed=1_800 + seed))
            rho, omega = np.diag(rng.dirichlet(np.ones(d))), np.diag(rng.dirichlet(np.ones(d)))
        else:
            e = quantum.depolarising_channel(rng.uniform(0.2, 0.9))
            u = quantum.random_unitary(2, rng)
            a, b = rng.uniform(0.05, 0.95, 2)
            rho = u @ np.diag([a, 1 - a]) @ u.conj().T
            omega = u @ np.diag([b, 1 - b]) @ u.conj().T
        sol = quantum.quantum_prior_hack(e, rho, omega, tol=1e-13)
        assert sol.converged
        assert quantum.substituted_bridge_mismatch(e, rho, omega, sol.prior) < 1e-10
    for seed in range(10):
        e = improving_qubit_channel(1_900 + seed)
        rho, omega = qubit_pair(2_000 + seed)
        sol = quantum.quantum_prior_hack(e, rho, omega)
        assert sol.converged
        assert quantum.substituted_bridge_mismatch(e, rho, omega, sol.prior) > 1e-3


@criterion("12. embedded classical instances give the classical prior")
def test_criterion_12_embedding():
    for seed in range(20):
        rng = np.random.default_rng(2_100 + seed)
        d = int(rng.integers(2, 5))
        e = classical.random_positive_channel(d, seed=2_200 + seed)
        p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
        c_sol = classical.prior_hack_ras(e, p, q)
        q_sol = quantum.quantum_prior_hack(quantum.KrausChannel.from_stochastic(e), np.diag(p), np.diag(q))
        assert c_sol.converged and q_sol.converged
        np.testing.assert_allclose(np.diag(q_sol.prior).real, c_sol.prior, atol=1e-6, rtol=0)
        off = q_sol.prior - np.diag(np.diag(q_sol.prior))
        assert np.max(np.abs(off)) < 1e-6


@criterion("13. hacking images are the identity on the boundary")
def test_criterion_13_imaging_boundary():
    rng = np.random.default_rng(2_300)
    omega = quantum.random_density(2, rng)
    for sample in imaging.hack_image_quantum(quantum.depolarising_channel(0.5), omega, 1.0, 200, seed=2_301):
        assert sample.flag == "ok"
        np.testing.assert_allclose(sample.output_coords, sample.input_coords, atol=1e-9, rtol=0)

    e = classical.random_positive_channel(3, seed=2_302)
    q = rng.dirichlet(np.ones(3))
    outputs = np.array([s.output_coords for s in imaging.hack_image_classical(e, q, 0.0, 30, seed=2_303)])
    for vertex in np.eye(3):
        assert np.min(np.max(np.abs(outputs - vertex), axis=1)) < 1e-9


@criterion("14. every CLI command reproduces its golden file byte for byte")
def test_criterion_14_cli_golden(tmp_path):
    expected_codes = json.loads((GOLDEN / "exit_codes.json").read_text())
    assert set(expected_codes) == set(CASES)
    for name in CASES:
        out = tmp_path / f"{name}{suffix(name)}"
        assert run_case(name, out) == expected_codes[name], name
        assert out.read_bytes() == (GOLDEN / out.name).read_bytes(), name
