import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgehack import classical
from bridgehack.errors import DimensionTooLarge, DivisionSingularity, InvalidInput, SupportViolation
from corpus import positive_instance

P3 = np.array([0.2, 0.3, 0.5])
Q3 = np.array([0.5, 0.3, 0.2])


def test_apply_channel_examples():
    np.testing.assert_allclose(classical.apply_channel(np.eye(3), P3), P3)
    t = np.array([0.1, 0.6, 0.3])
    np.testing.assert_allclose(classical.apply_channel(classical.erasure_channel(t), P3), t)
    e = classical.random_positive_channel(3, seed=0)
    expected = [sum(e[y, x] * P3[x] for x in range(3)) for y in range(3)]
    np.testing.assert_allclose(classical.apply_channel(e, P3), expected, rtol=1e-15)


def test_validation_errors():
    with pytest.raises(InvalidInput):
        classical.apply_channel(np.eye(3), [0.5, 0.5])
    with pytest.raises(InvalidInput):
        classical.as_probability([0.6, 0.6])
    with pytest.raises(InvalidInput):
        classical.as_probability([1.2, -0.2])
    with pytest.raises(InvalidInput):
        classical.as_stochastic([[0.5, 0.5], [0.4, 0.5]])


def test_tiny_entries_are_clamped_with_warning():
    e = np.array([[1.0 - 1e-17, 0.0], [1e-17, 1.0]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = classical.as_stochastic(e)
    assert out[1, 0] == 0.0
    assert caught


def test_bayes_inverse_permutation_is_transpose():
    e = classical.permutation_channel([2, 0, 1])
    rng = np.random.default_rng(0)
    for _ in range(5):
        np.testing.assert_allclose(classical.bayes_inverse(e, rng.dirichlet(np.ones(3))), e.T, atol=1e-15)


def test_bayes_update_through_erasure_returns_prior():
    e = classical.erasure_channel([0.2, 0.5, 0.3])
    rng = np.random.default_rng(1)
    gamma = rng.dirichlet(np.ones(3))
    np.testing.assert_allclose(classical.bayes_update(e, gamma, rng.dirichlet(np.ones(3))), gamma, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_bayes_inverse_recovers_prior_and_is_stochastic(seed):
    rng = np.random.default_rng(seed)
    d_in, d_out = rng.integers(1, 6, size=2)
    e = classical.random_positive_channel(int(d_in), seed=seed, out_dim=int(d_out))
    gamma = rng.dirichlet(np.ones(d_in))
    inv = classical.bayes_inverse(e, gamma)
    np.testing.assert_allclose(inv.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(inv @ (e @ gamma), gamma, atol=1e-12)


def test_bayes_inverse_singular():
    e = classical.permutation_channel([1, 0])
    with pytest.raises(DivisionSingularity):
        classical.bayes_inverse(e, [1.0, 0.0])


def test_bayes_inverse_scale_invariant():
    e = classical.random_positive_channel(3, seed=3)
    np.testing.assert_allclose(classical.bayes_inverse(e, 7 * P3), classical.bayes_inverse(e, P3), rtol=1e-14)


def test_ras_erasure_returns_target():
    e = classical.erasure_channel([0.4, 0.4, 0.2])
    sol = classical.prior_hack_ras(e, P3, Q3)
    assert sol.converged
    np.testing.assert_allclose(sol.prior, P3, atol=1e-12)


def test_ras_permutation_with_wrong_evidence_does_not_converge():
    sol = classical.prior_hack_ras(classical.permutation_channel([1, 2, 0]), P3, Q3)
    assert not sol.converged


def test_ras_identity_plateaus():
    sol = classical.prior_hack_ras(np.eye(3), P3, Q3)
    assert sol.status is classical.Status.MAX_ITERATIONS
    assert sol.plateau
    assert sol.iterations < 100


@pytest.mark.parametrize("seed", range(10))
def test_ras_restart_agreement(seed):
    rng = np.random.default_rng(seed)
    e = classical.random_positive_channel(3, seed=100 + seed)
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    a = classical.prior_hack_ras(e, p, q)
    b = classical.prior_hack_ras(e, p, q, seed=seed)
    assert a.converged and b.converged
    np.testing.assert_allclose(a.prior, b.prior, atol=1e-8)
    np.testing.assert_allclose(classical.bayes_update(e, a.prior, q), p, atol=1e-10)
    np.testing.assert_allclose(a.potential, q / (e @ a.prior), rtol=1e-12)
    assert a.prior.sum() == pytest.approx(1.0, abs=1e-14)


def test_ras_step_is_fixed_at_solution():
    e, p, q = positive_instance(3)
    sol = classical.prior_hack_ras(e, p, q, tol=1e-13)
    np.testing.assert_allclose(classical.ras_step(e, sol.prior, p, q), sol.prior, atol=1e-12)


def test_ras_rejects_bad_tolerance():
    with pytest.raises(InvalidInput):
        classical.prior_hack_ras(np.eye(2), [0.5, 0.5], [0.5, 0.5], tol=0)


def test_ras_rectangular_channel():
    e = classical.random_positive_channel(3, seed=4, out_dim=5)
    rng = np.random.default_rng(4)
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(5))
    sol = classical.prior_hack_ras(e, p, q)
    assert sol.converged
    np.testing.assert_allclose(classical.bayes_update(e, sol.prior, q), p, atol=1e-9)


def test_feasibility_positive_channel():
    verdict = classical.check_feasibility(classical.random_positive_channel(4, seed=5), [0.1, 0.2, 0.3, 0.4], [0.7, 0.1, 0.1, 0.1])
    assert verdict.feasible and verdict.witness is None


def test_feasibility_identity_witness():
    verdict = classical.check_feasibility(np.eye(3), P3, Q3)
    assert not verdict.feasible
    assert verdict.witness == ((2,), (2,))
    assert verdict.violation == "deficit"


@pytest.mark.parametrize("p2, q2, feasible", [(0.5, 0.3, True), (0.3, 0.5, False), (0.4, 0.4, False)])
def test_feasibility_absorber(p2, q2, feasible):
    e = classical.absorber_channel(3, [0, 1], 0.5)
    p = np.array([(1 - p2) / 2, (1 - p2) / 2, p2])
    q = np.array([(1 - q2) / 2, (1 - q2) / 2, q2])
    assert classical.check_feasibility(e, p, q).feasible is feasible
    assert classical.prior_hack_ras(e, p, q).converged is feasible


def test_feasibility_block_channel_equality_constraint():
    e = classical.block_symmetric_channel(0.3)
    # inputs {0, 1} only talk to outputs {0, 1}, so their mass must match exactly
    p = np.array([0.1, 0.3, 0.6])
    assert classical.check_feasibility(e, p, [0.25, 0.15, 0.6]).feasible
    verdict = classical.check_feasibility(e, p, [0.3, 0.2, 0.5])
    assert not verdict.feasible
    assert ((0, 1), (0, 1)) in verdict.equality_constraints


def test_feasibility_too_large():
    with pytest.raises(DimensionTooLarge):
        classical.check_feasibility(np.eye(21), np.full(21, 1 / 21), np.full(21, 1 / 21))


def test_always_hackable():
    assert classical.is_always_hackable(classical.random_positive_channel(3, seed=6))
    assert not classical.is_always_hackable(classical.permutation_channel([1, 0, 2]))
    assert classical.is_always_hackable(classical.erasure_channel([0.2, 0.3, 0.5]))


def test_primitive_examples():
    assert classical.is_primitive(classical.random_positive_channel(3, seed=7)) == (True, 1)
    assert classical.is_primitive(classical.permutation_channel([1, 2, 0])) == (False, None)
    assert classical.is_primitive(classical.absorber_channel(3, [0], 0.5)) == (False, None)


def test_primitive_wielandt_exponent():
    d = 5
    e = np.roll(np.eye(d), 1, axis=0)
    e[:, 0] = 0.0
    e[[1, 2], 0] = 0.5
    assert classical.is_primitive(e) == (True, (d - 1) ** 2 + 1)


def test_bridge_erasure_maps_everything_to_q():
    e = classical.erasure_channel([0.3, 0.3, 0.4])
    sol = classical.prior_hack_ras(e, P3, Q3)
    bridge = classical.bridge_from_prior(e, sol, P3, Q3)
    np.testing.assert_allclose(bridge, np.tile(Q3[:, None], (1, 3)), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_bridge_agrees_with_bayes_form(seed):
    e, p, q = positive_instance(seed)
    sol = classical.prior_hack_ras(e, p, q)
    bridge = classical.bridge_from_prior(e, sol, p, q)
    np.testing.assert_allclose(bridge.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(bridge @ p, q, atol=1e-8)
    via_bayes = classical.bridge_from_bayes(classical.bayes_inverse(e, sol.prior), p, q)
    np.testing.assert_allclose(bridge, via_bayes, atol=1e-10)


def test_bridge_needs_converged_solution():
    sol = classical.prior_hack_ras(np.eye(3), P3, Q3)
    with pytest.raises(InvalidInput):
        classical.bridge_from_prior(np.eye(3), sol, P3, Q3)


def test_coupling_examples():
    np.testing.assert_allclose(classical.coupling_from(np.eye(3), P3, np.ones(3)), np.diag(P3))
    e, p, q = positive_instance(11)
    sol = classical.prior_hack_ras(e, p, q)
    b = classical.coupling_from(e, sol.prior, sol.potential)
    np.testing.assert_allclose(b.sum(axis=1), p, atol=1e-8)
    np.testing.assert_allclose(b.sum(axis=0), q, atol=1e-8)


def test_coupling_kl_support():
    assert classical.coupling_kl(np.eye(2) / 2, np.eye(2) / 2) == 0.0
    with pytest.raises(SupportViolation):
        classical.coupling_kl(np.full((2, 2), 0.25), np.eye(2) / 2)


def test_make_channel_families():
    assert classical.make_channel("random-positive", dim=3, seed=1).shape == (3, 3)
    np.testing.assert_allclose(classical.make_channel("bistochastic", dim=2, mix=1.0), np.full((2, 2), 0.5))
    with pytest.raises(InvalidInput):
        classical.make_channel("nonsense")
