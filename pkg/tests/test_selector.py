"""Peer-selection objective, gradient, ascent, baselines, and the
brute-force subset oracle."""

import numpy as np
import pytest

from dflsim.selector import (
    SelectionInstance,
    SelectorConfig,
    baseline_policy,
    brute_force_select,
    dump_instance,
    load_instance,
    objective,
    objective_grad,
    optimize,
    random_instance,
)


def _inst(gains, energies, ids=None):
    gains = np.asarray(gains, dtype=float)
    ids = list(range(len(gains))) if ids is None else ids
    return SelectionInstance(ids, gains, np.asarray(energies, dtype=float))


# --------------------------------------------------------------- objective

def test_objective_hand_example():
    inst = _inst([0.8, 0.2], [0.4, 0.9])
    value = objective(np.zeros(2), inst, theta=0.0)
    assert value == pytest.approx(0.5 / 0.65, rel=1e-12)


def test_objective_all_zero_gains_is_pure_regularizer():
    inst = _inst([0.0, 0.0, 0.0], [0.5, 0.5, 0.5])
    w = np.array([3.0, -4.0, 0.0])
    assert objective(w, inst, theta=0.7) == pytest.approx(0.7 * 5.0, rel=1e-12)


def test_objective_single_neighbor_constant_ratio():
    inst = _inst([0.6], [0.3])
    for w in (-4.0, 0.0, 2.5):
        assert objective(np.array([w]), inst, 0.0) == pytest.approx(2.0, rel=1e-12)
    # with regularization the only w-dependence is theta*|w|
    assert objective(np.array([2.5]), inst, 0.1) == pytest.approx(2.0 + 0.25, rel=1e-12)


def test_objective_length_mismatch():
    with pytest.raises(ValueError):
        objective(np.zeros(3), _inst([0.5], [0.5]), 0.0)


# ---------------------------------------------------------------- gradient

def _fd_grad(w, inst, theta, h=1e-6):
    out = np.zeros_like(w)
    for i in range(len(w)):
        up, down = w.copy(), w.copy()
        up[i] += h
        down[i] -= h
        out[i] = (objective(up, inst, theta) - objective(down, inst, theta)) / (2 * h)
    return out


def test_grad_matches_finite_differences_random_instances():
    rng = np.random.default_rng(30)
    for _ in range(100):
        k = int(rng.integers(1, 31))
        inst = random_instance(k, rng)
        w = rng.normal(0, 2, size=k)
        theta = float(rng.choice([0.0, 0.01, 0.1]))
        if theta > 0 and np.linalg.norm(w) < 1e-3:
            w[0] += 1.0  # keep clear of the norm kink
        analytic = objective_grad(w, inst, theta)
        fd = _fd_grad(w, inst, theta)
        denom = max(np.abs(fd).max(), 1e-9)
        assert np.abs(analytic - fd).max() / denom < 1e-6


def test_grad_zero_for_symmetric_instance():
    inst = _inst([0.4, 0.4, 0.4], [0.7, 0.7, 0.7])
    np.testing.assert_allclose(objective_grad(np.zeros(3), inst, 0.0), 0.0, atol=1e-15)


def test_grad_single_neighbor_theta_zero():
    inst = _inst([0.6], [0.3])
    np.testing.assert_allclose(objective_grad(np.array([1.2]), inst, 0.0), 0.0, atol=1e-15)


def test_grad_norm_subgradient_at_zero_is_zero():
    inst = _inst([0.8, 0.1], [0.5, 0.5])
    at_zero = objective_grad(np.zeros(2), inst, theta=5.0)
    ratio_only = objective_grad(np.zeros(2), inst, theta=0.0)
    np.testing.assert_array_equal(at_zero, ratio_only)


# ----------------------------------------------------------------- ascent

def test_theta_zero_selects_best_ratio_neighbor():
    # ratios 1.0, 1.67, 0.5: the middle neighbor wins alone, and the
    # brute-force enumeration over all 7 subsets agrees
    inst = _inst([0.9, 0.5, 0.1], [0.9, 0.3, 0.2], ids=[1, 2, 3])
    decision = optimize(inst, SelectorConfig(theta=0.0))
    assert decision.selected == [2]
    oracle, _ = brute_force_select(inst)
    assert oracle == [2]


def test_theta_zero_concentrates_on_random_instances():
    rng = np.random.default_rng(31)
    cfg = SelectorConfig(theta=0.0)
    counts = [len(optimize(random_instance(12, rng), cfg).selected) for _ in range(100)]
    assert np.mean(counts) <= 1.2


def test_optimizer_matches_brute_force_on_small_instances():
    rng = np.random.default_rng(32)
    cfg = SelectorConfig(theta=0.0)
    agree = 0
    for _ in range(500):
        inst = random_instance(int(rng.integers(1, 11)), rng)
        got = set(optimize(inst, cfg).selected)
        want = set(brute_force_select(inst)[0])
        agree += got == want
    assert agree / 500 >= 0.95


def test_energy_rescaling_leaves_theta_zero_choice():
    rng = np.random.default_rng(33)
    cfg = SelectorConfig(theta=0.0)
    matches = 0
    for _ in range(500):
        inst = random_instance(int(rng.integers(2, 11)), rng)
        scaled = SelectionInstance(
            inst.neighbor_ids, inst.gains, inst.energies * 7.3
        )
        same_oracle = brute_force_select(inst)[0] == brute_force_select(scaled)[0]
        assert same_oracle  # ratio objective is scale-free, always
        matches += set(optimize(inst, cfg).selected) == set(brute_force_select(inst)[0])
    assert matches / 500 >= 0.95


def test_selected_count_medians_rise_with_theta():
    rng = np.random.default_rng(34)
    instances = [random_instance(30, rng) for _ in range(200)]
    grid = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1)
    medians = []
    for theta in grid:
        cfg = SelectorConfig(theta=theta)
        medians.append(float(np.median([len(optimize(i, cfg).selected) for i in instances])))
    assert all(a <= b for a, b in zip(medians, medians[1:]))
    assert medians[0] == 1.0
    assert medians[-1] >= 15


def test_all_gains_zero_skips_transmission():
    inst = _inst([0.0, 0.0], [0.4, 0.8])
    decision = optimize(inst, SelectorConfig(theta=0.02))
    assert decision.selected == []


def test_constraint_bounds_hold_with_nonzero_gains():
    rng = np.random.default_rng(35)
    for theta in (0.0, 0.02, 0.1):
        cfg = SelectorConfig(theta=theta)
        for _ in range(100):
            k = int(rng.integers(1, 16))
            inst = random_instance(k, rng)
            decision = optimize(inst, cfg)
            assert 1 <= len(decision.selected) <= k
            assert set(decision.selected) <= set(inst.neighbor_ids)


def test_optimize_deterministic():
    rng = np.random.default_rng(36)
    inst = random_instance(9, rng)
    cfg = SelectorConfig(theta=0.03)
    a = optimize(inst, cfg)
    b = optimize(inst, cfg)
    assert a.selected == b.selected
    assert np.array_equal(a.betas, b.betas)
    assert a.objective_value == b.objective_value


def test_empty_threshold_cut_falls_back_to_argmax():
    # gains force every membership low, yet one peer must be named
    inst = _inst([1e-9, 2e-9], [1.0, 1.0])
    decision = optimize(inst, SelectorConfig(theta=0.0, steps=5000, step_size=0.5))
    assert len(decision.selected) == 1
    assert decision.selected == [1]


# ---------------------------------------------------------------- baseline

def test_baseline_policies():
    inst = random_instance(5, np.random.default_rng(37))
    assert baseline_policy("none", inst).selected == []
    assert baseline_policy("full", inst).selected == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        baseline_policy("half", inst)


# ------------------------------------------------------- dump/load, misc

def test_instance_dump_round_trip(tmp_path):
    inst = random_instance(8, np.random.default_rng(38))
    path = str(tmp_path / "instance.txt")
    dump_instance(inst, path)
    back = load_instance(path)
    assert back.neighbor_ids == inst.neighbor_ids
    np.testing.assert_array_equal(back.gains, inst.gains)
    np.testing.assert_array_equal(back.energies, inst.energies)


def test_instance_validation():
    with pytest.raises(ValueError):
        _inst([], [])
    with pytest.raises(ValueError):
        _inst([0.5, 0.5], [0.5])
    with pytest.raises(ValueError):
        _inst([0.5], [0.0])
    with pytest.raises(ValueError):
        _inst([-0.1], [0.5])


def test_brute_force_refuses_huge_instances():
    inst = random_instance(25, np.random.default_rng(39))
    with pytest.raises(ValueError):
        brute_force_select(inst)


def test_selector_config_validation():
    with pytest.raises(ValueError):
        SelectorConfig(theta=-0.01)
    with pytest.raises(ValueError):
        SelectorConfig(threshold=1.0)
    with pytest.raises(ValueError):
        SelectorConfig(steps=0)
