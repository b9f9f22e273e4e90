"""Acceptance suite: the quantitative exit criteria for the simulator.

One test per criterion, each at its stated tolerance, each printing a
single pass/fail line. Run them verbosely with

    pytest tests/test_acceptance.py -v -s

The comparison matrix (5 seeds x 3 schemes on the default 20-node,
30-round setup) is computed once and shared; the whole suite targets a
single-machine runtime well under five minutes.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from dflsim.cli import run_prop1_suite
from dflsim.engine import (
    ExperimentConfig,
    mean_final_accuracy,
    mean_selected,
    run_experiment,
    total_energy,
    write_metrics_csv,
)
from dflsim.learner import Layout, init_model, loss_and_grad, ModelParams
from dflsim.datagen import make_synthetic
from dflsim.radio import RadioParams, dbi_to_linear, dbm_to_watts, scaled_energy, tx_energy
from dflsim.selector import (
    SelectorConfig,
    brute_force_select,
    objective,
    objective_grad,
    optimize,
    random_instance,
)

SEEDS = range(5)
SCHEMES = ("ocdfl", "full", "none")


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {detail} -> {'PASS' if ok else 'FAIL'}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def matrix():
    """Default desk-scale IID config, every scheme, five seeds."""
    t0 = time.monotonic()
    runs = {}
    for seed in SEEDS:
        for scheme in SCHEMES:
            cfg = replace(ExperimentConfig(), scheme=scheme, seed=seed)
            runs[(scheme, seed)] = run_experiment(cfg)
    runs["elapsed_s"] = time.monotonic() - t0
    return runs


def test_energy_reduction(matrix):
    # ocdfl(theta=0.02) total transmit energy within 20%..70% of full
    # communication on the default config
    ratio = total_energy(matrix[("ocdfl", 0)]) / total_energy(matrix[("full", 0)])
    _report(
        "energy-reduction", 0.20 <= ratio <= 0.70,
        f"ocdfl/full energy ratio {ratio:.3f} (need 0.20..0.70), "
        f"matrix wall time {matrix['elapsed_s']:.0f}s",
    )


def test_accuracy_parity_iid(matrix):
    means = {
        scheme: float(np.mean([mean_final_accuracy(matrix[(scheme, s)]) for s in SEEDS]))
        for scheme in SCHEMES
    }
    ok = (means["ocdfl"] >= means["full"] - 0.02) and (means["ocdfl"] >= means["none"] + 0.03)
    _report(
        "accuracy-parity-iid", ok,
        f"5-seed final accuracy ocdfl {means['ocdfl']:.4f}, full {means['full']:.4f}, "
        f"none {means['none']:.4f} (need >= full-0.02 and >= none+0.03)",
    )


def test_theta_zero_degeneracy():
    result = run_experiment(replace(ExperimentConfig(), scheme="ocdfl", theta=0.0))
    mean_count = mean_selected(result)
    _report(
        "theta-zero-degeneracy", mean_count <= 1.2,
        f"mean selected peers per node-round {mean_count:.3f} at theta=0 (need <= 1.2)",
    )


def test_theta_sweep_shape():
    grid = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1)
    rng = np.random.default_rng(2024)
    instances = [random_instance(30, rng) for _ in range(200)]
    medians = []
    for theta in grid:
        cfg = SelectorConfig(theta=theta)
        medians.append(float(np.median([len(optimize(i, cfg).selected) for i in instances])))
    nondecreasing = all(a <= b for a, b in zip(medians, medians[1:]))
    ok = nondecreasing and medians[-1] >= 15
    _report(
        "theta-sweep-shape", ok,
        f"median selected over grid {dict(zip(grid, medians))} "
        f"(need nondecreasing, >= 15 at 0.1)",
    )


def test_prop1_suite():
    triples = 100_000
    violations = run_prop1_suite(triples, seed=1234)
    _report(
        "prop1-suite", violations == 0,
        f"{violations} violations / {triples} triples over dims 2,10,50,1000 "
        f"at 1e-9 relative tolerance",
    )


def test_selector_vs_oracle():
    rng = np.random.default_rng(4321)
    cfg = SelectorConfig(theta=0.0)
    agree = 0
    for _ in range(500):
        inst = random_instance(int(rng.integers(1, 11)), rng)
        agree += set(optimize(inst, cfg).selected) == set(brute_force_select(inst)[0])
    frac = agree / 500
    _report(
        "selector-vs-oracle", frac >= 0.95,
        f"optimizer matches brute-force subset on {frac:.1%} of 500 instances "
        f"(K<=10, theta=0, need >= 95%)",
    )


def _central_diff(f, x, h=1e-5):
    grad = np.zeros_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (f(up) - f(down)) / (2 * h)
    return grad


def test_gradient_checks():
    rng = np.random.default_rng(99)
    worst = 0.0

    for _ in range(50):  # selection objective
        k = int(rng.integers(1, 31))
        inst = random_instance(k, rng)
        theta = float(rng.choice([0.0, 0.02, 0.1]))
        w = rng.normal(0, 2, size=k)
        if theta > 0 and np.linalg.norm(w) < 1e-3:
            w[0] += 1.0
        analytic = objective_grad(w, inst, theta)
        fd = _central_diff(lambda v: objective(v, inst, theta), w)
        denom = max(float(np.abs(fd).max()), 1e-9)
        worst = max(worst, float(np.abs(analytic - fd).max()) / denom)

    for trial in range(10):  # model loss
        layout = Layout((6, 5, 3)) if trial % 2 == 0 else Layout((6, 3))
        model = init_model(layout, rng)
        data = make_synthetic(12, 6, 3, rng, separation=2.0)
        _, analytic = loss_and_grad(model, data.features, data.labels)
        fd = _central_diff(
            lambda v: loss_and_grad(ModelParams(v, layout), data.features, data.labels)[0],
            model.values.copy(),
        )
        denom = max(float(np.abs(fd).max()), 1e-9)
        worst = max(worst, float(np.abs(analytic - fd).max()) / denom)

    _report(
        "gradient-checks", worst < 1e-4,
        f"max relative gradient error {worst:.2e} across all sampled points "
        f"(central differences, 1e-5 step, need < 1e-4)",
    )


def test_radio_oracle():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(1000):
        params = RadioParams(
            p_tx=dbm_to_watts(rng.uniform(10, 21)),
            bandwidth=rng.uniform(5e6, 20e6),
            g_tx=dbi_to_linear(rng.uniform(-3, 6)),
            g_rx=dbi_to_linear(rng.uniform(-3, 6)),
            freq=rng.uniform(0.5e9, 6e9),
            env_exp=rng.uniform(2.0, 4.0),
            noise_density=dbm_to_watts(rng.uniform(-180, -150)),
            d_max=rng.uniform(500, 5000),
        )
        d = rng.uniform(1.0, params.d_max)
        s = int(rng.integers(1_000, 1_000_000))
        oracle = (params.p_tx * s) / (
            params.bandwidth / math.log(2.0) * math.log1p(
                (params.p_tx * params.g_tx * params.g_rx
                 * (params.light_speed / (4 * math.pi * params.freq)) ** 2
                 * d ** (-params.env_exp))
                / (params.noise_density * params.bandwidth)
            )
        )
        worst = max(worst, abs(tx_energy(params, d, s) - oracle) / oracle)
    edge = scaled_energy(params, params.d_max, 87_000)
    ok = worst <= 1e-10 and edge == 1.0
    _report(
        "radio-oracle", ok,
        f"worst relative deviation {worst:.2e} over 1000 draws (need <= 1e-10, "
        f"i.e. 10 significant digits); scaled energy at range edge = {edge!r} (need exactly 1.0)",
    )


def test_determinism(tmp_path):
    blobs = []
    for tag in ("first", "second"):
        result = run_experiment(ExperimentConfig())
        path = tmp_path / f"{tag}.csv"
        write_metrics_csv(result, str(path))
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1]
    _report(
        "determinism", ok,
        f"two identical-config runs wrote {'identical' if ok else 'DIFFERENT'} "
        f"metrics CSV bytes ({len(blobs[0])} bytes)",
    )
