"""The headline comparison at reduced scale: selective peering against the
no-communication and full-communication baselines, identical seeds. Shows
accuracy, transmit energy, and how many peers the selective scheme used.

A full-size run (20 nodes, 30 rounds) takes a few minutes; this demo
shrinks the task to finish in about half a minute. The dflsim CLI runs
the full configuration and writes CSVs:  dflsim run --out runs/demo

Run with: python demos/05_scheme_comparison.py
"""

from dataclasses import replace

import numpy as np

from dflsim.engine import (
    ExperimentConfig,
    mean_final_accuracy,
    mean_selected,
    run_experiment,
    total_energy,
)

base = ExperimentConfig(num_nodes=12, rounds=15, num_train=1800, num_test=600, seed=1)
print(f"{base.num_nodes} nodes, {base.rounds} rounds, theta={base.theta}, "
      f"alpha={base.alpha:g} (IID-ish shards)\n")

results = {}
for scheme in ("none", "full", "ocdfl"):
    results[scheme] = run_experiment(replace(base, scheme=scheme))

print(f"{'scheme':>7}  {'final acc':>9}  {'energy':>10}  {'mean peers':>10}")
for scheme, result in results.items():
    print(f"{scheme:>7}  {mean_final_accuracy(result):>9.4f}  "
          f"{total_energy(result) * 1e3:>7.2f} mJ  {mean_selected(result):>10.2f}")

full_e = total_energy(results["full"])
ocdfl_e = total_energy(results["ocdfl"])
print(f"\nselective peering kept {100 * (1 - ocdfl_e / full_e):.0f}% of the "
      f"communication energy in the sender's battery")

acc = {s: np.array([m.accuracy.mean() for m in r.metrics]) for s, r in results.items()}
print("\nmean accuracy per round:")
print("  round:  " + "  ".join(f"{r:>5d}" for r in range(1, base.rounds + 1, 2)))
for scheme in ("none", "full", "ocdfl"):
    print(f"  {scheme:>5}:  " + "  ".join(f"{v:.3f}" for v in acc[scheme][::2]))
