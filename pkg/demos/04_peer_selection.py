"""Peer selection on one 30-neighbor instance: without regularization the
optimizer keeps only the single best gain-per-energy neighbor; raising
theta widens the chosen set toward the whole neighborhood.

Run with: python demos/04_peer_selection.py
"""

import numpy as np

from dflsim.selector import SelectorConfig, brute_force_select, optimize, random_instance

rng = np.random.default_rng(42)
inst = random_instance(30, rng)

ratios = inst.gains / inst.energies
best = int(np.argmax(ratios))
print(f"instance: 30 neighbors, gains and energies uniform on (0,1)")
print(f"best standalone gain/energy ratio: neighbor {best} at {ratios[best]:.2f}\n")

print(f"{'theta':>6}  {'selected':>8}  members")
for theta in (0.0, 0.005, 0.01, 0.02, 0.05, 0.1):
    decision = optimize(inst, SelectorConfig(theta=theta))
    members = sorted(decision.selected)
    shown = ", ".join(map(str, members[:12])) + (" ..." if len(members) > 12 else "")
    print(f"{theta:>6g}  {len(members):>8}  {shown}")

small = random_instance(8, np.random.default_rng(7))
decision = optimize(small, SelectorConfig(theta=0.0))
oracle, value = brute_force_select(small)
print(f"\nsanity check on an 8-neighbor instance: optimizer picked {sorted(decision.selected)},")
print(f"exhaustive search over all 255 subsets picked {sorted(oracle)} (value {value:.2f})")
