"""How the Dirichlet concentration steers per-node class mixtures: alpha
near 100 gives everyone roughly the global distribution (the IID setting),
alpha near 1 gives each node a heavily skewed private mixture.

Run with: python demos/03_dirichlet_shards.py
"""

import numpy as np

from dflsim.datagen import DirichletSpec, class_proportions, make_synthetic, partition_dirichlet

rng = np.random.default_rng(3)
data = make_synthetic(4000, 8, 10, rng)

for alpha in (100.0, 10.0, 1.0, 0.3):
    shards = partition_dirichlet(data, DirichletSpec(alpha, 20, 10), rng)
    shares = np.stack([class_proportions(data, s) for s in shards])
    max_share = shares.max(axis=1)
    tv = 0.5 * np.abs(shares - 0.1).sum(axis=1)
    print(f"alpha = {alpha:<5g}  largest class share per shard: mean {max_share.mean():.2f} "
          f"(uniform would be 0.10 + noise); distance from uniform: {tv.mean():.2f}")

print()
alpha = 1.0
shards = partition_dirichlet(data, DirichletSpec(alpha, 20, 10), rng)
print(f"three example shards at alpha={alpha} (rows sum to 200 samples):")
for shard in shards[:3]:
    counts = np.bincount(data.labels[shard.indices], minlength=10)
    print(f"  node {shard.owner}: {counts.tolist()}")
