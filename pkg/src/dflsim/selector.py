"""Per-node peer selection: maximize the gain-to-energy ratio of the
chosen neighbor subset, relaxed through sigmoid memberships and solved by
gradient ascent, with a norm regularizer that widens the selection.

The relaxed objective for memberships beta_k = sigmoid(w_k) is

    sum_k beta_k * gain_k / sum_k beta_k * energy_k  +  theta * ||w||_2

The denominator never vanishes (sigmoids and scaled energies are strictly
positive), so the ratio is always well defined. After the ascent, betas at
or above the certainty threshold are selected; an empty cut falls back to
the single highest beta. A node whose neighbors all show zero gain skips
transmission entirely this round.

The norm term is unbounded, so the ascent never converges to a finite
point; what it does is pick the escape orthant, i.e. the sign pattern of
w, and that pattern is the selection. Two knobs make this robust: steps
are steepest-ascent (unit gradient), so the pace is independent of the
gain magnitudes, which shrink by orders of magnitude as the network
approaches consensus; and the start is mildly optimistic (init_w > 0), so
the regularizer widens the selection instead of merely entrenching the
first ratio signs. With theta = 0 the ratio term alone drives every
membership except the best gain-per-energy neighbor below the threshold.

`brute_force_select` enumerates binarized subsets and is the independent
oracle the optimizer is validated against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass
class SelectionInstance:
    """One node's view of its neighbors for one round."""

    neighbor_ids: list[int]
    gains: np.ndarray     # scaled knowledge gain per neighbor, in [0, 1)
    energies: np.ndarray  # scaled transmit energy per neighbor, in (0, 1]

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        k = len(self.neighbor_ids)
        if k < 1:
            raise ValueError("instance needs at least one neighbor")
        if len(self.gains) != k or len(self.energies) != k:
            raise ValueError(
                f"length mismatch: {k} ids, {len(self.gains)} gains, "
                f"{len(self.energies)} energies"
            )
        if np.any(self.energies <= 0):
            raise ValueError("scaled energies must be strictly positive")
        if np.any(self.gains < 0):
            raise ValueError("scaled gains must be nonnegative")

    def __len__(self) -> int:
        return len(self.neighbor_ids)


@dataclass(frozen=True)
class SelectorConfig:
    theta: float = 0.02       # regularization strength; 0 collapses to one peer
    steps: int = 300
    step_size: float = 0.5
    threshold: float = 0.5    # certainty cutoff on beta
    init_w: float = 1.0       # optimistic start; see module docstring

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass
class SelectionDecision:
    betas: np.ndarray        # sigmoid memberships, one per neighbor
    selected: list[int]      # chosen neighbor ids (subset of the instance ids)
    objective_value: float


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def objective(w: np.ndarray, inst: SelectionInstance, theta: float) -> float:
    """Regularized gain-to-energy ratio of the relaxed memberships."""
    w = np.asarray(w, dtype=float)
    if len(w) != len(inst):
        raise ValueError(f"w has {len(w)} entries for {len(inst)} neighbors")
    beta = _sigmoid(w)
    ratio = float(beta @ inst.gains) / float(beta @ inst.energies)
    return ratio + theta * float(np.linalg.norm(w))


def objective_grad(w: np.ndarray, inst: SelectionInstance, theta: float) -> np.ndarray:
    """Analytic gradient of `objective`; the norm's subgradient at w = 0
    is taken as 0."""
    w = np.asarray(w, dtype=float)
    beta = _sigmoid(w)
    slope = beta * (1.0 - beta)
    num = float(beta @ inst.gains)
    den = float(beta @ inst.energies)
    grad = slope * (inst.gains * den - inst.energies * num) / den**2
    norm_w = float(np.linalg.norm(w))
    if theta > 0 and norm_w > 0:
        grad = grad + theta * w / norm_w
    return grad


def optimize(
    inst: SelectionInstance,
    cfg: SelectorConfig,
    rng: np.random.Generator | None = None,
) -> SelectionDecision:
    """Gradient-ascend the relaxed objective, then threshold memberships.

    Deterministic for a given instance and config; `rng` is accepted for
    interface parity with the other per-round operations but the ascent
    draws nothing. When every neighbor's gain is zero the objective cannot
    rank neighbors, so the node keeps its model to itself (empty
    selection). Otherwise the decision always names at least one peer.
    """
    k = len(inst)
    w0 = np.full(k, cfg.init_w, dtype=float)
    if not np.any(inst.gains > 0):
        return SelectionDecision(
            betas=_sigmoid(w0), selected=[], objective_value=objective(w0, inst, cfg.theta)
        )

    # the ascent runs on gains rescaled to unit max: the ratio term's
    # maximizers are invariant to a common gain factor, so theta=0 behavior
    # is untouched, and at theta>0 the regularization trade-off keeps its
    # meaning even as loss disparities (and with them every gain) shrink
    # toward zero near consensus; steps are steepest-ascent (unit gradient)
    # so the pace is scale-free too
    work = SelectionInstance(inst.neighbor_ids, inst.gains / inst.gains.max(), inst.energies)
    w = w0
    for _ in range(cfg.steps):
        grad = objective_grad(w, work, cfg.theta)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        w = w + cfg.step_size * grad / norm
    betas = _sigmoid(w)

    chosen = np.flatnonzero(betas >= cfg.threshold)
    if len(chosen) == 0:
        chosen = np.array([int(np.argmax(betas))])
    return SelectionDecision(
        betas=betas,
        selected=[inst.neighbor_ids[i] for i in chosen],
        objective_value=objective(w, inst, cfg.theta),
    )


def baseline_policy(kind: str, inst: SelectionInstance) -> SelectionDecision:
    """The two reference policies: talk to nobody, or to every neighbor."""
    if kind == "none":
        selected = []
    elif kind == "full":
        selected = list(inst.neighbor_ids)
    else:
        raise ValueError(f"unknown baseline policy {kind!r}")
    # baselines never inspect memberships; report the undecided midpoint
    return SelectionDecision(
        betas=np.full(len(inst), 0.5), selected=selected, objective_value=float("nan")
    )


def brute_force_select(inst: SelectionInstance, max_neighbors: int = 20) -> tuple[list[int], float]:
    """Best nonempty binarized subset by exhaustive enumeration.

    Maximizes sum(gains)/sum(energies) over all 2^K - 1 subsets. This is
    the unregularized reference the relaxed optimizer is checked against;
    it is intentionally a different algorithm.
    """
    k = len(inst)
    if k > max_neighbors:
        raise ValueError(f"refusing to enumerate 2^{k} subsets (limit {max_neighbors})")
    best_value = -np.inf
    best: tuple[int, ...] = ()
    for size in range(1, k + 1):
        for combo in itertools.combinations(range(k), size):
            idx = list(combo)
            value = inst.gains[idx].sum() / inst.energies[idx].sum()
            if value > best_value:
                best_value = value
                best = combo
    return [inst.neighbor_ids[i] for i in best], float(best_value)


def dump_instance(inst: SelectionInstance, path: str) -> None:
    """Text dump, one neighbor per line: id, scaled gain, scaled energy."""
    with open(path, "w") as f:
        f.write("# id gain energy\n")
        for nid, g, e in zip(inst.neighbor_ids, inst.gains, inst.energies):
            f.write(f"{nid} {float(g)!r} {float(e)!r}\n")


def load_instance(path: str) -> SelectionInstance:
    ids, gains, energies = [], [], []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'id gain energy', got {line!r}")
            ids.append(int(parts[0]))
            gains.append(float(parts[1]))
            energies.append(float(parts[2]))
    return SelectionInstance(ids, np.array(gains), np.array(energies))


def random_instance(
    num_neighbors: int, rng: np.random.Generator
) -> SelectionInstance:
    """Uniform(0,1) gains and energies, the draw used for selection-rate
    studies; energies keep a small floor to respect their open interval."""
    gains = rng.uniform(0.0, 1.0, size=num_neighbors)
    energies = rng.uniform(1e-6, 1.0, size=num_neighbors)
    return SelectionInstance(list(range(num_neighbors)), gains, energies)
