"""Round-based simulation loop tying everything together.

Each round: move nodes, rebuild the range graph, train every node
locally, beacon the post-training losses (treated as free metadata),
pick peers per the active scheme, charge transmit energy for every
(sender, selected receiver) pair, deliver models, aggregate at a barrier
in node-id order, then evaluate on the shared IID test set and emit
metrics. Everything is driven by spawned sub-streams of one seed, so a
config + seed pair reproduces byte-identical metrics.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .datagen import Dataset, DirichletSpec, Shard, load_idx, make_synthetic, partition_dirichlet
from .gain import GainParams, knowledge_gain
from .learner import (
    Layout,
    ModelParams,
    TrainConfig,
    evaluate,
    fed_average,
    init_model,
    local_update,
)
from .radio import RadioParams, dbi_to_linear, dbm_to_watts, scaled_energy, tx_energy
from .selector import SelectionInstance, SelectorConfig, baseline_policy, optimize
from .topology import Arena, WaypointState, build_graph, draw_positions, init_waypoints, pairwise_distances, step_mobility

log = logging.getLogger(__name__)

SCHEMES = ("ocdfl", "full", "none")

METRICS_HEADER = "round,node,scheme,loss,accuracy,tx_energy_j,delivered_gain,num_selected,num_received"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything one run needs. dB/dBm fields are config-boundary units;
    the engine converts them to linear once, at node construction."""

    # experiment
    num_nodes: int = 20
    rounds: int = 30
    scheme: str = "ocdfl"
    theta: float = 0.02
    mu: float = 2.0
    alpha: float = 100.0
    seed: int = 0
    payload_bits: int = 87_000
    # radio; power and bandwidth are per-node uniform draws over the ranges
    p_tx_dbm: tuple[float, float] = (10.0, 21.0)
    bandwidth_hz: tuple[float, float] = (5.0e6, 20.0e6)
    antenna_gain_dbi: float = 0.0
    freq_hz: float = 1.0e9
    env_exp: float = 2.0
    noise_dbm_per_hz: float = -174.0
    d_max_m: float = 2000.0
    # arena and per-round mobility
    arena_width_m: float = 5000.0
    arena_height_m: float = 5000.0
    speed_mps: tuple[float, float] = (5.0, 15.0)
    pause_rounds: int = 0
    dt_s: float = 60.0
    # local training
    learning_rate: float = 0.2
    local_epochs: int = 1
    batch_size: int = 32
    hidden_units: int = 64
    # data
    data_source: str = "synthetic"
    num_train: int = 4000
    num_test: int = 1000
    feature_dim: int = 32
    num_classes: int = 10
    class_separation: float = 3.0
    idx_images: str | None = None
    idx_labels: str | None = None
    # peer selection
    selector_steps: int = 300
    selector_step_size: float = 0.5
    selector_threshold: float = 0.5
    selector_init_w: float = 1.0
    gain_loss_source: str = "test"

    def validate(self) -> None:
        if self.num_nodes < 1:
            raise ConfigError(f"num_nodes must be >= 1, got {self.num_nodes}")
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.theta < 0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if self.mu <= 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.payload_bits < 1:
            raise ConfigError(f"payload_bits must be >= 1, got {self.payload_bits}")
        for name in ("p_tx_dbm", "bandwidth_hz", "speed_mps"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"{name} range is inverted: {lo} > {hi}")
        if self.data_source not in ("synthetic", "idx"):
            raise ConfigError(f"data_source must be synthetic or idx, got {self.data_source!r}")
        if self.data_source == "idx" and not (self.idx_images and self.idx_labels):
            raise ConfigError("data_source=idx requires idx_images and idx_labels paths")
        if self.gain_loss_source not in ("local", "test"):
            raise ConfigError(
                f"gain_loss_source must be local or test, got {self.gain_loss_source!r}"
            )
        if self.hidden_units < 0:
            raise ConfigError(f"hidden_units must be >= 0, got {self.hidden_units}")
        # the targeted constructors validate the rest (arena, radio, train, selector)

    def layout(self) -> Layout:
        if self.hidden_units == 0:
            return Layout((self.feature_dim, self.num_classes))
        return Layout((self.feature_dim, self.hidden_units, self.num_classes))


@dataclass
class NodeState:
    node_id: int
    radio: RadioParams
    model: ModelParams
    features: np.ndarray   # this node's shard, materialized
    labels: np.ndarray


@dataclass
class RoundMetrics:
    round: int
    loss: np.ndarray
    accuracy: np.ndarray
    tx_energy_j: np.ndarray
    delivered_gain: np.ndarray
    num_selected: np.ndarray
    num_received: np.ndarray
    # (sender, receiver, distance_m, energy_j) per actual transmission
    transmissions: list[tuple[int, int, float, float]] = field(default_factory=list)


@dataclass
class ExperimentState:
    cfg: ExperimentConfig
    arena: Arena
    positions: np.ndarray
    waypoints: WaypointState
    nodes: list[NodeState]
    shards: list[Shard]
    train_data: Dataset
    test_features: np.ndarray
    test_labels: np.ndarray
    train_cfg: TrainConfig
    gain_params: GainParams
    sel_cfg: SelectorConfig
    round_rng: np.random.Generator
    round_index: int = 0


@dataclass
class ExperimentResult:
    cfg: ExperimentConfig
    metrics: list[RoundMetrics]
    models: list[ModelParams]


def _load_datasets(cfg: ExperimentConfig, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Build (train, test); the test split is IID by construction."""
    wanted = cfg.num_train + cfg.num_test
    if cfg.data_source == "synthetic":
        full = make_synthetic(
            wanted, cfg.feature_dim, cfg.num_classes, rng, separation=cfg.class_separation
        )
    else:
        full = load_idx(cfg.idx_images, cfg.idx_labels, max_samples=wanted,
                        num_classes=cfg.num_classes)
        if len(full) < wanted:
            raise ConfigError(
                f"IDX pair holds {len(full)} samples, need num_train+num_test={wanted}"
            )
        full = full.subset(rng.permutation(len(full)))
    train = full.subset(np.arange(cfg.num_train))
    test = full.subset(np.arange(cfg.num_train, wanted))
    return train, test


def init_experiment(cfg: ExperimentConfig) -> ExperimentState:
    cfg.validate()
    data_seq, setup_seq, round_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    data_rng = np.random.default_rng(data_seq)
    setup_rng = np.random.default_rng(setup_seq)

    train, test = _load_datasets(cfg, data_rng)
    if cfg.data_source == "idx" and cfg.feature_dim != train.feature_dim:
        raise ConfigError(
            f"feature_dim {cfg.feature_dim} does not match IDX images ({train.feature_dim})"
        )
    shards = partition_dirichlet(
        train, DirichletSpec(cfg.alpha, cfg.num_nodes, cfg.num_classes), data_rng
    )

    arena = Arena(cfg.arena_width_m, cfg.arena_height_m)
    positions = draw_positions(cfg.num_nodes, arena, setup_rng)
    waypoints = init_waypoints(cfg.num_nodes, arena, cfg.speed_mps, setup_rng)

    layout = cfg.layout()
    if layout.serialized_bits != cfg.payload_bits:
        log.warning(
            "configured payload is %d bits but the model serializes to %d; "
            "energy accounting keeps the configured payload",
            cfg.payload_bits, layout.serialized_bits,
        )
    shared_init = init_model(layout, setup_rng)

    nodes = []
    for i in range(cfg.num_nodes):
        radio = RadioParams(
            p_tx=dbm_to_watts(setup_rng.uniform(*cfg.p_tx_dbm)),
            bandwidth=setup_rng.uniform(*cfg.bandwidth_hz),
            g_tx=dbi_to_linear(cfg.antenna_gain_dbi),
            g_rx=dbi_to_linear(cfg.antenna_gain_dbi),
            freq=cfg.freq_hz,
            env_exp=cfg.env_exp,
            noise_density=dbm_to_watts(cfg.noise_dbm_per_hz),
            d_max=cfg.d_max_m,
        )
        shard = shards[i]
        nodes.append(NodeState(
            node_id=i,
            radio=radio,
            model=shared_init.copy(),
            features=train.features[shard.indices],
            labels=train.labels[shard.indices],
        ))

    return ExperimentState(
        cfg=cfg,
        arena=arena,
        positions=positions,
        waypoints=waypoints,
        nodes=nodes,
        shards=shards,
        train_data=train,
        test_features=test.features,
        test_labels=test.labels,
        train_cfg=TrainConfig(cfg.learning_rate, cfg.local_epochs, cfg.batch_size),
        gain_params=GainParams(cfg.mu),
        sel_cfg=SelectorConfig(
            theta=cfg.theta,
            steps=cfg.selector_steps,
            step_size=cfg.selector_step_size,
            threshold=cfg.selector_threshold,
            init_w=cfg.selector_init_w,
        ),
        round_rng=np.random.default_rng(round_seq),
    )


def _select_peers(
    state: ExperimentState,
    sender: int,
    neighbor_ids: tuple[int, ...],
    losses: np.ndarray,
    distances: np.ndarray,
) -> tuple[list[int], float]:
    """Peer ids the sender transmits to this round, plus raw gain delivered."""
    cfg = state.cfg
    if cfg.scheme == "none" or not neighbor_ids:
        return [], 0.0

    raw_gains, scaled_gains, scaled_costs = [], [], []
    node = state.nodes[sender]
    for k in neighbor_ids:
        gv = knowledge_gain(losses[sender], losses[k], state.gain_params)
        raw_gains.append(gv.raw)
        scaled_gains.append(gv.scaled)
        scaled_costs.append(scaled_energy(node.radio, distances[sender, k], cfg.payload_bits))
    inst = SelectionInstance(list(neighbor_ids), np.array(scaled_gains), np.array(scaled_costs))

    if cfg.scheme == "full":
        decision = baseline_policy("full", inst)
    else:
        decision = optimize(inst, state.sel_cfg)

    raw_by_id = dict(zip(neighbor_ids, raw_gains))
    return decision.selected, sum(raw_by_id[k] for k in decision.selected)


def run_round(state: ExperimentState) -> RoundMetrics:
    cfg = state.cfg
    n = cfg.num_nodes
    state.round_index += 1

    step_mobility(
        state.positions, state.waypoints, state.arena, cfg.dt_s,
        state.round_rng, cfg.speed_mps, cfg.pause_rounds,
    )
    graph = build_graph(state.positions, cfg.d_max_m)
    distances = pairwise_distances(state.positions)

    # local training; every node then beacons its fresh loss for free
    for node in state.nodes:
        node.model = local_update(
            node.model, node.features, node.labels, state.train_cfg, state.round_rng
        )
    if cfg.gain_loss_source == "test":
        losses = np.array([
            evaluate(node.model, state.test_features, state.test_labels).loss
            for node in state.nodes
        ])
    else:
        losses = np.array([
            evaluate(node.model, node.features, node.labels).loss for node in state.nodes
        ])

    mailboxes: list[list[tuple[int, ModelParams]]] = [[] for _ in range(n)]
    tx_energy_j = np.zeros(n)
    delivered_gain = np.zeros(n)
    num_selected = np.zeros(n, dtype=np.int64)
    num_received = np.zeros(n, dtype=np.int64)
    transmissions: list[tuple[int, int, float, float]] = []

    for i in range(n):
        selected, raw_total = _select_peers(state, i, graph.neighbors(i), losses, distances)
        num_selected[i] = len(selected)
        delivered_gain[i] = raw_total
        for k in selected:
            energy = tx_energy(state.nodes[i].radio, distances[i, k], cfg.payload_bits)
            tx_energy_j[i] += energy
            num_received[k] += 1
            mailboxes[k].append((i, state.nodes[i].model))
            transmissions.append((i, k, float(distances[i, k]), energy))

    # aggregation barrier: everyone averages the same round's trained models
    aggregated = [
        fed_average(state.nodes[i].model, [m for _, m in mailboxes[i]]) for i in range(n)
    ]
    for node, model in zip(state.nodes, aggregated):
        node.model = model

    test_evals = [
        evaluate(node.model, state.test_features, state.test_labels) for node in state.nodes
    ]
    return RoundMetrics(
        round=state.round_index,
        loss=np.array([ev.loss for ev in test_evals]),
        accuracy=np.array([ev.accuracy for ev in test_evals]),
        tx_energy_j=tx_energy_j,
        delivered_gain=delivered_gain,
        num_selected=num_selected,
        num_received=num_received,
        transmissions=transmissions,
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    state = init_experiment(cfg)
    metrics = [run_round(state) for _ in range(cfg.rounds)]
    return ExperimentResult(cfg=cfg, metrics=metrics, models=[nd.model for nd in state.nodes])


def write_metrics_csv(result: ExperimentResult, path: str) -> None:
    """The stable CSV surface other tools consume; floats use repr so the
    bytes are an exact function of the computed values."""
    with open(path, "w", newline="") as f:
        f.write(METRICS_HEADER + "\n")
        for rm in result.metrics:
            for i in range(len(rm.loss)):
                f.write(
                    f"{rm.round},{i},{result.cfg.scheme},"
                    f"{float(rm.loss[i])!r},{float(rm.accuracy[i])!r},"
                    f"{float(rm.tx_energy_j[i])!r},{float(rm.delivered_gain[i])!r},"
                    f"{int(rm.num_selected[i])},{int(rm.num_received[i])}\n"
                )


def write_manifest(path: str, cfg: ExperimentConfig, command: str, extra: dict | None = None) -> None:
    """Run provenance: enough to reproduce the metrics bit for bit."""
    doc = {
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": asdict(cfg),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def total_energy(result: ExperimentResult) -> float:
    return float(sum(rm.tx_energy_j.sum() for rm in result.metrics))


def mean_final_accuracy(result: ExperimentResult) -> float:
    return float(result.metrics[-1].accuracy.mean())


def mean_selected(result: ExperimentResult) -> float:
    counts = np.concatenate([rm.num_selected for rm in result.metrics])
    return float(counts.mean())


def median_selected(result: ExperimentResult) -> float:
    counts = np.concatenate([rm.num_selected for rm in result.metrics])
    return float(np.median(counts))
