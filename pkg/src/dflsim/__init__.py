"""dflsim: a deterministic desk-scale simulator of decentralized federated
learning over a sparse mobile wireless network, with energy-aware,
knowledge-gain-driven peer selection and the two reference policies
(no communication, full communication) it is compared against.
"""

__version__ = "0.1.0"

from .datagen import Dataset, DirichletSpec, Shard, load_idx, make_synthetic, partition_dirichlet
from .engine import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    RoundMetrics,
    init_experiment,
    run_experiment,
    run_round,
    write_manifest,
    write_metrics_csv,
)
from .gain import GainParams, GainValue, knowledge_gain, prop1_check, scale_gain
from .learner import (
    EvalResult,
    Layout,
    ModelParams,
    TrainConfig,
    evaluate,
    fed_average,
    init_model,
    load_model,
    local_update,
    loss_and_grad,
    save_model,
)
from .radio import (
    LinkBudget,
    RadioParams,
    channel_gain_db,
    data_rate,
    dbi_to_linear,
    dbm_to_watts,
    link_budget,
    received_power,
    scaled_energy,
    tx_energy,
    watts_to_dbm,
)
from .selector import (
    SelectionDecision,
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
from .topology import (
    Arena,
    NeighborGraph,
    WaypointState,
    build_graph,
    draw_positions,
    init_waypoints,
    pairwise_distances,
    step_mobility,
)
