"""TOML config files and key=value overrides for experiment runs.

The file mirrors the module structure in sections; every key is optional
and falls back to the built-in defaults (the 20-node suburban setup).

    [experiment]
    num_nodes = 20
    rounds = 30
    scheme = "ocdfl"        # ocdfl | full | none
    theta = 0.02
    mu = 2.0
    alpha = 100.0
    seed = 0
    payload_bits = 87000

    [radio]
    p_tx_dbm = [10.0, 21.0]
    bandwidth_hz = [5e6, 20e6]
    antenna_gain_dbi = 0.0
    freq_hz = 1e9
    env_exp = 2.0
    noise_dbm_per_hz = -174.0
    d_max_m = 2000.0

    [arena]
    width_m = 5000.0
    height_m = 5000.0
    speed_mps = [5.0, 15.0]
    pause_rounds = 0
    dt_s = 60.0

    [train]
    learning_rate = 0.2
    local_epochs = 1
    batch_size = 32
    hidden_units = 64

    [data]
    source = "synthetic"    # synthetic | idx
    num_train = 4000
    num_test = 1000
    feature_dim = 32
    num_classes = 10
    class_separation = 3.0
    idx_images = ""
    idx_labels = ""

    [selector]
    steps = 300
    step_size = 0.5
    threshold = 0.5
    init_w = 1.0
    gain_loss_source = "test"    # test | local

Overrides use dotted section.key syntax, e.g. ``experiment.theta=0.05``.
"""

from __future__ import annotations

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .engine import ConfigError, ExperimentConfig

# section.key in the file -> ExperimentConfig field
_KEY_MAP = {
    "experiment.num_nodes": "num_nodes",
    "experiment.rounds": "rounds",
    "experiment.scheme": "scheme",
    "experiment.theta": "theta",
    "experiment.mu": "mu",
    "experiment.alpha": "alpha",
    "experiment.seed": "seed",
    "experiment.payload_bits": "payload_bits",
    "radio.p_tx_dbm": "p_tx_dbm",
    "radio.bandwidth_hz": "bandwidth_hz",
    "radio.antenna_gain_dbi": "antenna_gain_dbi",
    "radio.freq_hz": "freq_hz",
    "radio.env_exp": "env_exp",
    "radio.noise_dbm_per_hz": "noise_dbm_per_hz",
    "radio.d_max_m": "d_max_m",
    "arena.width_m": "arena_width_m",
    "arena.height_m": "arena_height_m",
    "arena.speed_mps": "speed_mps",
    "arena.pause_rounds": "pause_rounds",
    "arena.dt_s": "dt_s",
    "train.learning_rate": "learning_rate",
    "train.local_epochs": "local_epochs",
    "train.batch_size": "batch_size",
    "train.hidden_units": "hidden_units",
    "data.source": "data_source",
    "data.num_train": "num_train",
    "data.num_test": "num_test",
    "data.feature_dim": "feature_dim",
    "data.num_classes": "num_classes",
    "data.class_separation": "class_separation",
    "data.idx_images": "idx_images",
    "data.idx_labels": "idx_labels",
    "selector.steps": "selector_steps",
    "selector.step_size": "selector_step_size",
    "selector.threshold": "selector_threshold",
    "selector.init_w": "selector_init_w",
    "selector.gain_loss_source": "gain_loss_source",
}

_RANGE_FIELDS = {"p_tx_dbm", "bandwidth_hz", "speed_mps"}
_INT_FIELDS = {
    "num_nodes", "rounds", "seed", "payload_bits", "pause_rounds", "local_epochs",
    "batch_size", "hidden_units", "num_train", "num_test", "feature_dim",
    "num_classes", "selector_steps",
}
_STR_FIELDS = {"scheme", "data_source", "idx_images", "idx_labels", "gain_loss_source"}


def _coerce(field: str, value) -> object:
    if field in _RANGE_FIELDS:
        if not (isinstance(value, (list, tuple)) and len(value) == 2):
            raise ConfigError(f"{field} must be a [low, high] pair, got {value!r}")
        return (float(value[0]), float(value[1]))
    if field in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{field} must be an integer, got {value!r}")
        return value
    if field in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError(f"{field} must be a string, got {value!r}")
        if field.startswith("idx_") and value == "":
            return None  # empty path means "not configured"
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field} must be a number, got {value!r}")
    return float(value)


def load_config(path: str | None = None, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Defaults, overlaid with the file (if any), then with overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path, "rb") as f:
                doc = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}")
        for section, body in doc.items():
            if not isinstance(body, dict):
                raise ConfigError(f"{path}: top-level key {section!r} is not a section")
            for key, value in body.items():
                dotted = f"{section}.{key}"
                if dotted not in _KEY_MAP:
                    raise ConfigError(f"{path}: unknown config key {dotted!r}")
                setattr(cfg, _KEY_MAP[dotted], _coerce(_KEY_MAP[dotted], value))
    for dotted, value in (overrides or {}).items():
        if dotted not in _KEY_MAP:
            raise ConfigError(f"unknown config key {dotted!r}")
        field = _KEY_MAP[dotted]
        setattr(cfg, field, _coerce(field, value))
    cfg.validate()
    return cfg


def parse_override(text: str) -> tuple[str, object]:
    """Parse one 'section.key=value' override; values use TOML literals."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    dotted, raw = text.split("=", 1)
    dotted = dotted.strip()
    if dotted not in _KEY_MAP:
        raise ConfigError(f"unknown config key {dotted!r}")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()  # bare strings are allowed for convenience
    return dotted, value
