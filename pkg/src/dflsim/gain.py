"""Knowledge gain: how much a neighbor stands to benefit from receiving a
model, measured as the positive part of the loss difference and squashed
into [0, 1) by an exponential scale.

Also provides executable checks for the three averaging inequalities that
justify the measure: averaging with a better model never ends up farther
from the optimum than the worse model was, and moves away from the better
model by at most half the models' separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GainParams:
    """mu sets the slope of the exponential squashing."""

    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")


@dataclass(frozen=True)
class GainValue:
    raw: float      # max(receiver loss - sender loss, 0)
    scaled: float   # 1 - exp(-mu * raw), in [0, 1)


def scale_gain(raw: float, mu: float) -> float:
    # -expm1 keeps precision for tiny gains, where exp(-x) ~ 1
    return -math.expm1(-mu * raw)


def knowledge_gain(l_sender: float, l_receiver: float, params: GainParams) -> GainValue:
    """Gain the receiver gets from the sender's model.

    Zero whenever the receiver is already at least as good; a model never
    hurts by this measure, it just fails to help.
    """
    for name, value in (("l_sender", l_sender), ("l_receiver", l_receiver)):
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"{name} must be a finite nonnegative loss, got {value}")
    raw = max(l_receiver - l_sender, 0.0)
    return GainValue(raw=raw, scaled=scale_gain(raw, params.mu))


def prop1_check(
    w_star: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
    rel_tol: float = 1e-9,
) -> tuple[bool, bool, bool]:
    """Evaluate the three averaging inequalities for one vector triple.

    w1 must be at least as close to w_star as w2 is (callers sort by
    distance first); with w_agg = (w1 + w2) / 2 the checks are
      (a) |w* - w_agg| <= |w* - w2|
      (b) |w* - w1| - |w2 - w1|/2 <= |w* - w_agg|
      (c) |w* - w_agg| <= |w* - w1| + |w2 - w1|/2
    each allowed `rel_tol` of relative slack for float round-off. All
    three are theorems, so any False signals a bug, not a property of the
    inputs.
    """
    w_star = np.asarray(w_star, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if not (w_star.shape == w1.shape == w2.shape):
        raise ValueError(
            f"shape mismatch: {w_star.shape}, {w1.shape}, {w2.shape}"
        )

    d1 = float(np.linalg.norm(w_star - w1))
    d2 = float(np.linalg.norm(w_star - w2))
    if d1 > d2:
        raise ValueError(
            f"ordering violated: |w*-w1|={d1} > |w*-w2|={d2}; sort inputs by distance"
        )
    d_agg = float(np.linalg.norm(w_star - (w1 + w2) / 2.0))
    half_gap = 0.5 * float(np.linalg.norm(w2 - w1))

    slack = rel_tol * max(1.0, d1, d2, d_agg, half_gap)
    return (
        d_agg <= d2 + slack,
        d1 - half_gap <= d_agg + slack,
        d_agg <= d1 + half_gap + slack,
    )
