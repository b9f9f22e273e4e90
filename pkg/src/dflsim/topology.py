"""Node placement on a bounded rectangle, random-waypoint motion, and the
range-limited neighbor graph derived from current positions.

Positions are float arrays of shape (n, 2); every operation is pure given
an explicit numpy Generator, so identical seeds replay identical
trajectories bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Arena:
    """Bounded rectangular surface the nodes live on."""

    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"arena sides must be positive, got {self.width}x{self.height}")

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))


@dataclass
class WaypointState:
    """Per-node waypoint bundle, vectorized over nodes.

    targets : (n, 2) current destination of each node
    speeds  : (n,)   travel speed in m/s, drawn per leg
    pause   : (n,)   rounds left to wait before moving again
    """

    targets: np.ndarray
    speeds: np.ndarray
    pause: np.ndarray

    def __post_init__(self):
        if np.any(self.pause < 0):
            raise ValueError("pause counters must be >= 0")


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric, irreflexive adjacency over node ids 0..n-1."""

    adjacency: tuple[tuple[int, ...], ...]

    @property
    def num_nodes(self) -> int:
        return len(self.adjacency)

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self.adjacency[node]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]


def draw_positions(n: int, arena: Arena, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions inside the arena, shape (n, 2)."""
    pts = rng.uniform(size=(n, 2))
    pts[:, 0] *= arena.width
    pts[:, 1] *= arena.height
    return pts


def init_waypoints(
    n: int,
    arena: Arena,
    speed_range: tuple[float, float],
    rng: np.random.Generator,
) -> WaypointState:
    lo, hi = speed_range
    if not (0 < lo <= hi):
        raise ValueError(f"need 0 < speed_min <= speed_max, got {speed_range}")
    return WaypointState(
        targets=draw_positions(n, arena, rng),
        speeds=rng.uniform(lo, hi, size=n),
        pause=np.zeros(n, dtype=np.int64),
    )


def step_mobility(
    positions: np.ndarray,
    waypoints: WaypointState,
    arena: Arena,
    dt: float,
    rng: np.random.Generator,
    speed_range: tuple[float, float],
    pause_rounds: int = 0,
) -> None:
    """Advance every node toward its waypoint by speed*dt, in place.

    A node that would reach its waypoint stops exactly there (leftover
    travel time is dropped), waits out `pause_rounds` calls, then gets a
    fresh uniform waypoint and speed. A node already sitting on its
    waypoint redraws without moving this call. Positions stay inside the
    arena because every leg connects two interior points.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")

    paused = waypoints.pause > 0
    waypoints.pause[paused] -= 1

    delta = waypoints.targets - positions
    dist = np.hypot(delta[:, 0], delta[:, 1])
    travel = waypoints.speeds * dt
    arrived = ~paused & (travel >= dist)
    moving = ~paused & ~arrived

    if np.any(moving):
        frac = travel[moving] / dist[moving]
        positions[moving] += delta[moving] * frac[:, None]
    if np.any(arrived):
        positions[arrived] = waypoints.targets[arrived]
        k = int(arrived.sum())
        waypoints.targets[arrived] = draw_positions(k, arena, rng)
        waypoints.speeds[arrived] = rng.uniform(speed_range[0], speed_range[1], size=k)
        waypoints.pause[arrived] = pause_rounds


def build_graph(positions: np.ndarray, d_max: float) -> NeighborGraph:
    """Edge (i, j) present iff the Euclidean distance is <= d_max, i != j."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) < 1:
        raise ValueError(f"positions must be a nonempty (n, 2) array, got {pos.shape}")
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    within = dist <= d_max
    np.fill_diagonal(within, False)
    return NeighborGraph(
        tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in within)
    )


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])
