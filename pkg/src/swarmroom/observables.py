"""Observable time series (positions, headings, neighbour counts and mean
neighbour distances) and their finite-difference augmentation channels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import neighbor_stats_kernel
from .environment import BeaconSet, RoomConfig
from .params import SimConfig


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    return theta - 2 * np.pi * np.ceil((theta - np.pi) / (2 * np.pi))


@dataclass(eq=False)
class TrajectorySet:
    """Recorded observables of one simulation.

    Entry ``t`` of every series is the state after update ``t + 1``.
    ``assigned`` holds each agent's beacon index chosen at onset (-1 if none).
    Mean neighbour distance is 0 for agents without neighbours.
    """

    X: np.ndarray  # (A, T, 2)
    Theta: np.ndarray  # (A, T)
    Ncount: np.ndarray  # (A, T) int32
    D: np.ndarray  # (A, T)
    config: SimConfig
    room: RoomConfig = field(default_factory=RoomConfig)
    beacons: BeaconSet = field(default_factory=lambda: BeaconSet(np.zeros((0, 2))))
    assigned: np.ndarray | None = None

    def __post_init__(self):
        A, T = self.Theta.shape
        if self.X.shape != (A, T, 2) or self.Ncount.shape != (A, T) or self.D.shape != (A, T):
            raise ValueError("inconsistent observable array shapes")
        if self.assigned is None:
            self.assigned = np.full(A, -1, dtype=np.int32)

    @property
    def num_agents(self) -> int:
        return self.Theta.shape[0]

    @property
    def num_steps(self) -> int:
        return self.Theta.shape[1]

    @property
    def dt(self) -> float:
        return self.config.dt

    def equals(self, other: "TrajectorySet") -> bool:
        """Bitwise equality of all arrays and metadata."""
        return (
            self.config == other.config
            and self.room == other.room
            and self.beacons == other.beacons
            and np.array_equal(self.assigned, other.assigned)
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("X", "Theta", "Ncount", "D")
            )
        )


@dataclass(eq=False)
class AugmentedSet:
    traj: TrajectorySet
    angular_velocity: np.ndarray  # (A, T-1), rad/s
    neighbor_delta: np.ndarray  # (A, T-1)


def neighbor_stats(positions, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Neighbour count and mean neighbour distance per agent.

    Neighbours are other agents at distance strictly below ``r``.

    Examples
    --------
    >>> counts, dists = neighbor_stats([[0, 0], [1, 0], [0, 3]], r=5.0)
    >>> counts.tolist(), float(dists[0])
    ([2, 2, 2], 2.0)
    """
    if not r > 0:
        raise ValueError("r must be > 0")
    p = np.ascontiguousarray(np.asarray(positions, dtype=np.float64).reshape(-1, 2))
    return neighbor_stats_kernel(p[:, 0].copy(), p[:, 1].copy(), float(r))


def augment(traj: TrajectorySet) -> AugmentedSet:
    if traj.num_steps < 2:
        raise ValueError("augmentation needs at least two recorded steps")
    dtheta = wrap_angle(np.diff(traj.Theta, axis=1))
    return AugmentedSet(
        traj=traj,
        angular_velocity=dtheta / traj.dt,
        neighbor_delta=np.diff(traj.Ncount.astype(np.int64), axis=1),
    )
