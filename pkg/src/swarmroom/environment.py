"""Room geometry, beacon placement, beacon detection and wall confinement.

All coordinates are room-centred: the room is the axis-aligned rectangle
``[-width/2, width/2] x [-height/2, height/2]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


class NoBeaconError(LookupError):
    """Raised when no beacon is inside the room's detection range."""


@dataclass(frozen=True)
class RoomConfig:
    width: float = 10.0
    height: float = 10.0
    detection_range: float = 20.0
    world_position: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("room width and height must be > 0")
        if not self.detection_range > max(self.width, self.height) / 2:
            raise ValueError(
                "detection_range must exceed max(width, height)/2 so beacons fit outside the room"
            )

    @property
    def half_extent(self) -> np.ndarray:
        return np.array([self.width / 2, self.height / 2])

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        hw, hh = self.half_extent
        return (np.abs(p[:, 0]) <= hw) & (np.abs(p[:, 1]) <= hh)


@dataclass(frozen=True)
class BeaconSet:
    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return self.positions.shape[0]

    def __eq__(self, other):
        return isinstance(other, BeaconSet) and np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "x", "y"])
        for i, (x, y) in enumerate(self.positions):
            writer.writerow([i, repr(float(x)), repr(float(y))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BeaconSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        rows.sort(key=lambda row: int(row["index"]))
        return cls(np.array([[float(row["x"]), float(row["y"])] for row in rows]).reshape(-1, 2))


def place_beacons(room: RoomConfig, count: int, rng: np.random.Generator) -> BeaconSet:
    """Sample ``count`` beacons uniformly from the region outside the room
    rectangle and strictly inside the detection disc (rejection sampling)."""
    if count < 1:
        raise ValueError("need at least one beacon")
    R = room.detection_range
    hw, hh = room.half_extent
    accepted: list[np.ndarray] = []
    n_found = 0
    for _ in range(10_000):
        cand = rng.uniform(-R, R, size=(max(4 * count, 16), 2))
        inside_disc = np.hypot(cand[:, 0], cand[:, 1]) < R
        outside_room = (np.abs(cand[:, 0]) > hw) | (np.abs(cand[:, 1]) > hh)
        keep = cand[inside_disc & outside_room]
        accepted.append(keep)
        n_found += len(keep)
        if n_found >= count:
            break
    else:
        raise RuntimeError("beacon placement region has (numerically) zero area")
    return BeaconSet(np.concatenate(accepted)[:count])


def detect_beacons(beacons: BeaconSet, room: RoomConfig) -> np.ndarray:
    """Indices of beacons strictly inside the detection range of the room centre."""
    d = np.hypot(beacons.positions[:, 0], beacons.positions[:, 1])
    return np.flatnonzero(d < room.detection_range)


def nearest_beacon(agent_pos, beacons: BeaconSet, detected) -> int:
    """Index of the closest detected beacon; ties go to the lowest index."""
    detected = np.sort(np.asarray(detected, dtype=np.intp))
    if detected.size == 0:
        raise NoBeaconError("no beacon in range")
    rel = beacons.positions[detected] - np.asarray(agent_pos, dtype=np.float64)
    return int(detected[np.argmin(np.hypot(rel[:, 0], rel[:, 1]))])


def confine(pos, room: RoomConfig) -> np.ndarray:
    """Clamp positions onto the room rectangle (agents slide along walls)."""
    hw, hh = room.half_extent
    p = np.array(pos, dtype=np.float64)
    p[..., 0] = np.clip(p[..., 0], -hw, hw)
    p[..., 1] = np.clip(p[..., 1], -hh, hh)
    return p
