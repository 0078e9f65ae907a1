"""Hand-crafted summary statistics used as the ABC data compression.

Each statistic targets part of the parameter vector: speed statistics carry
``v``; polarization level, variability and angular-velocity statistics carry
``eta`` and ``w``; neighbour counts and distances carry ``r``; beacon
distance and wall contact carry ``w`` and ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import AugmentedSet, TrajectorySet, augment

SUMMARY_NAMES = (
    "polarization_mean",
    "polarization_var",
    "speed_mean",
    "neighbors_mean",
    "neighbors_var",
    "neighbor_dist_mean",
    "neighbor_dist_var",
    "angvel_absmean",
    "angvel_var",
    "neighbor_delta_absmean",
    "polarization_acf1",
    "polarization_acf10",
    "beacon_dist_mean",
    "boundary_fraction",
)
NUM_SUMMARIES = len(SUMMARY_NAMES)

# MAD/std below this is treated as zero spread
SCALE_FLOOR = 1e-12


@dataclass(frozen=True)
class SummaryVector:
    values: np.ndarray
    names: tuple[str, ...] = SUMMARY_NAMES

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (len(self.names),):
            raise ValueError(f"expected {len(self.names)} summary entries, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict[str, float]:
        return {k: float(x) for k, x in zip(self.names, self.values)}

    def __eq__(self, other):
        return (
            isinstance(other, SummaryVector)
            and self.names == other.names
            and np.array_equal(self.values, other.values)
        )


def polarization(headings) -> float:
    """Vicsek order parameter: length of the mean unit heading vector."""
    h = np.asarray(headings, dtype=np.float64)
    if h.size == 0:
        raise ValueError("polarization of an empty set of headings is undefined")
    return float(np.hypot(np.mean(np.cos(h)), np.mean(np.sin(h))))


def _polarization_series(theta: np.ndarray) -> np.ndarray:
    return np.hypot(np.cos(theta).mean(axis=0), np.sin(theta).mean(axis=0))


def _autocorr(x: np.ndarray, lag: int) -> float:
    # 0 for constant or too-short series
    if x.size <= lag + 1:
        return 0.0
    d = x - x.mean()
    denom = np.dot(d, d)
    if denom <= SCALE_FLOOR * x.size:
        return 0.0
    return float(np.dot(d[:-lag], d[lag:]) / denom)


def summarize(data: AugmentedSet | TrajectorySet) -> SummaryVector:
    """Compress a trajectory into the fixed 14-entry statistic vector."""
    aug = data if isinstance(data, AugmentedSet) else augment(data)
    tr = aug.traj
    pol = _polarization_series(tr.Theta)

    step = np.diff(tr.X, axis=1)
    speed = np.hypot(step[..., 0], step[..., 1]) / tr.dt

    n = tr.Ncount
    present = n > 0
    d = tr.D[present]
    d_mean = float(d.mean()) if d.size else 0.0
    d_var = float(d.var()) if d.size else 0.0

    has_target = tr.assigned >= 0
    if has_target.any():
        targets = tr.beacons.positions[tr.assigned[has_target]]
        rel = tr.X[has_target] - targets[:, None, :]
        beacon_dist = float(np.hypot(rel[..., 0], rel[..., 1]).mean())
    else:
        beacon_dist = 0.0

    hw, hh = tr.room.width / 2, tr.room.height / 2
    on_wall = (np.abs(tr.X[..., 0]) >= hw) | (np.abs(tr.X[..., 1]) >= hh)
    boundary = float(on_wall.any(axis=0).mean())

    av = aug.angular_velocity
    values = [
        pol.mean(),
        pol.var(),
        speed.mean(axis=0).mean(),
        n.mean(),
        n.var(),
        d_mean,
        d_var,
        np.abs(av).mean(),
        av.var(),
        np.abs(aug.neighbor_delta).mean(),
        _autocorr(pol, 1),
        _autocorr(pol, 10),
        beacon_dist,
        boundary,
    ]
    return SummaryVector(np.array(values, dtype=np.float64))


@dataclass(frozen=True)
class Standardizer:
    """Per-entry affine transform ``(x - location) / scale``."""

    location: np.ndarray
    scale: np.ndarray

    def __call__(self, x) -> np.ndarray:
        if isinstance(x, SummaryVector):
            x = x.values
        return (np.asarray(x, dtype=np.float64) - self.location) / self.scale

    @classmethod
    def fit(cls, batch) -> "Standardizer":
        """Robust location/scale: batch median and MAD.

        Entries whose MAD vanishes while the entry still varies (e.g. a
        statistic that sits at a bound for most of the batch) fall back to the
        standard deviation; a constant entry keeps the floored scale.
        """
        x = _as_matrix(batch)
        if x.shape[0] < 2:
            raise ValueError("standardization needs a batch of at least two vectors")
        loc = np.median(x, axis=0)
        scale = np.median(np.abs(x - loc), axis=0)
        weak = scale <= SCALE_FLOOR
        if weak.any():
            scale = np.where(weak, x.std(axis=0), scale)
        return cls(loc, np.maximum(scale, SCALE_FLOOR))


def _as_matrix(batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        return np.atleast_2d(batch).astype(np.float64)
    return np.array([b.values if isinstance(b, SummaryVector) else b for b in batch], dtype=np.float64)


def standardize(batch) -> tuple[np.ndarray, Standardizer]:
    """Standardize a batch of summary vectors; returns the matrix and the
    transform for standardizing further vectors the same way."""
    tf = Standardizer.fit(batch)
    return tf(_as_matrix(batch)), tf
