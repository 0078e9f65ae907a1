"""Simulation-based inference for beacon-driven collective motion in an
immersive room.

Agents blend a drift-diffusion pull towards the nearest detected beacon
with Vicsek-style alignment to their neighbours. The package simulates the
model, compresses trajectories into summary statistics, estimates the four
global parameters (w, r, v, eta) with ABC, and scores parameter recovery.
"""

__version__ = "0.1.0"

from .environment import BeaconSet, NoBeaconError, RoomConfig, place_beacons
from .params import DEFAULT_PRIOR, FixedParams, GlobalParams, PriorSpec, SimConfig
from .observables import AugmentedSet, TrajectorySet, augment, neighbor_stats
from .dynamics import simulate
from .summaries import SUMMARY_NAMES, Standardizer, summarize
from .scenario import Scenario
from .inference import (
    DegenerateGeneration,
    PosteriorSamples,
    ReferenceTable,
    SMCSchedule,
    abc_rejection,
    abc_smc,
    build_reference_table,
)
from .diagnostics import RecoveryReport, run_recovery_study

__all__ = [
    "AugmentedSet", "BeaconSet", "DEFAULT_PRIOR", "DegenerateGeneration", "FixedParams",
    "GlobalParams", "NoBeaconError", "PosteriorSamples", "PriorSpec", "RecoveryReport",
    "ReferenceTable", "RoomConfig", "SMCSchedule", "SUMMARY_NAMES", "Scenario", "SimConfig",
    "Standardizer", "TrajectorySet", "abc_rejection", "abc_smc", "augment",
    "build_reference_table", "neighbor_stats", "place_beacons", "run_recovery_study",
    "simulate", "summarize",
]
