"""Everything a simulation needs besides the estimated parameters and its seed."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .dynamics import simulate
from .environment import BeaconSet, RoomConfig, place_beacons
from .observables import TrajectorySet
from .params import FixedParams, GlobalParams, SimConfig
from .summaries import summarize


@dataclass(frozen=True)
class Scenario:
    config: SimConfig
    room: RoomConfig
    beacons: BeaconSet
    fixed: FixedParams = field(default_factory=FixedParams)
    reassign: bool = False

    @classmethod
    def from_config(
        cls,
        config: SimConfig | None = None,
        room: RoomConfig | None = None,
        fixed: FixedParams | None = None,
        reassign: bool = False,
    ) -> "Scenario":
        """Build a scenario whose beacon layout is drawn from ``config.seed``."""
        config = config or SimConfig()
        room = room or RoomConfig()
        layout_rng = _rng.make_rng(_rng.derive_seed(config.seed, _rng.BEACONS))
        beacons = place_beacons(room, config.num_beacons, layout_rng)
        return cls(config, room, beacons, fixed or FixedParams(), reassign)

    def run(self, params: GlobalParams, seed: int) -> TrajectorySet:
        cfg = dataclasses.replace(self.config, seed=int(seed))
        return simulate(params, self.fixed, self.room, self.beacons, cfg, reassign=self.reassign)

    def summary(self, params, seed: int) -> np.ndarray:
        if not isinstance(params, GlobalParams):
            params = GlobalParams.from_array(params)
        return summarize(self.run(params, seed)).values
