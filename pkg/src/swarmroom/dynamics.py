"""Agent dynamics: beacon-driven drift diffusion, Vicsek alignment, their
weighted modulation and the time-stepping loop.

One step for agent ``a`` with heading ``th`` at position ``x``:

* external candidate heading relaxes toward the beacon bearing,
  ``th_b = wrap(th + (wrap(bearing - th) + phi) dt)``, ``phi ~ U(-kappa, kappa)``
* external displacement is an Euler-Maruyama step
  ``v (cos th_b, sin th_b) dt + sigma sqrt(dt) z``
* internal candidate heading is the circular mean of the agent's and its
  neighbours' headings plus ``N(0, eta)`` noise; internal displacement is
  ``v (cos th_n, sin th_n) dt``
* headings blend along shortest arcs and displacements blend linearly with
  weight ``w``; the resulting position is clamped to the room.

All agents update synchronously from the pre-step state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .environment import BeaconSet, RoomConfig, confine, detect_beacons, nearest_beacon
from .observables import TrajectorySet
from .params import FixedParams, GlobalParams, SimConfig
from .rng import make_rng


@dataclass(eq=False)
class WorldState:
    positions: np.ndarray  # (A, 2)
    headings: np.ndarray  # (A,)
    assigned_beacon: np.ndarray  # (A,), -1 = none

    def copy(self) -> "WorldState":
        return WorldState(self.positions.copy(), self.headings.copy(), self.assigned_beacon.copy())


def _wrap(theta: float) -> float:
    if abs(theta) > 8 * math.pi:
        theta -= 2 * math.pi * math.ceil((theta - math.pi) / (2 * math.pi))
    while theta > math.pi:
        theta -= 2 * math.pi
    while theta <= -math.pi:
        theta += 2 * math.pi
    return theta


def beacon_bearing(agent_pos, beacon_pos) -> float:
    """Bearing from agent to beacon in (-pi, pi]; 0 for coincident points."""
    dx = float(beacon_pos[0]) - float(agent_pos[0])
    dy = float(beacon_pos[1]) - float(agent_pos[1])
    return math.atan2(dy, dx)


def external_orientation_step(heading, bearing, dt, kappa, rng=None, *, phi=None) -> float:
    if phi is None:
        phi = rng.uniform(-kappa, kappa) if kappa > 0 else 0.0
    return _wrap(heading + (_wrap(bearing - heading) + phi) * dt)


def external_position_step(pos, heading, v, sigma, dt, rng=None, *, z=None) -> np.ndarray:
    if z is None:
        z = rng.standard_normal(2) if sigma > 0 else (0.0, 0.0)
    sd = sigma * math.sqrt(dt)
    return np.array([
        pos[0] + (v * math.cos(heading) * dt + sd * z[0]),
        pos[1] + (v * math.sin(heading) * dt + sd * z[1]),
    ])


def internal_orientation(self_heading, neighbor_headings, eta, rng=None, *, z=None) -> float:
    """Circular mean of the agent's own and its neighbours' headings plus
    Gaussian noise of variance ``eta``.

    A vanishing resultant (e.g. exactly opposed headings) falls back to the
    agent's own heading.
    """
    if z is None:
        z = rng.standard_normal() if eta > 0 else 0.0
    cx = math.cos(self_heading)
    sy = math.sin(self_heading)
    for h in neighbor_headings:
        cx += math.cos(h)
        sy += math.sin(h)
    lim = _kernels.RESULTANT_EPS * (len(neighbor_headings) + 1.0)
    if cx * cx + sy * sy < lim * lim:
        mean = self_heading
    else:
        mean = math.atan2(sy, cx)
    return _wrap(mean + math.sqrt(eta) * z)


def internal_position_step(pos, new_heading, v, dt) -> np.ndarray:
    return np.array([
        pos[0] + v * math.cos(new_heading) * dt,
        pos[1] + v * math.sin(new_heading) * dt,
    ])


def blend_heading(heading, external, internal, w) -> float:
    """Move ``heading`` along shortest arcs: a share ``w`` toward the
    external candidate and ``1 - w`` toward the internal one."""
    return _wrap(heading + w * _wrap(external - heading) + (1 - w) * _wrap(internal - heading))


def modulated_update(
    state: WorldState,
    params: GlobalParams,
    fixed: FixedParams,
    room: RoomConfig,
    beacons: BeaconSet,
    dt: float,
    rng: np.random.Generator | None = None,
    *,
    noise: tuple[np.ndarray, np.ndarray] | None = None,
    reassign: bool = False,
) -> WorldState:
    """One synchronous step of the whole swarm (pure-Python reference path).

    Draws ``rng.random(A)`` then ``rng.standard_normal((A, 3))`` unless the
    pair is passed as ``noise``. Feeding it the per-step slices of the blocks
    drawn by :func:`simulate` reproduces the compiled simulator.
    """
    pos = state.positions
    th = state.headings
    A = th.shape[0]
    if noise is None:
        noise = (rng.random(A), rng.standard_normal((A, 3)))
    u, z = noise
    detected = detect_beacons(beacons, room)
    new = state.copy()
    for a in range(A):
        phi_unit = 2.0 * u[a] - 1.0
        z1, z2, z3 = z[a]
        d = np.hypot(*(pos - pos[a]).T)
        nbrs = [j for j in range(A) if j != a and d[j] < params.r]
        th_n = internal_orientation(th[a], [th[j] for j in nbrs], params.eta, z=z3)
        step_n = internal_position_step(pos[a], th_n, params.v, dt) - pos[a]

        if reassign and detected.size:
            new.assigned_beacon[a] = nearest_beacon(pos[a], beacons, detected)
        b = new.assigned_beacon[a]
        if b >= 0:
            bearing = beacon_bearing(pos[a], beacons.positions[b])
            th_b = external_orientation_step(th[a], bearing, dt, fixed.kappa, phi=fixed.kappa * phi_unit)
            step_b = external_position_step(pos[a], th_b, params.v, fixed.sigma, dt, z=(z1, z2)) - pos[a]
            w = params.w
        else:
            th_b, step_b, w = th[a], np.zeros(2), 0.0

        new.headings[a] = blend_heading(th[a], th_b, th_n, w)
        new.positions[a] = confine(pos[a] + w * step_b + (1 - w) * step_n, room)
    return new


def initial_state(
    room: RoomConfig, beacons: BeaconSet, num_agents: int, rng: np.random.Generator
) -> WorldState:
    """Uniform positions in the room, uniform headings in (-pi, pi], and each
    agent assigned to its nearest detected beacon (-1 when none is detected)."""
    pos = (rng.random((num_agents, 2)) - 0.5) * np.array([room.width, room.height])
    headings = np.pi - 2 * np.pi * rng.random(num_agents)
    detected = detect_beacons(beacons, room)
    if detected.size:
        rel = beacons.positions[detected][None, :, :] - pos[:, None, :]
        # argmin returns the first minimum, i.e. the lowest beacon index on ties
        assigned = detected[np.argmin(np.hypot(rel[..., 0], rel[..., 1]), axis=1)].astype(np.int32)
    else:
        assigned = np.full(num_agents, -1, dtype=np.int32)
    return WorldState(pos, headings, assigned)


def draw_noise(rng: np.random.Generator, num_steps: int, num_agents: int):
    """Draw the per-simulation noise blocks in their fixed order."""
    return rng.random((num_steps, num_agents)), rng.standard_normal((num_steps, num_agents, 3))


def _check_dynamics_params(params: GlobalParams, fixed: FixedParams):
    # looser than validate_params: the deterministic limits (v=0, eta=0) are legal here
    if not (0.0 <= params.w <= 1.0 and params.r > 0 and params.v >= 0 and params.eta >= 0):
        raise ValueError(f"invalid dynamics parameters: {params}")


def simulate(
    params: GlobalParams,
    fixed: FixedParams,
    room: RoomConfig,
    beacons: BeaconSet,
    config: SimConfig,
    *,
    reassign: bool = False,
) -> TrajectorySet:
    """Run one seeded simulation and record observables after every step.

    The generator ``make_rng(config.seed)`` is consumed in this order:
    initial positions ``(A, 2)`` and headings ``(A,)`` as uniforms, the
    uniform heading-noise block ``(T, A)``, then the standard-normal block
    ``(T, A, 3)`` (two positional normals, then the internal heading
    normal). Beacon assignment is frozen at onset unless ``reassign`` is
    set, in which case every step re-targets the nearest detected beacon.
    """
    _check_dynamics_params(params, fixed)
    A, T = config.num_agents, config.num_steps
    rng = make_rng(config.seed)
    state = initial_state(room, beacons, A, rng)
    noise_u, noise_z = draw_noise(rng, T, A)

    detected = detect_beacons(beacons, room)
    local = {int(g): k for k, g in enumerate(detected)}
    target = np.array([local.get(int(b), -1) for b in state.assigned_beacon], dtype=np.int64)
    bpos = beacons.positions[detected]

    px = state.positions[:, 0].copy()
    py = state.positions[:, 1].copy()
    theta = state.headings.copy()
    X = np.empty((A, T, 2))
    TH = np.empty((A, T))
    N = np.empty((A, T), dtype=np.int32)
    D = np.empty((A, T))
    _kernels.run_kernel(
        px, py, theta, target,
        np.ascontiguousarray(bpos[:, 0]), np.ascontiguousarray(bpos[:, 1]), bool(reassign),
        float(params.w), float(params.r), float(params.v), float(params.eta),
        float(fixed.kappa), float(fixed.sigma), float(config.dt),
        room.width / 2, room.height / 2, noise_u, noise_z,
        X, TH, N, D,
    )
    return TrajectorySet(
        X=X, Theta=TH, Ncount=N, D=D, config=config, room=room, beacons=beacons,
        assigned=state.assigned_beacon.astype(np.int32),
    )
