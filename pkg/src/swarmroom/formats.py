"""File formats: binary trajectories and reference tables, CSV exports, JSON
configuration.

Binary layouts are little-endian and versioned.

Trajectory (``.swrm``)::

    b"SWRM" | u16 version | u32 A | u32 B | u32 T | f64 dt | u64 seed
    f64[A,T,2] X | f64[A,T] Theta | f64[A,T] D | i32[A,T] N | f64[B,2] beacons
    f64[5] room (width, height, detection_range, world x, world y)
    i32[A] onset beacon assignment (-1 = none)

Reference table (``.swrt``)::

    b"SWRT" | u16 version | u32 N | u32 P | u32 K | u32 A | u32 B | u32 T
    f64 dt | u64 layout seed | u64 base seed | f64 kappa | f64 sigma
    f64[5] room | u8 reassign | f64[8] prior (w a,b | r mu,s | v a,b | eta a,b)
    f64[B,2] beacons | f64[N,P] params | f64[N,K] summaries | u64[N] row seeds
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .environment import BeaconSet, RoomConfig
from .inference import PosteriorSamples, ReferenceTable
from .observables import TrajectorySet
from .params import PARAM_NAMES, FixedParams, GlobalParams, PriorSpec, SimConfig
from .scenario import Scenario
from .summaries import NUM_SUMMARIES, SUMMARY_NAMES

TRAJ_MAGIC = b"SWRM"
TABLE_MAGIC = b"SWRT"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed or truncated file; ``offset`` is the failing byte position."""

    def __init__(self, message, offset=None):
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")
        self.offset = offset


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated file: need {n} bytes for {what}, {len(self.data) - self.pos} left", self.pos
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt), what))

    def array(self, dtype: str, shape, what: str) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        count = int(np.prod(shape))
        raw = self.take(count * dt.itemsize, what)
        return np.frombuffer(raw, dtype=dt).astype(dt.newbyteorder("="), copy=True).reshape(shape)

    def finish(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes", self.pos)


def _le(a: np.ndarray, dtype: str) -> bytes:
    return np.ascontiguousarray(a, dtype=np.dtype(dtype).newbyteorder("<")).tobytes()


def _room_tuple(room: RoomConfig):
    return (room.width, room.height, room.detection_range, *room.world_position)


def _room_from(values) -> RoomConfig:
    w, h, R, x, y = (float(v) for v in values)
    return RoomConfig(w, h, R, (x, y))


def encode_trajectory(traj: TrajectorySet) -> bytes:
    A, T = traj.num_agents, traj.num_steps
    B = len(traj.beacons)
    parts = [
        TRAJ_MAGIC,
        struct.pack("<HIIIdQ", FORMAT_VERSION, A, B, T, traj.config.dt, traj.config.seed),
        _le(traj.X, "f8"),
        _le(traj.Theta, "f8"),
        _le(traj.D, "f8"),
        _le(traj.Ncount, "i4"),
        _le(traj.beacons.positions, "f8"),
        _le(np.array(_room_tuple(traj.room)), "f8"),
        _le(traj.assigned, "i4"),
    ]
    return b"".join(parts)


def _check_magic(r: _Reader, magic: bytes, kind: str):
    got = r.take(4, "magic")
    if got != magic:
        raise FormatError(f"not a {kind} file (magic {got!r})", 0)
    (version,) = r.unpack("H", "format version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported {kind} format version {version}", 4)


def decode_trajectory(data: bytes) -> TrajectorySet:
    r = _Reader(data)
    _check_magic(r, TRAJ_MAGIC, "trajectory")
    A, B, T, dt, seed = r.unpack("IIIdQ", "header")
    X = r.array("f8", (A, T, 2), "X")
    TH = r.array("f8", (A, T), "Theta")
    D = r.array("f8", (A, T), "D")
    N = r.array("i4", (A, T), "N")
    beacons = r.array("f8", (B, 2), "beacons")
    room = r.array("f8", (5,), "room")
    assigned = r.array("i4", (A,), "beacon assignment")
    r.finish()
    try:
        config = SimConfig(A, B, T, dt, seed)
        room_cfg = _room_from(room)
    except ValueError as exc:
        raise FormatError(f"invalid header values: {exc}", 6) from exc
    return TrajectorySet(X, TH, N, D, config, room_cfg, BeaconSet(beacons), assigned)


def encode_table(table: ReferenceTable) -> bytes:
    sc = table.scenario
    cfg = sc.config
    N, P = table.params.shape
    K = table.summaries.shape[1]
    pr = table.prior
    header = struct.pack(
        "<HIIIIIIdQQdd5dB8d",
        FORMAT_VERSION, N, P, K, cfg.num_agents, len(sc.beacons), cfg.num_steps,
        cfg.dt, cfg.seed, table.base_seed, sc.fixed.kappa, sc.fixed.sigma,
        *_room_tuple(sc.room), int(sc.reassign), *pr.w, *pr.r, *pr.v, *pr.eta,
    )
    return b"".join([
        TABLE_MAGIC, header,
        _le(sc.beacons.positions, "f8"),
        _le(table.params, "f8"),
        _le(table.summaries, "f8"),
        _le(table.seeds, "u8"),
    ])


def decode_table(data: bytes) -> ReferenceTable:
    r = _Reader(data)
    _check_magic(r, TABLE_MAGIC, "reference table")
    N, P, K, A, B, T = r.unpack("IIIIII", "table dimensions")
    dt, layout_seed, base_seed, kappa, sigma = r.unpack("dQQdd", "table header")
    room = r.unpack("5d", "room")
    (reassign,) = r.unpack("B", "reassign flag")
    pr = r.unpack("8d", "prior")
    if P != len(PARAM_NAMES) or K != NUM_SUMMARIES:
        raise FormatError(f"unexpected table width P={P}, K={K}", 10)
    beacons = r.array("f8", (B, 2), "beacons")
    params = r.array("f8", (N, P), "parameter block")
    summaries = r.array("f8", (N, K), "summary block")
    seeds = r.array("u8", (N,), "row seeds")
    r.finish()
    try:
        scenario = Scenario(
            SimConfig(A, B, T, dt, layout_seed), _room_from(room), BeaconSet(beacons),
            FixedParams(kappa, sigma), bool(reassign),
        )
        prior = PriorSpec(pr[0:2], pr[2:4], pr[4:6], pr[6:8])
    except ValueError as exc:
        raise FormatError(f"invalid header values: {exc}") from exc
    return ReferenceTable(params, summaries, seeds, scenario, prior, base_seed)


def atomic_write(path, data: bytes | str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def save_trajectory(traj: TrajectorySet, path):
    atomic_write(path, encode_trajectory(traj))


def load_trajectory(path) -> TrajectorySet:
    return decode_trajectory(Path(path).read_bytes())


def save_table(table: ReferenceTable, path):
    atomic_write(path, encode_table(table))


def load_table(path) -> ReferenceTable:
    return decode_table(Path(path).read_bytes())


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trajectory_csv(traj: TrajectorySet) -> str:
    """Long format: one row per (agent, step)."""
    rows = (
        (a, t, repr(float(traj.X[a, t, 0])), repr(float(traj.X[a, t, 1])),
         repr(float(traj.Theta[a, t])), int(traj.Ncount[a, t]), repr(float(traj.D[a, t])))
        for a in range(traj.num_agents)
        for t in range(traj.num_steps)
    )
    return _csv_text(["agent", "t", "x", "y", "theta", "n", "d"], rows)


def posterior_csv(post: PosteriorSamples) -> str:
    rows = ([repr(float(x)) for x in row] + [repr(float(w))] for row, w in zip(post.draws, post.weights))
    return _csv_text([*PARAM_NAMES, "weight"], rows)


def read_posterior_csv(text: str) -> PosteriorSamples:
    rows = list(csv.DictReader(io.StringIO(text)))
    draws = np.array([[float(r[k]) for k in PARAM_NAMES] for r in rows])
    return PosteriorSamples(draws, np.array([float(r["weight"]) for r in rows]))


def summaries_csv(summaries: np.ndarray) -> str:
    return _csv_text(SUMMARY_NAMES, ([repr(float(x)) for x in row] for row in np.atleast_2d(summaries)))


def read_summaries_csv(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != SUMMARY_NAMES:
        raise FormatError("summary CSV header does not match the statistic list")
    return np.array([[float(x) for x in row] for row in reader]).reshape(-1, NUM_SUMMARIES)


def coverage_csv(report, param: str) -> str:
    return _csv_text(
        ["alpha", "coverage", "lower95", "upper95"],
        ([repr(float(x)) for x in row] for row in report.coverage_table(param)),
    )


# ---------------------------------------------------------------- config JSON

CONFIG_DEFAULTS = {
    "w": 0.5, "r": 1.0, "v": 0.5, "eta": 0.2,
    "kappa": 0.01, "sigma": 0.05,
    "A": 49, "B": 8, "T": 600, "dt": 0.1, "seed": 0, "layout_seed": 0,
    "width": 10.0, "height": 10.0, "R_M": 20.0,
}
_INT_KEYS = {"A", "B", "T", "seed", "layout_seed"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse and type-check a JSON configuration; unknown keys are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return resolve_config(raw, source)


def resolve_config(raw: dict, source: str = "<config>") -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    for key, value in raw.items():
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"{source}: unknown field {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{source}: field {key!r} must be a number, got {value!r}")
        if key in _INT_KEYS:
            if float(value) != int(value):
                raise ConfigError(f"{source}: field {key!r} must be an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        cfg[key] = value
    return cfg


def config_objects(cfg: dict, strict_params: bool = True):
    """Turn a resolved config dict into (GlobalParams, Scenario).

    The beacon layout comes from ``layout_seed``; ``seed`` drives the run
    itself. Raises ConfigError naming the offending field.
    """
    from .params import validate_params

    params = GlobalParams(cfg["w"], cfg["r"], cfg["v"], cfg["eta"])
    if strict_params:
        problems = validate_params(params)
        if problems:
            raise ConfigError("; ".join(problems))
    try:
        sim = SimConfig(cfg["A"], cfg["B"], cfg["T"], cfg["dt"], cfg["layout_seed"])
        room = RoomConfig(cfg["width"], cfg["height"], cfg["R_M"])
        fixed = FixedParams(cfg["kappa"], cfg["sigma"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return params, Scenario.from_config(sim, room, fixed)
