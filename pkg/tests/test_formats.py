import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmroom import DEFAULT_PRIOR, GlobalParams, Scenario, SimConfig, build_reference_table
from swarmroom import formats as fm
from swarmroom.inference import PosteriorSamples


@pytest.fixture(scope="module")
def traj():
    return Scenario.from_config(SimConfig(num_agents=7, num_steps=30, seed=4)).run(GlobalParams(0.5, 1.5, 0.5, 0.2), 8)


@pytest.fixture(scope="module")
def table():
    sc = Scenario.from_config(SimConfig(num_agents=6, num_steps=20, seed=2))
    return build_reference_table(DEFAULT_PRIOR, sc, 9, base_seed=5)


def test_trajectory_header_layout(traj):
    data = fm.encode_trajectory(traj)
    assert data[:4] == b"SWRM"
    version, A, B, T, dt, seed = struct.unpack_from("<HIIIdQ", data, 4)
    assert (version, A, B, T, dt, seed) == (1, 7, 8, 30, 0.1, 8)
    body = 7 * 30 * (2 * 8 + 8 + 8 + 4) + 8 * 2 * 8 + 5 * 8 + 7 * 4
    assert len(data) == 4 + 30 + body


def test_trajectory_round_trip(traj, tmp_path):
    assert fm.decode_trajectory(fm.encode_trajectory(traj)).equals(traj)
    path = tmp_path / "t.swrm"
    fm.save_trajectory(traj, path)
    assert fm.load_trajectory(path).equals(traj)


def test_default_trajectory_header(tmp_path):
    traj = Scenario.from_config().run(GlobalParams(0.5, 1.0, 0.5, 0.2), 0)
    A, B, T, dt = struct.unpack_from("<IIId", fm.encode_trajectory(traj), 6)
    assert (A, B, T, dt) == (49, 8, 600, 0.1)


def test_table_round_trip(table):
    data = fm.encode_table(table)
    assert data[:4] == b"SWRT"
    assert struct.unpack_from("<I", data, 6)[0] == 9
    assert fm.decode_table(data).equals(table)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_truncated_files_report_position(traj, table, data):
    for blob, decode in ((fm.encode_trajectory(traj), fm.decode_trajectory), (fm.encode_table(table), fm.decode_table)):
        cut = data.draw(st.integers(0, len(blob) - 1))
        with pytest.raises(fm.FormatError) as info:
            decode(blob[:cut])
        assert info.value.offset is not None and 0 <= info.value.offset <= cut


def test_trailing_bytes_and_bad_magic(traj):
    blob = fm.encode_trajectory(traj)
    with pytest.raises(fm.FormatError, match="trailing"):
        fm.decode_trajectory(blob + b"\0")
    with pytest.raises(fm.FormatError, match="magic"):
        fm.decode_trajectory(b"XXXX" + blob[4:])
    with pytest.raises(fm.FormatError, match="version"):
        fm.decode_trajectory(blob[:4] + struct.pack("<H", 9) + blob[6:])


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.bin"
    target.write_bytes(b"old")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(fm.os, "replace", boom)
    with pytest.raises(OSError):
        fm.atomic_write(target, b"new contents")
    assert target.read_bytes() == b"old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.bin"]


def test_trajectory_csv(traj):
    lines = fm.trajectory_csv(traj).splitlines()
    assert lines[0] == "agent,t,x,y,theta,n,d"
    assert len(lines) == 1 + 7 * 30
    agent, t, x, y, theta, n, d = lines[1 + 31].split(",")
    assert (int(agent), int(t)) == (1, 1)
    assert float(x) == traj.X[1, 1, 0] and float(theta) == traj.Theta[1, 1] and int(n) == traj.Ncount[1, 1]


def test_posterior_csv_round_trip():
    post = PosteriorSamples(np.array([[0.1, 1.2, 0.3, 0.05], [0.4, 0.9, 0.6, 0.2]]), weights=[0.25, 0.75])
    text = fm.posterior_csv(post)
    assert text.splitlines()[0] == "w,r,v,eta,weight"
    back = fm.read_posterior_csv(text)
    np.testing.assert_array_equal(back.draws, post.draws)
    np.testing.assert_array_equal(back.weights, post.weights)


def test_summaries_csv_round_trip(table):
    back = fm.read_summaries_csv(fm.summaries_csv(table.summaries))
    np.testing.assert_array_equal(back, table.summaries)


def test_config_defaults_and_overrides():
    cfg = fm.parse_config_text('{"w": 0.3, "A": 20, "T": 50}')
    assert cfg["w"] == 0.3 and cfg["A"] == 20 and cfg["B"] == 8 and cfg["kappa"] == 0.01
    params, scenario = fm.config_objects(cfg)
    assert params.w == 0.3 and scenario.config.num_agents == 20


@pytest.mark.parametrize(
    "text, field",
    [('{"w": 1.7}', "w out of range"), ('{"colour": 1}', "colour"), ('{"A": 2.5}', "'A'"), ('{"dt": "fast"}', "'dt'"),
     ('{"kappa": 0.5}', "kappa"), ('{"T": 0}', "T")],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(fm.ConfigError, match=field):
        fm.config_objects(fm.parse_config_text(text))


def test_config_syntax_error_has_line():
    with pytest.raises(fm.ConfigError, match=r"cfg.json:2:"):
        fm.parse_config_text('{"w": 0.3,\n "r": }', "cfg.json")
