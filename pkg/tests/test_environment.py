import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swarmroom.environment import (
    BeaconSet,
    NoBeaconError,
    RoomConfig,
    confine,
    detect_beacons,
    nearest_beacon,
    place_beacons,
)
from swarmroom.rng import make_rng

ROOM = RoomConfig()
coords = st.floats(-50, 50, allow_nan=False)


def test_room_requires_detection_range_beyond_half_extent():
    with pytest.raises(ValueError):
        RoomConfig(width=10, height=10, detection_range=5)
    with pytest.raises(ValueError):
        RoomConfig(width=0)


@settings(max_examples=50)
@given(st.integers(0, 2**64 - 1), st.integers(1, 30))
def test_placed_beacons_lie_outside_room_and_inside_range(seed, count):
    beacons = place_beacons(ROOM, count, make_rng(seed))
    assert len(beacons) == count
    p = beacons.positions
    assert (np.hypot(p[:, 0], p[:, 1]) <= ROOM.detection_range).all()
    assert not ROOM.contains(p).any()
    # strict placement inside the disc means every beacon is detected
    np.testing.assert_array_equal(detect_beacons(beacons, ROOM), np.arange(count))


def test_eight_beacons_deterministic():
    a = place_beacons(ROOM, 8, make_rng(9))
    assert len(a) == 8
    assert a == place_beacons(ROOM, 8, make_rng(9))
    assert a != place_beacons(ROOM, 8, make_rng(10))


def test_place_beacons_needs_one():
    with pytest.raises(ValueError):
        place_beacons(ROOM, 0, make_rng(0))


@pytest.mark.parametrize(
    "point, detected",
    [((25.0, 0.0), False), ((5.0, 0.0), True), ((20.0, 0.0), False), ((0.0, -19.999), True)],
)
def test_detection_is_strict(point, detected):
    got = detect_beacons(BeaconSet([point]), ROOM)
    assert (got.size == 1) is detected


def test_nearest_beacon_examples():
    beacons = BeaconSet([(5.0, 0.0), (0.0, 3.0)])
    assert nearest_beacon((0, 0), beacons, [0, 1]) == 1
    assert nearest_beacon((0, 0), beacons, [0]) == 0
    tie = BeaconSet([(4.0, 0.0), (0.0, 4.0)])
    assert nearest_beacon((0, 0), tie, [1, 0]) == 0


def test_nearest_beacon_without_detection():
    with pytest.raises(NoBeaconError):
        nearest_beacon((0, 0), BeaconSet([(30.0, 0.0)]), [])


@given(
    arrays(np.float64, (6, 2), elements=coords),
    st.tuples(coords, coords),
    st.sets(st.integers(0, 5), min_size=1),
)
def test_nearest_beacon_matches_linear_scan(points, agent, detected):
    beacons = BeaconSet(points)
    best = nearest_beacon(agent, beacons, sorted(detected))
    d = {i: np.hypot(*(points[i] - agent)) for i in detected}
    assert all(d[best] <= d[i] for i in detected)
    assert best == min(i for i in detected if d[i] == d[best])


@pytest.mark.parametrize(
    "point, expected",
    [((0.0, 0.0), (0.0, 0.0)), ((7.0, 0.0), (5.0, 0.0)), ((-6.0, -6.0), (-5.0, -5.0))],
)
def test_confine_examples(point, expected):
    np.testing.assert_array_equal(confine(point, ROOM), expected)


@given(st.tuples(coords, coords))
def test_confine_idempotent_and_inside(point):
    once = confine(point, ROOM)
    np.testing.assert_array_equal(confine(once, ROOM), once)
    assert ROOM.contains(once).all()


def test_beacon_csv_round_trip():
    beacons = place_beacons(ROOM, 8, make_rng(3))
    text = beacons.to_csv()
    assert text.splitlines()[0] == "index,x,y"
    assert BeaconSet.from_csv(text) == beacons


def test_beacon_set_is_immutable():
    beacons = BeaconSet([(6.0, 0.0)])
    with pytest.raises(ValueError):
        beacons.positions[0, 0] = 1.0
