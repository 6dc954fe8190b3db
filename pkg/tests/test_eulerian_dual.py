import json
import math
import random

import numpy as np
import pytest

from pwlcf.eulerian_dual import (CountField, DualError, DualInstance, SegmentGrid, TimeField,
                                 arrival_times, car_budget, counts_from_times, duality_check,
                                 load_instance, random_instance, run_counts, run_times, step_count,
                                 step_time)


def free_road(K, taubar=0):
    return SegmentGrid((0,) * K, (1,) * K, (1,) * K, (taubar,) * K)


def test_empty_road_stays_empty():
    f = run_counts(free_road(3), [0] * 10, 9)
    assert not f.as_array().any()
    assert run_times(free_road(3), [0], 0).times == []
    assert duality_check(free_road(3), [0] * 10, 9) == 0


def test_single_car_trace():
    K = 4
    counts = run_counts(free_road(K), [1] * 8, 7).as_array()
    for t in range(8):
        for x in range(K + 1):
            assert counts[t, x] == (1 if t >= x else 0)
    assert run_times(free_road(K), [1], 1).times == [[0, 1, 2, 3, 4]]


def test_reaction_time_zero_is_free_flow():
    # a platoon of three arriving at once trickles in one per step
    counts = run_counts(free_road(2), [3] * 10, 9).as_array()
    np.testing.assert_array_equal(counts[:, 0], [1, 2, 3, 3, 3, 3, 3, 3, 3, 3])
    np.testing.assert_array_equal(counts[:, 2], [0, 0, 1, 2, 3, 3, 3, 3, 3, 3])


def test_blocked_car_waits_for_reaction_time():
    g = SegmentGrid((1, 1), (1, 1), (1, 1), (2, 2))
    counts = run_counts(g, [0] * 8, 7).as_array()
    np.testing.assert_array_equal(counts[:, 2], [0, 1, 1, 1, 2, 2, 2, 2])
    np.testing.assert_array_equal(counts[:, 1], [0, 0, 0, 1, 1, 1, 1, 1])
    tf = run_times(g, [0], 2)
    assert tf.t(1, 2) == 1
    assert tf.t(1, 1) == 3
    assert tf.t(2, 2) == 4
    assert tf.t(0, 1) == -math.inf


def test_jammed_road_with_closed_exit_is_frozen():
    g = SegmentGrid((2, 1), (2, 1), (1, 1), (1, 1), exit_open=False)
    counts = run_counts(g, [3] * 5, 4).as_array()
    assert not counts.any()
    occ = CountField(g, [3]).occupancy(0)
    np.testing.assert_array_equal(occ, [2, 1])
    assert all(math.isinf(v) for row in run_times(g, [3], 3).times for v in row)
    assert g.abar(3) == 0
    assert free_road(2).abar(3) == math.inf


def test_grid_validation():
    with pytest.raises(DualError):
        SegmentGrid((), (), (), ())
    with pytest.raises(DualError):
        SegmentGrid((1,), (1, 1), (1,), (0,))
    with pytest.raises(DualError):
        SegmentGrid((2,), (1,), (1,), (0,))
    with pytest.raises(DualError):
        SegmentGrid((0,), (0,), (1,), (0,))
    with pytest.raises(DualError):
        SegmentGrid((0,), (1,), (0,), (0,))
    with pytest.raises(DualError):
        SegmentGrid((0,), (1,), (1,), (-1,))
    with pytest.raises(DualError):
        SegmentGrid.from_segments([{"a": 0, "c": 1, "tau": 1}])
    with pytest.raises(DualError):
        CountField(free_road(1), [2, 1])
    assert free_road(2).total_travel_time(1) == 1


def test_step_requires_history():
    g = free_road(2)
    f = CountField(g, [1, 1, 1])
    with pytest.raises(DualError):
        step_count(f, g, 2)
    step_count(f, g, 1)
    assert len(f.rows) == 2
    tf = TimeField(g, arrival_times([1], 1))
    with pytest.raises(DualError):
        step_time(tf, g, 2)


def test_arrival_times():
    assert arrival_times([0, 1, 1, 3], 4) == [1, 3, 3, math.inf]
    assert arrival_times([], 1) == [math.inf]


def test_invariants_on_random_instances():
    rng = random.Random(11)
    for _ in range(300):
        inst = random_instance(rng)
        g = inst.grid
        f = run_counts(g, inst.arrivals, inst.horizon)
        arr = f.as_array()
        assert np.all(np.diff(arr, axis=0) >= 0)
        for t in range(inst.horizon + 1):
            occ = f.occupancy(t)
            assert np.all(occ >= 0) and np.all(occ <= np.asarray(g.c))
        # the entry never admits more than has arrived
        assert np.all(arr[:, 0] <= np.asarray(inst.arrivals)[:len(arr)])


def test_counts_monotone_in_arrivals():
    rng = random.Random(5)
    for _ in range(200):
        inst = random_instance(rng)
        more = [v + (1 if t >= inst.horizon // 2 else 0) for t, v in enumerate(inst.arrivals)]
        lo = run_counts(inst.grid, inst.arrivals, inst.horizon).as_array()
        hi = run_counts(inst.grid, more, inst.horizon).as_array()
        assert np.all(lo <= hi)


def test_duality_on_random_instances():
    rng = random.Random(2024)
    for _ in range(300):
        inst = random_instance(rng)
        assert duality_check(inst.grid, inst.arrivals, inst.horizon) == 0


def test_counts_from_times_by_hand():
    g = free_road(2)
    tf = run_times(g, [1, 2, 2], 2)
    assert tf.times == [[0, 1, 2], [1, 2, 3]]
    np.testing.assert_array_equal(counts_from_times(tf, 3), [[1, 0, 0], [2, 1, 0], [2, 2, 1], [2, 2, 2]])
    assert car_budget(g, [1, 2, 2]) == 2


def test_instance_roundtrip(tmp_path):
    inst = random_instance(random.Random(0))
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_dict()))
    assert load_instance(path) == inst
    with pytest.raises(DualError):
        DualInstance.from_dict({"segments": []})
    with pytest.raises(DualError):
        DualInstance.from_dict({"segments": [{"a": 0, "c": 1, "tau": 1, "taubar": 0}], "horizon": -1})
    with pytest.raises(DualError):
        DualInstance.from_dict({"segments": [{"a": 0, "c": 1, "tau": 1, "taubar": 0}],
                                "horizon": 3, "arrivals": [2, 1]})
