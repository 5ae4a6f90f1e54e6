import pathlib

import numpy as np
import pytest

import rtsmooth

SCENES = pathlib.Path(__file__).resolve().parents[2] / "data" / "scenes"


@pytest.fixture(scope="module")
def pillars():
    return rtsmooth.load_scene(str(SCENES / "desk_pillars.json"))


def test_forward_kinematics_chain():
    model = rtsmooth.RobotModel.desk_planar()
    capsules = rtsmooth.forward_kinematics(model, np.zeros(3))
    assert len(capsules) == 3
    for (_, b, _), (a, _, _) in zip(capsules, capsules[1:]):
        np.testing.assert_allclose(a, b)
    # Outstretched along +x from the base at (1, 1).
    np.testing.assert_allclose(capsules[-1][1], [1.95, 1.0, 0.0], atol=1e-12)


def test_rest_to_rest_durations():
    model = rtsmooth.RobotModel.desk_planar()
    assert rtsmooth.min_time_rest_to_rest(model, np.zeros(3), np.zeros(3)) == 0.0
    # Joint 0 limits at vmax 1, amax 2: a 1 rad move takes 1.5 s.
    d = rtsmooth.min_time_rest_to_rest(model, np.zeros(3), np.array([1.0, 0.0, 0.0]))
    assert d == pytest.approx(1.5, abs=1e-12)


def test_exact_clearances_shape():
    model = rtsmooth.RobotModel.desk_planar()
    grid = rtsmooth.VoxelGrid.desk_planar()
    q = np.zeros((4, 3))
    c = rtsmooth.exact_clearance_batch(model, grid, q)
    assert c.shape == (4, grid.size)
    assert np.all(c == c[0])


def test_plan_and_smooth(pillars):
    occ = pillars.static_occupancy()
    assert occ.dtype == bool and occ.size == pillars.grid.size
    a, b = pillars.configs["A"], pillars.configs["B"]
    path = rtsmooth.plan(pillars, occ, a, b, 3)
    assert path is not None
    np.testing.assert_allclose(path[0], a)
    np.testing.assert_allclose(path[-1], b)

    cfg = rtsmooth.SmoothingConfig()
    cfg.c = 8
    cfg.clearance_threshold = pillars.grid.edge
    result = rtsmooth.smooth(pillars.robot, pillars.grid, occ, path, cfg)
    report = result["report"]
    original = rtsmooth.time_parameterize_path(pillars.robot, path)
    assert report["unsmoothed_duration"] == pytest.approx(original.duration)
    assert result["duration"] <= original.duration
    if not report["fallback"]:
        assert result["duration"] < original.duration
    assert rtsmooth.verify_trajectory(pillars.robot, original, pillars.grid, occ) is None


def test_baseline_zero_iterations(pillars):
    occ = pillars.static_occupancy()
    path = rtsmooth.plan(pillars, occ, pillars.configs["A"], pillars.configs["B"], 1)
    r = rtsmooth.shortcut_iterative(pillars.robot, pillars.grid, occ, path, 0)
    assert r["report"]["smoothed_duration"] == r["report"]["unsmoothed_duration"]
    r = rtsmooth.shortcut_iterative(pillars.robot, pillars.grid, occ, path, 50)
    assert r["report"]["smoothed_duration"] <= r["report"]["unsmoothed_duration"]


def test_errors_map_to_python_exceptions(pillars):
    full = np.ones(pillars.grid.size, dtype=bool)
    path = np.stack([pillars.configs["A"], pillars.configs["B"]])
    with pytest.raises(RuntimeError):
        rtsmooth.smooth(pillars.robot, pillars.grid, full, path)
    cfg = rtsmooth.SmoothingConfig()
    cfg.c = -1
    with pytest.raises(ValueError):
        rtsmooth.smooth(pillars.robot, pillars.grid, pillars.static_occupancy(), path, cfg)


def test_tiny_training_run():
    model = rtsmooth.RobotModel.desk_planar()
    grid = rtsmooth.VoxelGrid.desk_planar()
    q, c = rtsmooth.generate_dataset(model, grid, 60, 1)
    qv, cv = rtsmooth.generate_dataset(model, grid, 20, 2)
    weights, history = rtsmooth.train(model, grid, q, c, qv, cv, epochs=2, hidden=[16, 16])
    assert len(history) == 3
    pred = rtsmooth.forward_batch(weights, qv)
    assert pred.shape == cv.shape
    report = rtsmooth.evaluate_classifier(pred, cv, grid.edge)
    assert 0.0 <= report["precision"] <= 1.0
