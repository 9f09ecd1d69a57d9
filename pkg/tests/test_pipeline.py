import numpy as np
import pytest

from obbgrasp.errors import DuplicateIdError, SceneFormatError, StaleIndexError
from obbgrasp.geometry import Obb, RigidTransform, is_rotation
from obbgrasp.pipeline import (
    ObbDetection,
    Scene,
    generate_scene_grasps,
    object_seed,
    precompute,
    query,
    query_on_demand,
)
from obbgrasp.scoring import FilterThresholds
from obbgrasp.strategies import GripperConfig, ShapeClass

from conftest import G, detection, scene_of, upright

GENEROUS = FilterThresholds(th1=0.0, th2=0.0)


def same_grasp(a, b):
    return a.rotation.tobytes() == b.rotation.tobytes() and a.translation.tobytes() == b.translation.tobytes()


def test_single_box_happy_path():
    scene = scene_of(detection(0, upright((0.05, 0.07, 0.03))))
    gs = generate_scene_grasps(scene, thresholds=GENEROUS)
    grasps = gs.for_object(0).grasps
    assert 0 < len(grasps) <= 10
    assert [g.score for g in grasps] == sorted((g.score for g in grasps), reverse=True)
    for g in grasps:
        assert is_rotation(g.rotation)
        assert g.width < 0.085 and 0.0 <= g.stability <= 1.0
        assert g.score == pytest.approx(0.9 * g.stability, abs=1e-15)


def test_unsupported_shape_gives_warning_entry():
    ring = detection(0, upright((0.05, 0.05, 0.01)), "ring", ShapeClass.RING)
    box = detection(1, upright((0.05, 0.07, 0.03), (0.2, 0.6)))
    gs = generate_scene_grasps(scene_of(ring, box))
    assert gs.for_object(0).grasps == () and "ring" in gs.for_object(0).warning
    assert gs.for_object(1).grasps
    assert len(gs.warnings) == 1


def test_scene_validation():
    obb = upright((0.05, 0.05, 0.05))
    with pytest.raises(DuplicateIdError):
        scene_of(detection(1, obb), detection(1, obb))
    with pytest.raises(SceneFormatError):
        ObbDetection(0, "x", ShapeClass.BOX, 1.3, obb)
    with pytest.raises(SceneFormatError):
        Scene("s", (0, 2, 0), ())


def test_mode1_lookup(four_object_scene):
    index = precompute(four_object_scene)
    for label in ("tea box", "can", "apple", "power bank"):
        hits = query(index, label)
        assert len(hits) == 1 and hits[0].label == label
        assert query(index, label) == hits
    assert query(index, "mug") == []
    with pytest.raises(StaleIndexError):
        query(index, "can", scene_id="other")


def test_mode1_equals_mode2(four_object_scene):
    for seed in (0, 7):
        index = precompute(four_object_scene, seed=seed)
        for label in ("tea box", "can", "apple", "power bank"):
            m1 = query(index, label)[0].grasps
            m2 = query_on_demand(four_object_scene, label, seed=seed)[0].grasps
            assert len(m1) == len(m2) > 0
            for a, b in zip(m1, m2):
                assert same_grasp(a, b) and a.score == b.score
    assert query_on_demand(four_object_scene, "mug") == []


def test_parallel_matches_serial_and_random_mode_uses_object_seed(four_object_scene):
    gripper = GripperConfig(sampling_mode="random", samples_per_trajectory=9)
    a = generate_scene_grasps(four_object_scene, gripper, seed=3)
    b = generate_scene_grasps(four_object_scene, gripper, seed=3, max_workers=4)
    for ea, eb in zip(a.objects, b.objects):
        assert len(ea.grasps) == len(eb.grasps)
        assert all(same_grasp(x, y) for x, y in zip(ea.grasps, eb.grasps))
    assert object_seed(3, 5) == 6


def test_object_order_does_not_matter(four_object_scene):
    reordered = Scene("four", G, tuple(reversed(four_object_scene.objects)))
    a = generate_scene_grasps(four_object_scene)
    b = generate_scene_grasps(reordered)
    for o in four_object_scene.objects:
        ga, gb = a.for_object(o.id).grasps, b.for_object(o.id).grasps
        assert all(same_grasp(x, y) for x, y in zip(ga, gb)) and len(ga) == len(gb)


def test_scene_gravity_overrides_threshold_default():
    # same physical scene expressed with gravity along +z instead of +y
    obb = upright((0.05, 0.07, 0.03))
    flip = np.array([[1.0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]])  # maps +y to +z
    moved = Obb(RigidTransform(flip, np.zeros(3)).compose(obb.pose), obb.extents)
    a = generate_scene_grasps(scene_of(detection(0, obb)))
    b = generate_scene_grasps(Scene("t", flip @ G, (detection(0, moved),)))
    ga, gb = a.for_object(0).grasps, b.for_object(0).grasps
    assert len(ga) == len(gb) > 0
    for x, y in zip(ga, gb):
        np.testing.assert_allclose(flip @ x.translation, y.translation, atol=1e-12)
        assert x.stability == pytest.approx(y.stability, abs=1e-12)


def test_points_are_ignored(four_object_scene, rng):
    a = generate_scene_grasps(four_object_scene)
    noisy = Scene(
        "four", G,
        tuple(
            ObbDetection(o.id, o.label, o.shape_class, o.confidence, o.obb, rng.normal(size=(50, 3)))
            for o in four_object_scene.objects
        ),
    )
    b = generate_scene_grasps(noisy)
    for ea, eb in zip(a.objects, b.objects):
        assert all(same_grasp(x, y) for x, y in zip(ea.grasps, eb.grasps))
