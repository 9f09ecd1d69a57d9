import math

import numpy as np
import pytest

from obbgrasp.geometry import Obb, RigidTransform, axis_angle
from obbgrasp.pipeline import ObbDetection, Scene
from obbgrasp.strategies import ShapeClass

G = np.array([0.0, 1.0, 0.0])


def upright(extents, ground_xz=(0.0, 0.6), table=0.3, yaw=0.0) -> Obb:
    """Box standing on the table plane y=table (camera y points down), object z up."""
    ext = np.asarray(extents, dtype=float)
    c, s = math.cos(yaw), math.sin(yaw)
    h1, h2, up = np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), -G
    rot = np.column_stack([c * h1 + s * h2, -s * h1 + c * h2, up])
    ground = table * G + ground_xz[0] * h1 + ground_xz[1] * h2
    return Obb(RigidTransform(rot, ground - rot[:, :2] @ (ext[:2] / 2)), ext)


def detection(oid, obb, label="box", shape=ShapeClass.BOX, conf=0.9, points=None):
    return ObbDetection(oid, label, shape, conf, obb, points)


def scene_of(*dets, scene_id="t", meta=None):
    return Scene(scene_id, G, tuple(dets), meta or {})


def random_pose(rng) -> RigidTransform:
    axis = rng.normal(size=3)
    return RigidTransform(axis_angle(axis, rng.uniform(0, 2 * math.pi)), rng.uniform(-1, 1, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def four_object_scene():
    objs = [
        detection(0, upright((0.06, 0.08, 0.10), (-0.2, 0.6)), "tea box"),
        detection(1, upright((0.07, 0.07, 0.12), (0.0, 0.6)), "can", ShapeClass.CYLINDER),
        detection(2, upright((0.07, 0.07, 0.07), (0.2, 0.6)), "apple", ShapeClass.SPHERE),
        detection(3, upright((0.05, 0.12, 0.03), (0.0, 0.8), yaw=0.4), "power bank"),
    ]
    return scene_of(*objs, scene_id="four")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance" and rep.when == "call":
                    lines.append(f"{value[0]} {'PASS' if rep.passed else 'FAIL'}  {value[1]}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
