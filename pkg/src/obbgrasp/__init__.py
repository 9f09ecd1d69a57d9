"""Training-free 6-DoF parallel-jaw grasp synthesis from oriented 3D boxes."""

from obbgrasp.geometry import Obb, RigidTransform
from obbgrasp.strategies import GraspCandidate, GripperConfig, ShapeClass
from obbgrasp.scoring import FilterThresholds, ScoredGrasp, StabilityParams
from obbgrasp.pipeline import (
    GraspIndex,
    GraspSet,
    ObbDetection,
    ObjectGrasps,
    Scene,
    generate_scene_grasps,
    precompute,
    query,
    query_on_demand,
)

__version__ = "0.1.0"

__all__ = [
    "FilterThresholds",
    "GraspCandidate",
    "GraspIndex",
    "GraspSet",
    "GripperConfig",
    "Obb",
    "ObbDetection",
    "ObjectGrasps",
    "RigidTransform",
    "Scene",
    "ScoredGrasp",
    "ShapeClass",
    "StabilityParams",
    "generate_scene_grasps",
    "precompute",
    "query",
    "query_on_demand",
]
