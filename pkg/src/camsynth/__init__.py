"""camsynth: synthetic camera-localization dataset generation.

Moves a virtual pinhole camera through a textured triangle mesh along
collision-checked straight paths, renders RGB + depth frames with a
deterministic software rasterizer, and records exact ground-truth poses
in the 7-Scenes dataset layout. Includes calibrated ground-truth
corruption and median pose-error scoring.
"""

__version__ = "0.1.0"

from .mesh_io import Aabb, TexturedMesh, compute_bounds, decimate, load_mesh, save_mesh
from .pose_math import Pose6D, UnitQuaternion, euler_to_matrix, forward_direction, matrix_to_quaternion
from .raycast import BvhIndex, HitRecord, Ray, build_bvh, first_hit
from .render import CameraIntrinsics, project_point, render
from .sampling import CandidateSet, SamplingBounds, sample_candidates
from .selection import SelectionConfig, filter_admissible, select_target
from .trajectory import GenerationConfig, GenerationReport, generate_paths, interpolate_path
from .dataset import DatasetManifest, Frame, read_frame, write_frame
from .corrupt import CorruptionSpec, corrupt_pose_matrices, measure_corruption

__all__ = [
    "Aabb", "TexturedMesh", "compute_bounds", "decimate", "load_mesh", "save_mesh",
    "Pose6D", "UnitQuaternion", "euler_to_matrix", "forward_direction", "matrix_to_quaternion",
    "BvhIndex", "HitRecord", "Ray", "build_bvh", "first_hit",
    "CameraIntrinsics", "project_point", "render",
    "CandidateSet", "SamplingBounds", "sample_candidates",
    "SelectionConfig", "filter_admissible", "select_target",
    "GenerationConfig", "GenerationReport", "generate_paths", "interpolate_path",
    "DatasetManifest", "Frame", "read_frame", "write_frame",
    "CorruptionSpec", "corrupt_pose_matrices", "measure_corruption",
]
