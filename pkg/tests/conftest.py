import math
from pathlib import Path

import numpy as np
import pytest

from camsynth.mesh_io import Aabb
from camsynth.pose_math import Pose6D
from camsynth.procedural import box_room, corridor, icosphere, quad, solid_texture
from camsynth.raycast import build_bvh
from camsynth.sampling import SamplingBounds

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def box_mesh():
    return box_room(size=(10.0, 10.0, 3.0), subdiv=2)


@pytest.fixture(scope="session")
def box_bvh(box_mesh):
    return build_bvh(box_mesh)


@pytest.fixture(scope="session")
def corridor_mesh():
    # corridor along +X with a full partition at x = 8
    return corridor(length=12.0, width=2.0, height=2.5, wall_x=8.0)


@pytest.fixture(scope="session")
def corridor_bvh(corridor_mesh):
    return build_bvh(corridor_mesh)


@pytest.fixture(scope="session")
def sphere_mesh():
    return icosphere(2)


@pytest.fixture
def red_quad():
    """Unit quad in the x=2 plane, solid red, centered on the x axis."""
    return quad(
        origin=(2.0, -0.5, -0.5),
        edge_u=(0.0, 1.0, 0.0),
        edge_v=(0.0, 0.0, 1.0),
        texture=solid_texture((255, 0, 0)),
    )


def unit_box_bounds(extent=1.0):
    return Aabb(np.zeros(3), np.full(3, float(extent)))


def loose_bounds(extent=1.0):
    """Sampling bounds over a unit-ish box with free yaw, level camera."""
    return SamplingBounds(
        unit_box_bounds(extent),
        roll_range=(0.0, 0.0),
        pitch_range=(0.0, 0.0),
        yaw_range=(-math.pi, math.pi),
    )


def random_rotation(rng):
    """Uniform-ish random rotation matrix (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_pose_matrix(rng, span=2.0):
    m = np.eye(4)
    m[:3, :3] = random_rotation(rng)
    m[:3, 3] = rng.uniform(-span, span, 3)
    return m


def make_pose(x=0.0, y=0.0, z=0.0, roll=0.0, pitch=0.0, yaw=0.0):
    return Pose6D(x, y, z, roll, pitch, yaw)
