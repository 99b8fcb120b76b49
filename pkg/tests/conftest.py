import numpy as np
import pytest

from mocapvar import CameraModel, MPolicy
from mocapvar.scenario import Scenario


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_camera(rng, target, cam_id="c", distance=(3.0, 15.0), off_axis=0.3):
    """Camera at a random distance/direction from ``target``, aimed slightly off it."""
    target = np.asarray(target, float)
    d = rng.uniform(*distance)
    center = target + d * random_unit(rng)
    aim = target + off_axis * rng.normal(size=3)
    up = random_unit(rng)
    return CameraModel.looking_at(
        cam_id, center, aim, rng.uniform(0.005, 0.02), rng.uniform(1e-7, 1e-5), up=up
    )


def random_cameras(rng, target, m, **kw):
    return [random_camera(rng, target, f"c{j}", **kw) for j in range(m)]


@pytest.fixture
def identity_camera():
    return CameraModel("id", [0, 0, 0], np.eye(3), 0.01, 1e-5)


@pytest.fixture
def orthogonal_pair():
    """Two cameras 10 m out on +x and +y, both aimed at the origin (s = 1e-2 m)."""
    a = CameraModel.looking_at("a", [10, 0, 0], [0, 0, 0], 0.01, 1e-5)
    b = CameraModel.looking_at("b", [0, 10, 0], [0, 0, 0], 0.01, 1e-5)
    return a, b


@pytest.fixture
def limit():
    return MPolicy.limit()


def scenario_of(cameras, half=12.0, **kw):
    return Scenario(tuple(cameras), [-half] * 3, [half] * 3, **kw)
