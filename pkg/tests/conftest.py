import numpy as np
import pytest

from refnav.geometry import OrientedBox3D
from refnav.world import Edge, Environment, ObjectAnnotation, Task, Viewpoint
from refnav.worldgen import SynthesisParams, generate_synthetic_world

IDENTITY_AXES = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def make_box(center, radii=(0.2, 0.2, 0.2), axes=IDENTITY_AXES):
    return OrientedBox3D(center=tuple(center), axes=axes, radii=tuple(radii))


def make_object(i, center, category="chair", label=None, radii=(0.2, 0.2, 0.2)):
    return ObjectAnnotation(
        id=f"o{i}", label=label or f"plain {category}", category=category,
        box=make_box(center, radii=radii))


@pytest.fixture
def chain_env():
    """a - b - c at 2 m spacing with a target object near c."""
    vps = [
        Viewpoint("a", (0.0, 0.0, 1.4)),
        Viewpoint("b", (2.0, 0.0, 1.4)),
        Viewpoint("c", (4.0, 0.0, 1.4)),
    ]
    edges = [Edge("a", "b", 2.0), Edge("b", "c", 2.0)]
    objects = [
        make_object(0, (4.5, 1.0, 1.2), category="kettle", label="red kettle"),
        make_object(1, (4.0, -1.5, 1.0), category="chair", label="blue chair"),
        make_object(2, (2.5, 1.5, 1.6), category="lamp", label="green lamp"),
        make_object(3, (5.0, -0.5, 0.8), category="chair", label="tall chair"),
    ]
    return Environment(id="chain", viewpoints=vps, edges=edges,
                       objects=objects, feature_seed=11)


@pytest.fixture
def chain_task(chain_env):
    return Task(
        id="chain-t0",
        instruction=("find", "the", "red", "kettle"),
        start_viewpoint="a",
        start_heading=0.0,
        start_elevation=0.0,
        target_object="o0",
        goal_viewpoints=("c",),
    )


@pytest.fixture(scope="session")
def seed7_world():
    return generate_synthetic_world(
        SynthesisParams(n_viewpoints=10, n_objects=8, rng_seed=7))


@pytest.fixture(scope="session")
def small_suite():
    """Three small worlds for cross-module properties."""
    return [
        generate_synthetic_world(SynthesisParams(n_viewpoints=8, n_objects=6, rng_seed=s))
        for s in (3, 4, 5)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
