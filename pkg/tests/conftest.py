import numpy as np
import pytest

from dfdetect.fixtures import (
    Fixture,
    FixtureFace,
    FixtureShot,
    FixtureSpec,
    generate_fixture,
    generate_image_fixture,
)
from dfdetect.pipeline import reference_components
from dfdetect.types import PipelineConfig


def three_shot_spec() -> FixtureSpec:
    """The canonical 4s/5s/6s fixture: boundaries at 4s and 9s."""
    return FixtureSpec(shots=(
        FixtureShot(duration=4.0, background=(40, 60, 80),
                    faces=(FixtureFace("red", 0.9),)),
        FixtureShot(duration=5.0, background=(180, 80, 100),
                    faces=(FixtureFace("green", 0.2), FixtureFace("blue", 0.7))),
        FixtureShot(duration=6.0, background=(100, 150, 220),
                    faces=(FixtureFace("red", 0.9),)),
    ))


@pytest.fixture(scope="session")
def three_shot_fixture(tmp_path_factory) -> Fixture:
    path = tmp_path_factory.mktemp("fixtures") / "three_shot.avi"
    return generate_fixture(three_shot_spec(), str(path))


@pytest.fixture(scope="session")
def two_face_image_fixture(tmp_path_factory) -> Fixture:
    path = tmp_path_factory.mktemp("fixtures") / "two_faces.png"
    return generate_image_fixture(
        str(path),
        faces=(FixtureFace("red", 0.2), FixtureFace("cyan", 0.8)),
        background=(60, 60, 60),
    )


@pytest.fixture()
def config() -> PipelineConfig:
    return PipelineConfig()


@pytest.fixture()
def unit_vectors_rng():
    return np.random.default_rng(20260810)


def random_unit_vectors(rng, n: int, d: int) -> np.ndarray:
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def components_for(fixture: Fixture):
    return reference_components(lookup=fixture.lookup)
