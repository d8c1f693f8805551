from pathlib import Path

import pytest

from mrshade import load_scene

REPO = Path(__file__).resolve().parents[1]
SCENES = REPO / "scenes"


@pytest.fixture(scope="session")
def quad_scene():
    return load_scene(SCENES / "quad.json")


@pytest.fixture(scope="session")
def crease_scene():
    return load_scene(SCENES / "crease.json")


@pytest.fixture(scope="session")
def occluder_scene():
    return load_scene(SCENES / "occluder.json")


@pytest.fixture(scope="session")
def scene_paths():
    return {name: SCENES / f"{name}.json" for name in ("quad", "crease", "occluder")}
