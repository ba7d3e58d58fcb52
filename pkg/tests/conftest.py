import pathlib
import sys

import pytest

from frontspeed import load_model

sys.path.insert(0, str(pathlib.Path(__file__).parent))

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir():
    return MODELS


@pytest.fixture(scope="session")
def fisher():
    return load_model(MODELS / "fisher.toml")


@pytest.fixture(scope="session")
def degenerate():
    return load_model(MODELS / "degenerate_fisher.toml")


@pytest.fixture(scope="session")
def convection():
    return load_model(MODELS / "fisher_step_convection.toml")


@pytest.fixture(scope="session")
def three_jumps():
    return load_model(MODELS / "three_jumps.toml")
