import pathlib
import sys

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def scenario_dir() -> pathlib.Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def case_study_path() -> str:
    return str(SCENARIO_DIR / "case-study.toml")


@pytest.fixture(scope="session")
def perfect_channel_path() -> str:
    return str(SCENARIO_DIR / "perfect-channel.toml")
