import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "tests"))

FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_registry_path() -> Path:
    return FIXTURES / "registry.json"


@pytest.fixture(scope="session")
def fixture_data_dir() -> Path:
    return FIXTURES / "data"


@pytest.fixture(scope="session")
def bundled_registry_path() -> Path:
    return REPO / "src" / "oxbench" / "data" / "openx_registry.json"
