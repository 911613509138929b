"""Pytest configuration and shared fixtures."""

import os
from collections.abc import Generator
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from xling_sentiment.config import ExperimentConfig
from xling_sentiment.embedding_store import VectorSpace
from xling_sentiment.fixtures import FixtureSizes, make_fixtures


@pytest.fixture(autouse=True)
def isolated_env() -> Generator[None, None, None]:
    """Keep the developer's XLING_* environment out of tests."""
    clean = {key: value for key, value in os.environ.items() if not key.startswith("XLING_")}
    with patch.dict(os.environ, clean, clear=True):
        yield


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(20240611)


@pytest.fixture
def small_space() -> VectorSpace:
    """Four 2-d vectors with known cosine geometry."""
    return VectorSpace(
        "en",
        ["east", "north", "west", "northeast"],
        [[1.0, 0.0], [0.0, 2.0], [-3.0, 0.0], [1.0, 1.0]],
    )


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Noise-free synthetic dataset shared by the pipeline tests."""
    out = tmp_path_factory.mktemp("fixtures")
    make_fixtures(out, seed=0, sizes=FixtureSizes())
    return out


@pytest.fixture(scope="session")
def noisy_fixture_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Same dataset as ``fixture_dir`` with source vectors perturbed by sigma = 0.5."""
    out = tmp_path_factory.mktemp("fixtures-noisy")
    make_fixtures(out, seed=0, sizes=FixtureSizes(noise=0.5))
    return out


@pytest.fixture
def fixture_config(fixture_dir: Path) -> ExperimentConfig:
    """Config pointing at the noise-free dataset, with fewer model epochs."""
    return ExperimentConfig.from_file(fixture_dir / "experiment.env", ["svm_epochs=30"])


def pytest_configure(config: pytest.Config) -> None:
    """Configure custom pytest markers."""
    config.addinivalue_line(
        "markers", "unit: Unit tests of a single component, no files beyond tmp_path"
    )
    config.addinivalue_line("markers", "integration: Pipelines run over generated fixture datasets")
    config.addinivalue_line("markers", "e2e: End-to-end tests that drive the command line")
    config.addinivalue_line("markers", "slow: Tests that take a long time to run")
