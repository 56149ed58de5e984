"""Shared pytest fixtures for qcorr tests."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from qcorr.encoding import ProbArray, ProbArray2D


@pytest.fixture
def fixtures_dir() -> Path:
    """Return path to test fixtures directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def cli_runner() -> CliRunner:
    """Return Click CLI test runner."""
    return CliRunner()


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch):
    """Run every test with default settings regardless of the caller's environment."""
    monkeypatch.delenv("QCORR_MAX_QUBITS", raising=False)
    monkeypatch.delenv("QCORR_DEBUG", raising=False)


@pytest.fixture
def random_prob(rng: np.random.Generator):
    """Factory for strictly positive random probability arrays."""

    def _create(n: int, generator: np.random.Generator | None = None) -> ProbArray:
        values = (generator or rng).random(n) + 0.05
        return ProbArray(values / values.sum())

    return _create


@pytest.fixture
def random_prob_2d(rng: np.random.Generator):
    """Factory for strictly positive random N x N probability arrays."""

    def _create(n: int, generator: np.random.Generator | None = None) -> ProbArray2D:
        values = (generator or rng).random((n, n)) + 0.05
        return ProbArray2D(values / values.sum())

    return _create


@pytest.fixture
def delta():
    """Factory for one-hot probability arrays."""

    def _create(n: int, at: int) -> ProbArray:
        values = np.zeros(n)
        values[at] = 1.0
        return ProbArray(values)

    return _create


@pytest.fixture
def temp_array_file(tmp_path: Path):
    """Factory fixture to write arrays as CSV or JSON files."""

    def _create(values, name: str = "array.csv") -> Path:
        file_path = tmp_path / name
        array = np.asarray(values, dtype=np.float64)
        if file_path.suffix == ".json":
            file_path.write_text(json.dumps(array.tolist()))
        else:
            rows = array.reshape(array.shape[0], -1)
            file_path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in rows) + "\n")
        return file_path

    return _create
