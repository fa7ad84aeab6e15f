import numpy as np
import pytest

from tests.generate_test_data import noisy_tiny_model, default_gaussian_model, reveal_model, uninformative_model


@pytest.fixture(autouse=True)
def runtime_env(tmp_path, monkeypatch):
    """运行时配置写到临时目录，避免污染 data/"""
    path = tmp_path / "runtime_env.json"
    monkeypatch.setenv("RUNTIME_ENV_PATH", str(path))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def reveal():
    return reveal_model()


@pytest.fixture
def uninformative():
    return uninformative_model()


@pytest.fixture
def noisy_tiny():
    return noisy_tiny_model()


@pytest.fixture(scope="session")
def gaussian_model():
    return default_gaussian_model(seed=0)
