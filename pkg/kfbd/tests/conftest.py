"""Shared fixtures"""

import json

import numpy as np
import pytest

from kfbd.core.kernels import GaussianKernel
from kfbd.utils import parallel


@pytest.fixture(autouse=True)
def single_thread():
    """Every test starts from the default thread count"""
    parallel.set_thread_count(1)
    yield
    parallel.set_thread_count(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian():
    return GaussianKernel(bandwidth=1.0)


@pytest.fixture
def sample_files(tmp_path):
    """Two small CSV sample files and one JSON file"""
    p = tmp_path / "p.csv"
    q = tmp_path / "q.csv"
    p.write_text("x\n0.0\n0.5\n1.0\n", encoding="utf-8")
    q.write_text("x\n0.2\n1.5\n", encoding="utf-8")
    j = tmp_path / "r.json"
    j.write_text(json.dumps([[0.0], [1.0]]), encoding="utf-8")
    return {"p": p, "q": q, "json": j}
