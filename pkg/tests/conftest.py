import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthdata import build_dataset  # noqa: E402


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """3 train + 2 test videos per class, 60 frames each; cheap fixture."""
    root = tmp_path_factory.mktemp("smallset")
    manifest = build_dataset(root, n_train=3, n_test=2, seed=7, frames=60)
    return manifest


@pytest.fixture(scope="session")
def e2e_dataset(tmp_path_factory):
    """40 train + 20 test videos per class, used by the acceptance suite."""
    root = tmp_path_factory.mktemp("e2eset")
    manifest = build_dataset(root, n_train=40, n_test=20, seed=11, frames=90)
    return manifest
