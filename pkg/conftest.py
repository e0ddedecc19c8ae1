import numpy as np
import pytest

from ovf.synthesis import RANK1, RANK2, assemble
from ovf.tests.factories import GeneratorSpecFactory


@pytest.fixture
def rng():
    """Return a seeded numpy generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def instance():
    """Return a generated four-atom instance with mixed cases and twists."""
    return assemble(GeneratorSpecFactory(atoms=4, seed=11, twist=True))


@pytest.fixture
def rank1_instance():
    """Return a single-atom rank-one instance with split 0.3."""
    return assemble(GeneratorSpecFactory(atoms=1, case=RANK1, split=0.3, seed=7, twist=False))


@pytest.fixture
def rank2_instance():
    """Return a single-atom rank-two instance."""
    return assemble(GeneratorSpecFactory(atoms=1, case=RANK2, seed=5, twist=False))


@pytest.fixture
def out_dir(tmp_path):
    """Return a fresh directory for command outputs."""
    path = tmp_path / "out"
    path.mkdir()
    return path
