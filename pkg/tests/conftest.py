import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lpffd import fixtures
from lpffd.geometry import LatticeGrid, TriMesh


@pytest.fixture(scope="session")
def ginger():
    return fixtures.gingerbread_man()


@pytest.fixture(scope="session")
def ginger_grid(ginger):
    return LatticeGrid.from_mesh(ginger, (10, 10))


@pytest.fixture(scope="session")
def bird():
    return fixtures.bird()


@pytest.fixture(scope="session")
def sphere():
    return fixtures.sphere_scene()


@pytest.fixture
def quad_mesh():
    """Two-triangle unit quad."""
    return TriMesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        np.array([[0, 1, 2], [0, 2, 3]]),
    )


@pytest.fixture
def strip_mesh():
    """Five-vertex triangle strip along x."""
    verts = np.array(
        [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.5, 1.0], [1.5, 1.0]]
    )
    tris = np.array([[0, 1, 3], [1, 4, 3], [1, 2, 4]])
    return TriMesh(verts, tris)
