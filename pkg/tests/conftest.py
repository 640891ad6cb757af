import numpy as np
import pytest

from qrfem import build_structured_mesh, tag_boundary, tag_region


def tagged_mesh(nx, ny, gamma0=("left", "bottom"),
                g_box=(0.0, 0.8, 0.0, 0.5),
                omega_box=(0.25, 0.75, 0.25, 0.75)):
    """Unit-square mesh with the default experiment tagging."""
    mesh = build_structured_mesh(nx, ny)
    mesh = tag_boundary(mesh, gamma0)
    mesh = tag_region(mesh, g_box, "G")
    mesh = tag_region(mesh, omega_box, "omega")
    return mesh


@pytest.fixture(scope="session")
def mesh8():
    return tagged_mesh(8, 8)


@pytest.fixture(scope="session")
def mesh16():
    return tagged_mesh(16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
