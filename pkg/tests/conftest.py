import numpy as np
import pytest

from udfmesh import GridSpec, MeshUdf, primitives


@pytest.fixture
def unit_patch_mesh():
    """Unit square sheet in the z = 0 plane, two triangles."""
    return primitives.square_patch(side=1.0, z=0.0)


@pytest.fixture
def unit_patch_field(unit_patch_mesh):
    return MeshUdf(unit_patch_mesh)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def generic_spec(resolution: int, shift: float = 0.0037) -> GridSpec:
    """Lattice shifted off the dyadic grid so analytic surfaces like the
    half-unit sphere never pass exactly through corners."""
    return GridSpec(resolution, (-1 + shift,) * 3, (1 + shift,) * 3)
