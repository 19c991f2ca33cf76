"""Shared rods and RNG helpers for the test suite.

The two benchmark rods (2 and 10 sections) share one set of material
parameters: L = 0.3 m, r = 0.01 m, E = 1 MPa, nu = 0.5, rho = 1000 kg/m^3,
viscosity 100 Pa.s.  Zero-gravity clones exist for the decay properties.
"""

import numpy as np
import pytest

from pcsrod import RodSpec

MATERIAL = dict(length=0.3, radius=0.01, youngs_modulus=1e6,
                poisson_ratio=0.5, density=1000.0, shear_viscosity=100.0)


def make_rod(num_sections, gravity=None):
    kwargs = dict(MATERIAL, num_sections=num_sections)
    if gravity is not None:
        kwargs["gravity_twist"] = np.asarray(gravity, dtype=float)
    return RodSpec(**kwargs)


@pytest.fixture(scope="session")
def rod2():
    return make_rod(2)


@pytest.fixture(scope="session")
def rod10():
    return make_rod(10)


@pytest.fixture(scope="session")
def rod2_nograv():
    return make_rod(2, gravity=np.zeros(6))


@pytest.fixture(scope="session")
def rod10_nograv():
    return make_rod(10, gravity=np.zeros(6))


def rng(seed):
    return np.random.default_rng(seed)


def random_strain(gen, num_sections, angular_scale=5.0, linear_scale=0.3):
    """Random strain vector near the straight reference; blocks angular-first."""
    q = np.tile(np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]), num_sections)
    q += np.concatenate([
        np.concatenate([gen.uniform(-angular_scale, angular_scale, 3),
                        gen.uniform(-linear_scale, linear_scale, 3)])
        for _ in range(num_sections)])
    return q
