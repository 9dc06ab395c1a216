import pathlib

import numpy as np
import pytest

from biparsdp import load_instance

INSTANCE_DIR = pathlib.Path(__file__).resolve().parent.parent / "instances"


@pytest.fixture(scope="session")
def small():
    """Two-variable instance with a single sign-indefinite edge."""
    return load_instance(INSTANCE_DIR / "small.json")


@pytest.fixture(scope="session")
def cycle4():
    """Four-variable instance whose sparsity graph is a 4-cycle."""
    return load_instance(INSTANCE_DIR / "cycle4.json")


@pytest.fixture(scope="session")
def small_path():
    return str(INSTANCE_DIR / "small.json")


@pytest.fixture(scope="session")
def cycle4_path():
    return str(INSTANCE_DIR / "cycle4.json")


# reference optimizers for the two bundled instances
SMALL_XSTAR = np.array([1.731, -1.167])
CYCLE4_XSTAR = np.array([7.818, -8.331, 1.721, -7.019])
CYCLE4_XMAT = np.array([
    [61.12, -65.13, 13.45, -54.87],
    [-65.13, 69.41, -14.34, 58.48],
    [13.45, -14.34, 2.961, -12.08],
    [-54.87, 58.48, -12.08, 49.27],
])
CYCLE4_MU = {(0, 1): 18.58, (1, 2): 12.84, (0, 3): 8.897, (2, 3): 0.3215}


def max_sign_error(x, ref):
    """Max coordinate error of x against ref, up to a global sign."""
    x = np.asarray(x)
    ref = np.asarray(ref)
    return min(np.max(np.abs(x - ref)), np.max(np.abs(x + ref)))
