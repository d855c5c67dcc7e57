import numpy as np

from turbobalance import BladeSet, DiskImbalance


def random_instance(rng, n, with_disk=False):
    """Production-scale instance: masses ~ N(1e4, 100^2), optional bare disk."""
    masses = rng.normal(1.0e4, 100.0, n)
    blades = BladeSet(masses)
    if with_disk:
        disk = DiskImbalance(float(rng.uniform(0.0, 500.0)), float(rng.uniform(0.0, 2 * np.pi)))
    else:
        disk = DiskImbalance()
    return blades, disk


def random_sigma(rng, n):
    return rng.permutation(n) + 1


def rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))
