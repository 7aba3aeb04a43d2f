"""Shared fixtures.

The first TIN / ground-filter / DEM call in a process pays numba's JIT
compilation cost.  The session-scoped warmup below runs every jitted entry
point once on tiny inputs, so the timed tests in test_acceptance.py measure
the algorithms and not the compiler.
"""

import numpy as np
import pytest

from roadforge import cloud, groundfilter, tin


@pytest.fixture(scope="session", autouse=True)
def _warm_jit_kernels():
    rng = np.random.default_rng(7)
    xy = rng.uniform(0.0, 90.0, (120, 2))
    pts = np.column_stack([xy, np.zeros(len(xy))])
    pc = cloud.PointCloud(pts)
    res = groundfilter.filter_ground(
        pc, groundfilter.FilterParams(initial_cell=40.0, min_cell=2.0))
    tin.rasterize_dem(res.tin, cell=10.0)
    # the shape-constraint branch compiles separately
    groundfilter.filter_ground(
        pc, groundfilter.FilterParams(enable_nonobtuse=True))
    yield
