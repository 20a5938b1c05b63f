"""Test potentials shared across modules."""
import numpy as np

from xyaubry.potential import polynomial

# q(a) = (a - 1/4)^2 (a - 3/4)^2: two equal wells
DOUBLE_WELL_Q = [0.03515625, -0.375, 1.375, -2.0, 1.0]


def double_well():
    """(x - y)^2 + q(x); diagonal minima at 1/4 and 3/4."""
    c = np.zeros((5, 5))
    c[:, 0] = DOUBLE_WELL_Q
    c[2, 0] += 1.0
    c[1, 1] -= 2.0
    c[0, 2] += 1.0
    return polynomial(c)
