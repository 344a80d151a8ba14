"""Monotone-chain half hulls for point sets sorted by abscissa."""

import numpy as np


def _half_hull(x, y, sign):
    keep = []
    for i in range(len(x)):
        while len(keep) >= 2:
            j, k = keep[-2], keep[-1]
            cross = (x[k] - x[j]) * (y[i] - y[j]) - (y[k] - y[j]) * (x[i] - x[j])
            # lower hull keeps strict left turns, upper hull strict right turns
            if sign * cross <= 0.0:
                keep.pop()
            else:
                break
        keep.append(i)
    return np.asarray(keep, dtype=np.intp)


def lower_hull(x, y):
    """Indices of the lower convex hull of points with strictly increasing ``x``."""
    return _half_hull(np.asarray(x, float), np.asarray(y, float), 1.0)


def upper_hull(x, y):
    """Indices of the upper convex hull of points with strictly increasing ``x``."""
    return _half_hull(np.asarray(x, float), np.asarray(y, float), -1.0)
