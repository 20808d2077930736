"""Input checks shared by the estimators and the harness."""

import numpy as np

from .algebra import unit_residual
from .scene import MeasurementSet


def check_estimates(estimates, n=None, tol=1e-10, anchor=0):
    """Validate an (n, 8) array of unit dual quaternions with the anchor at identity."""
    X = np.array(estimates, dtype=float)
    if X.ndim != 2 or X.shape[1] != 8:
        raise ValueError(f"estimates must have shape (n, 8), got {X.shape}")
    if n is not None and X.shape[0] != n:
        raise ValueError(f"expected {n} estimates, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("estimates contain NaN or Inf")
    bad = [i for i, d in enumerate(X) if unit_residual(d) > tol]
    if bad:
        raise ValueError(f"estimates for nodes {bad} are not unit dual quaternions")
    if anchor is not None and np.max(np.abs(X[anchor] - np.eye(8)[0])) > tol:
        raise ValueError(f"anchor node {anchor} must start at the identity")
    return X


def check_measurements(measurements, tol=1e-12):
    """Coerce a mapping ``{(i, j): 8-vector}`` into a validated MeasurementSet."""
    if not isinstance(measurements, MeasurementSet):
        measurements = MeasurementSet(dict(measurements))
    if not len(measurements):
        raise ValueError("no measurements")
    for (i, j), d in measurements.items():
        if i == j:
            raise ValueError(f"self-measurement on node {i}")
        if (j, i) not in measurements:
            raise ValueError(f"measurement ({i}, {j}) has no reverse direction")
        if d.shape != (8,) or not np.all(np.isfinite(d)):
            raise ValueError(f"measurement ({i}, {j}) is not a finite 8-vector")
        if unit_residual(d) > tol:
            raise ValueError(f"measurement ({i}, {j}) violates unit constraints")
    return measurements


def n_nodes(measurements):
    return 1 + max(max(k) for k in measurements)
