"""Named map families usable from configuration files."""

from __future__ import annotations

import numpy as np

from .core import UsageError


def affine(a: float, b: float = 0.0):
    """x -> a*x + b on the reals."""
    a, b = float(a), float(b)

    def T(x):
        return a * x + b

    return T


def linear(matrix, offset=None):
    """x -> A x + c on fixed-dimension real vectors."""
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError("linear map needs a square matrix")
    c = np.zeros(A.shape[0]) if offset is None else np.array(offset, dtype=float)
    if c.shape != (A.shape[0],):
        raise UsageError("offset length must match the matrix size")

    def T(x):
        return A @ np.asarray(x, dtype=float) + c

    return T


def rotation(scale: float, angle: float, offset=(0.0, 0.0)):
    """Planar rotation by ``angle`` scaled by ``scale``, then shifted."""
    c, s = np.cos(angle), np.sin(angle)
    return linear(scale * np.array([[c, -s], [s, c]]), offset)


def identity():
    return lambda x: x


def constant(c):
    return lambda x: c


MAPPINGS = {
    "affine": affine,
    "linear": linear,
    "rotation": rotation,
    "identity": identity,
    "constant": constant,
}
