"""Full-precision text rendering shared by the CSV and summary writers."""

from __future__ import annotations

import numpy as np


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def fmt_point(p) -> str:
    """Render a point, a tuple of points, or a tabulated function."""
    if hasattr(p, "grid") and hasattr(p, "values"):
        return "{" + ", ".join(f"{s}: {fmt_float(v)}" for s, v in zip(p.grid, p.values)) + "}"
    if isinstance(p, (tuple, list)):
        return "(" + ", ".join(fmt_point(q) for q in p) + ")"
    a = np.asarray(p, dtype=float)
    if a.ndim == 0:
        return fmt_float(a)
    return "[" + ", ".join(fmt_float(v) for v in a.reshape(-1)) + "]"
