"""CSV and JSON writers with deterministic formatting.

Floats are written with 17 significant digits so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "write_csv",
    "read_csv",
    "write_json",
    "profile_csv",
    "density_csv",
    "trace_csv",
    "to_jsonable",
]


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path, columns: dict):
    """Write equal-length columns under a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=object) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    lines = [",".join(names)]
    lines += [",".join(_fmt(c[i]) for c in cols) for i in range(n)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv` into a dict of float arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return None
        return f
    if hasattr(obj, "value") and hasattr(obj, "name"):
        return obj.value
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def profile_csv(path, profile, spec):
    """Stationary profile as (x, u_inf, h_u_inf, log_u_inf) at cell centres."""
    x = profile.grid.centers
    u = profile.point_values
    return write_csv(path, {"x": x, "u_inf": u, "h_u_inf": spec.h(x) * u, "log_u_inf": profile.log_values()})


def density_csv(path, field):
    return write_csv(path, {"x": field.grid.centers, "u": field.cells})


def trace_csv(path, trace, extra: dict | None = None):
    """Per-step trace (t, N_R, mass); ``extra`` maps column names to
    per-snapshot series, written on snapshot rows and blank elsewhere."""
    cols = {"t": trace.times, "N_R": trace.firing_rate, "mass": trace.mass}
    if extra:
        idx = np.searchsorted(trace.times, trace.snapshot_times - 0.5 * trace.dt)
        for name, series in extra.items():
            col = np.full(trace.times.size, np.nan)
            col[idx] = series
            cols[name] = col
    return write_csv(path, cols)
