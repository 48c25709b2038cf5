"""CSV and manifest serialization.

Matrices are plain row-major CSV with no header; floats are written
with repr() so every value round-trips exactly.  Factors serialize
either as a dense lower triangle (.csv) or as row,col,value triplets
(.trp, zero-based, strictly-lower entries plus the diagonal).
Manifests are key=value lines, one per line, in insertion order.
"""

from __future__ import annotations

import platform
import sys

import numpy as np
import scipy

from .model import CholFactor


def fmt(value):
    """String form of a scalar that parses back to the same value."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix(path, header=False, transpose=False):
    M = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return M.T if transpose else M


def write_vector(path, v):
    write_matrix(path, np.asarray(v, dtype=np.float64).reshape(-1, 1))


def read_vector(path):
    return read_matrix(path).ravel()


def write_factor(path, L, fmt_kind=None):
    """Serialize a factor; fmt_kind trp or csv, inferred from the suffix."""
    path = str(path)
    kind = fmt_kind or ("trp" if path.endswith(".trp") else "csv")
    if kind == "trp":
        with open(path, "w") as fh:
            for i, diag in enumerate(L.diagonals):
                for a, v in enumerate(diag):
                    if i > 0 and v == 0.0:
                        continue
                    fh.write(f"{a + i},{a},{repr(float(v))}\n")
    elif kind == "csv":
        write_matrix(path, L.dense())
    else:
        raise ValueError(f"unknown factor format {kind!r}")


def read_factor(path):
    path = str(path)
    if path.endswith(".trp"):
        rows, cols, vals = [], [], []
        with open(path) as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{ln}: expected row,col,value")
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
        if not rows:
            raise ValueError(f"{path}: empty triplet file")
        p = max(rows) + 1
        dense = np.zeros((p, p))
        dense[rows, cols] = vals
        return CholFactor.from_dense(dense)
    return CholFactor.from_dense(read_matrix(path))


def versions():
    return {
        "smoothchol_version": _package_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": platform.python_version(),
    }


def _package_version():
    pkg = sys.modules.get("smoothchol")
    return getattr(pkg, "__version__", "unknown")


def write_manifest(path, entries):
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={fmt(value)}\n")


def read_manifest(path):
    entries = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def write_scores(path, points, criterion):
    with open(path, "w") as fh:
        fh.write("lambda,lambda1,criterion,score,converged,iterations\n")
        for pt in points:
            fh.write(
                f"{repr(pt.lam)},{repr(pt.lam1)},{criterion},"
                f"{repr(pt.score)},{fmt(pt.converged)},{pt.iterations}\n"
            )


def write_metrics(path, values):
    with open(path, "w") as fh:
        fh.write("metric,value\n")
        for name, value in values.items():
            fh.write(f"{name},{fmt(value)}\n")
