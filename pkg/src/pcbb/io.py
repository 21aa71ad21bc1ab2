"""Dataset and constraint files, synthetic generators and JSON reports."""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import IndexOutOfRange, ParseError, RaggedRows, Unsatisfiable
from .model import ConstraintSet, Dataset


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, labels_last: bool = False) -> Dataset:
    """Read comma-separated numeric rows, skipping a non-numeric header row."""
    rows, lines = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or all(c == "" for c in row):
                continue
            if not rows and not lines and not all(_is_number(c) for c in row):
                lines.append(lineno)  # header
                continue
            if rows and len(row) != len(rows[0]):
                raise RaggedRows(f"expected {len(rows[0])} columns, found {len(row)}", lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
    if not rows:
        raise ParseError("no data rows")
    arr = np.array(rows)
    if labels_last:
        if arr.shape[1] < 2:
            raise ParseError("--labels-last needs at least one feature column")
        labels = arr[:, -1]
        if not np.all(labels == np.round(labels)):
            raise ParseError("label column must hold integers")
        return Dataset(arr[:, :-1], labels.astype(np.int64))
    return Dataset(arr)


def load_labels(path) -> np.ndarray:
    with open(path) as fh:
        out = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(int(line.split(",")[-1]))
            except ValueError:
                if not out:
                    continue  # header
                raise ParseError(f"bad label {line!r}", lineno) from None
    return np.array(out, dtype=np.int64)


def parse_constraints(path, n: int) -> ConstraintSet:
    """Read ``ML i j`` / ``CL i j`` lines; ``#`` starts a comment."""
    ml, cl = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0].upper() not in ("ML", "CL"):
                raise ParseError(f"expected 'ML i j' or 'CL i j', got {line!r}", lineno)
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(f"indices must be integers in {line!r}", lineno) from None
            if not (0 <= i < n and 0 <= j < n):
                raise IndexOutOfRange(f"line {lineno}: index out of range for n={n}")
            if i == j:
                raise IndexOutOfRange(f"line {lineno}: pair links sample {i} to itself")
            (ml if parts[0].upper() == "ML" else cl).append((i, j))
    return ConstraintSet.from_pairs(ml, cl)


def write_constraints(path, cons: ConstraintSet):
    with open(path, "w") as fh:
        for i, j in cons.ml_pairs:
            fh.write(f"ML {i} {j}\n")
        for i, j in cons.cl_pairs:
            fh.write(f"CL {i} {j}\n")


def write_csv(path, points, labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for r, row in enumerate(points):
            vals = [repr(float(v)) for v in row]
            if labels is not None:
                vals.append(str(int(labels[r])))
            w.writerow(vals)


def generate_synthetic(n: int, d: int, k_true: int, seed: int, spread: float = 10.0) -> Dataset:
    """Isotropic unit-variance Gaussian blobs with uniformly drawn means."""
    if n < k_true or k_true < 1:
        raise ValueError("need n >= k_true >= 1")
    rng = np.random.default_rng(seed)
    means = rng.uniform(-1.0, 1.0, size=(k_true, d)) * spread
    sizes = [n // k_true] * k_true
    sizes[-1] += n - sum(sizes)
    pts = np.concatenate([rng.normal(means[c], 1.0, size=(sizes[c], d)) for c in range(k_true)])
    labels = np.repeat(np.arange(k_true), sizes)
    return Dataset(pts, labels)


def generate_constraints(labels, count_ml: int, count_cl: int, seed: int) -> ConstraintSet:
    """Random-pair sampling: same-label pairs become ML, different-label pairs CL."""
    labels = np.asarray(labels)
    n = len(labels)
    _, counts = np.unique(labels, return_counts=True)
    same = int(sum(c * (c - 1) // 2 for c in counts))
    diff = n * (n - 1) // 2 - same
    if count_ml > same or count_cl > diff:
        raise Unsatisfiable(
            f"asked for {count_ml} ML / {count_cl} CL pairs, labels allow {same} / {diff}"
        )
    rng = np.random.default_rng(seed)
    ml, cl = {}, {}
    while len(ml) < count_ml or len(cl) < count_cl:
        i, j = rng.choice(n, size=2, replace=False)
        pair = (int(min(i, j)), int(max(i, j)))
        if labels[i] == labels[j]:
            if len(ml) < count_ml:
                ml.setdefault(pair, None)
        elif len(cl) < count_cl:
            cl.setdefault(pair, None)
    return ConstraintSet(tuple(ml), tuple(cl))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def build_report(result, data: Dataset, config, constant: float, metrics=None) -> dict:
    """Report dictionary; non-finite numbers become null so the JSON stays standard."""
    st = result.stats
    best = result.best
    report = {
        "status": result.status.value,
        "objective": _num(result.ub) if best is not None else None,
        "lower_bound": _num(result.lb),
        "upper_bound": _num(result.ub),
        "rel_gap": _num(result.rel_gap),
        "constant_term": constant,
        "k": config.k,
        "n": data.n,
        "d": data.d,
        "nodes": st.nodes_processed,
        "wall_time_s": st.wall_time_s,
        "time_per_node_s": st.time_per_node_s,
        "core_hours": st.core_hours,
        "threads": config.threads,
        "seed": config.seed,
        "centroids": best.centroids.tolist() if best is not None else None,
        "assignment": best.assignment.tolist() if best is not None else None,
    }
    if metrics is not None:
        report["metrics"] = metrics
    report["config"] = {
        k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in vars(config).items()
    }
    return report


TIMING_KEYS = ("wall_time_s", "time_per_node_s", "core_hours")


def dump_report(report: dict, path=None) -> str:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
