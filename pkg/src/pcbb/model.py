"""Domain types shared by the preprocessing, bounding and search modules.

Arrays stored on these types are marked read-only after construction so the
objects can be handed to worker threads without copying.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import (
    DuplicatePair,
    IndexOutOfRange,
    MlClConflict,
    NonFiniteCoordinate,
    ShapeMismatch,
    ValidationError,
)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ShapeMismatch(f"points must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argwhere(~np.isfinite(pts))[0, 0])
            raise NonFiniteCoordinate(f"row {bad} has a non-finite coordinate")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = _frozen(self.labels, dtype=np.int64)
            if labels.shape != (pts.shape[0],):
                raise ShapeMismatch(f"expected {pts.shape[0]} labels, got {labels.shape}")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _normalize_pairs(pairs, kind, dedupe):
    out = []
    seen = set()
    for p in pairs:
        i, j = (int(v) for v in p)
        if i == j:
            raise IndexOutOfRange(f"{kind} pair ({i}, {j}) links a sample to itself")
        if i > j:
            i, j = j, i
        if (i, j) in seen:
            if dedupe:
                continue
            raise DuplicatePair(f"{kind} pair ({i}, {j}) listed twice")
        seen.add((i, j))
        out.append((i, j))
    return tuple(out)


@dataclass(frozen=True)
class ConstraintSet:
    """Must-link and cannot-link pairs, normalized so that ``i < j``."""

    ml_pairs: tuple = ()
    cl_pairs: tuple = ()

    def __post_init__(self):
        ml = _normalize_pairs(self.ml_pairs, "ML", dedupe=False)
        cl = _normalize_pairs(self.cl_pairs, "CL", dedupe=False)
        both = set(ml) & set(cl)
        if both:
            i, j = min(both)
            raise MlClConflict(f"pair ({i}, {j}) is both must-link and cannot-link")
        object.__setattr__(self, "ml_pairs", ml)
        object.__setattr__(self, "cl_pairs", cl)

    @classmethod
    def from_pairs(cls, ml_pairs=(), cl_pairs=(), dedupe=True) -> "ConstraintSet":
        return cls(
            _normalize_pairs(ml_pairs, "ML", dedupe),
            _normalize_pairs(cl_pairs, "CL", dedupe),
        )

    def max_index(self) -> int:
        idx = [max(p) for p in self.ml_pairs + self.cl_pairs]
        return max(idx) if idx else -1


@dataclass(frozen=True)
class WeightedPoint:
    coords: np.ndarray
    weight: int
    members: tuple


@dataclass(frozen=True, eq=False)
class CollapsedInstance:
    """Weighted pseudo-samples with cannot-link edges between them.

    ``constant`` is the within-component scatter removed by collapsing
    must-link components; it is added back to every objective value.
    """

    points: np.ndarray
    weights: np.ndarray
    members: tuple
    cl_edges: np.ndarray
    constant: float
    k: int

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim == 1:
            pts = _frozen(pts.reshape(-1, 1))
        w = _frozen(self.weights, dtype=np.int64)
        if w.shape != (pts.shape[0],) or np.any(w < 1):
            raise ValidationError("weights must be positive integers, one per pseudo-sample")
        members = tuple(tuple(int(i) for i in m) for m in self.members)
        if len(members) != pts.shape[0] or any(len(m) != wi for m, wi in zip(members, w)):
            raise ValidationError("members must match weights")
        edges = np.array(self.cl_edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            edges = np.sort(edges, axis=1)
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValidationError("cannot-link edge joins a pseudo-sample to itself")
            if edges.min() < 0 or edges.max() >= pts.shape[0]:
                raise IndexOutOfRange("cannot-link edge index out of range")
            edges = np.unique(edges, axis=0)
        edges.setflags(write=False)
        if not self.constant >= 0:
            raise ValidationError("constant must be nonnegative")
        if int(self.k) < 1:
            raise ValidationError("k must be at least 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "cl_edges", edges)
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_original(self) -> int:
        return int(self.weights.sum())

    @property
    def samples(self) -> list:
        return [WeightedPoint(self.points[s], int(self.weights[s]), self.members[s]) for s in range(self.n)]

    @cached_property
    def neighbors(self) -> tuple:
        """Cannot-link adjacency list over pseudo-sample indices."""
        adj = [[] for _ in range(self.n)]
        for a, b in self.cl_edges:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return tuple(tuple(sorted(x)) for x in adj)

    @cached_property
    def cl_degree(self) -> np.ndarray:
        deg = np.bincount(self.cl_edges.ravel(), minlength=self.n) if len(self.cl_edges) else np.zeros(self.n, int)
        deg.setflags(write=False)
        return deg

    @cached_property
    def coloring_order(self) -> np.ndarray:
        """CL-degree descending, then weight descending, then index."""
        idx = np.arange(self.n)
        order = np.lexsort((idx, -self.weights, -self.cl_degree))
        order.setflags(write=False)
        return order

    @cached_property
    def sq_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.points, self.points)

    def expand(self, assignment) -> np.ndarray:
        """Map a pseudo-sample assignment back onto original sample indices."""
        out = np.empty(self.n_original, dtype=np.int64)
        for s, m in enumerate(self.members):
            out[list(m)] = assignment[s]
        return out


@dataclass(frozen=True, eq=False)
class CentroidRegion:
    """K axis-aligned boxes, one per cluster centroid."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower)
        hi = _frozen(self.upper)
        if lo.shape != hi.shape or lo.ndim != 2:
            raise ShapeMismatch("lower and upper must both be K x d")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise NonFiniteCoordinate("region bounds must be finite")
        if np.any(lo > hi):
            raise ValidationError("region has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def k(self) -> int:
        return self.lower.shape[0]

    @property
    def boxes(self) -> list:
        return [(self.lower[k], self.upper[k]) for k in range(self.k)]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        return float(self.widths.max())

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def clamp(self, centroids) -> np.ndarray:
        return np.clip(centroids, self.lower, self.upper)

    def contains(self, centroids, tol=0.0) -> bool:
        c = np.asarray(centroids)
        return bool(np.all(c >= self.lower - tol) and np.all(c <= self.upper + tol))


@dataclass(frozen=True, eq=False)
class Solution:
    centroids: np.ndarray
    assignment: np.ndarray
    objective: float
    feasible: bool = True

    def __post_init__(self):
        object.__setattr__(self, "centroids", _frozen(self.centroids))
        object.__setattr__(self, "assignment", _frozen(self.assignment, dtype=np.int64))
        object.__setattr__(self, "objective", float(self.objective))


@dataclass(frozen=True)
class SolverConfig:
    k: int
    rel_gap_tol: float = 1e-3
    time_limit_s: float = float("inf")
    max_nodes: int = 5_000_000
    threads: int = 1
    seed: int = 0
    group_size_max: int = 4
    ld_iterations: int = 20
    ld_step0: float = 1.0
    ld_trigger_gap: float = 0.02
    exact_enum: int = 4096
    heuristic_restarts: int = 100
    paper_rho_rule: bool = False
    symmetry_breaking: bool = True
    polish_iters: int = 20
    progress_interval_s: float = 1.0

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValidationError("k must be a positive integer")
        if not 0 < self.rel_gap_tol <= 1:
            raise ValidationError("rel_gap_tol must lie in (0, 1]")
        if self.threads < 1:
            raise ValidationError("threads must be positive")
        if self.group_size_max < 1:
            raise ValidationError("group_size_max must be positive")
        if self.k ** self.group_size_max > 10**6:
            raise ValidationError(
                f"k**group_size_max = {self.k}**{self.group_size_max} exceeds 1e6 enumerations per group"
            )
        if self.ld_iterations < 0 or self.ld_step0 <= 0:
            raise ValidationError("ld_iterations must be >= 0 and ld_step0 > 0")
        if self.exact_enum < 0:
            raise ValidationError("exact_enum must be >= 0")
        if self.heuristic_restarts < 1:
            raise ValidationError("heuristic_restarts must be positive")
        if self.max_nodes < 1 or not self.time_limit_s > 0:
            raise ValidationError("max_nodes and time_limit_s must be positive")


def validate_instance(data: Dataset, cons: ConstraintSet, k: int):
    """Check a raw problem and return it unchanged when every invariant holds."""
    if int(k) < 1:
        raise ValidationError("k must be at least 1")
    if not isinstance(data, Dataset):
        data = Dataset(data)
    if not isinstance(cons, ConstraintSet):
        cons = ConstraintSet(*cons)
    top = cons.max_index()
    if top >= data.n:
        raise IndexOutOfRange(f"constraint index {top} out of range for n={data.n}")
    return data, cons


def sse(points, weights, centroids, assignment) -> float:
    diff = points - centroids[assignment]
    return float(np.dot(weights, np.einsum("ij,ij->i", diff, diff)))


def recompute_objective(inst: CollapsedInstance, sol: Solution) -> float:
    """Weighted SSE of ``sol`` on ``inst`` plus the collapse constant."""
    a = np.asarray(sol.assignment)
    c = np.asarray(sol.centroids)
    if a.shape != (inst.n,):
        raise ShapeMismatch(f"assignment has length {a.shape}, expected {inst.n}")
    if c.ndim != 2 or c.shape[1] != inst.d:
        raise ShapeMismatch("centroids must be K x d")
    if a.size and (a.min() < 0 or a.max() >= c.shape[0]):
        raise ShapeMismatch("assignment refers to a cluster outside [0, K)")
    return sse(inst.points, inst.weights, c, a) + inst.constant


def is_cl_feasible(inst: CollapsedInstance, assignment) -> bool:
    if not len(inst.cl_edges):
        return True
    a = np.asarray(assignment)
    return bool(np.all(a[inst.cl_edges[:, 0]] != a[inst.cl_edges[:, 1]]))


def check_pairs(assignment, cons: ConstraintSet) -> bool:
    """Independent check that a labeling on original indices honors every pair."""
    a = np.asarray(assignment)
    return all(a[i] == a[j] for i, j in cons.ml_pairs) and all(a[i] != a[j] for i, j in cons.cl_pairs)
