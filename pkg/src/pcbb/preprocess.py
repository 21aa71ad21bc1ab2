"""Turn a raw (dataset, constraints) pair into an equivalent collapsed instance."""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import RootInfeasible
from .model import CollapsedInstance, ConstraintSet, Dataset, validate_instance


@dataclass(frozen=True)
class MlComponents:
    component_id: np.ndarray
    component_members: tuple


def build_ml_components(n: int, ml_pairs) -> MlComponents:
    pairs = np.asarray(ml_pairs, dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, raw = connected_components(graph, directed=False)
    # relabel so components are ordered by their smallest member
    first = {}
    comp_id = np.empty(n, dtype=np.int64)
    for i, c in enumerate(raw):
        comp_id[i] = first.setdefault(c, len(first))
    members = [[] for _ in range(len(first))]
    for i, c in enumerate(comp_id):
        members[c].append(i)
    comp_id.setflags(write=False)
    return MlComponents(comp_id, tuple(tuple(m) for m in members))


def collapse_components(data: Dataset, comps: MlComponents):
    """Return (pseudo-sample coordinates, weights, constant).

    The constant is the raw within-component sum of squared deviations,
    which equals (t - 1) times the sample-covariance trace for t >= 2 and
    is zero for singletons.
    """
    X = data.points
    coords = np.empty((len(comps.component_members), data.d))
    weights = np.empty(len(comps.component_members), dtype=np.int64)
    constant = 0.0
    for c, members in enumerate(comps.component_members):
        block = X[list(members)]
        mean = block.mean(axis=0)
        coords[c] = mean
        weights[c] = len(members)
        if len(members) > 1:
            constant += float(((block - mean) ** 2).sum())
    return coords, weights, constant


def inherit_cl_edges(comps: MlComponents, cl_pairs) -> np.ndarray:
    edges = set()
    for i, j in cl_pairs:
        a, b = int(comps.component_id[i]), int(comps.component_id[j])
        if a == b:
            raise RootInfeasible(
                f"cannot-link ({i}, {j}) joins two samples of the same must-link component",
                witness=("ml_component_cl", (i, j), comps.component_members[a]),
            )
        edges.add((min(a, b), max(a, b)))
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def collapse(data: Dataset, cons: ConstraintSet, k: int) -> CollapsedInstance:
    data, cons = validate_instance(data, cons, k)
    comps = build_ml_components(data.n, cons.ml_pairs)
    coords, weights, constant = collapse_components(data, comps)
    edges = inherit_cl_edges(comps, cons.cl_pairs)
    return CollapsedInstance(coords, weights, comps.component_members, edges, constant, k)


def _k_colorable(graph: nx.Graph, k: int) -> bool:
    """Exact backtracking colorability test for small graphs."""
    order = sorted(graph.nodes, key=lambda v: (-graph.degree[v], v))
    color = {}

    def place(pos):
        if pos == len(order):
            return True
        v = order[pos]
        used = {color[u] for u in graph[v] if u in color}
        # symmetry: never open more than one new color at a time
        limit = min(k, max(color.values(), default=-1) + 2)
        for c in range(limit):
            if c not in used:
                color[v] = c
                if place(pos + 1):
                    return True
                del color[v]
        return False

    return place(0)


def check_root_feasibility(inst: CollapsedInstance, exact_limit: int = 20) -> str:
    """Best-effort K-colorability check of the cannot-link graph.

    Returns ``"ok"`` when a coloring with at most K colors is known and
    ``"unknown"`` when the graph is too large for the exact test; raises
    :class:`RootInfeasible` when the graph is proven not K-colorable.
    """
    if not len(inst.cl_edges):
        return "ok"
    graph = nx.Graph()
    graph.add_edges_from(map(tuple, inst.cl_edges.tolist()))
    coloring = nx.greedy_color(graph, strategy="largest_first")
    if max(coloring.values()) + 1 <= inst.k:
        return "ok"
    for clique in nx.find_cliques(graph):
        if len(clique) > inst.k:
            raise RootInfeasible(
                f"cannot-link graph contains a {len(clique)}-clique, more than k={inst.k} clusters",
                witness=("clique", tuple(sorted(clique))),
            )
    if graph.number_of_nodes() > exact_limit:
        return "unknown"
    for comp in nx.connected_components(graph):
        sub = graph.subgraph(comp)
        if not _k_colorable(sub, inst.k):
            raise RootInfeasible(
                f"cannot-link graph is not {inst.k}-colorable",
                witness=("uncolorable", tuple(sorted(comp))),
            )
    return "ok"
