"""Best-bound branch-and-bound over centroid boxes."""
from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .bounds import (
    GroupTables,
    build_grouping,
    exact_region_value,
    lower_bound_forced_split,
    lower_bound_lagrangian,
    labeling_cost,
    labeling_solution,
    polish_lloyd_constrained,
    upper_bound_kcoloring,
)
from .errors import DegenerateRegion, NodeInfeasible, RootInfeasible
from .geometry import (
    ViableSets,
    eliminate_assignments,
    force_assignments,
    hull_tighten,
    propagate_links,
    root_region,
)
from .heuristics import multi_restart
from .model import CentroidRegion, CollapsedInstance, ConstraintSet, Dataset, Solution, SolverConfig
from .preprocess import check_root_feasibility, collapse

log = logging.getLogger(__name__)

DEGENERATE_WIDTH = 1e-12
# GroupTables memory cap, in float64 entries
MAX_TABLE_ENTRIES = 2 * 10**7


class Status(str, Enum):
    OPTIMAL = "Optimal"
    GAP_LIMIT = "GapLimit"
    TIME_LIMIT = "TimeLimit"
    NODE_LIMIT = "NodeLimit"
    INFEASIBLE = "Infeasible"


@dataclass
class SolveNode:
    region: CentroidRegion
    viable: ViableSets
    lb: float
    depth: int = 0
    id: int = 0

    def __lt__(self, other):
        return (self.lb, self.id) < (other.lb, other.id)


@dataclass
class SolveStats:
    nodes_processed: int = 0
    wall_time_s: float = 0.0
    time_per_node_s: float = 0.0
    core_hours: float = 0.0
    lb_history: list = field(default_factory=list)
    ub_history: list = field(default_factory=list)


@dataclass
class SolveResult:
    best: Optional[Solution]
    lb: float
    ub: float
    rel_gap: float
    status: Status
    stats: SolveStats
    pseudo: Optional[Solution] = None
    witness: object = None


def relative_gap(ub: float, lb: float) -> float:
    """(ub - lb) / min(ub, lb); falls back to the absolute gap when min(ub, lb) <= 0."""
    if ub == np.inf:
        return np.inf
    if ub == lb:
        return 0.0
    low = min(ub, lb)
    if low <= 0:
        return abs(ub - lb)
    return (ub - lb) / low


def split_region(region: CentroidRegion):
    widths = region.widths
    flat = int(np.argmax(widths))
    k, i = divmod(flat, widths.shape[1])
    if widths[k, i] <= DEGENERATE_WIDTH:
        raise DegenerateRegion("every box edge is below the branching resolution")
    mid = 0.5 * (region.lower[k, i] + region.upper[k, i])
    hi1 = region.upper.copy()
    hi1[k, i] = mid
    lo2 = region.lower.copy()
    lo2[k, i] = mid
    return CentroidRegion(region.lower, hi1), CentroidRegion(lo2, region.upper)


def branch_region(node: SolveNode):
    """Bisect the longest box edge; children inherit viable sets and the parent bound."""
    r1, r2 = split_region(node.region)
    return (
        SolveNode(r1, node.viable, node.lb, node.depth + 1),
        SolveNode(r2, node.viable, node.lb, node.depth + 1),
    )


def apply_symmetry_breaking(region: CentroidRegion, enabled: bool = True):
    """Tighten boxes to the ordering mu_0[0] <= mu_1[0] <= ... on the first coordinate.

    Cluster labels are interchangeable, so some optimal labeling always
    satisfies the ordering. Returns None when the ordering empties a box.
    """
    if not enabled or region.k == 1:
        return region
    lo = region.lower.copy()
    hi = region.upper.copy()
    for k in range(1, region.k):
        lo[k, 0] = max(lo[k, 0], lo[k - 1, 0])
    for k in range(region.k - 2, -1, -1):
        hi[k, 0] = min(hi[k, 0], hi[k + 1, 0])
    if np.any(lo > hi):
        return None
    if np.array_equal(lo, region.lower) and np.array_equal(hi, region.upper):
        return region
    return CentroidRegion(lo, hi)


class BranchAndBound:
    def __init__(self, inst: CollapsedInstance, config: SolverConfig, progress: Callable | None = None):
        if config.k != inst.k:
            raise ValueError("config.k and instance k differ")
        self.inst = inst
        self.config = config
        self.progress = progress
        self.lock = threading.RLock()
        self.ub = np.inf
        self.incumbent: Optional[Solution] = None
        self.rho = None
        self.ids = itertools.count()
        self.stats = SolveStats()
        self.grouping = build_grouping(inst, config.group_size_max)
        g = max(len(x) for x in self.grouping.groups)
        entries = self.grouping.size * inst.k**g * inst.k * (inst.d + 2)
        self.tables = GroupTables(inst, self.grouping) if entries <= MAX_TABLE_ENTRIES else None
        self.closed_lbs = []
        self._t0 = time.perf_counter()
        self._last_report = -np.inf

    # incumbent handling

    def _elapsed(self):
        return time.perf_counter() - self._t0

    def offer(self, sol: Optional[Solution], polish: bool = True) -> bool:
        if sol is None or not sol.objective < self.ub:
            return False
        if polish and self.config.polish_iters > 0:
            sol = polish_lloyd_constrained(self.inst, sol, self.config.polish_iters)
        with self.lock:
            if sol.objective < self.ub:
                self.ub = sol.objective
                self.incumbent = sol
                diff = self.inst.points - sol.centroids[sol.assignment]
                self.rho = float(np.einsum("ij,ij->i", diff, diff).max())
                self.stats.ub_history.append((self._elapsed(), self.ub))
                return True
        return False

    # node evaluation

    def evaluate(self, region: CentroidRegion, viable: ViableSets, parent_lb: float, depth: int):
        """Bound a fresh node; returns a SolveNode or None when the node is pruned."""
        cfg, inst = self.config, self.inst
        region = apply_symmetry_breaking(region, cfg.symmetry_breaking)
        if region is None:
            return None
        try:
            lb = parent_lb
            for _ in range(4):
                split = lower_bound_forced_split(inst, region, viable)
                lb = max(lb, split.value)
                ub = self.ub
                if lb >= ub:
                    return None
                nxt = self._determine(region, viable, ub, split)
                nreg = hull_tighten(region, nxt, inst)
                if nreg is not None:
                    nreg = apply_symmetry_breaking(nreg, cfg.symmetry_breaking)
                if nreg is None:
                    return None
                if nxt == viable and nreg is region:
                    break
                viable, region = nxt, nreg
            else:
                split = lower_bound_forced_split(inst, region, viable)
                lb = max(lb, split.value)
            if cfg.exact_enum > 0:
                exact = exact_region_value(inst, region, viable, cfg.exact_enum)
                if exact is not None:
                    # the node is solved outright; nothing in it can beat this labeling
                    _, labels, cents = exact
                    if labels is not None:
                        self.offer(Solution(cents, labels, labeling_cost(inst, cents, labels), True))
                    return None
            candidates = [split.centroids, region.midpoint()]
            if self.incumbent is not None:
                candidates.append(region.clamp(self.incumbent.centroids))
            labelings = []
            if self.tables is not None and (depth == 0 or lb < self.ub <= lb * (1 + cfg.ld_trigger_gap)):
                ld, ld_candidates = lower_bound_lagrangian(
                    inst, region, viable, self.grouping, cfg, self.tables, labelings
                )
                lb = max(lb, ld)
                candidates.extend(ld_candidates)
        except NodeInfeasible:
            return None
        _, sol = upper_bound_kcoloring(inst, candidates)
        self.offer(sol)
        labelings.append(split.labels)
        for labels in labelings:
            self.offer(labeling_solution(inst, labels, region.midpoint()))
        if lb >= self.ub:
            return None
        return SolveNode(region, viable, lb, depth, next(self.ids))

    def _determine(self, region, viable, ub, split):
        cfg, inst = self.config, self.inst
        nxt = eliminate_assignments(viable, region, inst, ub, cfg.paper_rho_rule, self.rho, split.terms, split.base)
        nxt = force_assignments(nxt, region, inst)
        return propagate_links(nxt, inst)

    def finalize_point(self, node: SolveNode):
        """A node too small to split: its bound stays open in the final lower bound."""
        cands = [node.region.midpoint()]
        _, sol = upper_bound_kcoloring(self.inst, cands)
        self.offer(sol, polish=False)
        if node.lb < self.ub:
            with self.lock:
                self.closed_lbs.append(node.lb)

    def expand(self, node: SolveNode):
        try:
            children = branch_region(node)
        except DegenerateRegion:
            self.finalize_point(node)
            return []
        out = []
        for child in children:
            ev = self.evaluate(child.region, child.viable, child.lb, child.depth)
            if ev is not None:
                out.append(ev)
        return out

    # driver

    def _report(self, lb, nodes, force=False):
        if self.progress is None:
            return
        t = self._elapsed()
        if force or t - self._last_report >= self.config.progress_interval_s:
            self._last_report = t
            self.progress(dict(t=t, lb=lb, ub=self.ub, gap=relative_gap(self.ub, lb), nodes=nodes))

    def _global_lb(self, heap, inflight=()):
        cands = [self.ub]
        if heap:
            cands.append(heap[0].lb)
        cands.extend(inflight)
        cands.extend(self.closed_lbs)
        return min(cands)

    def _record_lb(self, lb):
        hist = self.stats.lb_history
        if not hist or lb > hist[-1][1]:
            hist.append((self._elapsed(), lb))

    def solve(self) -> SolveResult:
        cfg, inst = self.config, self.inst
        self._t0 = time.perf_counter()
        self.offer(multi_restart(inst, cfg.k, cfg.heuristic_restarts, cfg.seed))
        root = self.evaluate(root_region(inst), ViableSets.full(inst.n, inst.k), -np.inf, 0)
        heap = [root] if root is not None else []
        self.stats.nodes_processed = 1
        if cfg.threads > 1:
            status = self._run_threaded(heap)
        else:
            status = self._run_serial(heap)
        return self._result(heap, status)

    def _limit_status(self):
        if self._elapsed() >= self.config.time_limit_s:
            return Status.TIME_LIMIT
        if self.stats.nodes_processed >= self.config.max_nodes:
            return Status.NODE_LIMIT
        return None

    def _gap_status(self, lb):
        gap = relative_gap(self.ub, lb)
        if gap <= 1e-12:
            return Status.OPTIMAL
        if gap <= self.config.rel_gap_tol:
            return Status.GAP_LIMIT
        return None

    def _exhausted_status(self, lb):
        if not np.isfinite(self.ub):
            return Status.INFEASIBLE
        # only unsplittable point nodes remain open
        return self._gap_status(lb) or Status.NODE_LIMIT

    def _run_serial(self, heap):
        while True:
            while heap and heap[0].lb >= self.ub:
                heapq.heappop(heap)
            lb = self._global_lb(heap)
            self._record_lb(lb)
            self._report(lb, self.stats.nodes_processed)
            if not heap:
                return self._exhausted_status(lb)
            status = self._gap_status(lb) or self._limit_status()
            if status is not None:
                return status
            node = heapq.heappop(heap)
            self.stats.nodes_processed += 1
            for child in self.expand(node):
                heapq.heappush(heap, child)

    def _run_threaded(self, heap):
        cond = threading.Condition(self.lock)
        inflight = {}
        outcome = []

        def worker():
            while True:
                with cond:
                    while True:
                        if outcome:
                            return
                        while heap and heap[0].lb >= self.ub:
                            heapq.heappop(heap)
                        lb = self._global_lb(heap, inflight.values())
                        self._record_lb(lb)
                        self._report(lb, self.stats.nodes_processed)
                        if not heap and not inflight:
                            outcome.append(
                                self._exhausted_status(lb)
                            )
                            cond.notify_all()
                            return
                        status = self._gap_status(lb) or self._limit_status()
                        if status is not None:
                            outcome.append(status)
                            cond.notify_all()
                            return
                        if heap:
                            node = heapq.heappop(heap)
                            inflight[node.id] = node.lb
                            self.stats.nodes_processed += 1
                            break
                        cond.wait(0.05)
                children = self.expand(node)
                with cond:
                    for child in children:
                        heapq.heappush(heap, child)
                    del inflight[node.id]
                    cond.notify_all()

        threads = [threading.Thread(target=worker, daemon=True) for _ in range(self.config.threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        self._inflight_after = list(inflight.values())
        return outcome[0]

    def _result(self, heap, status) -> SolveResult:
        inflight = getattr(self, "_inflight_after", [])
        lb = self._global_lb(heap, inflight)
        if status == Status.INFEASIBLE:
            lb = np.inf
        self._record_lb(lb)
        self._report(lb, self.stats.nodes_processed, force=True)
        st = self.stats
        st.wall_time_s = self._elapsed()
        st.time_per_node_s = st.wall_time_s / max(st.nodes_processed, 1)
        st.core_hours = st.wall_time_s * self.config.threads / 3600.0
        best = None
        if self.incumbent is not None:
            inc = self.incumbent
            best = Solution(inc.centroids, self.inst.expand(inc.assignment), inc.objective, True)
        return SolveResult(best, lb, self.ub, relative_gap(self.ub, lb), status, st, self.incumbent)


def solve(inst: CollapsedInstance, config: SolverConfig, progress: Callable | None = None) -> SolveResult:
    return BranchAndBound(inst, config, progress).solve()


def infeasible_result(witness=None) -> SolveResult:
    return SolveResult(None, np.inf, np.inf, np.inf, Status.INFEASIBLE, SolveStats(), None, witness)


def solve_dataset(data: Dataset, cons: ConstraintSet, config: SolverConfig, progress=None):
    """Collapse, check root feasibility and solve; returns (result, collapsed instance or None)."""
    try:
        inst = collapse(data, cons, config.k)
        check_root_feasibility(inst)
    except RootInfeasible as exc:
        log.info("root infeasible: %s", exc)
        return infeasible_result(exc.witness), None
    return solve(inst, config, progress), inst
