"""Constraint-density sweep on seeded synthetic blobs."""
from __future__ import annotations

import math

from .engine import solve_dataset
from .io import generate_constraints, generate_synthetic
from .model import SolverConfig


def density_sweep(n=600, d=2, k=3, seed=1, kind="ml", divisors=(2, 4, 8, 16, 32, 64),
                  time_limit_s=600.0, threads=1, gap=1e-3):
    """Solve one dataset under n/divisor constraint pairs for each divisor.

    ``kind`` is ``ml``, ``cl`` or ``both``; ``both`` draws n/divisor pairs of
    each type. Returns one row of search statistics per divisor.
    """
    data = generate_synthetic(n, d, k, seed)
    rows = []
    for div in divisors:
        count = n // div
        ml = count if kind in ("ml", "both") else 0
        cl = count if kind in ("cl", "both") else 0
        cons = generate_constraints(data.labels, ml, cl, seed)
        config = SolverConfig(k=k, rel_gap_tol=gap, time_limit_s=time_limit_s, threads=threads, seed=seed)
        result, _ = solve_dataset(data, cons, config)
        st = result.stats
        rows.append(
            dict(
                divisor=div,
                ml_pairs=len(cons.ml_pairs),
                cl_pairs=len(cons.cl_pairs),
                status=result.status.value,
                upper_bound=result.ub if math.isfinite(result.ub) else None,
                rel_gap=result.rel_gap if math.isfinite(result.rel_gap) else None,
                nodes=st.nodes_processed,
                wall_time_s=st.wall_time_s,
                time_per_node_s=st.time_per_node_s,
                core_hours=st.core_hours,
            )
        )
    return rows
