import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcbb.errors import (
    DuplicatePair,
    IndexOutOfRange,
    MlClConflict,
    NonFiniteCoordinate,
    ShapeMismatch,
    ValidationError,
)
from pcbb.model import (
    CentroidRegion,
    CollapsedInstance,
    ConstraintSet,
    Dataset,
    Solution,
    SolverConfig,
    check_pairs,
    is_cl_feasible,
    recompute_objective,
    validate_instance,
)

from conftest import independent_cost


def f1():
    return CollapsedInstance([[1, 0], [10, 0]], [2, 1], ((0, 1), (2,)), (), 2.0, 2)


def test_validate_accepts_valid_instance():
    data = Dataset(np.zeros((3, 2)))
    cons = ConstraintSet(((0, 1),), ())
    assert validate_instance(data, cons, 2) == (data, cons)


def test_self_pair_rejected():
    with pytest.raises(IndexOutOfRange):
        ConstraintSet((), ((0, 0),))


def test_ml_cl_conflict_rejected():
    with pytest.raises(MlClConflict):
        ConstraintSet(((0, 1),), ((1, 0),))


def test_duplicate_pair_rejected_unless_deduped():
    with pytest.raises(DuplicatePair):
        ConstraintSet(((0, 1), (1, 0)), ())
    assert ConstraintSet.from_pairs([(0, 1), (1, 0)], []).ml_pairs == ((0, 1),)


def test_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        validate_instance(Dataset(np.zeros((3, 1))), ConstraintSet(((0, 3),), ()), 2)


def test_non_finite_coordinate():
    with pytest.raises(NonFiniteCoordinate):
        Dataset([[0.0, np.nan]])
    with pytest.raises(NonFiniteCoordinate):
        CentroidRegion([[0.0]], [[np.inf]])


def test_labels_length_checked():
    with pytest.raises(ShapeMismatch):
        Dataset(np.zeros((3, 2)), labels=[0, 1])


def test_recompute_objective_hand_value():
    # 2 * 0 + 1 * 0 + constant 2
    sol = Solution([[1, 0], [10, 0]], [0, 1], 2.0)
    assert recompute_objective(f1(), sol) == pytest.approx(2.0, rel=1e-12)


def test_recompute_objective_empty_cluster():
    inst = f1()
    sol = Solution([[4, 0], [99, 99]], [0, 0], 0.0)
    # only cluster 0 is used: 2 * 9 + 1 * 36 + 2
    assert recompute_objective(inst, sol) == pytest.approx(56.0)


def test_recompute_objective_single_point():
    inst = CollapsedInstance([[3.0, 4.0]], [1], ((0,),), (), 0.5, 1)
    assert recompute_objective(inst, Solution([[3.0, 4.0]], [0], 0.5)) == 0.5


def test_recompute_objective_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        recompute_objective(f1(), Solution([[0, 0]], [0, 0, 0], 0.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31))
def test_recompute_matches_independent_cost(n, d, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    mu = rng.normal(size=(k, d))
    a = rng.integers(0, k, size=n)
    inst = CollapsedInstance(X, np.ones(n, int), tuple((i,) for i in range(n)), (), 0.0, k)
    assert recompute_objective(inst, Solution(mu, a, 0.0)) == pytest.approx(independent_cost(X, mu, a), rel=1e-9)


def test_weight_conservation_enforced():
    with pytest.raises(ValidationError):
        CollapsedInstance([[0.0]], [2], ((0,),), (), 0.0, 1)


def test_collapsed_instance_rejects_self_loop():
    with pytest.raises(ValidationError):
        CollapsedInstance([[0.0], [1.0]], [1, 1], ((0,), (1,)), ((1, 1),), 0.0, 2)


def test_region_validation():
    with pytest.raises(ValidationError):
        CentroidRegion([[1.0]], [[0.0]])
    r = CentroidRegion([[0, 0], [1, 1]], [[2, 1], [1.5, 3]])
    assert r.k == 2 and r.diameter == 2.0
    assert r.contains([[1, 0.5], [1.2, 2]])
    assert not r.contains([[3, 0], [1, 1]])


def test_config_group_size_cap():
    with pytest.raises(ValidationError):
        SolverConfig(k=3, group_size_max=13)
    assert SolverConfig(k=3, group_size_max=12).group_size_max == 12


def test_config_gap_range():
    with pytest.raises(ValidationError):
        SolverConfig(k=2, rel_gap_tol=0.0)
    SolverConfig(k=2, rel_gap_tol=1.0)


def test_feasibility_checks():
    inst = CollapsedInstance([[0.0], [1.0], [2.0]], [1, 1, 1], ((0,), (1,), (2,)), ((0, 1),), 0.0, 2)
    assert is_cl_feasible(inst, [0, 1, 1])
    assert not is_cl_feasible(inst, [1, 1, 0])
    cons = ConstraintSet(((1, 2),), ((0, 1),))
    assert check_pairs([0, 1, 1], cons)
    assert not check_pairs([0, 1, 0], cons)


def test_types_are_read_only():
    data = Dataset([[0.0, 1.0]])
    with pytest.raises(ValueError):
        data.points[0, 0] = 5
