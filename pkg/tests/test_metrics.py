import numpy as np
import pytest

from pcbb.errors import ShapeMismatch
from pcbb.metrics import external_metrics


def test_perfect_agreement():
    m = external_metrics([0, 0, 1, 1, 2], [0, 0, 1, 1, 2])
    assert m == pytest.approx({"ari": 1.0, "nmi": 1.0, "purity": 1.0})


def test_single_cluster_against_two_classes():
    m = external_metrics([0] * 6, [0, 0, 0, 1, 1, 1])
    assert m["purity"] == pytest.approx(0.5)
    assert m["ari"] == pytest.approx(0.0)


def test_permutation_invariance():
    rng = np.random.default_rng(0)
    truth = rng.integers(0, 3, 50)
    pred = rng.integers(0, 3, 50)
    perm = np.array([2, 0, 1])
    assert external_metrics(perm[pred], truth) == pytest.approx(external_metrics(pred, truth))
    assert external_metrics(perm[truth], truth) == pytest.approx({"ari": 1.0, "nmi": 1.0, "purity": 1.0})


def test_purity_by_hand():
    # clusters {0,0,1} and {1,1}: majority counts 2 + 2 over 5
    assert external_metrics([0, 0, 0, 1, 1], [0, 0, 1, 1, 1])["purity"] == pytest.approx(0.8)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        external_metrics([0, 1], [0, 1, 1])
