"""External clustering agreement scores against ground-truth labels."""
import numpy as np
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from .errors import ShapeMismatch


def purity(pred, truth) -> float:
    table = contingency_matrix(truth, pred)
    return float(table.max(axis=0).sum() / table.sum())


def external_metrics(pred, truth) -> dict:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeMismatch(f"{pred.shape} predictions vs {truth.shape} labels")
    return {
        "ari": float(adjusted_rand_score(truth, pred)),
        "nmi": float(normalized_mutual_info_score(truth, pred, average_method="arithmetic")),
        "purity": purity(pred, truth),
    }
