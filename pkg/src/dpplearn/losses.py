"""Set-discrepancy losses and precision/recall/F-score metrics.

The weighted Hamming loss treats the two error types asymmetrically:

    loss(y_star, y) = #(items of y not in y_star)
                      + omega * #(items of y_star missing from y).

omega > 1 makes missed ground-truth items costlier (training then favors
recall); omega < 1 penalizes spurious items relatively more (favoring
precision).  omega = 1 recovers the plain Hamming distance.
"""

from typing import NamedTuple

from .errors import ParameterError


class PrfScores(NamedTuple):
    precision: float
    recall: float
    fscore: float


def hamming_loss(y_star, y):
    """Number of disagreements between two subsets (symmetric)."""
    a, b = set(y_star), set(y)
    return len(a ^ b)


def generalized_hamming(y_star, y, omega=1.0):
    """Weighted Hamming loss; misses of y_star items count omega each."""
    if omega <= 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    a, b = set(y_star), set(y)
    extras = len(b - a)
    misses = len(a - b)
    return extras + omega * misses


def precision_recall_fscore(y_pred, y_star):
    """Precision, recall and F-score of a predicted subset.

    P = |pred & truth| / |pred|, R = |pred & truth| / |truth|,
    F = 2PR / (P + R).  Empty denominators: an empty prediction scores
    P = 1 against an empty truth and P = 0 otherwise (recall symmetric);
    F = 0 whenever P + R = 0.
    """
    pred, star = set(y_pred), set(y_star)
    hit = len(pred & star)
    precision = hit / len(pred) if pred else (1.0 if not star else 0.0)
    recall = hit / len(star) if star else (1.0 if not pred else 0.0)
    denom = precision + recall
    fscore = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return PrfScores(precision, recall, fscore)
