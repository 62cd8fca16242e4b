"""Three-way classification from interval probabilities and the evaluation statistics built on it."""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from models.dataset import Dataset
from models.evaluation import (
    Decision,
    DecisionRule,
    EvaluationReport,
    IntervalConfusion,
    Roc3D,
    Roc3DPoint,
    RocBand,
    RocCurve,
    RocPoint,
    ScatterPoint,
    TernaryConfusion,
    UncertaintyStats,
)
from models.interval import Interval, UncertainLabel
from models.modelset import ModelSet
from models.run import RunStamp
from services.envelope_fit import predict_interval_matrix
from services.glm_fit import predict_proba_matrix
from utils.errors import DataError, DimensionMismatchError, InvalidArgumentError, UncertainDataError
from utils.rng import make_rng

logger = logging.getLogger(__name__)

ROC_BAND_GRID = 512
ROC3D_THRESHOLDS = np.linspace(0.0, 1.0, 103)[1:-1]

Truth = Union[int, UncertainLabel]


# ---------------------------
# Decisions
# ---------------------------

def _check_threshold(C: float) -> None:
    if not (math.isfinite(C) and 0.0 < C < 1.0):
        raise InvalidArgumentError(f"threshold C must lie in the open interval (0, 1), got {C}")


def _decide(lo: float, hi: float, C: float, rule: DecisionRule) -> Decision:
    if rule is DecisionRule.UPPER_BOUND:
        return Decision.POSITIVE if hi >= C else Decision.NEGATIVE
    if rule is DecisionRule.LOWER_BOUND:
        return Decision.POSITIVE if lo >= C else Decision.NEGATIVE
    if lo == hi:
        return Decision.POSITIVE if lo >= C else Decision.NEGATIVE
    if lo > C:
        return Decision.POSITIVE
    if hi < C:
        return Decision.NEGATIVE
    return Decision.DUNNO


def classify(p: Interval, C: float, rule: DecisionRule = DecisionRule.ABSTAIN) -> Decision:
    """Positive, negative or dunno for an interval probability at threshold C.

    abstain answers dunno whenever a non-degenerate p contains C; a degenerate p
    is positive at p >= C. upper_bound and lower_bound never abstain.
    """
    _check_threshold(C)
    if p.lo < 0.0 or p.hi > 1.0:
        raise InvalidArgumentError(f"probability interval {p} is not inside [0, 1]")
    return _decide(p.lo, p.hi, C, DecisionRule(rule))


def classify_many(p_lo: np.ndarray, p_hi: np.ndarray, C: float, rule: DecisionRule = DecisionRule.ABSTAIN) -> list[Decision]:
    _check_threshold(C)
    rule = DecisionRule(rule)
    return [_decide(float(lo), float(hi), C, rule) for lo, hi in zip(p_lo, p_hi)]


# ---------------------------
# Confusion matrices and statistics
# ---------------------------

def _truth_values(truth: Sequence[Truth]) -> list[int]:
    values, unknown = [], []
    for i, t in enumerate(truth):
        if isinstance(t, UncertainLabel):
            if not t.is_known:
                unknown.append(i)
                continue
            values.append(t.value_or_none)
        elif t in (0, 1):
            values.append(int(t))
        else:
            raise InvalidArgumentError(f"truth label at row {i} must be 0 or 1, got {t!r}")
    if unknown:
        raise UncertainDataError("Evaluation needs known truth labels.", rows=unknown)
    return values


def _known_labels(test: Dataset) -> np.ndarray:
    unknown = test.unknown_rows
    if unknown:
        raise UncertainDataError("Evaluation needs known truth labels.", rows=unknown)
    return test.labels().astype(int)


def ternary_confusion(decisions: Sequence[Decision], truth: Sequence[Truth]) -> TernaryConfusion:
    if len(decisions) != len(truth):
        raise InvalidArgumentError(f"{len(decisions)} decisions for {len(truth)} truth labels")
    counts = {k: 0 for k in "abcdef"}
    cell = {
        (Decision.POSITIVE, 1): "a",
        (Decision.POSITIVE, 0): "b",
        (Decision.NEGATIVE, 1): "c",
        (Decision.NEGATIVE, 0): "d",
        (Decision.DUNNO, 1): "e",
        (Decision.DUNNO, 0): "f",
    }
    for decision, y in zip(decisions, _truth_values(truth)):
        counts[cell[(Decision(decision), y)]] += 1
    return TernaryConfusion(**counts)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def uncertainty_stats(t: TernaryConfusion) -> UncertaintyStats:
    """s', t', sigma and tau; s and t only when nothing was abstained on. None marks a zero denominator."""
    certain = t.e == 0 and t.f == 0
    return UncertaintyStats(
        s=_ratio(t.a, t.a + t.c) if certain else None,
        t=_ratio(t.d, t.b + t.d) if certain else None,
        s_prime=_ratio(t.a, t.a + t.c),
        t_prime=_ratio(t.d, t.b + t.d),
        sigma=_ratio(t.e, t.total_positive),
        tau=_ratio(t.f, t.total_negative),
    )


def interval_confusion_from_ternary(t: TernaryConfusion) -> IntervalConfusion:
    """Each dunno point may fall in either cell of its truth column."""
    return IntervalConfusion(
        a=Interval(lo=t.a, hi=t.a + t.e),
        b=Interval(lo=t.b, hi=t.b + t.f),
        c=Interval(lo=t.c, hi=t.c + t.e),
        d=Interval(lo=t.d, hi=t.d + t.f),
        total_positive=t.total_positive,
        total_negative=t.total_negative,
        n=t.n,
    )


def _predictions(ms: ModelSet, test: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if test.dimension != ms.dimension:
        raise DimensionMismatchError(ms.dimension, test.dimension, what="test dataset")
    return predict_interval_matrix(ms, test.lower(), test.upper())


def interval_confusion(
    ms: ModelSet, test: Dataset, C: float, rule: DecisionRule = DecisionRule.ABSTAIN
) -> IntervalConfusion:
    truth = _known_labels(test)
    p_lo, p_hi = _predictions(ms, test)
    return interval_confusion_from_ternary(ternary_confusion(classify_many(p_lo, p_hi, C, rule), truth.tolist()))


# ---------------------------
# ROC
# ---------------------------

def roc(scores: Sequence[float], truth: Sequence[Truth]) -> RocCurve:
    """Predict positive at score >= C for every C in the unique scores plus {0, 1}, highest C first."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(_truth_values(truth), dtype=int)
    if scores.shape[0] != y.shape[0]:
        raise InvalidArgumentError(f"{scores.shape[0]} scores for {y.shape[0]} truth labels")
    positives = int(y.sum())
    negatives = int(y.shape[0] - positives)
    if positives == 0 or negatives == 0:
        raise DataError("ROC needs at least one positive and one negative truth label")

    thresholds = sorted(set(scores.tolist()) | {0.0, 1.0}, reverse=True)
    if scores.max() >= thresholds[0]:
        thresholds.insert(0, float(np.nextafter(thresholds[0], np.inf)))

    points = []
    for C in thresholds:
        predicted = scores >= C
        points.append(
            RocPoint(
                threshold=C,
                fpr=int(np.sum(predicted & (y == 0))) / negatives,
                sensitivity=int(np.sum(predicted & (y == 1))) / positives,
            )
        )
    return RocCurve(points=tuple(points))


def auc(r: RocCurve) -> float:
    """Trapezoidal area; ties between a positive and a negative score count one half."""
    fpr = np.array([p.fpr for p in r.points])
    sens = np.array([p.sensitivity for p in r.points])
    return float(np.trapezoid(sens, fpr))


def interpolate_roc(r: RocCurve, grid: np.ndarray) -> np.ndarray:
    """Sensitivity at each grid fpr by linear interpolation; a vertical step counts at its top."""
    fpr = np.array([p.fpr for p in r.points])
    sens = np.array([p.sensitivity for p in r.points])
    unique_fpr = np.unique(fpr)
    top = np.array([sens[fpr == f].max() for f in unique_fpr])
    return np.interp(grid, unique_fpr, top)


def _precise_scores(test: Dataset) -> np.ndarray:
    imprecise = [i for i, p in enumerate(test.points) if any(not iv.degenerate for iv in p.features)]
    if imprecise:
        raise UncertainDataError("ROC needs precise test features.", rows=imprecise)
    return test.lower()


def roc_band(ms: ModelSet, test: Dataset) -> RocBand:
    truth = _known_labels(test).tolist()
    X = _precise_scores(test)
    if X.shape[1] != ms.dimension:
        raise DimensionMismatchError(ms.dimension, X.shape[1], what="test dataset")
    grid = np.linspace(0.0, 1.0, ROC_BAND_GRID)
    curves, member_aucs = [], []
    for candidate in ms.models:
        curve = roc(predict_proba_matrix(np.asarray(candidate.beta), X), truth)
        curves.append(interpolate_roc(curve, grid))
        member_aucs.append(auc(curve))
    stacked = np.vstack(curves)
    return RocBand(
        fpr=tuple(grid.tolist()),
        s_lo=tuple(stacked.min(axis=0).tolist()),
        s_hi=tuple(stacked.max(axis=0).tolist()),
        auc=Interval(lo=min(member_aucs), hi=max(member_aucs)),
        member_aucs=tuple(member_aucs),
    )


def roc3d(ms: ModelSet, test: Dataset, thresholds: Optional[Sequence[float]] = None) -> Roc3D:
    """Predictive ROC with incertitude: (fpr', s', sigma, tau) per threshold under the abstain rule.

    fpr' is 1 - t'. Points the classifier abstains on are excluded per threshold.
    """
    truth = _known_labels(test).tolist()
    if not 0 < sum(truth) < len(truth):
        raise DataError("ROC needs at least one positive and one negative truth label")
    p_lo, p_hi = _predictions(ms, test)
    points = []
    for C in ROC3D_THRESHOLDS if thresholds is None else thresholds:
        stats = uncertainty_stats(ternary_confusion(classify_many(p_lo, p_hi, float(C)), truth))
        points.append(
            Roc3DPoint(
                threshold=float(C),
                fpr_prime=None if stats.t_prime is None else 1.0 - stats.t_prime,
                s_prime=stats.s_prime,
                sigma=stats.sigma,
                tau=stats.tau,
            )
        )
    return Roc3D(points=tuple(points))


def discrimination_scatter(ms: ModelSet, test: Dataset, seed: int, jitter: float = 0.05) -> list[ScatterPoint]:
    """Outcome against predicted probability interval, outcome jittered uniformly by +-jitter."""
    if jitter < 0:
        raise InvalidArgumentError(f"jitter must be >= 0, got {jitter}")
    truth = _known_labels(test)
    p_lo, p_hi = _predictions(ms, test)
    noise = make_rng(seed).uniform(-jitter, jitter, size=test.n)
    return [
        ScatterPoint(outcome=int(y), jittered=float(y + e), p_lo=float(lo), p_hi=float(hi))
        for y, e, lo, hi in zip(truth, noise, p_lo, p_hi)
    ]


def evaluate(
    ms: ModelSet,
    test: Dataset,
    C: float = 0.5,
    rule: DecisionRule = DecisionRule.ABSTAIN,
    run: Optional[RunStamp] = None,
) -> EvaluationReport:
    rule = DecisionRule(rule)
    truth = _known_labels(test).tolist()
    p_lo, p_hi = _predictions(ms, test)
    ternary = ternary_confusion(classify_many(p_lo, p_hi, C, rule), truth)

    auc_value, auc_interval = None, None
    if test.has_interval_features:
        logger.info("Test features carry intervals; AUC is not reported")
    elif 0 < sum(truth) < len(truth):
        band = roc_band(ms, test)
        auc_interval = band.auc
        if len(ms.models) == 1:
            auc_value = band.auc.lo
    else:
        logger.info("Test labels hold a single class; AUC is not reported")

    return EvaluationReport(
        threshold=C,
        rule=rule,
        ternary=ternary,
        interval_confusion=interval_confusion_from_ternary(ternary),
        stats=uncertainty_stats(ternary),
        auc=auc_value,
        auc_interval=auc_interval,
        run=run,
    )
