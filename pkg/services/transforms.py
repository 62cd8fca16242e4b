"""Synthetic data and the censoring transforms applied to it.

Every transform returns a new Dataset; inputs are never modified.
"""
from __future__ import annotations

import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import expit

from models.coefficients import Coefficients
from models.dataset import CensorMode, CollapseStrategy, Covariate, CovariateKind, DataPoint, Dataset
from models.interval import Interval, UncertainLabel
from services.interval_core import score_bounds_matrix
from utils.errors import EmptyDatasetError, InvalidArgumentError, UncertainDataError
from utils.rng import derive_seed, make_rng

logger = logging.getLogger(__name__)


def default_feature_names(m: int) -> tuple[str, ...]:
    if m == 1:
        return ("x",)
    return tuple(f"x{j + 1}" for j in range(m))


def synthesize(
    n: int,
    seed: int,
    truth: Coefficients,
    x_range: Interval,
    feature_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Uniform covariates in x_range, labels drawn from the logistic model `truth`.

    Draw order is fixed (all features row-major, then one uniform per label) so a
    seed pins the dataset on every platform.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be at least 1, got {n}")
    m = truth.dimension
    names = tuple(feature_names) if feature_names is not None else default_feature_names(m)
    if len(names) != m:
        raise InvalidArgumentError(f"{len(names)} feature names given for {m} coefficients")

    rng = make_rng(seed)
    X = rng.uniform(x_range.lo, x_range.hi, size=(n, m)) if not x_range.degenerate else np.full((n, m), x_range.lo)
    beta = np.asarray(truth.beta, dtype=float)
    p = expit(beta[0] + X @ beta[1:])
    y = rng.random(n) < p

    points = tuple(
        DataPoint(
            features=tuple(Interval.point(float(v)) for v in row),
            label=UncertainLabel.known(int(label)),
        )
        for row, label in zip(X, y)
    )
    logger.debug("Synthesized %d rows (seed=%d, %d positives)", n, seed, int(y.sum()))
    return Dataset(feature_names=names, points=points)


def synthesize_mixed(n: int, seed: int, truth: Coefficients, covariates: Sequence[Covariate]) -> Dataset:
    """Continuous and binary covariates, labels drawn from the logistic model `truth`.

    One uniform per cell (row-major), then one per label, like `synthesize`.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be at least 1, got {n}")
    if len(covariates) != truth.dimension:
        raise InvalidArgumentError(f"{len(covariates)} covariates given for {truth.dimension} coefficients")

    rng = make_rng(seed)
    U = rng.uniform(size=(n, len(covariates)))
    X = np.empty_like(U)
    for j, cov in enumerate(covariates):
        if cov.kind is CovariateKind.BINARY:
            X[:, j] = (U[:, j] < cov.rate).astype(float)
        else:
            X[:, j] = cov.lo + U[:, j] * (cov.hi - cov.lo)
    beta = np.asarray(truth.beta, dtype=float)
    y = rng.random(n) < expit(beta[0] + X @ beta[1:])

    points = tuple(
        DataPoint(
            features=tuple(Interval.point(float(v)) for v in row),
            label=UncertainLabel.known(int(label)),
        )
        for row, label in zip(X, y)
    )
    logger.debug("Synthesized %d mixed rows (seed=%d, %d positives)", n, seed, int(y.sum()))
    return Dataset(feature_names=tuple(cov.name for cov in covariates), points=points)


def _interval_for(x: float, mode: CensorMode, epsilon: float, shift: float, split_point: Optional[float]) -> Interval:
    if mode is CensorMode.SYMMETRIC:
        centre = x + shift
        # Rounding must never push x outside its own interval.
        return Interval(lo=min(centre - epsilon, x), hi=max(centre + epsilon, x))
    if mode is CensorMode.LEFT_BIASED:
        return Interval(lo=x, hi=x + 2 * epsilon)
    if mode is CensorMode.RIGHT_BIASED:
        return Interval(lo=x - 2 * epsilon, hi=x)
    if x < split_point:
        return Interval(lo=x - 2 * epsilon, hi=x)
    return Interval(lo=x, hi=x + 2 * epsilon)


def intervalize(
    d: Dataset,
    mode: CensorMode,
    epsilon: float,
    seed: int = 0,
    split_point: Optional[float] = None,
    columns: Optional[Iterable[int]] = None,
) -> Dataset:
    """Replace precise feature values by intervals of width 2*epsilon.

    symmetric draws the centre uniformly from [x-eps, x+eps], so x always stays
    inside. Labels are untouched. `columns` limits the transform to some features.
    """
    mode = CensorMode(mode)
    if not math.isfinite(epsilon) or epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be finite and >= 0, got {epsilon}")
    if mode is CensorMode.SPLIT_BIASED and split_point is None:
        raise InvalidArgumentError("split_biased intervalization needs a split_point")
    if mode is not CensorMode.SPLIT_BIASED and split_point is not None:
        raise InvalidArgumentError("split_point is only meaningful for split_biased intervalization")
    imprecise = [i for i, p in enumerate(d.points) if any(not iv.degenerate for iv in p.features)]
    if imprecise:
        raise UncertainDataError("Intervalization needs precise features.", rows=imprecise)

    selected = set(range(d.dimension)) if columns is None else set(columns)
    if any(j < 0 or j >= d.dimension for j in selected):
        raise InvalidArgumentError(f"columns must lie in [0, {d.dimension}), got {sorted(selected)}")

    rng = make_rng(seed)
    shifts = rng.uniform(-epsilon, epsilon, size=(d.n, d.dimension))
    points = []
    for i, p in enumerate(d.points):
        features = tuple(
            _interval_for(iv.lo, mode, epsilon, float(shifts[i, j]), split_point) if j in selected else iv
            for j, iv in enumerate(p.features)
        )
        points.append(DataPoint(features=features, label=p.label))
    logger.debug("Intervalized %d rows (%s, epsilon=%g)", d.n, mode.value, epsilon)
    return d.with_points(points)


def censor_labels(d: Dataset, indices: Iterable[int]) -> Dataset:
    indices = set(indices)
    bad = sorted(i for i in indices if not 0 <= i < d.n)
    if bad:
        raise InvalidArgumentError(f"row indices out of range [0, {d.n}): {bad}")
    return d.with_points(
        DataPoint(features=p.features, label=UncertainLabel.UNKNOWN) if i in indices else p
        for i, p in enumerate(d.points)
    )


def _check_column(d: Dataset, column: int) -> None:
    if not 0 <= column < d.dimension:
        raise InvalidArgumentError(f"column must lie in [0, {d.dimension}), got {column}")


def censor_above(d: Dataset, column: int, threshold: float, cap: float) -> Dataset:
    """Every value above `threshold` in `column` becomes [threshold, cap]."""
    _check_column(d, column)
    if not threshold <= cap:
        raise InvalidArgumentError(f"threshold {threshold} exceeds cap {cap}")
    above_cap = [i for i, p in enumerate(d.points) if p.features[column].hi > cap]
    if above_cap:
        raise UncertainDataError(f"Values above the cap {cap} in column {column}.", rows=above_cap)
    band = Interval(lo=threshold, hi=cap)
    points, censored = [], 0
    for p in d.points:
        if p.features[column].lo > threshold:
            features = list(p.features)
            features[column] = band
            p = DataPoint(features=tuple(features), label=p.label)
            censored += 1
        points.append(p)
    logger.debug("Censored %d values of column %d to %s", censored, column, band)
    return d.with_points(points)


def censor_cells(d: Dataset, column: int, rows: Iterable[int], interval: Optional[Interval] = None) -> Dataset:
    """Replace the chosen rows' cells in `column` by `interval`, by default the column's observed hull."""
    _check_column(d, column)
    rows = set(rows)
    bad = sorted(i for i in rows if not 0 <= i < d.n)
    if bad:
        raise InvalidArgumentError(f"row indices out of range [0, {d.n}): {bad}")
    if not rows:
        return d
    if interval is None:
        interval = Interval(lo=float(d.lower()[:, column].min()), hi=float(d.upper()[:, column].max()))
    outside = sorted(i for i in rows if not interval.contains_interval(d.points[i].features[column]))
    if outside:
        raise UncertainDataError(f"Cells of column {column} fall outside {interval}.", rows=outside)
    points = []
    for i, p in enumerate(d.points):
        if i in rows:
            features = list(p.features)
            features[column] = interval
            p = DataPoint(features=tuple(features), label=p.label)
        points.append(p)
    return d.with_points(points)


def collapse(d: Dataset, strategy: CollapseStrategy) -> Dataset:
    """Reduce to a precise dataset: interval midpoints, or drop every uncertain row.

    Both strategies drop rows whose label is unknown.
    """
    strategy = CollapseStrategy(strategy)
    if strategy is CollapseStrategy.MIDPOINT:
        points = [
            DataPoint(features=tuple(Interval.point(iv.midpoint) for iv in p.features), label=p.label)
            for p in d.points
            if p.label.is_known
        ]
    else:
        points = [p for p in d.points if p.is_precise]
    if not points:
        raise EmptyDatasetError(f"collapse({strategy.value}) left no rows")
    dropped = d.n - len(points)
    if dropped:
        logger.info("collapse(%s) dropped %d of %d rows", strategy.value, dropped, d.n)
    return d.with_points(points)


def nearest_boundary_rows(d: Dataset, coeffs: Coefficients, k: int) -> list[int]:
    """Indices of the k rows whose score at the feature midpoints is closest to 0, ascending.

    Ties are broken by row index.
    """
    if not 0 <= k <= d.n:
        raise InvalidArgumentError(f"k must lie in [0, {d.n}], got {k}")
    if k == 0:
        return []
    midpoints = (d.lower() + d.upper()) / 2
    score, _ = score_bounds_matrix(np.asarray(coeffs.beta), midpoints, midpoints)
    order = np.argsort(np.abs(score), kind="stable")
    return sorted(int(i) for i in order[:k])


# ---------------------------
# Burn-registry stand-in
# ---------------------------

BURN_COVARIATES = (
    Covariate(name="age", lo=0.0, hi=90.0),
    Covariate(name="tbsa", lo=0.0, hi=60.0),
    Covariate(name="inhalation", kind=CovariateKind.BINARY, rate=0.2),
    Covariate(name="flame", kind=CovariateKind.BINARY, rate=0.5),
)
BURN_TRUTH = Coefficients(beta=(-8.0, 0.08, 0.1, 1.4, 0.6))


def burn_standin(
    n: int = 1000,
    seed: int = 0,
    age_cutoff: float = 80.0,
    age_cap: float = 90.0,
    dunno_cells: int = 20,
    unknown_labels: int = 10,
) -> Dataset:
    """Synthetic burn-mortality data with the registry's kinds of uncertainty.

    Ages above `age_cutoff` become [age_cutoff, age_cap], `dunno_cells` random
    inhalation cells become [0, 1] and `unknown_labels` random outcomes become
    unknown. The precise draw is synthesize_mixed(n, seed, BURN_TRUTH, BURN_COVARIATES).
    """
    if not 0 <= dunno_cells <= n or not 0 <= unknown_labels <= n:
        raise InvalidArgumentError(
            f"dunno_cells and unknown_labels must lie in [0, {n}], got {dunno_cells} and {unknown_labels}"
        )
    d = synthesize_mixed(n, seed, BURN_TRUTH, BURN_COVARIATES)
    d = censor_above(d, 0, age_cutoff, age_cap)
    rng = make_rng(derive_seed(seed, 1))
    dunno = rng.choice(n, size=dunno_cells, replace=False).tolist()
    unknown = rng.choice(n, size=unknown_labels, replace=False).tolist()
    d = censor_cells(d, 2, dunno, Interval(lo=0.0, hi=1.0))
    d = censor_labels(d, unknown)
    logger.info(
        "Burn stand-in: %d rows, %d interval cells, %d unknown labels",
        d.n, len(d.interval_cells), len(d.unknown_rows),
    )
    return d
