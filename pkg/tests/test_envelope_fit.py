import os
import sys

# Ensure project root is on sys.path
CURRENT_DIR = os.path.dirname(__file__)
PROJECT_ROOT = os.path.dirname(CURRENT_DIR)
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import math

import numpy as np
import pytest

from models.coefficients import Coefficients
from models.dataset import CensorMode, CollapseStrategy, DataPoint, Dataset
from models.interval import Interval, UncertainLabel
from models.modelset import BruteForceLimits, CandidateModel, EnvelopeOptions, ModelSet
from services.envelope_fit import (
    empirical_containment,
    envelope_on_grid,
    feature_grid,
    fit_imprecise,
    fit_imprecise_bruteforce,
    predict_interval,
)
from services.glm_fit import fit_mle, predict_proba, sigmoid
from services.transforms import censor_labels, collapse, intervalize, synthesize
from utils.errors import DimensionMismatchError, EmptyDatasetError, InvalidArgumentError, LatticeTooLargeError
from utils.rng import make_rng

TRUTH = Coefficients(beta=(-5.0, 1.0))
X_RANGE = Interval(lo=0.0, hi=10.0)


def make_dataset(xs, ys):
    return Dataset(
        feature_names=("x",),
        points=tuple(
            DataPoint(
                features=(x if isinstance(x, Interval) else Interval.point(x),),
                label=UncertainLabel.UNKNOWN if y is None else UncertainLabel.known(y),
            )
            for x, y in zip(xs, ys)
        ),
    )


def model_set(*betas):
    return ModelSet(
        models=tuple(CandidateModel(beta=b, provenance=f"m{i}") for i, b in enumerate(betas)),
        digest="test",
    )


def recentre(d: Dataset, epsilon: float) -> Dataset:
    """Same interval centres, half-width epsilon."""
    return d.with_points(
        DataPoint(
            features=tuple(Interval(lo=iv.midpoint - epsilon, hi=iv.midpoint + epsilon) for iv in p.features),
            label=p.label,
        )
        for p in d.points
    )


def assert_envelope_inside(inner: ModelSet, outer: ModelSet, grid, tolerance: float):
    in_lo, in_hi = envelope_on_grid(inner, grid)
    out_lo, out_hi = envelope_on_grid(outer, grid)
    assert np.all(out_lo <= in_lo + tolerance)
    assert np.all(in_hi <= out_hi + tolerance)


# ----------------------------------------------------------------------
# Degenerate inputs
# ----------------------------------------------------------------------

def test_precise_data_collapses_to_the_precise_fit():
    d = synthesize(30, 3, TRUTH, X_RANGE)
    ms = fit_imprecise(d)
    c, _ = fit_mle(d)
    for candidate in ms.models:
        assert candidate.beta == pytest.approx(c.beta, abs=1e-6)
    for x in (0.0, 3.3, 10.0):
        p = predict_interval(ms, [Interval.point(x)])
        assert p.hi - p.lo <= 1e-9
        assert p.lo == pytest.approx(predict_proba(c, [x]), abs=1e-9)


def test_model_set_digest_identifies_training_data():
    d = synthesize(15, 4, TRUTH, X_RANGE)
    assert fit_imprecise(d).digest == fit_imprecise(d).digest
    assert fit_imprecise(d).digest != fit_imprecise(synthesize(15, 5, TRUTH, X_RANGE)).digest


def test_fit_imprecise_is_deterministic():
    d = intervalize(synthesize(20, 6, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.4, seed=6)
    options = EnvelopeOptions(refine_budget=30)
    assert fit_imprecise(d, options) == fit_imprecise(d, options)


def test_fit_imprecise_rejects_bad_input():
    with pytest.raises(EmptyDatasetError):
        fit_imprecise(Dataset(feature_names=("x",), points=()))
    with pytest.raises(InvalidArgumentError):
        fit_imprecise(synthesize(5, 0, TRUTH, X_RANGE), EnvelopeOptions(refine_budget=0))


# ----------------------------------------------------------------------
# Label uncertainty
# ----------------------------------------------------------------------

def test_one_unknown_label_gives_both_completions():
    d = censor_labels(synthesize(30, 12, TRUTH, X_RANGE), [4])
    ms = fit_imprecise(d)
    assert [c.provenance for c in ms.models] == ["labels:0", "labels:1"]
    for candidate, fill in zip(ms.models, (0, 1)):
        completed = d.with_points(
            DataPoint(features=p.features, label=UncertainLabel.known(fill)) if i == 4 else p
            for i, p in enumerate(d.points)
        )
        c, _ = fit_mle(completed)
        assert candidate.beta == pytest.approx(c.beta, abs=1e-9)


def test_bruteforce_enumerates_every_completion():
    d = censor_labels(synthesize(30, 1, TRUTH, X_RANGE), [2, 9, 17])
    assert len(fit_imprecise_bruteforce(d).models) == 8


def test_bruteforce_on_precise_data_is_the_precise_fit():
    d = synthesize(20, 2, TRUTH, X_RANGE)
    ms = fit_imprecise_bruteforce(d)
    assert len(ms.models) == 1
    assert ms.models[0].beta == pytest.approx(fit_mle(d)[0].beta, abs=1e-12)


def test_bruteforce_refuses_large_lattices():
    d = censor_labels(synthesize(40, 3, TRUTH, X_RANGE), range(25))
    with pytest.raises(LatticeTooLargeError) as exc:
        fit_imprecise_bruteforce(d)
    assert "2^25" in str(exc.value)


def test_label_enumeration_matches_bruteforce():
    """On label-only uncertainty the heuristic enumerates exactly what brute force does."""
    rng = make_rng(99)
    for trial in range(20):
        n = int(rng.integers(10, 31))
        q = int(rng.integers(1, 7))
        d = synthesize(n, 1000 + trial, TRUTH, X_RANGE)
        d = censor_labels(d, rng.choice(n, size=q, replace=False).tolist())
        fast, exact = fit_imprecise(d), fit_imprecise_bruteforce(d)
        grid = feature_grid(d)
        fast_lo, fast_hi = envelope_on_grid(fast, grid)
        exact_lo, exact_hi = envelope_on_grid(exact, grid)
        np.testing.assert_allclose(fast_lo, exact_lo, atol=1e-3)
        np.testing.assert_allclose(fast_hi, exact_hi, atol=1e-3)
        np.testing.assert_allclose(fast.coefficient_bounds, exact.coefficient_bounds, rtol=1e-3, atol=1e-12)


# ----------------------------------------------------------------------
# Feature uncertainty
# ----------------------------------------------------------------------

def test_threshold_cuts_are_candidates():
    d = intervalize(synthesize(12, 11, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=11)
    tags = {c.provenance for c in fit_imprecise(d, EnvelopeOptions(refine_budget=5, exact_threshold=0)).models}
    assert {f"cut:{k}:{bits}" for k in range(1, 12) for bits in ("01", "10")} <= tags
    off = fit_imprecise(d, EnvelopeOptions(refine_budget=5, exact_threshold=0, threshold_cuts=0))
    assert not any(c.provenance.startswith("cut:") for c in off.models)


def test_threshold_cuts_are_capped():
    d = intervalize(synthesize(40, 12, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=12)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=5, threshold_cuts=4))
    assert sum(c.provenance.startswith("cut:") for c in ms.models) == 8


def test_threshold_cuts_complete_unknown_labels_both_ways():
    d = make_dataset([Interval(lo=1.0, hi=2.0), Interval(lo=4.0, hi=5.0), 6.0, 8.0], [0, None, 1, 0])
    tags = {c.provenance for c in fit_imprecise(d, EnvelopeOptions(refine_budget=5, exact_threshold=0)).models}
    assert {"cut:1:01|unknown=0", "cut:1:01|unknown=1", "cut:1:10|unknown=0", "cut:1:10|unknown=1"} <= tags


def test_interval_rows_include_both_column_corners():
    d = intervalize(synthesize(25, 7, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=7)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=20))
    tags = {c.provenance for c in ms.models}
    assert {"corner:0", "corner:1", "min:beta0", "max:beta0", "min:beta1", "max:beta1"} <= tags


def test_include_corners_false_keeps_uniform_corners():
    base = synthesize(20, 8, Coefficients(beta=(-5.0, 0.5, 0.5)), X_RANGE)
    d = intervalize(base, CensorMode.SYMMETRIC, 0.3, seed=8)
    tags = {c.provenance for c in fit_imprecise(d, EnvelopeOptions(refine_budget=10, include_corners=False)).models}
    assert {"corner:00", "corner:11"} <= tags
    assert not {"corner:01", "corner:10"} & tags
    all_tags = {c.provenance for c in fit_imprecise(d, EnvelopeOptions(refine_budget=10)).models}
    assert {"corner:00", "corner:01", "corner:10", "corner:11"} <= all_tags


def test_extremization_never_worse_than_corners():
    d = intervalize(synthesize(30, 9, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=9)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=40))
    by_tag = {c.provenance: c for c in ms.models}
    corners = [c for c in ms.models if c.provenance.startswith("corner:")]
    for i in (0, 1):
        assert by_tag[f"min:beta{i}"].beta[i] <= min(c.beta[i] for c in corners)
        assert by_tag[f"max:beta{i}"].beta[i] >= max(c.beta[i] for c in corners)


def test_probe_points_add_score_extremizations():
    d = intervalize(synthesize(20, 10, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=10)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=10, probe_points=((2.0,), (8.0,))))
    tags = {c.provenance for c in ms.models}
    assert {"min:score@0", "max:score@0", "min:score@1", "max:score@1"} <= tags


def test_probe_point_dimension_checked():
    d = intervalize(synthesize(10, 10, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=10)
    with pytest.raises(DimensionMismatchError):
        fit_imprecise(d, EnvelopeOptions(refine_budget=10, probe_points=((2.0, 1.0),)))


def test_small_interval_data_dominates_bruteforce():
    """When the lattice is small the heuristic set contains it, so its envelope covers brute force."""
    rng = make_rng(7)
    for trial in range(20):
        n = int(rng.integers(4, 9))
        d = synthesize(n, 2000 + trial, TRUTH, X_RANGE)
        d = intervalize(d, CensorMode.SYMMETRIC, float(rng.uniform(0.1, 1.0)), seed=trial)
        heuristic = fit_imprecise(d, EnvelopeOptions(refine_budget=10))
        exact = fit_imprecise_bruteforce(d)
        assert_envelope_inside(exact, heuristic, feature_grid(d), 1e-6)
        for (lo, hi), (elo, ehi) in zip(heuristic.coefficient_bounds, exact.coefficient_bounds):
            assert lo <= elo + 1e-6 and ehi <= hi + 1e-6


@pytest.fixture(scope="module")
def replica_envelope(replica):
    _, d = replica
    return d, fit_imprecise(d)


@pytest.mark.parametrize("epsilon", [0.1, 0.2, 0.3])
def test_wider_intervals_never_narrow_the_envelope(replica_envelope, epsilon):
    d, wide = replica_envelope
    narrow = fit_imprecise(recentre(d, epsilon))
    assert_envelope_inside(narrow, wide, feature_grid(d), 1e-6)


# ----------------------------------------------------------------------
# Prediction
# ----------------------------------------------------------------------

def test_predict_interval_over_two_intercepts():
    p = predict_interval(model_set((-1.0,), (1.0,)), [])
    assert p.lo == pytest.approx(sigmoid(-1.0), abs=1e-15)
    assert p.hi == pytest.approx(sigmoid(1.0), abs=1e-15)


def test_predict_interval_over_a_feature_box():
    p = predict_interval(model_set((0.0, 1.0)), [Interval(lo=-1.0, hi=1.0)])
    assert (p.lo, p.hi) == (sigmoid(-1.0), sigmoid(1.0))


def test_single_model_degenerate_prediction_is_exact():
    c = Coefficients(beta=(-2.0, 0.7))
    p = predict_interval(model_set(c.beta), [Interval.point(3.1)])
    assert p.lo == p.hi == predict_proba(c, [3.1])


def test_predict_interval_contains_every_member():
    d = intervalize(synthesize(25, 14, TRUTH, X_RANGE), CensorMode.SYMMETRIC, 0.5, seed=14)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=20))
    for x in (0.0, 4.0, 5.5, 10.0):
        p = predict_interval(ms, [Interval.point(x)])
        for candidate in ms.models:
            assert p.contains(predict_proba(candidate.coefficients, [x]))


def test_predict_interval_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        predict_interval(model_set((0.0, 1.0)), [Interval.point(1.0), Interval.point(2.0)])


# ----------------------------------------------------------------------
# Coverage of the true-data model
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def replica():
    train = synthesize(50, 42, TRUTH, X_RANGE)
    return train, intervalize(train, CensorMode.SYMMETRIC, 0.375, seed=43)


def test_random_interior_fits_stay_inside_envelope(replica):
    _, d = replica
    ms = fit_imprecise(d)
    report = empirical_containment(ms, d, feature_grid(d), n_datasets=200, seed=1)
    assert report.n_datasets == 200
    assert report.violation_rate <= 0.05


def test_midpoint_model_inside_envelope(replica):
    _, d = replica
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=50))
    mid = fit_mle(collapse(d, CollapseStrategy.MIDPOINT))[0]
    lo, hi = envelope_on_grid(ms, feature_grid(d))
    for x, a, b in zip(feature_grid(d)[:, 0], lo, hi):
        assert a - 1e-9 <= predict_proba(mid, [x]) <= b + 1e-9


@pytest.mark.parametrize("mode", [CensorMode.LEFT_BIASED, CensorMode.RIGHT_BIASED])
def test_true_data_model_inside_biased_envelope(replica, mode):
    """One column corner of a biased censoring is the true data itself."""
    train, _ = replica
    d = intervalize(train, mode, 0.375)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=20))
    true_fit = fit_mle(train)[0]
    grid = feature_grid(d)
    lo, hi = envelope_on_grid(ms, grid)
    for x, a, b in zip(grid[:, 0], lo, hi):
        assert a - 1e-9 <= predict_proba(true_fit, [x]) <= b + 1e-9


def test_true_data_model_inside_split_envelope(replica):
    train, _ = replica
    d = intervalize(train, CensorMode.SPLIT_BIASED, 0.375, split_point=5.0)
    ms = fit_imprecise(d)
    true_fit = fit_mle(train)[0]
    grid = feature_grid(d)
    lo, hi = envelope_on_grid(ms, grid)
    for x, a, b in zip(grid[:, 0], lo, hi):
        assert a - 1e-6 <= predict_proba(true_fit, [x]) <= b + 1e-6


def test_split_data_is_a_threshold_cut_candidate(replica):
    """Rows below the split sit at their upper ends, the rest at their lower ends."""
    train, _ = replica
    d = intervalize(train, CensorMode.SPLIT_BIASED, 0.375, split_point=5.0)
    ms = fit_imprecise(d, EnvelopeOptions(refine_budget=5))
    true_beta = np.array(fit_mle(train)[0].beta)
    below = sum(p.features[0].lo < 5.0 for p in train.points)
    cut = {c.provenance: c for c in ms.models}[f"cut:{below}:10"]
    np.testing.assert_allclose(cut.beta, true_beta, rtol=1e-9, atol=1e-9)


def test_containment_arguments_checked(replica):
    _, d = replica
    ms = model_set((0.0, 1.0))
    with pytest.raises(InvalidArgumentError):
        empirical_containment(ms, d, feature_grid(d), n_datasets=0)
    with pytest.raises(DimensionMismatchError):
        empirical_containment(model_set((0.0, 1.0, 1.0)), d, [[1.0, 2.0]])


def test_feature_grid_spans_observed_range():
    d = make_dataset([Interval(lo=-1.0, hi=0.0), 3.0, Interval(lo=4.0, hi=6.0)], [0, 1, 1])
    grid = feature_grid(d, size=5)
    assert grid.shape == (5, 1)
    assert grid[0, 0] == -1.0 and grid[-1, 0] == 6.0
    assert not math.isnan(grid.sum())
