"""Imprecise logistic regression: a finite set of fits whose prediction envelope
stands in for every logistic regression consistent with the uncertain data.

Candidates come from five sources:
  * column-orientation corners (each feature column at its lower or upper ends),
    with unknown labels completed all-0 and all-1;
  * threshold cuts: cells below a midpoint cut at one endpoint, the rest at the other;
  * the full endpoint lattice, when it is small;
  * coordinate-descent extremizations of each coefficient (and of the score at
    optional probe points), started from the best corner;
  * for pure label uncertainty, exact enumeration of the label completions.

Nothing here claims coverage of the true model; empirical_containment measures it.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar

from models.coefficients import FitOptions, FitReport
from models.dataset import Dataset
from models.interval import Interval
from models.modelset import BruteForceLimits, CandidateModel, ContainmentReport, EnvelopeOptions, ModelSet
from services.glm_fit import fit_arrays, predict_proba_matrix, sigmoid, sigmoid_array
from services.interval_core import linear_score_bounds, score_bounds_matrix
from utils.digest import digest_model
from utils.errors import DimensionMismatchError, EmptyDatasetError, InvalidArgumentError, LatticeTooLargeError
from utils.rng import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Problem:
    """Array view of a dataset: which cells and labels are free, and their ranges."""
    lower: np.ndarray
    upper: np.ndarray
    labels: np.ndarray
    cell_rows: np.ndarray
    cell_cols: np.ndarray
    unknown: np.ndarray

    @classmethod
    def from_dataset(cls, d: Dataset) -> "_Problem":
        cells = d.interval_cells
        return cls(
            lower=d.lower(),
            upper=d.upper(),
            labels=d.labels(),
            cell_rows=np.array([i for i, _ in cells], dtype=int),
            cell_cols=np.array([j for _, j in cells], dtype=int),
            unknown=np.array(d.unknown_rows, dtype=int),
        )

    @property
    def n_cells(self) -> int:
        return len(self.cell_rows)

    @property
    def n_unknown(self) -> int:
        return len(self.unknown)

    @property
    def dimension(self) -> int:
        return self.lower.shape[1]

    @property
    def cell_lower(self) -> np.ndarray:
        return self.lower[self.cell_rows, self.cell_cols]

    @property
    def cell_upper(self) -> np.ndarray:
        return self.upper[self.cell_rows, self.cell_cols]

    @property
    def interval_columns(self) -> list[int]:
        return sorted(set(self.cell_cols.tolist()))

    def design(self, values: np.ndarray, completion: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = self.lower.copy()
        X[self.cell_rows, self.cell_cols] = values
        y = self.labels.copy()
        y[self.unknown] = completion
        return X, y


@dataclass(frozen=True)
class _Candidate:
    tag: str
    beta: np.ndarray
    report: FitReport
    values: np.ndarray
    completion: np.ndarray


def _bits(values: Sequence[int]) -> str:
    return "".join(str(int(v)) for v in values) or "-"


def _fit_config(problem: _Problem, tag: str, values: np.ndarray, completion: np.ndarray, fit: FitOptions) -> _Candidate:
    X, y = problem.design(values, completion)
    beta, report = fit_arrays(X, y, fit)
    return _Candidate(tag=tag, beta=beta, report=report, values=values, completion=completion)


def _run(jobs: list, n_jobs: int) -> list:
    if not jobs:
        return []
    return Parallel(n_jobs=n_jobs)(jobs)


# ---------------------------
# Candidate configurations
# ---------------------------

def _corner_jobs(problem: _Problem, fit: FitOptions) -> list:
    """Every interval column entirely at its lower or upper endpoints, times the all-0/all-1 label completions."""
    columns = problem.interval_columns
    completions = (0, 1) if problem.n_unknown else (None,)
    jobs = []
    for orientation in itertools.product((0, 1), repeat=len(columns)):
        bits = [0] * problem.dimension
        for column, bit in zip(columns, orientation):
            bits[column] = bit
        at_upper = np.array([bits[j] for j in problem.cell_cols], dtype=bool)
        values = np.where(at_upper, problem.cell_upper, problem.cell_lower)
        for fill in completions:
            tag = f"corner:{_bits(bits)}"
            if fill is not None:
                tag += f"|unknown={fill}"
            completion = np.full(problem.n_unknown, float(fill or 0))
            jobs.append(delayed(_fit_config)(problem, tag, values, completion, fit))
    return jobs


def _cut_jobs(problem: _Problem, fit: FitOptions, max_cuts: int) -> list:
    """Cells whose midpoint lies below a cut value at one endpoint, the rest at the other.

    Cuts fall between consecutive distinct midpoints; above `max_cuts` an evenly
    spaced subset is used. Tags carry the number of cells below the cut.
    """
    if problem.n_cells == 0 or max_cuts == 0:
        return []
    mid = 0.5 * (problem.cell_lower + problem.cell_upper)
    levels = np.unique(mid)
    if len(levels) < 2:
        return []
    cuts = 0.5 * (levels[:-1] + levels[1:])
    if len(cuts) > max_cuts:
        cuts = cuts[np.unique(np.linspace(0, len(cuts) - 1, max_cuts).round().astype(int))]
    completions = (0, 1) if problem.n_unknown else (None,)
    jobs = []
    for cut in cuts:
        below = mid < cut
        rank = int(below.sum())
        for below_bit, above_bit in ((0, 1), (1, 0)):
            at_upper = np.where(below, bool(below_bit), bool(above_bit))
            values = np.where(at_upper, problem.cell_upper, problem.cell_lower)
            for fill in completions:
                tag = f"cut:{rank}:{below_bit}{above_bit}"
                if fill is not None:
                    tag += f"|unknown={fill}"
                completion = np.full(problem.n_unknown, float(fill or 0))
                jobs.append(delayed(_fit_config)(problem, tag, values, completion, fit))
    return jobs


def _lattice_configs(problem: _Problem) -> Iterator[tuple[str, str, np.ndarray, np.ndarray]]:
    """Every label completion times every per-cell endpoint choice."""
    for label_bits in itertools.product((0, 1), repeat=problem.n_unknown):
        completion = np.array(label_bits, dtype=float)
        for cell_bits in itertools.product((0, 1), repeat=problem.n_cells):
            at_upper = np.array(cell_bits, dtype=bool)
            values = np.where(at_upper, problem.cell_upper, problem.cell_lower)
            yield _bits(label_bits), _bits(cell_bits), values, completion


def _lattice_jobs(problem: _Problem, fit: FitOptions) -> list:
    return [
        delayed(_fit_config)(problem, f"lattice:labels={labels}:cells={cells}", values, completion, fit)
        for labels, cells, values, completion in _lattice_configs(problem)
    ]


def _label_jobs(problem: _Problem, fit: FitOptions) -> list:
    return [
        delayed(_fit_config)(problem, f"labels:{labels}", values, completion, fit)
        for labels, _, values, completion in _lattice_configs(problem)
    ]


# ---------------------------
# Extremization
# ---------------------------

def _extremize(
    problem: _Problem,
    tag: str,
    weights: np.ndarray,
    sign: float,
    pool: Sequence[_Candidate],
    opts: EnvelopeOptions,
) -> _Candidate:
    """Minimize sign * (weights . beta) over interior cell values and unknown labels.

    Coordinate descent from the best candidate in `pool`: each cell tries its two
    endpoints and its midpoint, refining with a bounded Brent search when the
    midpoint wins; each unknown label is flipped greedily.
    """
    start = min(pool, key=lambda c: sign * float(weights @ c.beta))
    values = start.values.copy()
    completion = start.completion.copy()
    best_obj = sign * float(weights @ start.beta)
    best_beta, best_report = start.beta, start.report
    evaluations = 0

    def evaluate(vals: np.ndarray, comp: np.ndarray) -> tuple[float, np.ndarray, FitReport]:
        nonlocal evaluations
        evaluations += 1
        X, y = problem.design(vals, comp)
        beta, report = fit_arrays(X, y, opts.fit)
        return sign * float(weights @ beta), beta, report

    cell_lower, cell_upper = problem.cell_lower, problem.cell_upper
    improved = True
    while improved and evaluations < opts.refine_budget:
        improved = False
        for c in range(problem.n_cells):
            lo, hi = float(cell_lower[c]), float(cell_upper[c])
            seen: dict[float, tuple[float, np.ndarray, FitReport]] = {}

            def at(v: float) -> float:
                if v not in seen:
                    trial = values.copy()
                    trial[c] = v
                    seen[v] = evaluate(trial, completion)
                return seen[v][0]

            for v in (lo, hi, 0.5 * (lo + hi)):
                if v != values[c] and evaluations < opts.refine_budget:
                    at(v)
            if not seen:
                continue
            v_best = min(seen, key=lambda v: seen[v][0])
            remaining = opts.refine_budget - evaluations
            if v_best not in (lo, hi) and opts.line_search_iterations > 0 and remaining > 0:
                minimize_scalar(
                    at,
                    bounds=(lo, hi),
                    method="bounded",
                    options={"maxiter": min(opts.line_search_iterations, remaining), "xatol": 1e-10 * (1.0 + hi - lo)},
                )
                v_best = min(seen, key=lambda v: seen[v][0])
            if seen[v_best][0] < best_obj - opts.tolerance:
                values[c] = v_best
                best_obj, best_beta, best_report = seen[v_best]
                improved = True
            if evaluations >= opts.refine_budget:
                break

        for k in range(problem.n_unknown):
            if evaluations >= opts.refine_budget:
                break
            flipped = completion.copy()
            flipped[k] = 1.0 - flipped[k]
            obj, beta, report = evaluate(values, flipped)
            if obj < best_obj - opts.tolerance:
                completion = flipped
                best_obj, best_beta, best_report = obj, beta, report
                improved = True

    if evaluations >= opts.refine_budget:
        logger.debug("%s: refine budget of %d fits exhausted", tag, opts.refine_budget)
    return _Candidate(tag=tag, beta=best_beta, report=best_report, values=values, completion=completion)


def _objectives(m: int, probes: Sequence[Sequence[float]]) -> list[tuple[str, np.ndarray, float]]:
    targets = []
    for i in range(m + 1):
        unit = np.zeros(m + 1)
        unit[i] = 1.0
        targets.append((f"beta{i}", unit))
    for k, probe in enumerate(probes):
        if len(probe) != m:
            raise DimensionMismatchError(m, len(probe), what=f"probe point {k}")
        targets.append((f"score@{k}", np.concatenate([[1.0], np.asarray(probe, dtype=float)])))
    return [
        (f"{direction}:{name}", weights, sign)
        for name, weights in targets
        for direction, sign in (("min", 1.0), ("max", -1.0))
    ]


# ---------------------------
# Public operations
# ---------------------------

def _model_set(d: Dataset, candidates: Sequence[_Candidate]) -> ModelSet:
    ordered = sorted(candidates, key=lambda c: c.tag)
    return ModelSet(
        models=tuple(
            CandidateModel(
                beta=tuple(float(b) for b in c.beta),
                provenance=c.tag,
                separation=c.report.separation_detected,
            )
            for c in ordered
        ),
        feature_names=d.feature_names,
        digest=digest_model(d),
    )


def fit_imprecise(d: Dataset, opts: EnvelopeOptions = EnvelopeOptions()) -> ModelSet:
    if d.n == 0:
        raise EmptyDatasetError("Cannot fit an imprecise model to an empty dataset.")
    if opts.refine_budget <= 0:
        raise InvalidArgumentError(f"refine_budget must be positive, got {opts.refine_budget}")
    problem = _Problem.from_dataset(d)
    k, q = problem.n_cells, problem.n_unknown

    if k == 0 and q > 0 and q <= opts.exact_threshold:
        candidates = _run(_label_jobs(problem, opts.fit), opts.n_jobs)
        logger.info("Enumerated all %d label completions", len(candidates))
        return _model_set(d, candidates)

    corners = _run(_corner_jobs(problem, opts.fit), opts.n_jobs)
    cuts = _run(_cut_jobs(problem, opts.fit, opts.threshold_cuts), opts.n_jobs)
    pool = list(corners) + list(cuts)
    if k > 0 and k + q <= opts.exact_threshold:
        pool += _run(_lattice_jobs(problem, opts.fit), opts.n_jobs)
    pool.sort(key=lambda c: c.tag)

    objectives = _objectives(d.dimension, opts.probe_points)
    extremes = _run(
        [delayed(_extremize)(problem, tag, weights, sign, pool, opts) for tag, weights, sign in objectives],
        opts.n_jobs,
    )

    if not opts.include_corners:
        columns = problem.interval_columns
        pool = [c for c in pool if not c.tag.startswith("corner:") or _uniform_corner(c.tag, columns)]
    candidates = pool + list(extremes)
    separated = sum(c.report.separation_detected for c in candidates)
    logger.info(
        "Imprecise fit: %d candidates (%d interval cells, %d unknown labels, %d separated)",
        len(candidates), k, q, separated,
    )
    return _model_set(d, candidates)


def _uniform_corner(tag: str, columns: Sequence[int]) -> bool:
    bits = tag.split(":", 1)[1].split("|", 1)[0]
    return len({bits[j] for j in columns}) <= 1


def fit_imprecise_bruteforce(d: Dataset, limits: BruteForceLimits = BruteForceLimits()) -> ModelSet:
    """Fit every label completion at every per-cell endpoint corner. Exact over that lattice."""
    if d.n == 0:
        raise EmptyDatasetError("Cannot fit an imprecise model to an empty dataset.")
    problem = _Problem.from_dataset(d)
    k, q = problem.n_cells, problem.n_unknown
    if 2**q > limits.max_label_combos or 2**k > limits.max_feature_corners:
        raise LatticeTooLargeError(q, k, limits.max_label_combos, limits.max_feature_corners)
    candidates = _run(_lattice_jobs(problem, limits.fit), limits.n_jobs)
    logger.info("Brute force: %d fits (2^%d labels x 2^%d cells)", len(candidates), q, k)
    return _model_set(d, candidates)


def predict_interval(ms: ModelSet, x: Sequence[Interval]) -> Interval:
    """Hull over candidates of the sigmoid of each candidate's exact score bounds."""
    if len(x) != ms.dimension:
        raise DimensionMismatchError(ms.dimension, len(x))
    lows, highs = [], []
    for candidate in ms.models:
        score = linear_score_bounds(candidate.coefficients, x)
        lows.append(sigmoid(score.lo))
        highs.append(sigmoid(score.hi))
    return Interval(lo=min(lows), hi=max(highs))


def predict_interval_matrix(ms: ModelSet, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """predict_interval for every row of an (n, m) box at once."""
    if lower.shape[1] != ms.dimension:
        raise DimensionMismatchError(ms.dimension, lower.shape[1])
    p_lo = np.ones(lower.shape[0])
    p_hi = np.zeros(lower.shape[0])
    for candidate in ms.models:
        lo, hi = score_bounds_matrix(np.asarray(candidate.beta), lower, upper)
        p_lo = np.minimum(p_lo, sigmoid_array(lo))
        p_hi = np.maximum(p_hi, sigmoid_array(hi))
    return p_lo, p_hi


def _as_points(points, m: int) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, m) if m > 0 else arr.reshape(-1, 0)
    if arr.shape[1] != m:
        raise DimensionMismatchError(m, arr.shape[1], what="grid points")
    return arr


def envelope_on_grid(ms: ModelSet, points) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper envelope of the candidates' predicted probability at precise points."""
    grid = _as_points(points, ms.dimension)
    return predict_interval_matrix(ms, grid, grid)


def feature_grid(d: Dataset, size: int = 21, column: int = 0) -> np.ndarray:
    """Even grid over one feature's observed range; other features held at their mean midpoint."""
    if d.dimension == 0:
        raise InvalidArgumentError("feature_grid needs at least one feature")
    if not 0 <= column < d.dimension:
        raise InvalidArgumentError(f"column must lie in [0, {d.dimension}), got {column}")
    lower, upper = d.lower(), d.upper()
    grid = np.tile(((lower + upper) / 2).mean(axis=0), (size, 1))
    grid[:, column] = np.linspace(lower[:, column].min(), upper[:, column].max(), size)
    return grid


def _interior_fit(X: np.ndarray, y: np.ndarray, fit: FitOptions) -> np.ndarray:
    return fit_arrays(X, y, fit)[0]


def empirical_containment(
    ms: ModelSet,
    d: Dataset,
    grid,
    n_datasets: int = 200,
    seed: int = 0,
    tolerance: float = 1e-6,
    fit: FitOptions = FitOptions(),
    n_jobs: int = 1,
) -> ContainmentReport:
    """Refit random interior datasets and count the curves that leave the envelope on the grid.

    Features are drawn uniformly inside their intervals and unknown labels are fair coin flips.
    """
    if n_datasets < 1:
        raise InvalidArgumentError(f"n_datasets must be at least 1, got {n_datasets}")
    if d.dimension != ms.dimension:
        raise DimensionMismatchError(ms.dimension, d.dimension, what="dataset")
    points = _as_points(grid, ms.dimension)
    env_lo, env_hi = envelope_on_grid(ms, points)

    rng = make_rng(seed)
    lower, upper, labels = d.lower(), d.upper(), d.labels()
    unknown = np.isnan(labels)
    draws = []
    for _ in range(n_datasets):
        X = rng.uniform(lower, upper)
        y = labels.copy()
        y[unknown] = (rng.random(int(unknown.sum())) < 0.5).astype(float)
        draws.append((X, y))

    betas = Parallel(n_jobs=n_jobs)(delayed(_interior_fit)(X, y, fit) for X, y in draws)
    excesses = []
    for beta in betas:
        p = predict_proba_matrix(beta, points)
        excesses.append(float(max(0.0, np.max(env_lo - p), np.max(p - env_hi))))
    violating = tuple(i for i, e in enumerate(excesses) if e > tolerance)
    report = ContainmentReport(
        n_datasets=n_datasets,
        violations=len(violating),
        violation_rate=len(violating) / n_datasets,
        tolerance=tolerance,
        violating_draws=violating,
        worst_excess=max(excesses),
    )
    logger.info("Empirical containment: %d of %d draws left the envelope", report.violations, n_datasets)
    return report
