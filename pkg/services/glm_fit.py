"""Precise binary logistic regression by maximum likelihood.

Fitting runs Newton/IRLS with step halving on internally standardized
features; coefficients are mapped back to original units before they leave
this module. Separation is capped and flagged, never raised.
"""
from __future__ import annotations

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit

from models.coefficients import Coefficients, FitOptions, FitReport
from models.dataset import Dataset
from services.interval_core import linear_score
from utils.errors import DataError, DimensionMismatchError, EmptyDatasetError, UncertainDataError

logger = logging.getLogger(__name__)

_P_MIN = float(np.nextafter(0.0, 1.0))
_P_MAX = float(np.nextafter(1.0, 0.0))
# Newton steps larger than this (standardized units) mean the optimum has not been reached.
_STEP_TOLERANCE = 1e-6
_MAX_HALVINGS = 60


def sigmoid(score: float) -> float:
    """Logistic function clamped into the open interval (0, 1)."""
    return min(max(float(expit(score)), _P_MIN), _P_MAX)


def predict_proba(c: Coefficients, x: Sequence[float]) -> float:
    if len(x) != c.dimension:
        raise DimensionMismatchError(c.dimension, len(x))
    return sigmoid(linear_score(c.beta, x))


def sigmoid_array(score: np.ndarray) -> np.ndarray:
    return np.clip(expit(score), _P_MIN, _P_MAX)


def predict_proba_matrix(beta: np.ndarray, X: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.shape[0] - 1:
        raise DimensionMismatchError(beta.shape[0] - 1, X.shape[1])
    return sigmoid_array(beta[0] + X @ beta[1:])


def precise_arrays(d: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    """Feature matrix and label vector of a fully certain dataset."""
    uncertain = d.uncertain_rows
    if uncertain:
        raise UncertainDataError("Operation requires precise features and known labels.", rows=uncertain)
    return d.lower(), d.labels()


def nll_arrays(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    score = beta[0] + X @ beta[1:]
    # log(1 + e^s) - y*s is -[y log(pi) + (1-y) log(1-pi)] without overflow.
    return float(np.sum(np.logaddexp(0.0, score) - y * score))


def gradient_arrays(beta: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    residual = expit(beta[0] + X @ beta[1:]) - y
    grad = np.empty_like(beta, dtype=float)
    grad[0] = residual.sum()
    grad[1:] = X.T @ residual + ridge * beta[1:]
    return grad


def _check_beta(c: Coefficients, d: Dataset) -> np.ndarray:
    if c.dimension != d.dimension:
        raise DimensionMismatchError(d.dimension, c.dimension, what="coefficients")
    return np.asarray(c.beta, dtype=float)


def nll(c: Coefficients, d: Dataset) -> float:
    """Negative log-likelihood of a precise labeled dataset."""
    beta = _check_beta(c, d)
    X, y = precise_arrays(d)
    return nll_arrays(beta, X, y)


def nll_gradient(c: Coefficients, d: Dataset) -> list[float]:
    """Component j is sum_i (pi_i - y_i) * x_ij, with x_i0 = 1."""
    beta = _check_beta(c, d)
    X, y = precise_arrays(d)
    return gradient_arrays(beta, X, y).tolist()


def _cap_fraction(gamma: np.ndarray, step: np.ndarray, t: float, cap: float) -> float:
    """Largest fraction of the step t that keeps every |gamma_j - t*step_j| within the cap."""
    limit = t
    for g, s in zip(gamma, step):
        if s > 0:
            limit = min(limit, (g + cap) / s)
        elif s < 0:
            limit = min(limit, (cap - g) / (-s))
    return max(limit, 0.0)


def fit_arrays(X: np.ndarray, y: np.ndarray, opts: FitOptions = FitOptions()) -> Tuple[np.ndarray, FitReport]:
    """Newton/IRLS fit on raw arrays. Returns beta in original units and the diagnostics."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n == 0:
        raise EmptyDatasetError("Cannot fit a logistic regression to an empty dataset.")
    if not np.all(np.isfinite(X)):
        rows = np.nonzero(~np.all(np.isfinite(X), axis=1))[0].tolist()
        raise DataError(f"Non-finite feature values in rows {rows[:20]}.")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    A = np.column_stack([np.ones(n), (X - mean) / scale])
    penalty = np.concatenate([[0.0], opts.ridge / scale**2])

    def to_original(gamma: np.ndarray) -> np.ndarray:
        beta = np.empty_like(gamma)
        beta[1:] = gamma[1:] / scale
        beta[0] = gamma[0] - np.dot(beta[1:], mean)
        return beta

    def objective(gamma: np.ndarray) -> float:
        score = A @ gamma
        return float(np.sum(np.logaddexp(0.0, score) - y * score) + 0.5 * np.dot(penalty, gamma**2))

    gamma = np.zeros(A.shape[1])
    current = objective(gamma)
    converged = False
    separation = False
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        p = expit(A @ gamma)
        grad = A.T @ (p - y) + penalty * gamma
        weights = p * (1.0 - p)
        hessian = (A * weights[:, None]).T @ A + np.diag(penalty)
        step = np.linalg.lstsq(hessian, grad, rcond=None)[0]

        grad_norm = float(np.max(np.abs(gradient_arrays(to_original(gamma), X, y, opts.ridge))))
        if grad_norm <= opts.tolerance and np.max(np.abs(step)) <= _STEP_TOLERANCE:
            converged = True
            break

        t = 1.0
        for _ in range(_MAX_HALVINGS):
            trial = objective(gamma - t * step)
            if trial <= current:
                break
            t /= 2
        else:
            # No descent left in floating point: gamma is as good as it gets.
            converged = grad_norm <= opts.tolerance
            break

        proposal = gamma - t * step
        if np.max(np.abs(proposal)) > opts.separation_cap:
            t = _cap_fraction(gamma, step, t, opts.separation_cap)
            gamma = np.clip(gamma - t * step, -opts.separation_cap, opts.separation_cap)
            separation = True
            break
        gamma = proposal
        current = trial

    beta = to_original(gamma)
    final_grad = float(np.max(np.abs(gradient_arrays(beta, X, y, opts.ridge))))
    converged = converged and not separation and final_grad <= opts.tolerance
    report = FitReport(
        converged=converged,
        iterations=iterations,
        final_nll=nll_arrays(beta, X, y),
        gradient_norm=final_grad,
        separation_detected=separation,
    )
    if separation:
        logger.debug("Separation detected after %d iterations; coefficients capped", iterations)
    elif not converged:
        logger.debug("Fit stopped without convergence: gradient norm %.3g", final_grad)
    return beta, report


def fit_mle(d: Dataset, opts: FitOptions = FitOptions()) -> Tuple[Coefficients, FitReport]:
    if d.n == 0:
        raise EmptyDatasetError("Cannot fit a logistic regression to an empty dataset.")
    X, y = precise_arrays(d)
    beta, report = fit_arrays(X, y, opts)
    logger.info(
        "Fitted %d rows: converged=%s iterations=%d nll=%.6g",
        d.n, report.converged, report.iterations, report.final_nll,
    )
    return Coefficients(beta=tuple(float(b) for b in beta)), report
