# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Exploratory statistics.

- ``fit_mixed_logit``: logistic regression of a binary outcome on one feature
  with a participant-level random intercept and slope, fitted by maximum
  likelihood under the Laplace approximation;
- ``bh_adjust``: Benjamini-Hochberg adjustment, optionally within groups;
- ``wilcoxon_signed_rank``: paired test, exact for small samples;
- ``pearson``: correlation with its t-test p-value.
"""

import dataclasses
import itertools
import logging
import typing

import numpy as np
from scipy import optimize, special
from scipy import stats as sp_stats
from statsmodels.stats.multitest import multipletests
from statsmodels.tools import numdiff

from . import featureset
from .base import (
    DegenerateInput, DegeneratePairs, InsufficientData, NotConverged, SeparationError,
)

logger = logging.getLogger('anxietysense.stats')

SEPARATION_LIMIT = 15.0
MAX_ITERATIONS = 200
FTOL = 1e-8
GTOL = 1e-6

INNER_TOLERANCE = 1e-10
INNER_MAX_ITERATIONS = 50
MAX_INNER_STEP = 5.0

EXACT_WILCOXON_MAX_N = 12

SCREEN_COLUMNS = ('Feature', 'Estimate', 'Std. Error', 'z value', 'p value', 'Adjusted p value')

_TINY = np.finfo(float).tiny


@dataclasses.dataclass(frozen=True, eq=False)
class MixedModelFit:
    """A fitted random intercept and slope logistic model.

    Attributes:
        beta0, beta1 (float): fixed intercept and slope
        se0, se1 (float): their standard errors, conditional on the covariance
        z (float): beta1 / se1
        p (float): two-sided Wald p-value of beta1
        var_u0, var_u1, cov_u0u1 (float): random-effects covariance
        groups (np.ndarray): participant ids, sorted
        modes (np.ndarray): (n_groups, 2) conditional modes of (u0, u1)
        loglik (float): Laplace-approximated log-likelihood
        converged (bool)
        iterations (int): outer optimizer iterations
    """
    beta0: float
    beta1: float
    se0: float
    se1: float
    z: float
    p: float
    var_u0: float
    var_u1: float
    cov_u0u1: float
    groups: np.ndarray
    modes: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    n_rows: int = 0

    @property
    def correlation(self):
        denominator = np.sqrt(self.var_u0 * self.var_u1)
        return float(self.cov_u0u1 / denominator) if denominator > 0 else 0.0


def _cholesky(theta):
    return np.array([[theta[0], 0.0], [theta[1], theta[2]]])


class _LaplaceLogit(object):
    """Laplace log-likelihood of the random intercept and slope logistic model.

    Random effects are written u = L v with v standard normal and L the lower
    Cholesky factor of their covariance; the conditional modes of v are found
    by a damped Newton iteration run for all participants at once.
    """

    def __init__(self, x, y, groups):
        self.group_ids, codes = np.unique(np.asarray(groups).astype(str), return_inverse=True)
        # Sorted rows make every sum independent of the caller's row order.
        order = np.lexsort((y, x, codes))
        self.x = np.asarray(x, dtype=float)[order]
        self.y = np.asarray(y, dtype=float)[order]
        self.codes = codes[order]
        self.n_groups = len(self.group_ids)

    def _sum(self, values):
        return np.bincount(self.codes, weights=values, minlength=self.n_groups)

    def _curvature(self, a, w):
        h00 = 1.0 + self._sum(w * a[:, 0] ** 2)
        h01 = self._sum(w * a[:, 0] * a[:, 1])
        h11 = 1.0 + self._sum(w * a[:, 1] ** 2)
        return h00, h01, h11

    def modes(self, beta, theta):
        """Conditional modes of v and the per-row linear predictor at those modes."""
        L = _cholesky(theta)
        a = np.column_stack([np.ones_like(self.x), self.x]) @ L
        fixed = beta[0] + beta[1] * self.x
        v = np.zeros((self.n_groups, 2))
        for _ in range(INNER_MAX_ITERATIONS):
            eta = fixed + np.einsum('ij,ij->i', a, v[self.codes])
            p = special.expit(eta)
            residual = self.y - p
            g0 = self._sum(a[:, 0] * residual) - v[:, 0]
            g1 = self._sum(a[:, 1] * residual) - v[:, 1]
            h00, h01, h11 = self._curvature(a, p * (1.0 - p))
            det = h00 * h11 - h01 ** 2
            step = np.column_stack([h11 * g0 - h01 * g1, h00 * g1 - h01 * g0]) / det[:, None]
            largest = np.max(np.abs(step)) if step.size else 0.0
            if largest > MAX_INNER_STEP:
                step *= MAX_INNER_STEP / largest
            v += step
            if largest < INNER_TOLERANCE:
                break
        eta = fixed + np.einsum('ij,ij->i', a, v[self.codes])
        return v, eta, a

    def loglik(self, params):
        beta, theta = params[:2], params[2:]
        v, eta, a = self.modes(beta, theta)
        p = special.expit(eta)
        h00, h01, h11 = self._curvature(a, p * (1.0 - p))
        conditional = np.sum(self.y * eta - np.logaddexp(0.0, eta))
        return float(conditional - 0.5 * np.sum(v ** 2) - 0.5 * np.sum(np.log(h00 * h11 - h01 ** 2)))


def _plain_logit_start(x, y):
    """Newton iterations for the fixed-effects-only model, used as a starting point."""
    X = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    for _ in range(25):
        p = special.expit(X @ beta)
        hessian = X.T @ (X * (p * (1 - p))[:, None]) + 1e-8 * np.eye(2)
        step = np.linalg.solve(hessian, X.T @ (y - p))
        beta = beta + np.clip(step, -5, 5)
        if np.max(np.abs(step)) < 1e-10:
            break
    return beta


def _minimize(objective, start):
    return optimize.minimize(
        objective, start, method='L-BFGS-B', jac='3-point',
        options={'ftol': FTOL, 'gtol': GTOL, 'maxiter': MAX_ITERATIONS},
    )


def _gradient_norm(objective, params):
    """Infinity norm of the central-difference gradient."""
    return float(np.max(np.abs(numdiff.approx_fprime(params, objective, centered=True))))


def fit_mixed_logit_arrays(x, y, groups, random_effects=True):
    """Fit the mixed logistic model on raw arrays.

    Args:
        x (array): the predictor, one value per row
        y (array): 0/1 outcome per row
        groups (array): participant id per row
        random_effects (bool): estimate the random-effects covariance; when
            False it is held at zero (a plain logistic fit)

    Returns:
        MixedModelFit

    Raises:
        SeparationError: constant outcome or a diverging slope
        NotConverged: iteration budget exhausted, or the optimizer stopped
            away from a stationary point; ``partial`` holds the fit
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise SeparationError("Outcome is constant (all %d)" % int(y[0]) if len(y) else "No rows")

    model = _LaplaceLogit(x, y, groups)
    start_beta = _plain_logit_start(model.x, model.y)
    if random_effects:
        start = np.concatenate([start_beta, [0.5, 0.0, 0.5]])

        def objective(params):
            return -model.loglik(params)
    else:
        start = start_beta

        def objective(params):
            return -model.loglik(np.concatenate([params, [0.0, 0.0, 0.0]]))

    result = _minimize(objective, start)
    converged = result.status == 0
    if result.status not in (0, 1):
        # An aborted line search only counts once the optimum is confirmed.
        converged = _gradient_norm(objective, result.x) < GTOL
        if not converged:
            logger.debug("L-BFGS-B stopped early (%s); restarting from the last iterate", result.message)
            restart = _minimize(objective, result.x)
            iterations = result.nit + restart.nit
            result = restart
            result.nit = iterations
            converged = result.status == 0 or _gradient_norm(objective, result.x) < GTOL

    params = result.x if random_effects else np.concatenate([result.x, [0.0, 0.0, 0.0]])
    beta, theta = params[:2], params[2:]

    if abs(beta[1]) > SEPARATION_LIMIT or abs(beta[0]) > SEPARATION_LIMIT:
        raise SeparationError("Fixed effect diverged (beta = %.3g, %.3g)" % (beta[0], beta[1]))

    def fixed_objective(b):
        return -model.loglik(np.concatenate([b, theta]))

    hessian = numdiff.approx_hess3(beta, fixed_objective)
    try:
        cov = np.linalg.inv(hessian)
        se0, se1 = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se0 = se1 = float('nan')

    sigma = _cholesky(theta) @ _cholesky(theta).T
    v, _, _ = model.modes(beta, theta)
    z = beta[1] / se1 if se1 > 0 else float('nan')
    p = max(float(2.0 * sp_stats.norm.sf(abs(z))), _TINY) if np.isfinite(z) else float('nan')
    fit = MixedModelFit(
        beta0=float(beta[0]), beta1=float(beta[1]), se0=float(se0), se1=float(se1),
        z=float(z), p=p,
        var_u0=float(sigma[0, 0]), var_u1=float(sigma[1, 1]), cov_u0u1=float(sigma[0, 1]),
        groups=model.group_ids, modes=v @ _cholesky(theta).T,
        loglik=float(model.loglik(params)), converged=converged, iterations=int(result.nit),
        n_rows=len(model.y),
    )
    if not converged:
        raise NotConverged("No convergence after %d iterations" % result.nit, partial=fit)
    return fit


def scale_sample_wide(values):
    """Center and scale to unit sample standard deviation.

    Raises:
        DegenerateInput: zero variance
    """
    values = np.asarray(values, dtype=float)
    std = np.std(values, ddof=1)
    if not std > 0:
        raise DegenerateInput("Cannot scale a constant feature")
    return (values - values.mean()) / std


def fit_mixed_logit(table, feature, outcome, min_participants=10, min_rows=3, labels=None):
    """Fit outcome ~ feature + (1 + feature | participant) on a feature table.

    Rows without a label or a feature value are dropped, then participants
    with fewer than ``min_rows`` rows; the feature is centered and scaled
    sample-wide.

    Raises:
        InsufficientData: fewer than ``min_participants`` usable participants
    """
    if labels is None:
        labels = featureset.label_table(table, outcome, strict=False)
    frame = table.frame.assign(_label=np.asarray(labels, dtype=float))
    frame = frame.loc[frame[feature].notna() & frame['_label'].notna()]
    sizes = frame.groupby('participant_id')['participant_id'].transform('size')
    frame = frame.loc[sizes >= min_rows]
    n_participants = frame['participant_id'].nunique()
    if n_participants < min_participants:
        raise InsufficientData("%s: %d participant(s) with >= %d rows, %d needed" % (
            feature, n_participants, min_rows, min_participants))
    return fit_mixed_logit_arrays(
        scale_sample_wide(frame[feature].to_numpy(dtype=float)),
        frame['_label'].to_numpy(dtype=float),
        frame['participant_id'].to_numpy(),
    )


def bh_adjust(pvalues, groups=None):
    """Benjamini-Hochberg adjusted p-values.

    Args:
        pvalues (sequence of float): NaN entries are left as NaN and excluded
        groups (sequence): adjust independently within each group label

    Returns:
        np.ndarray, aligned with the input
    """
    pvalues = np.asarray(pvalues, dtype=float)
    adjusted = np.full(len(pvalues), np.nan)
    labels = np.zeros(len(pvalues), dtype=int) if groups is None else np.asarray(groups)
    for label in sorted(set(labels.tolist()), key=str):
        mask = (labels == label) & ~np.isnan(pvalues)
        if mask.any():
            adjusted[mask] = multipletests(pvalues[mask], method='fdr_bh')[1]
    return adjusted


@dataclasses.dataclass(frozen=True)
class TestResult:
    """Outcome of a statistical test.

    Attributes:
        statistic (float): W = min(W+, W-) for Wilcoxon, r for Pearson
        p (float): two-sided p-value
        n (int): sample size (non-zero pairs for Wilcoxon)
        method (str): 'wilcoxon-exact', 'wilcoxon-normal' or 'pearson'
        adjusted_p (float or None): set by bh_adjust callers
    """
    statistic: float
    p: float
    n: int
    method: str
    adjusted_p: typing.Optional[float] = None

    def with_adjusted(self, adjusted_p):
        return dataclasses.replace(self, adjusted_p=float(adjusted_p))


def _signed_ranks(differences):
    differences = np.asarray(differences, dtype=float)
    differences = differences[differences != 0]
    if not len(differences):
        raise DegeneratePairs("Every paired difference is zero")
    return sp_stats.rankdata(np.abs(differences)), differences > 0


def wilcoxon_signed_rank(a, b):
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes get average ranks. Up to
    12 pairs the null distribution is enumerated over every sign assignment;
    above that a normal approximation with tie and continuity corrections is
    used.

    Raises:
        DegeneratePairs: every difference is zero
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InsufficientData("Paired samples differ in length (%d vs %d)" % (len(a), len(b)))
    ranks, positive = _signed_ranks(a - b)
    n = len(ranks)
    total = ranks.sum()
    w_plus = ranks[positive].sum()
    statistic = min(w_plus, total - w_plus)

    if n <= EXACT_WILCOXON_MAX_N:
        signs = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
        null_plus = signs @ ranks
        null_stat = np.minimum(null_plus, total - null_plus)
        p = np.mean(null_stat <= statistic + 1e-9)
        method = 'wilcoxon-exact'
    else:
        mean = n * (n + 1) / 4.0
        _, counts = np.unique(ranks, return_counts=True)
        variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts ** 3 - counts) / 48.0
        correction = 0.5 * np.sign(statistic - mean)
        z = (statistic - mean - correction) / np.sqrt(variance)
        p = 2.0 * sp_stats.norm.sf(abs(z))
        method = 'wilcoxon-normal'
    return TestResult(statistic=float(statistic), p=float(min(max(p, _TINY), 1.0)), n=n, method=method)


def pearson(x, y):
    """Pearson correlation and its two-sided p-value (t-test, n - 2 dof).

    Raises:
        InsufficientData: fewer than 3 pairs
        DegenerateInput: zero variance in either sample
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 3:
        raise InsufficientData("Pearson needs >= 3 pairs of equal length")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInput("Correlation undefined for a constant sample")
    r, p = sp_stats.pearsonr(x, y)
    r = float(np.clip(r, -1.0, 1.0))
    return TestResult(statistic=r, p=float(min(max(p, _TINY), 1.0)), n=len(x), method='pearson')
