"""Evaluation statistics: correlations, monotone logistic mapping, paired tests.

Everything here is deliberately dependency-free (stdlib ``math`` plus numpy
array arithmetic): the Student-t CDF goes through a continued-fraction
regularized incomplete beta, the exact Wilcoxon null distribution is built
by dynamic programming over doubled midranks, and the normal tail uses
``math.erf``. Tests cross-check all of it against brute-force oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateInputError,
    DegenerateTestError,
    FitError,
    ZeroVarianceError,
)

_TINY = np.finfo(np.float64).tiny


def _as_pair(x, y, min_n, what):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(x) != len(y):
        raise AlignmentError(f"{what}: lengths differ ({len(x)} vs {len(y)})")
    if len(x) < min_n:
        raise DegenerateInputError(f"{what}: need at least {min_n} samples, got {len(x)}")
    return x, y


def plcc(x, y) -> float:
    """Sample Pearson linear correlation; raises on constant input."""
    x, y = _as_pair(x, y, 3, "plcc")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0:
        raise ZeroVarianceError("plcc: first argument is constant")
    if vy == 0.0:
        raise ZeroVarianceError("plcc: second argument is constant")
    r = float(dx @ dy) / math.sqrt(vx * vy)
    return float(min(1.0, max(-1.0, r)))


def midranks(values) -> np.ndarray:
    """Fractional ranks starting at 1; tied values share the average rank."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srocc(x, y) -> float:
    """Spearman rank-order correlation: Pearson over midranks."""
    x, y = _as_pair(x, y, 3, "srocc")
    try:
        return plcc(midranks(x), midranks(y))
    except ZeroVarianceError:
        raise ZeroVarianceError("srocc: an argument is entirely tied") from None


# ---------------------------------------------------------------------------
# Four-parameter logistic mapping


def logistic4_apply(params, s) -> np.ndarray:
    """Evaluate q(s) = b2 + (b1 - b2) / (1 + exp(-(s - b3)/|b4|))."""
    b1, b2, b3, b4 = (float(p) for p in params)
    scale = max(abs(b4), 1e-12)
    z = (np.asarray(s, dtype=np.float64) - b3) / scale
    return b2 + (b1 - b2) * _expit(z)


def _expit(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Logistic4Fit:
    params: np.ndarray
    converged: bool
    iterations: int
    sse: float
    accepted_sse: list = field(default_factory=list)


def fit_logistic4_full(pred, mos, max_iter: int = 500, rel_tol: float = 1e-10) -> Logistic4Fit:
    """Damped Gauss-Newton fit of the 4-parameter logistic.

    Initialization is data-driven (b1 = max label, b2 = min label, b3 =
    median prediction, b4 = prediction std). Steps that do not reduce the
    squared error are rejected and the damping factor raised, so the
    accepted SSE sequence is non-increasing by construction.
    """
    s, y = _as_pair(pred, mos, 5, "fit_logistic4")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(y))):
        raise FitError("fit_logistic4: inputs contain non-finite values")
    if float(np.ptp(y)) == 0.0:
        raise ZeroVarianceError("fit_logistic4: labels are constant")
    b4 = float(s.std())
    if b4 == 0.0:
        b4 = 1.0
    beta = np.array([float(y.max()), float(y.min()), float(np.median(s)), b4])

    def residuals(b):
        r = logistic4_apply(b, s) - y
        if not np.all(np.isfinite(r)):
            raise FitError(f"non-finite residuals at parameters {b.tolist()}")
        return r

    r = residuals(beta)
    sse = float(r @ r)
    accepted = [sse]
    mu = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        b1, b2, b3, b4 = beta
        scale = max(abs(b4), 1e-12)
        z = (s - b3) / scale
        sig = _expit(z)
        dsig = sig * (1.0 - sig)
        jac = np.empty((len(s), 4))
        jac[:, 0] = sig
        jac[:, 1] = 1.0 - sig
        jac[:, 2] = (b1 - b2) * dsig * (-1.0 / scale)
        jac[:, 3] = (b1 - b2) * dsig * (-z * math.copysign(1.0, b4) / scale)
        g = jac.T @ r
        h = jac.T @ jac
        try:
            delta = np.linalg.solve(h + mu * np.eye(4), -g)
        except np.linalg.LinAlgError:
            mu *= 10.0
            continue
        cand = beta + delta
        try:
            r_cand = residuals(cand)
        except FitError:
            mu *= 10.0
            continue
        sse_cand = float(r_cand @ r_cand)
        if sse_cand < sse:
            rel_change = (sse - sse_cand) / max(sse, _TINY)
            beta, r, sse = cand, r_cand, sse_cand
            accepted.append(sse)
            mu = max(mu * 0.1, 1e-12)
            if rel_change < rel_tol or sse == 0.0:
                converged = True
                break
        else:
            mu *= 10.0
            if mu > 1e12:
                # Damping exhausted: no descent direction left.
                converged = True
                break
    return Logistic4Fit(params=beta, converged=converged, iterations=it, sse=sse, accepted_sse=accepted)


def fit_logistic4(pred, mos) -> np.ndarray:
    fit = fit_logistic4_full(pred, mos)
    if not fit.converged:
        import logging

        logging.getLogger(__name__).warning(
            "logistic fit stopped at iteration cap %d with sse %.3g", fit.iterations, fit.sse
        )
    return fit.params


# ---------------------------------------------------------------------------
# Student-t tail via the regularized incomplete beta function


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_it = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_it + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h


def regularized_incomplete_beta(a, b, x) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_p_two_sided(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df < 1:
        raise DegenerateInputError(f"degrees of freedom must be >= 1, got {df}")
    if not math.isfinite(t):
        return _TINY
    p = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
    return float(min(1.0, max(_TINY, p)))


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank


def _wilcoxon_exact_cdf(double_ranks):
    """Null distribution of the positive-rank sum over doubled midranks.

    Returns (probabilities indexed by doubled rank sum, total). Counts stay
    integral in float64 up to n = 52, far beyond the exact-regime cutoff.
    """
    total = int(round(sum(double_ranks)))
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in double_ranks:
        r = int(round(r))
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    return counts / counts.sum(), total


def wilcoxon_signed_rank(diffs, exact_limit: int = 25):
    """Two-sided and lower-tail one-sided p for the signed-rank statistic.

    Zero differences are dropped; tied absolute differences share midranks.
    Exact enumeration (via DP) for n <= exact_limit, otherwise a normal
    approximation with tie correction and continuity correction. The
    one-sided alternative is that the differences tend negative (small
    positive-rank sum).
    """
    d = np.asarray(diffs, dtype=np.float64).reshape(-1)
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        raise DegenerateTestError("wilcoxon: all differences are zero")
    ranks = midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= exact_limit:
        probs, total = _wilcoxon_exact_cdf(2.0 * ranks)
        w2 = int(round(2.0 * w_plus))
        cdf_low = float(probs[: w2 + 1].sum())
        tail_high = float(probs[w2:].sum())
        p_two = min(1.0, 2.0 * min(cdf_low, tail_high))
        p_one = cdf_low
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
        sigma = math.sqrt(var)
        dev = w_plus - mu
        if abs(dev) <= 0.5:
            p_two = 1.0
        else:
            z = (abs(dev) - 0.5) / sigma
            p_two = min(1.0, 2.0 * (1.0 - _normal_cdf(z)))
        p_one = _normal_cdf((w_plus - mu + 0.5) / sigma)
    return max(p_two, _TINY), max(p_one, _TINY)


@dataclass
class SignificanceReport:
    mean_abs_err_diff: float
    t_p_two_sided: float
    wilcoxon_p_two_sided: float
    wilcoxon_p_one_sided: float
    alpha: float = 0.05


def paired_tests(err_a, err_b, alpha: float = 0.05) -> SignificanceReport:
    """Paired t-test and Wilcoxon signed-rank on absolute prediction errors.

    The one-sided Wilcoxon tests whether err_a is systematically smaller
    than err_b. All-zero differences raise DegenerateTestError.
    """
    a, b = _as_pair(err_a, err_b, 6, "paired_tests")
    d = a - b
    if not np.any(d != 0.0):
        raise DegenerateTestError("paired_tests: the two error sequences are identical")
    n = len(d)
    sd = float(d.std(ddof=1))
    mean = float(d.mean())
    if sd == 0.0:
        # Constant nonzero shift: t statistic is unbounded, tail mass vanishes.
        t_p = _TINY
    else:
        t_stat = mean / (sd / math.sqrt(n))
        t_p = student_t_p_two_sided(t_stat, n - 1)
    w_two, w_one = wilcoxon_signed_rank(d)
    return SignificanceReport(
        mean_abs_err_diff=float(np.mean(a) - np.mean(b)),
        t_p_two_sided=t_p,
        wilcoxon_p_two_sided=w_two,
        wilcoxon_p_one_sided=w_one,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Composite evaluation


@dataclass
class EvalReport:
    plcc_raw: float
    plcc_fitted: float
    srocc: float
    logistic_params: np.ndarray
    n: int


def evaluate(pred, mos) -> EvalReport:
    """Correlations before and after the fitted monotone logistic mapping."""
    pred, mos = _as_pair(pred, mos, 5, "evaluate")
    params = fit_logistic4(pred, mos)
    mapped = logistic4_apply(params, pred)
    return EvalReport(
        plcc_raw=plcc(pred, mos),
        plcc_fitted=plcc(mapped, mos),
        srocc=srocc(pred, mos),
        logistic_params=params,
        n=len(pred),
    )
