"""Statistical test helpers used by the experiments and the test suite."""

from __future__ import annotations

import numpy as np
from scipy import special, stats as sps

from .errors import PreconditionViolated


def normal_cdf(x):
    """Standard normal CDF via the complementary error function.

    Accurate to full double precision across the real line, unlike the
    naive 0.5*(1+erf) form which loses digits in the far left tail.
    """
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * special.erfc(-x / np.sqrt(2.0))


def ks_distance_to_normal(sample: np.ndarray) -> float:
    """Sup distance between the empirical CDF of ``sample`` and the
    standard normal CDF.

    Handles ties (integer-valued statistics standardize onto a lattice):
    the sup over each flat stretch of the ECDF is still attained at one of
    the sorted sample points.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    m = x.shape[0]
    if m == 0:
        raise PreconditionViolated("empty sample")
    cdf = normal_cdf(x)
    grid = np.arange(1, m + 1, dtype=np.float64) / m
    return float(np.max(np.maximum(grid - cdf, cdf - (grid - 1.0 / m))))


def _pool_split(reference: np.ndarray, min_expected: float) -> tuple[np.ndarray, int]:
    """Partition cells for chi-square validity.

    Returns (order, keep): cells sorted by ``reference`` descending; the
    first ``keep`` stay separate, the rest merge into one bucket whose
    reference mass is at least ``min_expected`` (standard pooling rule).
    """
    order = np.argsort(-reference, kind="stable")
    ref = reference[order]
    k = ref.shape[0]
    keep = k
    while keep > 0 and ref[keep - 1] < min_expected:
        keep -= 1
    tail = float(ref[keep:].sum())
    while keep > 0 and 0.0 < tail < min_expected:
        keep -= 1
        tail += ref[keep]
    if keep + (1 if keep < k else 0) < 2:
        raise PreconditionViolated("too little mass for a chi-square test")
    return order, keep


def _apply_split(values: np.ndarray, order: np.ndarray, keep: int) -> np.ndarray:
    v = values[order].astype(np.float64)
    if keep == v.shape[0]:
        return v
    return np.concatenate([v[:keep], [v[keep:].sum()]])


def gof_chisquare(observed: np.ndarray, probs: np.ndarray) -> tuple[float, float]:
    """Goodness-of-fit chi-square of observed counts against a known pmf.

    Returns (statistic, p-value).  Cells with small expected counts are
    pooled into a rest bucket first.
    """
    observed = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if observed.shape != probs.shape:
        raise PreconditionViolated("observed and probs must have equal length")
    expected = probs * observed.sum()
    order, keep = _pool_split(expected, 5.0)
    obs = _apply_split(observed, order, keep)
    exp = _apply_split(expected, order, keep)
    # renormalise tiny float drift so scipy's sum check is happy
    exp *= obs.sum() / exp.sum()
    stat, pval = sps.chisquare(obs, exp)
    return float(stat), float(pval)


def two_sample_chisquare(counts_a: np.ndarray, counts_b: np.ndarray) -> tuple[float, float]:
    """Two-sample chi-square test that both count vectors share one pmf.

    Cells are pooled by combined count (one shared partition) before
    forming the 2 x K contingency table.
    """
    a = np.asarray(counts_a, dtype=np.float64)
    b = np.asarray(counts_b, dtype=np.float64)
    if a.shape != b.shape:
        raise PreconditionViolated("count vectors must have equal length")
    order, keep = _pool_split(a + b, 10.0)
    table = np.vstack([_apply_split(a, order, keep), _apply_split(b, order, keep)])
    table = table[:, table.sum(axis=0) > 0]
    res = sps.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue)


def sample_correlation(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pearson correlation and a delta-method standard error (1-r^2)/sqrt(m-1)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = x.shape[0]
    if m < 3:
        raise PreconditionViolated("need at least 3 observations")
    r = float(np.corrcoef(x, y)[0, 1])
    se = (1.0 - r * r) / np.sqrt(m - 1.0)
    return r, float(se)
