"""Monte Carlo studies of the limiting behaviour of two-sided descents.

Three regimes are covered.  For fixed q the standardized statistic is
asymptotically normal with an explicit error bound for smooth test
functions; `clt_experiment` measures both the smooth-function gap and
the Kolmogorov distance.  The pair (des(w), des(w^-1)) satisfies a
bivariate CLT whose limiting correlation is estimated two ways, from
finite samples and from excursions of the infinite process.  When q
shrinks like 1/n the statistic is close in total variation to twice a
Poisson variable; `poisson_experiment` checks the explicit bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import poisson

from .errors import ExcursionTooLong, DomainError, PreconditionViolated, VacuousBoundWarning
from .exact_law import MallowsParams, euler_product, mean_two_sided
from .regen import estimate_rho_excursion
from .sampling import RngStream, two_sided_samples
from .stats import ks_distance_to_normal, sample_correlation


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with the norms entering the CLT error bound."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    derivative_sup_norm: float
    normal_reference: float


TEST_FUNCTIONS = {
    "tanh": TestFunction("tanh", np.tanh, 1.0, 1.0, 0.0),
    "cosine": TestFunction("cosine", np.cos, 1.0, 1.0, math.exp(-0.5)),
}


def test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise DomainError(f"unknown test function {name!r}; pick from {sorted(TEST_FUNCTIONS)}") from None


def clt_error_bound(n: int, q: float, h: TestFunction) -> float:
    """Error bound (331 ||h|| + 167 ||h'|| max(sqrt(q), 1/sqrt(q))) / sqrt(n-1)."""
    if n < 2:
        raise PreconditionViolated("bound needs n >= 2")
    if q <= 0.0:
        raise DomainError("q must be positive")
    stretch = max(math.sqrt(q), 1.0 / math.sqrt(q))
    return (331.0 * h.sup_norm + 167.0 * h.derivative_sup_norm * stretch) / math.sqrt(n - 1)


@dataclass(frozen=True)
class CltResult:
    n: int
    q: float
    h_name: str
    reps: int
    observed_gap: float
    se: float
    bound: float
    ks: float

    @property
    def within_bound(self) -> bool:
        return self.observed_gap <= self.bound


def clt_experiment(
    n: int,
    q: float,
    reps: int,
    h: TestFunction,
    stream: RngStream,
    threads: int = 1,
) -> CltResult:
    """Gap |avg h(W) - E h(Z)| for the standardized two-sided statistic.

    W subtracts the exact mean 2q(n-1)/(1+q) and divides by the sample
    standard deviation; the variance of the statistic has no closed form,
    so standardizing with an estimate avoids a second Monte Carlo layer.
    Also reports the Kolmogorov distance of W to the standard normal.
    """
    if reps < 1000:
        raise PreconditionViolated("need at least 1000 replications")
    params = MallowsParams(n=n, q=q)
    des, ides = two_sided_samples(params, reps, stream, threads)
    x = (des + ides).astype(np.float64)
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise DomainError("degenerate sample: statistic is constant")
    w = (x - mean_two_sided(params)) / sd
    vals = h.fn(w)
    gap = abs(float(np.mean(vals)) - h.normal_reference)
    se = float(np.std(vals, ddof=1) / math.sqrt(reps))
    return CltResult(
        n=n,
        q=q,
        h_name=h.name,
        reps=reps,
        observed_gap=gap,
        se=se,
        bound=clt_error_bound(n, q, h),
        ks=ks_distance_to_normal(w),
    )


PROJECTION_DIRECTIONS = ((1, 1), (2, 1), (1, 2))


@dataclass(frozen=True)
class BivariateResult:
    """Joint normality diagnostics for (des(w), des(w^-1))."""

    n: int
    q: float
    reps: int
    sample_correlation: float
    se_correlation: float
    rho_reference: float
    projection_ks: dict[str, float]


def _reference_rho(
    q: float, stream: RngStream, excursions: int, max_len: int, threads: int
) -> float:
    """Limiting correlation: excursion estimate for q <= 0.8, else a crude
    stand-in (0 at q = 1; the midpoint of the asymptotic covariance bounds
    over the asymptotic descent variance otherwise).

    Reversal swaps q and 1/q without changing the correlation, so only
    q <= 1 needs handling.
    """
    qq = min(q, 1.0 / q)
    if qq == 1.0:
        return 0.0
    if qq <= 0.8:
        return estimate_rho_excursion(qq, excursions, stream, max_len, threads=threads).rho
    lower_rate = qq * (1.0 - qq) ** 2 * euler_product(qq) / (1.0 + qq)
    upper_rate = qq * (1.0 - qq) * (1.0 + qq) ** 2
    var_rate = qq * (1.0 - qq + qq * qq) / ((1.0 + qq) ** 2 * (1.0 + qq + qq * qq))
    mid = 0.5 * (lower_rate + upper_rate) / var_rate
    return float(min(max(mid, 0.0), 1.0))


def bivariate_experiment(
    n: int,
    q: float,
    reps: int,
    stream: RngStream,
    threads: int = 1,
    excursions: int = 10**4,
    max_len: int = 10**6,
) -> BivariateResult:
    """Sample correlation of the descent pair plus projection normality.

    Each direction (a, b) yields the statistic a*des + b*des(inverse),
    standardized by its exact mean (a+b) q (n-1)/(1+q) and sample
    standard deviation; the Kolmogorov distance of each projection to
    the standard normal is reported, in the spirit of Cramer–Wold.
    """
    if n < 2:
        raise PreconditionViolated("need n >= 2")
    params = MallowsParams(n=n, q=q)
    des, ides = two_sided_samples(params, reps, stream, threads)
    d = des.astype(np.float64)
    di = ides.astype(np.float64)
    r, se = sample_correlation(d, di)
    rate = q * (n - 1) / (1.0 + q)
    ks: dict[str, float] = {}
    for a, b in PROJECTION_DIRECTIONS:
        y = a * d + b * di
        sd = float(np.std(y, ddof=1))
        if sd == 0.0:
            raise DomainError("degenerate projection: statistic is constant")
        ks[f"{a},{b}"] = ks_distance_to_normal((y - (a + b) * rate) / sd)
    rho_ref = _reference_rho(q, stream.child("rho-reference"), excursions, max_len, threads)
    return BivariateResult(
        n=n,
        q=q,
        reps=reps,
        sample_correlation=r,
        se_correlation=se,
        rho_reference=rho_ref,
        projection_ks=ks,
    )


EXCURSION_Q_CUTOFF = 0.8


@dataclass(frozen=True)
class FigureRow:
    """One grid point of the correlation-versus-q figure."""

    q: float
    rho_finite: float
    se_finite: float
    rho_excursion: float | None
    se_excursion: float | None
    note: str = ""


def figure1(
    q_grid: Sequence[float],
    stream: RngStream,
    n: int = 1000,
    reps: int = 1000,
    excursion_reps: int = 10**4,
    max_len: int = 10**6,
    threads: int = 1,
) -> list[FigureRow]:
    """Correlation between des(w) and des(w^-1) across a grid of q values.

    Every row carries the finite-n sample correlation; rows with
    q <= 0.8 also carry the excursion estimator (mean excursion size
    blows up as q -> 1, so larger q is skipped by design and a row whose
    excursion run overruns max_len is flagged in its note rather than
    aborting the whole table).
    """
    rows = []
    for idx, q in enumerate(q_grid):
        if not 0.0 < q < 1.0:
            raise DomainError(f"grid values must lie in (0, 1), got {q}")
        row_stream = stream.child(label=f"row{idx}")
        params = MallowsParams(n=n, q=q)
        des, ides = two_sided_samples(params, reps, row_stream.child("finite"), threads)
        r, se = sample_correlation(des.astype(np.float64), ides.astype(np.float64))
        rho_exc: float | None = None
        se_exc: float | None = None
        note = ""
        if q <= EXCURSION_Q_CUTOFF:
            try:
                est = estimate_rho_excursion(
                    q, excursion_reps, row_stream.child("excursion"), max_len, threads=threads
                )
                rho_exc, se_exc = est.rho, est.se
            except ExcursionTooLong as exc:
                note = str(exc)
        else:
            note = "excursion estimator skipped: mean excursion size too large"
        rows.append(
            FigureRow(
                q=q,
                rho_finite=r,
                se_finite=se,
                rho_excursion=rho_exc,
                se_excursion=se_exc,
                note=note,
            )
        )
    return rows


FIGURE_COLUMNS = ("q", "rho_finite", "se_finite", "rho_excursion", "se_excursion")


def figure_csv(rows: Sequence[FigureRow]) -> str:
    """Render figure rows as CSV with '.' decimals and blank missing cells."""
    lines = [",".join(FIGURE_COLUMNS)]
    for row in rows:
        cells = [
            repr(row.q),
            repr(row.rho_finite),
            repr(row.se_finite),
            "" if row.rho_excursion is None else repr(row.rho_excursion),
            "" if row.se_excursion is None else repr(row.se_excursion),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PoissonCheck:
    """Total-variation comparison of the statistic with twice a Poisson."""

    n: int
    q: float
    samples: int
    lam: float
    empirical_tv: float
    se_tv: float
    bound: float
    even_frequency: float
    even_bound: float

    @property
    def tv_ok(self) -> bool:
        return self.empirical_tv <= self.bound + 3.0 * self.se_tv

    @property
    def even_ok(self) -> bool:
        return self.even_frequency >= self.even_bound


POISSON_TAIL = 1e-9


def doubled_poisson_pmf(lam: float, size: int) -> np.ndarray:
    """pmf of 2N on {0, 1, ..., size-1} for N Poisson with mean lam.

    Odd entries are zero.  ``size`` should cover all but a 1e-9 tail;
    use poisson.ppf to pick it.
    """
    out = np.zeros(size, dtype=np.float64)
    ks = np.arange((size + 1) // 2)
    out[2 * ks] = poisson.pmf(ks, lam)
    return out


def poisson_experiment(
    n: int, q: float, reps: int, stream: RngStream, threads: int = 1
) -> PoissonCheck:
    """Empirical TV distance between the statistic and 2 * Poisson.

    The Poisson mean is (n-1) q/(1+q) and the guaranteed bound is
    12 q^2 n, meaningful only when that is below one; a vacuous bound
    triggers a warning but the experiment still runs.  Also reports the
    frequency of even outcomes, which is at least 1 - 2 q^2 n because
    odd values require the word and its inverse to disagree in descents.
    """
    params = MallowsParams(n=n, q=q)
    lam = (n - 1) * q / (1.0 + q)
    bound = 12.0 * q * q * n
    if bound >= 1.0:
        warnings.warn(
            f"12 q^2 n = {bound:.3g} >= 1; the total-variation bound is vacuous",
            VacuousBoundWarning,
            stacklevel=2,
        )
    des, ides = two_sided_samples(params, reps, stream, threads)
    x = des + ides
    top = int(poisson.ppf(1.0 - POISSON_TAIL, lam)) + 1
    size = max(int(x.max()) + 1, 2 * top + 1)
    freq = np.bincount(x, minlength=size) / reps
    ref = doubled_poisson_pmf(lam, size)
    diff = freq - ref
    tv = 0.5 * float(np.abs(diff).sum())
    signed = float(np.sign(diff) @ freq)
    se_tv = 0.5 * math.sqrt(max(1.0 - signed * signed, 0.0) / reps)
    even_freq = float(freq[0::2].sum())
    return PoissonCheck(
        n=n,
        q=q,
        samples=reps,
        lam=lam,
        empirical_tv=tv,
        se_tv=se_tv,
        bound=bound,
        even_frequency=even_freq,
        even_bound=1.0 - 2.0 * q * q * n,
    )
