"""Regeneration structure of the infinite sampling process (0 < q < 1).

The one-value-at-a-time construction regenerates whenever its first i
values are exactly {1, ..., i}; the stretches between regenerations are
i.i.d. blocks, each a permutation of its own length after shifting.  The
number of unused values below the running maximum is a Markov chain on
the nonnegative integers whose hitting times of 0 are the block lengths;
its stationary law has an explicit product form.  Block moments give
renewal-theory predictions for regeneration counts and the limiting
correlation between the two descent counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DomainError, ExcursionTooLong, PreconditionViolated
from .exact_law import euler_product
from .perms import Permutation
from .sampling import RngStream, process_steps
from .util import run_chunks


@dataclass(frozen=True)
class Excursion:
    """One regeneration block, shifted to be a permutation of 1..size."""

    block: Permutation
    size: int


@dataclass(frozen=True)
class ChainState:
    """State of the surplus chain: unused values below the running max."""

    surplus: int


def excursion_stream(
    q: float, stream: RngStream, max_len: int = 10**6
) -> Iterator[Excursion]:
    """Yield successive regeneration blocks of the infinite construction.

    Blocks after the first are shifted down so each is a permutation of
    its own length.  Raises ExcursionTooLong if a block exceeds
    ``max_len`` values, which protects callers from q too close to 1.
    """
    vals: list[int] = []
    offset = 0
    for value, surplus in process_steps(q, stream):
        vals.append(value - offset)
        if len(vals) > max_len:
            raise ExcursionTooLong(
                f"block exceeded {max_len} values at q={q}; raise max_len or lower q"
            )
        if surplus == 0:
            block = Permutation(np.asarray(vals, dtype=np.int32))
            yield Excursion(block=block, size=len(vals))
            offset += len(vals)
            vals = []


@dataclass(frozen=True)
class ExcursionSample:
    """Per-block size and descent statistics for a batch of excursions."""

    q: float
    sizes: np.ndarray
    des: np.ndarray
    ides: np.ndarray

    @property
    def count(self) -> int:
        return int(self.sizes.shape[0])


def collect_excursions(
    q: float,
    count: int,
    stream: RngStream,
    max_len: int = 10**6,
    threads: int = 1,
) -> ExcursionSample:
    """Sizes and descent counts of ``count`` fresh excursions."""
    if count < 1:
        raise PreconditionViolated("count must be >= 1")
    chunk = 2048
    plan = [
        (idx, idx * chunk, min(chunk, count - idx * chunk))
        for idx in range((count + chunk - 1) // chunk)
    ]

    def work(idx: int, start: int, size: int):
        sizes = np.empty(size, dtype=np.int64)
        des = np.empty(size, dtype=np.int64)
        ides = np.empty(size, dtype=np.int64)
        gen_stream = stream.child(counter=idx)
        for k, exc in enumerate(excursion_stream(q, gen_stream, max_len)):
            if k >= size:
                break
            v = exc.block.values
            sizes[k] = exc.size
            des[k] = np.count_nonzero(v[:-1] > v[1:])
            inv = np.empty_like(v)
            inv[v - 1] = np.arange(1, exc.size + 1, dtype=v.dtype)
            ides[k] = np.count_nonzero(inv[:-1] > inv[1:])
        return sizes, des, ides

    parts = run_chunks(plan, work, threads)
    return ExcursionSample(
        q=q,
        sizes=np.concatenate([p[0] for p in parts]),
        des=np.concatenate([p[1] for p in parts]),
        ides=np.concatenate([p[2] for p in parts]),
    )


@dataclass(frozen=True)
class ExcursionMoments:
    """Sample moments of block sizes and descent counts, with standard errors."""

    q: float
    count: int
    mean_size: float
    se_mean_size: float
    mean_size_sq: float
    se_mean_size_sq: float
    mean_size_cube: float
    se_mean_size_cube: float
    mean_des: float
    se_mean_des: float
    var_centered: float
    cov_centered: float


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / np.sqrt(x.shape[0]))
    return m, se


def excursion_moments(sample: ExcursionSample) -> ExcursionMoments:
    """Moment summary of a batch of excursions.

    The centered variables subtract size * q/(1+q) from each descent
    count, which is the exact mean contribution of a block of that size.
    """
    t = sample.sizes.astype(np.float64)
    rate = sample.q / (1.0 + sample.q)
    c = sample.des.astype(np.float64) - t * rate
    c_inv = sample.ides.astype(np.float64) - t * rate
    m1, se1 = _mean_se(t)
    m2, se2 = _mean_se(t * t)
    m3, se3 = _mean_se(t * t * t)
    md, sed = _mean_se(sample.des.astype(np.float64))
    return ExcursionMoments(
        q=sample.q,
        count=sample.count,
        mean_size=m1,
        se_mean_size=se1,
        mean_size_sq=m2,
        se_mean_size_sq=se2,
        mean_size_cube=m3,
        se_mean_size_cube=se3,
        mean_des=md,
        se_mean_des=sed,
        var_centered=float(np.var(c, ddof=1)),
        cov_centered=float(np.cov(c, c_inv, ddof=1)[0, 1]),
    )


@dataclass(frozen=True)
class RhoEstimate:
    """Excursion-based estimate of the limiting descent correlation."""

    q: float
    rho: float
    se: float
    mean_size: float
    count: int
    batches: int


def _centered_corr(a: np.ndarray, b: np.ndarray) -> float:
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va <= 0.0 or vb <= 0.0:
        raise DomainError("degenerate excursion sample; q too small for rho")
    return float(np.cov(a, b, ddof=1)[0, 1] / np.sqrt(va * vb))


def estimate_rho_excursion(
    q: float,
    count: int,
    stream: RngStream,
    max_len: int = 10**6,
    batches: int = 50,
    threads: int = 1,
) -> RhoEstimate:
    """Limiting correlation of the two descent counts via excursions.

    Sample correlation between C and C', the block descent counts of the
    word and of its inverse, each centered by size * q/(1+q).  The block
    law is inversion-invariant, so C and C' share a variance and the
    correlation estimates Cov(C, C')/Var(C).  The standard error comes
    from splitting the excursions into equal consecutive batches and
    taking the spread of the per-batch estimates.
    """
    if count < 2 * batches:
        raise PreconditionViolated("need at least two excursions per batch")
    sample = collect_excursions(q, count, stream, max_len, threads)
    t = sample.sizes.astype(np.float64)
    rate = q / (1.0 + q)
    c = sample.des.astype(np.float64) - t * rate
    c_inv = sample.ides.astype(np.float64) - t * rate
    rho = _centered_corr(c, c_inv)
    size = sample.count // batches
    per_batch = [
        _centered_corr(c[b * size : (b + 1) * size], c_inv[b * size : (b + 1) * size])
        for b in range(batches)
    ]
    se = float(np.std(per_batch, ddof=1) / np.sqrt(batches))
    return RhoEstimate(
        q=q,
        rho=rho,
        se=se,
        mean_size=float(np.mean(t)),
        count=sample.count,
        batches=batches,
    )


# ---------------------------------------------------------------------------
# The surplus chain
# ---------------------------------------------------------------------------


def stationary_pmf(j: int, q: float) -> float:
    """Stationary probability of surplus j: proportional to
    q^j / prod_{k=1..j} (1 - q^k), normalised to sum to one.

    The normalising constant is the full product over (1 - q^k); the
    identity sum_j q^j / prod_{k<=j}(1-q^k) = 1/prod_k (1-q^k) makes the
    total mass exactly one.
    """
    if j < 0:
        raise PreconditionViolated("surplus must be >= 0")
    if not 0.0 < q < 1.0:
        raise DomainError("stationary law needs 0 < q < 1")
    normaliser = euler_product(q)
    if normaliser == 0.0:
        raise DomainError(f"normaliser underflows at q={q}; stay below ~0.9977")
    denom = 1.0
    for k in range(1, j + 1):
        denom *= 1.0 - q**k
    return normaliser * q**j / denom


def stationary_distribution(q: float, tail: float = 1e-15) -> np.ndarray:
    """Stationary pmf truncated once the mass left out is at most ``tail``.

    Successive masses shrink by the factor q / (1 - q^(j+1)), so once that
    ratio drops below 1 the omitted mass is bounded by a geometric series.
    Bounding the truncation this way, instead of subtracting terms from
    1.0, keeps the loop finite when the terms fall under float resolution.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("stationary law needs 0 < q < 1")
    value = stationary_pmf(0, q)
    out = [value]
    j = 1
    while True:
        value *= q / (1.0 - q**j)
        out.append(value)
        ratio = q / (1.0 - q ** (j + 1))
        if value == 0.0 or (ratio < 1.0 and value * ratio / (1.0 - ratio) <= tail):
            break
        j += 1
    return np.asarray(out, dtype=np.float64)


def chain_path(q: float, steps: int, stream: RngStream, start: int = 0) -> np.ndarray:
    """Path of the surplus chain: M(t+1) = max(M(t), Z(t+1)) - 1 with Z geometric.

    Vectorised via max(M0, running max of Z(k) + k - 1) - t, which unrolls
    the recursion exactly.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("surplus chain needs 0 < q < 1")
    if steps < 1:
        raise PreconditionViolated("steps must be >= 1")
    gen = stream.generator()
    z = gen.geometric(1.0 - q, size=steps).astype(np.int64)
    t = np.arange(1, steps + 1, dtype=np.int64)
    running = np.maximum.accumulate(z + t - 1)
    return np.maximum(start, running) - t


def occupation_frequencies(path: np.ndarray) -> np.ndarray:
    """Fraction of time the path spends in each state 0, 1, ...."""
    counts = np.bincount(path)
    return counts / path.shape[0]


def return_times_to_zero(path: np.ndarray, start: int = 0) -> np.ndarray:
    """Gaps between successive visits to 0, counting from time 0 if the
    chain starts there."""
    (zeros,) = np.nonzero(path == 0)
    times = zeros + 1  # 1-based step index of each visit
    if start == 0:
        times = np.concatenate([[0], times])
    return np.diff(times)


@dataclass(frozen=True)
class RenewalStats:
    """Monte Carlo regeneration-count ratios against renewal predictions."""

    n: int
    q: float
    reps: int
    mean_ratio: float
    se_mean: float
    var_ratio: float
    se_var: float


def renewal_stats(n: int, q: float, reps: int, stream: RngStream, threads: int = 1) -> RenewalStats:
    """Mean and variance of (regenerations in n steps) / n.

    The regeneration count is the number of visits of the surplus chain
    to 0 within the first n steps, started at 0.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("renewal statistics need 0 < q < 1")
    chunk = max(1, min(reps, (1 << 21) // max(1, n)))
    plan = [
        (idx, idx * chunk, min(chunk, reps - idx * chunk))
        for idx in range((reps + chunk - 1) // chunk)
    ]

    def work(idx: int, begin: int, size: int) -> np.ndarray:
        gen = stream.child(counter=idx).generator()
        z = gen.geometric(1.0 - q, size=(size, n)).astype(np.int64)
        t = np.arange(1, n + 1, dtype=np.int64)
        running = np.maximum.accumulate(z + t - 1, axis=1)
        path = np.maximum(0, running) - t
        return (path == 0).sum(axis=1)

    counts = np.concatenate(run_chunks(plan, work, threads)).astype(np.float64)
    mean_l = float(np.mean(counts))
    se_mean = float(np.std(counts, ddof=1) / np.sqrt(reps))
    var_l = float(np.var(counts, ddof=1))
    centered = counts - mean_l
    m4 = float(np.mean(centered**4))
    se_var = float(np.sqrt(max(m4 - var_l**2, 0.0) / reps))
    return RenewalStats(
        n=n,
        q=q,
        reps=reps,
        mean_ratio=mean_l / n,
        se_mean=se_mean / n,
        var_ratio=var_l / n,
        se_var=se_var / n,
    )
