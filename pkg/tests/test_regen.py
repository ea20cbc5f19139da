"""Regeneration blocks, the surplus chain, and renewal predictions."""

import itertools

import numpy as np
import pytest

from mallowsim.errors import DomainError, ExcursionTooLong, PreconditionViolated
from mallowsim.exact_law import euler_product
from mallowsim.perms import Permutation, descent_count, inverse
from mallowsim.regen import (
    chain_path,
    collect_excursions,
    estimate_rho_excursion,
    excursion_moments,
    excursion_stream,
    occupation_frequencies,
    renewal_stats,
    return_times_to_zero,
    stationary_distribution,
    stationary_pmf,
)
from mallowsim.sampling import RngStream, process_steps

SEED = 20240817


def test_excursion_blocks_are_permutations():
    stream = RngStream(SEED, ("blocks",))
    total = 0
    for exc in itertools.islice(excursion_stream(0.5, stream), 200):
        assert exc.size == exc.block.n
        assert sorted(exc.block.values.tolist()) == list(range(1, exc.size + 1))
        total += exc.size
    assert total >= 200  # blocks have size >= 1


def test_excursion_stream_matches_raw_process():
    """Replaying the same stream, block boundaries sit exactly at the
    zeros of the surplus sequence and blocks are the shifted segments."""
    stream = RngStream(SEED, ("replay",))
    raw = list(itertools.islice(process_steps(0.5, stream), 3000))
    blocks = []
    start = 0
    offset = 0
    for t, (v, surplus) in enumerate(raw):
        if surplus == 0:
            seg = [val - offset for val, _ in raw[start : t + 1]]
            blocks.append(seg)
            offset += len(seg)
            start = t + 1
    got = list(itertools.islice(excursion_stream(0.5, stream), len(blocks)))
    for exc, seg in zip(got, blocks):
        assert exc.block.values.tolist() == seg


def test_excursion_stream_length_guard():
    with pytest.raises(ExcursionTooLong):
        for _ in excursion_stream(0.99, RngStream(SEED, ("guard",)), max_len=50):
            pass


def test_collect_excursions_statistics_match_blocks():
    q, count = 0.4, 500
    stream = RngStream(SEED, ("collect",))
    sample = collect_excursions(q, count, stream)
    assert sample.count == count
    assert sample.sizes.shape == sample.des.shape == sample.ides.shape
    # single chunk here, so the stream child indexing is reproducible
    blocks = list(itertools.islice(excursion_stream(q, stream.child(counter=0)), count))
    for k, exc in enumerate(blocks):
        assert sample.sizes[k] == exc.size
        assert sample.des[k] == descent_count(exc.block)
        assert sample.ides[k] == descent_count(inverse(exc.block))


def test_collect_excursions_validation_and_threads():
    with pytest.raises(PreconditionViolated):
        collect_excursions(0.5, 0, RngStream(SEED))
    a = collect_excursions(0.5, 5000, RngStream(SEED, ("par",)), threads=1)
    b = collect_excursions(0.5, 5000, RngStream(SEED, ("par",)), threads=3)
    assert np.array_equal(a.sizes, b.sizes)
    assert np.array_equal(a.des, b.des)
    assert np.array_equal(a.ides, b.ides)


def test_mean_block_size_matches_kac():
    """Mean regeneration time is the reciprocal of the stationary mass at 0."""
    q = 0.5
    sample = collect_excursions(q, 40000, RngStream(SEED, ("kac",)))
    m = excursion_moments(sample)
    predicted = 1.0 / euler_product(q)
    assert abs(m.mean_size - predicted) < 4 * m.se_mean_size


def test_excursion_moments_centering():
    sample = collect_excursions(0.5, 30000, RngStream(SEED, ("center",)))
    m = excursion_moments(sample)
    # descents of a block average to size * q/(1+q), so the centered
    # variable has mean near zero
    rate = 0.5 / 1.5
    centered_mean = m.mean_des - m.mean_size * rate
    se = m.se_mean_des + rate * m.se_mean_size
    assert abs(centered_mean) < 4 * se
    assert m.mean_size_sq >= m.mean_size**2
    assert m.var_centered > 0
    assert m.count == 30000


def test_stationary_pmf_frozen_and_ratios():
    assert stationary_pmf(0, 0.5) == pytest.approx(euler_product(0.5), rel=1e-14)
    assert stationary_pmf(0, 0.5) == pytest.approx(0.2887880951, abs=1e-10)
    assert stationary_pmf(2, 0.5) == pytest.approx(0.1925253967, abs=1e-10)
    for q in (0.2, 0.5, 0.8):
        for j in range(1, 8):
            ratio = stationary_pmf(j, q) / stationary_pmf(j - 1, q)
            assert ratio == pytest.approx(q / (1.0 - q**j), rel=1e-12)
    with pytest.raises(PreconditionViolated):
        stationary_pmf(-1, 0.5)
    with pytest.raises(DomainError):
        stationary_pmf(0, 1.0)


def test_stationary_distribution_sums_to_one():
    for q in (0.1, 0.5, 0.9, 0.99):
        pmf = stationary_distribution(q)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert pmf[0] == pytest.approx(stationary_pmf(0, q), rel=1e-14)
        assert np.all(pmf >= 0)
    with pytest.raises(DomainError):
        stationary_distribution(1.2)
    # the normaliser underflows double precision near 1
    with pytest.raises(DomainError):
        stationary_distribution(0.999)


def test_chain_path_matches_sequential_recursion():
    """The vectorised path equals the step-by-step recursion
    M(t+1) = max(M(t), Z(t+1)) - 1 driven by the same geometric draws."""
    q, steps = 0.6, 5000
    stream = RngStream(SEED, ("chain",))
    path = chain_path(q, steps, stream, start=3)
    z = stream.generator().geometric(1.0 - q, size=steps).astype(np.int64)
    m = 3
    for t in range(steps):
        m = max(m, int(z[t])) - 1
        assert path[t] == m


def test_chain_path_validation():
    with pytest.raises(DomainError):
        chain_path(1.0, 10, RngStream(SEED))
    with pytest.raises(PreconditionViolated):
        chain_path(0.5, 0, RngStream(SEED))


def test_occupation_frequencies_sum_to_one():
    path = np.array([0, 1, 0, 0, 2, 1, 0])
    freqs = occupation_frequencies(path)
    assert freqs.sum() == pytest.approx(1.0)
    assert freqs.tolist() == pytest.approx([4 / 7, 2 / 7, 1 / 7])


def test_occupation_converges_to_stationary_law():
    q, steps = 0.5, 10**5
    path = chain_path(q, steps, RngStream(SEED, ("occ",)))
    freqs = occupation_frequencies(path)
    pmf = stationary_distribution(q)
    k = max(len(freqs), len(pmf))
    f = np.zeros(k)
    p = np.zeros(k)
    f[: len(freqs)] = freqs
    p[: len(pmf)] = pmf
    assert 0.5 * np.abs(f - p).sum() < 0.02


def test_return_times_hand_built_path():
    path = np.array([0, 1, 0, 0, 2, 1, 0])
    assert return_times_to_zero(path).tolist() == [1, 2, 1, 3]
    # started away from zero: the first gap is unobserved and dropped
    assert return_times_to_zero(np.array([1, 0, 2, 0]), start=2).tolist() == [2]


def test_return_times_match_kac():
    q = 0.4
    path = chain_path(q, 10**5, RngStream(SEED, ("ret",)))
    gaps = return_times_to_zero(path)
    se = gaps.std(ddof=1) / np.sqrt(len(gaps))
    assert abs(gaps.mean() - 1.0 / euler_product(q)) < 4 * se


def test_return_times_match_excursion_sizes_in_law():
    """Chain return times and excursion sizes are the same quantity seen
    through two constructions; match their first two moments."""
    q = 0.5
    sizes = collect_excursions(q, 30000, RngStream(SEED, ("law1",))).sizes.astype(np.float64)
    gaps = return_times_to_zero(chain_path(q, 10**5, RngStream(SEED, ("law2",)))).astype(np.float64)
    se1 = np.sqrt(sizes.var(ddof=1) / len(sizes) + gaps.var(ddof=1) / len(gaps))
    assert abs(sizes.mean() - gaps.mean()) < 4 * se1
    s2, g2 = sizes**2, gaps**2
    se2 = np.sqrt(s2.var(ddof=1) / len(s2) + g2.var(ddof=1) / len(g2))
    assert abs(s2.mean() - g2.mean()) < 4 * se2


def test_renewal_stats_match_predictions():
    """Regenerations per step converge to the stationary zero mass; the
    variance ratio converges to Var(T)/E(T)^3 from the block law."""
    q = 0.5
    res = renewal_stats(2000, q, 3000, RngStream(SEED, ("renew",)))
    assert res.n == 2000 and res.reps == 3000
    assert abs(res.mean_ratio - euler_product(q)) < 4 * res.se_mean

    m = excursion_moments(collect_excursions(q, 50000, RngStream(SEED, ("renew-t",))))
    var_t = m.mean_size_sq - m.mean_size**2
    predicted_var = var_t / m.mean_size**3
    assert abs(res.var_ratio - predicted_var) < 5 * res.se_var


def test_renewal_stats_thread_determinism():
    a = renewal_stats(500, 0.5, 2000, RngStream(SEED, ("rthr",)), threads=1)
    b = renewal_stats(500, 0.5, 2000, RngStream(SEED, ("rthr",)), threads=4)
    assert a == b


def test_renewal_stats_validation():
    with pytest.raises(DomainError):
        renewal_stats(100, 1.5, 100, RngStream(SEED))


def test_estimate_rho_excursion_basics():
    est = estimate_rho_excursion(0.5, 4000, RngStream(SEED, ("rho",)))
    assert est.count == 4000
    assert est.batches == 50
    assert -1.0 <= est.rho <= 1.0
    assert est.se > 0
    assert abs(est.rho - 0.666) < 0.1
    assert est.mean_size == pytest.approx(1.0 / euler_product(0.5), abs=0.2)
    with pytest.raises(PreconditionViolated):
        estimate_rho_excursion(0.5, 60, RngStream(SEED), batches=50)


def test_estimate_rho_excursion_guard_propagates():
    with pytest.raises(ExcursionTooLong):
        estimate_rho_excursion(0.99, 200, RngStream(SEED, ("rhog",)), max_len=40, batches=2)
