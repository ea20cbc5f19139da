"""Acceptance suite: one test per published criterion.

Each test prints a single "criterion NN <name>: PASS|FAIL" line and then
asserts, so `pytest -v -s tests/test_acceptance.py` reads as a checklist.
Exact criteria compare enumerations at 1e-12; statistical criteria run
the documented workloads under one pinned seed so reruns are stable.
"""

import itertools
import math

import numpy as np

from mallowsim.coupling import exact_coupling_check, tail_check, variance_term
from mallowsim.exact_law import (
    MallowsParams,
    cov_bounds,
    enumerate_law,
    euler_product,
    mean_two_sided,
    q_factorial,
    type_sum,
    type_sum_bound,
    var_descents,
)
from mallowsim.experiments import (
    clt_experiment,
    figure1,
    poisson_experiment,
    test_function as lookup_h,
)
from mallowsim.regen import (
    chain_path,
    collect_excursions,
    occupation_frequencies,
    renewal_stats,
    stationary_distribution,
)
from mallowsim.sampling import (
    RngStream,
    prefix_relative_order,
    sample_process_prefix,
    sample_words,
)
from mallowsim.stats import gof_chisquare, two_sample_chisquare

SEED = 1

Q_GRID = (0.1, 0.3, 0.5, 0.8, 1.0, 1.5, 3.0)

_LAWS = {}


def law_for(n, q):
    key = (n, q)
    if key not in _LAWS:
        _LAWS[key] = enumerate_law(MallowsParams(n, q))
    return _LAWS[key]


def _report(num, name, ok):
    print(f"criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num:02d} {name} failed"


def test_criterion_01_exact_law():
    ok = True
    for n in range(2, 8):
        for q in Q_GRID:
            law = law_for(n, q)
            z_direct = float(np.sum(np.power(q, law.lengths.astype(np.float64))))
            ok &= math.isclose(law.z, q_factorial(n, q), rel_tol=1e-12)
            ok &= math.isclose(law.z, z_direct, rel_tol=1e-12)
            params = MallowsParams(n, q)
            p = law.probs
            x = (law.descents + law.inverse_descents).astype(np.float64)
            d = law.descents.astype(np.float64)
            brute_mean = float(p @ x)
            brute_var_des = float(p @ (d * d)) - float(p @ d) ** 2
            ok &= abs(brute_mean - mean_two_sided(params)) <= 1e-12
            ok &= abs(brute_var_des - var_descents(params)) <= 1e-12
    _report(1, "exact law and moment formulas", ok)


def test_criterion_02_sampler_gof():
    ok = True
    # direct sampler against the enumerated law
    n, reps = 6, 2 * 10**5
    for q in (0.3, 1.0, 2.0):
        law = law_for(n, q)
        index = {tuple(law.words[r].tolist()): r for r in range(len(law))}
        rows = sample_words(MallowsParams(n, q), reps, RngStream(SEED, (f"gof{q}",)))
        counts = np.zeros(len(law), dtype=np.int64)
        for row in rows:
            counts[index[tuple(row.tolist())]] += 1
        _, pval = gof_chisquare(counts, law.probs)
        ok &= pval > 0.001
    # direct draws against process-prefix relative orders
    n, per_path = 5, 6 * 10**4
    for q in (0.3, 0.7):
        law = law_for(n, q)
        index = {tuple(law.words[r].tolist()): r for r in range(len(law))}
        direct = np.zeros(len(law), dtype=np.int64)
        rows = sample_words(MallowsParams(n, q), per_path, RngStream(SEED, (f"direct{q}",)))
        for row in rows:
            direct[index[tuple(row.tolist())]] += 1
        prefix = np.zeros(len(law), dtype=np.int64)
        root = RngStream(SEED, (f"prefix{q}",))
        for r in range(per_path):
            w = prefix_relative_order(sample_process_prefix(n, q, root.child(counter=r)))
            prefix[index[w.key()]] += 1
        _, pval = two_sample_chisquare(direct, prefix)
        ok &= pval > 0.001
    _report(2, "sampler goodness of fit, both paths", ok)


def test_criterion_03_coupling_exactness():
    ok = True
    for n in (2, 3, 4, 5):
        for q in (0.5, 1.0, 2.0):
            ok &= exact_coupling_check(law_for(n, q)) <= 1e-12
    _report(3, "size-bias coupling exactness", ok)


def test_criterion_04_covariance_structure():
    ok = True
    for n in range(2, 8):
        for q in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
            lo, hi = cov_bounds(MallowsParams(n, q))
            law = law_for(n, q)
            p = law.probs
            d = law.descents.astype(np.float64)
            di = law.inverse_descents.astype(np.float64)
            cov = float(p @ (d * di)) - float(p @ d) * float(p @ di)
            ok &= lo - 1e-12 <= cov <= hi + 1e-12
        for q in Q_GRID:
            law = law_for(n, q)
            admissible = range(1, 7) if q <= 1.0 else range(1, 5)
            for kind in admissible:
                ok &= type_sum(kind, law) <= type_sum_bound(kind, n) + 1e-12
    _report(4, "covariance bounds and type sums", ok)


def test_criterion_05_variance_term():
    sub = variance_term(100, 0.5, 10**4, RngStream(SEED, ("vterm-sub",)))
    uni = variance_term(100, 1.0, 10**4, RngStream(SEED, ("vterm-uni",)))
    ok = sub.bound == 6847.0 / 99.0 and sub.within_bound
    ok &= uni.bound == 148.0 / 99.0 and uni.within_bound
    _report(5, "conditional variance term bounds", ok)


def test_criterion_06_regenerative_identities():
    q = 0.5
    sample = collect_excursions(q, 5 * 10**4, RngStream(SEED, ("excursions",)))
    t = sample.sizes.astype(np.float64)
    d = sample.des.astype(np.float64)

    # descents per block average to block size times q/(1+q)
    gap = d - t * (q / (1.0 + q))
    se_gap = float(np.std(gap, ddof=1) / np.sqrt(gap.shape[0]))
    ok = abs(float(np.mean(gap))) <= 3.0 * se_gap

    # occupation measure of the surplus chain against its stationary law
    path = chain_path(q, 10**6, RngStream(SEED, ("occupation",)))
    freqs = occupation_frequencies(path)
    pmf = stationary_distribution(q)
    width = max(len(freqs), len(pmf))
    f = np.zeros(width)
    f[: len(freqs)] = freqs
    p = np.zeros(width)
    p[: len(pmf)] = pmf
    ok &= 0.5 * float(np.abs(f - p).sum()) <= 0.01

    # renewal ratios: mean against the stationary zero mass, variance
    # against Var(T)/E(T)^3 predicted from the same excursion sample
    ren = renewal_stats(5000, q, 4000, RngStream(SEED, ("renewal",)))
    ok &= abs(ren.mean_ratio - euler_product(q)) <= 4.0 * ren.se_mean

    batches = 50
    size = t.shape[0] // batches
    preds = []
    for b in range(batches):
        tb = t[b * size : (b + 1) * size]
        m1, m2 = float(np.mean(tb)), float(np.mean(tb * tb))
        preds.append((m2 - m1 * m1) / m1**3)
    pred = float(np.mean(preds))
    se_pred = float(np.std(preds, ddof=1) / np.sqrt(batches))
    se_combined = math.hypot(ren.se_var, se_pred)
    ok &= abs(ren.var_ratio - pred) <= 4.0 * se_combined
    _report(6, "regenerative identities at q = 0.5", ok)


def test_criterion_07_figure_one():
    rows = figure1(
        (0.05, 0.2, 0.5, 0.8, 0.95),
        RngStream(SEED, ("figure",)),
        n=1000,
        reps=1000,
        excursion_reps=10**4,
    )
    by_q = {row.q: row for row in rows}
    ok = True
    for q in (0.2, 0.5, 0.8):
        row = by_q[q]
        ok &= row.rho_excursion is not None
        ok &= abs(row.rho_finite - row.rho_excursion) <= 0.05
    ok &= by_q[0.05].rho_finite >= 0.8
    ok &= by_q[0.95].rho_finite <= 0.2
    _report(7, "figure reproduction and endpoints", ok)


def test_criterion_08_clt_bounds_and_ks():
    ok = True
    tanh = lookup_h("tanh")
    cosine = lookup_h("cosine")
    ks_at = {}
    for q in (0.5, 1.0, 2.0):
        for n in (50, 200, 1000, 10**5):
            reps = 10**5 if n <= 1000 else 2000
            stream = RngStream(SEED, (f"clt-{n}-{q}",))
            for h in (tanh, cosine):
                res = clt_experiment(n, q, reps, h, stream)
                ok &= res.within_bound
                if h is tanh and n <= 1000:
                    ks_at[(n, q)] = res.ks
        ok &= ks_at[(1000, q)] <= 0.05
        ok &= ks_at[(50, q)] > ks_at[(200, q)] > ks_at[(1000, q)]
    _report(8, "normal approximation bounds and KS decay", ok)


def test_criterion_09_poisson_regime():
    res = poisson_experiment(500, 0.004, 10**6, RngStream(SEED, ("poisson",)))
    ok = res.bound == 12.0 * 0.004**2 * 500
    ok &= res.empirical_tv <= res.bound
    _report(9, "sparse-regime Poisson approximation", ok)


def test_criterion_10_tail_bounds():
    res = tail_check(200, 0.5, 10**5, (10.0, 20.0, 40.0), RngStream(SEED, ("tails",)))
    ok = len(res.points) == 3 and res.all_ok
    _report(10, "tail frequencies within explicit bounds", ok)


def test_criterion_11_thread_determinism(tmp_path):
    from mallowsim.cli import main

    runs = [
        ["sample", "--n", "40", "--q", "0.5", "--count", "3000", "--format", "binary"],
        ["moments", "--n", "30", "--q", "0.7", "--reps", "20000"],
        ["typesums", "--n", "5", "--q", "0.5"],
        ["sbcheck", "--n", "4", "--q", "2.0"],
        ["vterm", "--n", "50", "--q", "0.5", "--reps", "3000"],
        ["tails", "--n", "60", "--q", "0.5", "--reps", "20000"],
        ["rho", "--q", "0.5", "--excursions", "5000"],
        ["clt", "--n", "200", "--q", "1.0", "--reps", "20000"],
        ["bivariate", "--n", "100", "--q", "0.5", "--reps", "10000", "--excursions", "2000"],
        ["poisson", "--n", "200", "--q", "0.004", "--reps", "50000"],
        ["figure1", "--grid", "0.3,0.9", "--n", "100", "--reps", "2000",
         "--excursions", "2000", "--format", "json"],
    ]
    ok = True
    for k, argv in enumerate(runs):
        base = tmp_path / f"{k}-t1"
        alt = tmp_path / f"{k}-t4"
        code1 = main([*argv, "--seed", "7", "--threads", "1", "--out", str(base)])
        code4 = main([*argv, "--seed", "7", "--threads", "4", "--out", str(alt)])
        ok &= code1 == code4
        ok &= base.read_bytes() == alt.read_bytes()
    _report(11, "byte-identical reports across thread counts", ok)
