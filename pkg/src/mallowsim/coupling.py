"""Size-bias coupling for the two-sided descent count.

A draw of the size-biased version of X = des(w) + des(inverse(w)) is
obtained from a Mallows draw w by one local move: pick an adjacent pair
index i and a side uniformly, then either reverse-sort the two entries at
positions i, i+1 ("position" move) or reverse-sort the placement of the
two values i, i+1 ("value" move, the same operation conjugated by
inversion).  The conditional expectation of X minus its coupled value
decomposes into four aggregate move-delta sums, each computable in O(n)
from purely local comparisons; their variance is what the normal
approximation bound needs, and it admits explicit constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

import numpy as np

from .errors import DomainError, IndexOutOfRange, PreconditionViolated
from .exact_law import ExactLaw, MallowsParams, mean_two_sided
from .perms import Permutation, two_sided_descents


@dataclass(frozen=True)
class CouplingMove:
    """One local move: side is 'position' or 'value', index in 1..n-1."""

    side: str
    index: int


def all_moves(n: int):
    """The 2(n-1) moves of the coupling, in a fixed order."""
    for side in ("position", "value"):
        for i in range(1, n):
            yield CouplingMove(side, i)


def reverse_sort_position(w: Permutation, i: int) -> Permutation:
    """Sort the entries at positions i, i+1 into decreasing order.

    >>> from .perms import from_one_line
    >>> reverse_sort_position(from_one_line([3, 2, 5, 1, 4, 7, 6]), 2).one_line()
    '3 5 2 1 4 7 6'
    """
    if not 1 <= i <= w.n - 1:
        raise IndexOutOfRange(f"pair index {i} outside 1..{w.n - 1}")
    if w.values[i - 1] > w.values[i]:
        return w
    out = np.array(w.values)
    out[i - 1], out[i] = out[i], out[i - 1]
    return Permutation(out)


def reverse_sort_value(w: Permutation, i: int) -> Permutation:
    """Place value i+1 before value i, wherever the two sit.

    Conjugate of :func:`reverse_sort_position` by inversion: the entries
    i, i+1 of the inverse word get reverse-sorted.

    >>> from .perms import from_one_line
    >>> reverse_sort_value(from_one_line([3, 1, 2]), 1).one_line()
    '3 2 1'
    """
    if not 1 <= i <= w.n - 1:
        raise IndexOutOfRange(f"pair index {i} outside 1..{w.n - 1}")
    pos_lo = int(np.nonzero(w.values == i)[0][0])
    pos_hi = int(np.nonzero(w.values == i + 1)[0][0])
    if pos_lo > pos_hi:
        return w
    out = np.array(w.values)
    out[pos_lo], out[pos_hi] = i + 1, i
    return Permutation(out)


def apply_move(w: Permutation, move: CouplingMove) -> Permutation:
    if move.side == "position":
        return reverse_sort_position(w, move.index)
    if move.side == "value":
        return reverse_sort_value(w, move.index)
    raise PreconditionViolated(f"unknown move side {move.side!r}")


def sample_coupled(w: Permutation, stream) -> Permutation:
    """Apply a uniformly random move; the result has the size-biased law
    of X when w is Mallows distributed."""
    if w.n < 2:
        raise DomainError("coupling needs n >= 2")
    gen = stream.generator()
    index = int(gen.integers(1, w.n))
    side = "position" if int(gen.integers(2)) == 0 else "value"
    return apply_move(w, CouplingMove(side, index))


# ---------------------------------------------------------------------------
# O(n) move-delta aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoveDeltaSums:
    """Aggregate descent changes over all moves of one kind.

    Each field sums des(w) - des(moved w) (or the same on the inverse
    word) over all pair indices.  ``conditional_mean`` is the exact
    conditional expectation of X minus its coupled value given w.
    """

    n: int
    by_position: int
    by_value: int
    by_position_inverse: int
    by_value_inverse: int

    @property
    def conditional_mean(self) -> float:
        total = (
            self.by_position
            + self.by_value
            + self.by_position_inverse
            + self.by_value_inverse
        )
        return total / (2.0 * (self.n - 1))


def _pos_move_sum(v: np.ndarray) -> int:
    """Sum over pairs i of des(v) - des(v with pair i reverse-sorted).

    Only ascending pairs move.  Reverse-sorting an ascent creates the
    descent at i and can destroy one at i-1 and one at i+1; all three
    effects are local comparisons, vectorised below.
    """
    n = v.shape[0]
    if n < 2:
        return 0
    asc = v[:-1] < v[1:]
    delta = np.ones(n - 1, dtype=np.int64)
    if n >= 3:
        outer = (v[:-2] > v[2:]).astype(np.int64)
        delta[1:] += outer - (v[:-2] > v[1:-1]).astype(np.int64)
        delta[:-1] += outer - (v[1:-1] > v[2:]).astype(np.int64)
    return -int(delta[asc].sum())


def _consecutive_rise_count(v: np.ndarray) -> int:
    """Number of pairs with v(i+1) = v(i) + 1."""
    if v.shape[0] < 2:
        return 0
    return int(np.count_nonzero(v[1:] - v[:-1] == 1))


def _move_sums_from_values(v: np.ndarray) -> tuple[int, int, int, int]:
    v = np.asarray(v, dtype=np.int64)
    u = np.empty_like(v)
    u[v - 1] = np.arange(1, v.shape[0] + 1, dtype=np.int64)
    # A position move on the word acts as a value move on the inverse and
    # vice versa, so two helpers cover all four aggregates.
    s_pos = _pos_move_sum(v)
    s_val = -_consecutive_rise_count(u)
    s_pos_inv = -_consecutive_rise_count(v)
    s_val_inv = _pos_move_sum(u)
    return s_pos, s_val, s_pos_inv, s_val_inv


def move_delta_sums(w: Permutation) -> MoveDeltaSums:
    """All four aggregate move-delta sums of one permutation, in O(n)."""
    if w.n < 2:
        raise DomainError("move-delta sums need n >= 2")
    s1, s2, s3, s4 = _move_sums_from_values(w.values)
    return MoveDeltaSums(
        n=w.n,
        by_position=s1,
        by_value=s2,
        by_position_inverse=s3,
        by_value_inverse=s4,
    )


def cond_exp_delta(w: Permutation) -> float:
    """Exact E(X - coupled X | w), averaging over the 2(n-1) moves.

    >>> from .perms import from_one_line
    >>> cond_exp_delta(from_one_line([2, 1]))
    0.0
    >>> cond_exp_delta(from_one_line([1, 2]))
    -2.0
    """
    return move_delta_sums(w).conditional_mean


# ---------------------------------------------------------------------------
# Exact verification of the coupling
# ---------------------------------------------------------------------------


def exact_two_sided_pmf(law: ExactLaw) -> dict[int, float]:
    """Exact pmf of X = des(w) + des(inverse(w)) under the law."""
    x = law.descents + law.inverse_descents
    pmf: dict[int, float] = {}
    for value, p in zip(x, law.probs):
        pmf[int(value)] = pmf.get(int(value), 0.0) + float(p)
    return pmf


def exact_coupling_check(law: ExactLaw) -> float:
    """Max pmf deviation between the coupled draw and the size-biased law.

    Enumerates every (word, move) pair with weight prob/2(n-1) and
    compares against x * P(X = x) / E(X).  Exact up to float round-off.
    """
    n = law.n
    if n < 2:
        raise DomainError("coupling needs n >= 2")
    pmf = exact_two_sided_pmf(law)
    mean = sum(x * p for x, p in pmf.items())
    biased = {x: x * p / mean for x, p in pmf.items() if x > 0}

    coupled: dict[int, float] = {}
    moves = list(all_moves(n))
    for r in range(len(law)):
        w = law.permutation_at(r)
        share = float(law.probs[r]) / len(moves)
        for move in moves:
            xs = two_sided_descents(apply_move(w, move))
            coupled[xs] = coupled.get(xs, 0.0) + share

    keys = set(biased) | set(coupled)
    return max(abs(biased.get(k, 0.0) - coupled.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Monte Carlo variance of the conditional move delta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceTermResult:
    n: int
    q: float
    reps: int
    estimate: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.estimate <= self.bound


def variance_term_bound(n: int, q: float) -> float:
    """Bound on Var(E(X - coupled X | w)): 148/(n-1) at q = 1, else 6847/(n-1)."""
    if n < 2:
        raise DomainError("bound needs n >= 2")
    constant = 148.0 if q == 1.0 else 6847.0
    return constant / (n - 1)


def variance_term(n: int, q: float, reps: int, stream, threads: int = 1) -> VarianceTermResult:
    """Sample variance of the conditional move delta over Mallows draws."""
    from .sampling import sample_words  # deferred to keep import graph acyclic

    params = MallowsParams(n, q)
    words = sample_words(params, reps, stream, threads=threads)
    deltas = np.empty(reps, dtype=np.float64)
    for r in range(reps):
        s1, s2, s3, s4 = _move_sums_from_values(words[r])
        deltas[r] = (s1 + s2 + s3 + s4) / (2.0 * (n - 1))
    return VarianceTermResult(
        n=n,
        q=q,
        reps=reps,
        estimate=float(np.var(deltas, ddof=1)),
        bound=variance_term_bound(n, q),
    )


# ---------------------------------------------------------------------------
# Concentration bounds for the two-sided count
# ---------------------------------------------------------------------------


def tail_bound(x: float, n: int, q: float, side: str = "upper") -> float:
    """Explicit tail bound for X around its mean mu = 2(n-1)q/(1+q).

    upper: P(X - mu >= x) <= exp(-x^2 / (4 (x/3 + mu))), any x >= 0.
    lower: P(X - mu <= -x) <= exp(-x^2 / (4 mu)), for 0 <= x < mu.
    """
    mu = mean_two_sided(MallowsParams(n, q))
    if x < 0:
        raise DomainError("offset x must be >= 0")
    if side == "upper":
        return exp(-(x * x) / (4.0 * (x / 3.0 + mu)))
    if side == "lower":
        if x >= mu:
            raise DomainError(f"lower bound needs x < mean ({mu:g})")
        return exp(-(x * x) / (4.0 * mu))
    raise PreconditionViolated(f"side must be 'upper' or 'lower', got {side!r}")


@dataclass(frozen=True)
class TailPoint:
    x: float
    upper_freq: float
    upper_se: float
    upper_bound: float
    upper_ok: bool
    lower_freq: float
    lower_se: float
    lower_bound: float
    lower_ok: bool


@dataclass(frozen=True)
class TailCheckResult:
    n: int
    q: float
    reps: int
    points: tuple[TailPoint, ...]

    @property
    def all_ok(self) -> bool:
        return all(p.upper_ok and p.lower_ok for p in self.points)


def tail_check(n: int, q: float, reps: int, xs, stream, threads: int = 1) -> TailCheckResult:
    """Empirical tail frequencies of X versus the explicit bounds.

    A point passes when the frequency does not exceed bound + 3 standard
    errors of the frequency.
    """
    from .sampling import two_sided_samples

    params = MallowsParams(n, q)
    mu = mean_two_sided(params)
    des, ides = two_sided_samples(params, reps, stream, threads=threads)
    total = (des + ides).astype(np.float64)
    points = []
    for x in xs:
        x = float(x)
        uf = float(np.mean(total - mu >= x))
        lf = float(np.mean(total - mu <= -x))
        use = float(np.sqrt(uf * (1.0 - uf) / reps))
        lse = float(np.sqrt(lf * (1.0 - lf) / reps))
        ub = tail_bound(x, n, q, "upper")
        lb = tail_bound(x, n, q, "lower") if x < mu else 1.0
        points.append(
            TailPoint(
                x=x,
                upper_freq=uf,
                upper_se=use,
                upper_bound=ub,
                upper_ok=uf <= ub + 3.0 * use,
                lower_freq=lf,
                lower_se=lse,
                lower_bound=lb,
                lower_ok=lf <= lb + 3.0 * lse,
            )
        )
    return TailCheckResult(n=n, q=q, reps=reps, points=tuple(points))
