"""Exact Mallows laws on S_n for small n, with closed-form references.

The measure puts weight q^inversions(w) on each w in S_n; the normalising
constant is the q-factorial of n.  Everything in this module is exact up
to float round-off: full enumeration of the support, moment formulas,
probability bounds for partial assignments, conditional independence
checks of induced patterns, and the exact covariance-type sums that feed
the variance bound of the size-bias argument.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, PreconditionViolated, TooLargeForEnumeration
from .perms import IndexSet, Permutation, relative_order

# Full enumeration of S_n is kept to 8! = 40320 rows.
ENUMERATION_CAP = 8

# Tail cutoff for the infinite product over (1 - q^k).
EULER_TAIL = 1e-16


@dataclass(frozen=True)
class MallowsParams:
    """Size n and weight parameter q > 0 of a Mallows measure."""

    n: int
    q: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise DomainError(f"size must be a positive integer, got {self.n!r}")
        q = float(self.q)
        if not np.isfinite(q) or q <= 0.0:
            raise DomainError(f"weight parameter must be finite and > 0, got {self.q!r}")
        object.__setattr__(self, "q", q)

    @property
    def regime(self) -> str:
        """'sub' (q < 1), 'uniform' (q = 1) or 'super' (q > 1)."""
        if self.q < 1.0:
            return "sub"
        if self.q == 1.0:
            return "uniform"
        return "super"


def q_integer(k: int, q: float) -> float:
    """The q-analogue of the integer k: 1 + q + ... + q^(k-1)."""
    if k < 0:
        raise DomainError("k must be >= 0")
    if q == 1.0:
        return float(k)
    return (1.0 - q**k) / (1.0 - q)


def q_factorial(k: int, q: float) -> float:
    """Product of the q-integers 1..k; equals k! at q = 1.

    >>> q_factorial(3, 0.5)
    2.625
    >>> q_factorial(0, 0.3)
    1.0
    """
    out = 1.0
    for i in range(1, k + 1):
        out *= q_integer(i, q)
    return out


def euler_product(q: float) -> float:
    """The infinite product of (1 - q^k) over k >= 1, for 0 <= q < 1.

    Factors are accumulated until q^k drops below EULER_TAIL; the ignored
    tail perturbs the product by less than its own mass.
    """
    if not 0.0 <= q < 1.0:
        raise DomainError("euler_product needs 0 <= q < 1")
    if q == 0.0:
        return 1.0
    log_total = 0.0
    k = 1
    block = 4096
    while True:
        exponents = np.arange(k, k + block, dtype=np.float64)
        terms = q**exponents
        live = terms >= EULER_TAIL
        log_total += float(np.log1p(-terms[live]).sum())
        if not live.all():
            break
        k += block
    return float(np.exp(log_total))


class ExactLaw:
    """Fully enumerated Mallows law on S_n.

    ``words`` holds all n! one-line words (int8), row r having inversion
    count ``lengths[r]`` and probability ``probs[r]``.
    """

    def __init__(self, params: MallowsParams, words: np.ndarray, lengths: np.ndarray):
        self.params = params
        self.words = words
        self.lengths = lengths
        weights = params.q ** lengths.astype(np.float64)
        self.z = float(weights.sum())
        self.probs = weights / self.z

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def q(self) -> float:
        return self.params.q

    def __len__(self) -> int:
        return self.words.shape[0]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {tuple(map(int, row)): r for r, row in enumerate(self.words)}

    def index_of(self, w: Permutation) -> int:
        return self._index[w.key()]

    def prob_of(self, w: Permutation) -> float:
        return float(self.probs[self.index_of(w)])

    def permutation_at(self, row: int) -> Permutation:
        return Permutation(self.words[row])

    @cached_property
    def inverse_words(self) -> np.ndarray:
        """Row r is the one-line word of the inverse of row r."""
        return (np.argsort(self.words, axis=1) + 1).astype(np.int8)

    @cached_property
    def descents(self) -> np.ndarray:
        return (self.words[:, :-1] > self.words[:, 1:]).sum(axis=1).astype(np.int64)

    @cached_property
    def inverse_descents(self) -> np.ndarray:
        iw = self.inverse_words
        return (iw[:, :-1] > iw[:, 1:]).sum(axis=1).astype(np.int64)

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, np.asarray(values, dtype=np.float64)))


def enumerate_law(params: MallowsParams) -> ExactLaw:
    """Enumerate the Mallows law on S_n (n <= 8)."""
    n = params.n
    if n > ENUMERATION_CAP:
        raise TooLargeForEnumeration(f"exact enumeration capped at n = {ENUMERATION_CAP}")
    words = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int8)
    lengths = np.zeros(words.shape[0], dtype=np.int64)
    for i in range(n - 1):
        for j in range(i + 1, n):
            lengths += words[:, i] > words[:, j]
    return ExactLaw(params, words, lengths)


# ---------------------------------------------------------------------------
# Moments of descent statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSummary:
    """Exact moments of (des, des of inverse) under one law."""

    mean_two_sided: float
    var_des: float
    cov_des_ides: float
    var_two_sided: float
    rho: float | None  # None when var_des = 0 (only n = 1)


def exact_moments(law: ExactLaw) -> MomentSummary:
    """Moments of the two-sided descent count by full enumeration."""
    des = law.descents.astype(np.float64)
    ides = law.inverse_descents.astype(np.float64)
    p = law.probs
    mean_des = float(p @ des)
    mean_ides = float(p @ ides)
    var_des = float(p @ (des * des)) - mean_des**2
    cov = float(p @ (des * ides)) - mean_des * mean_ides
    x = des + ides
    var_two = float(p @ (x * x)) - (mean_des + mean_ides) ** 2
    rho = cov / var_des if var_des > 0 else None
    return MomentSummary(
        mean_two_sided=mean_des + mean_ides,
        var_des=var_des,
        cov_des_ides=cov,
        var_two_sided=var_two,
        rho=rho,
    )


def mean_two_sided(params: MallowsParams) -> float:
    """Exact mean of des(w) + des(inverse(w)): 2 q (n-1) / (1+q).

    Valid for every q > 0; the expression is invariant under q -> 1/q
    combined with reversal.
    """
    return 2.0 * params.q * (params.n - 1) / (1.0 + params.q)


def var_descents(params: MallowsParams) -> float:
    """Exact variance of the one-sided descent count.

    The rational expression is symmetric under q -> 1/q (reversal flips
    each descent indicator), so it can be evaluated at q directly.  At
    q = 1 it reduces to (n+1)/12.
    """
    n, q = params.n, params.q
    denom = (1.0 + q) ** 2 * (1.0 + q + q * q)
    return (n * q * (1.0 - q + q * q) - q * (1.0 - 3.0 * q + q * q)) / denom


def uniform_var_two_sided(n: int) -> float:
    """Variance of the two-sided descent count at q = 1: (n+7)/6 - 1/n."""
    if n < 1:
        raise DomainError("size must be >= 1")
    return (n + 7.0) / 6.0 - 1.0 / n


def cov_bounds(params: MallowsParams) -> tuple[float, float]:
    """Lower and upper bounds on Cov(des(w), des(inverse(w))) for 0 < q < 1.

    For q > 1 apply the reversal reduction q -> 1/q first; the covariance
    itself is invariant under it.
    """
    n, q = params.n, params.q
    if not 0.0 < q < 1.0:
        raise DomainError("covariance bounds require 0 < q < 1")
    if n < 2:
        raise DomainError("covariance bounds require n >= 2")
    lower = q * (n - 1) * (1.0 - q) ** 2 * euler_product(q) / (1.0 + q)
    upper = q * (n - 1) * (1.0 - q) * (1.0 + q) ** 2 / (1.0 - q**n)
    return lower, upper


# ---------------------------------------------------------------------------
# Partial assignments
# ---------------------------------------------------------------------------


def _check_assignment(n: int, positions, values) -> tuple[np.ndarray, np.ndarray]:
    pos = np.asarray(list(positions), dtype=np.int64)
    val = np.asarray(list(values), dtype=np.int64)
    if pos.shape != val.shape:
        raise PreconditionViolated("positions and values must have equal length")
    for arr, what in ((pos, "positions"), (val, "values")):
        if arr.size and (arr.min() < 1 or arr.max() > n):
            raise PreconditionViolated(f"{what} must lie in 1..{n}")
        if np.unique(arr).size != arr.size:
            raise PreconditionViolated(f"{what} must be distinct")
    return pos, val


def assignment_word(n: int, positions, values) -> Permutation:
    """The word matching the assignment and increasing elsewhere.

    Unassigned positions receive the unassigned values in increasing
    order; among all words matching the assignment this one has the fewest
    inversions.

    >>> assignment_word(5, [2], [4]).one_line()
    '1 4 2 3 5'
    """
    pos, val = _check_assignment(n, positions, values)
    word = np.zeros(n, dtype=np.int32)
    word[pos - 1] = val
    free_pos = np.setdiff1d(np.arange(1, n + 1, dtype=np.int64), pos)
    free_val = np.setdiff1d(np.arange(1, n + 1, dtype=np.int64), val)
    word[free_pos - 1] = free_val
    return Permutation(word)


def prob_bound_assignment(params: MallowsParams, positions, values) -> float:
    """Upper bound on P(w matches the assignment), for q <= 1.

    Equals q^inversions(word) * [n-c]_q! / [n]_q! with ``word`` the
    minimal-inversion completion and c the number of constrained
    positions.
    """
    from .perms import inversions  # local import keeps module load light

    if params.q > 1.0:
        raise DomainError("assignment probability bound requires q <= 1")
    pos, _ = _check_assignment(params.n, positions, values)
    word = assignment_word(params.n, positions, values)
    c = pos.size
    return (
        params.q ** inversions(word)
        * q_factorial(params.n - c, params.q)
        / q_factorial(params.n, params.q)
    )


def exact_prob_assignment(law: ExactLaw, positions, values) -> float:
    """Exact P(w(i) = a_i for every constrained position i)."""
    pos, val = _check_assignment(law.n, positions, values)
    mask = np.ones(len(law), dtype=bool)
    for p_, v_ in zip(pos, val):
        mask &= law.words[:, p_ - 1] == v_
    return float(law.probs[mask].sum())


# ---------------------------------------------------------------------------
# Independence of induced patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndependenceReport:
    """Deviations measured by an exact factorisation check.

    ``joint_deviation``: max |P(X=x, Y=y) - P(X=x) P(Y=y)| over the product
    of supports.  ``marginal_deviation``: max distance of any component
    marginal from the Mallows law of matching size.
    """

    joint_deviation: float
    marginal_deviation: float


def _window_keys(words: np.ndarray, comp: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Relative-order key of the window spanned by one run of pair indices."""
    a, b = comp[0], comp[-1]
    window = words[:, a - 1 : b + 1]
    ranks = np.argsort(np.argsort(window, axis=1, kind="stable"), axis=1) + 1
    return [tuple(map(int, row)) for row in ranks]


def _side_keys(words: np.ndarray, s: IndexSet) -> list[tuple]:
    comps = s.connected_components()
    per_comp = [_window_keys(words, c) for c in comps]
    return [tuple(keys[r] for keys in per_comp) for r in range(words.shape[0])]


def _max_pmf_dev(dist: dict, reference: dict) -> float:
    keys = set(dist) | set(reference)
    return max(abs(dist.get(k, 0.0) - reference.get(k, 0.0)) for k in keys)


def _component_marginal_dev(words, weights, s: IndexSet, q: float) -> float:
    """Max deviation of each component's induced law from Mallows."""
    worst = 0.0
    for comp in s.connected_components():
        size = len(comp) + 1
        ref_law = enumerate_law(MallowsParams(size, q))
        reference = {
            tuple(map(int, ref_law.words[r])): float(ref_law.probs[r])
            for r in range(len(ref_law))
        }
        dist: dict[tuple, float] = {}
        for key, wt in zip(_window_keys(words, comp), weights):
            dist[key] = dist.get(key, 0.0) + float(wt)
        worst = max(worst, _max_pmf_dev(dist, reference))
    return worst


def independence_check(
    law: ExactLaw,
    s: IndexSet,
    s2: IndexSet,
    mode: str = "direct",
    intersection_size: int | None = None,
) -> IndependenceReport:
    """Exact independence check of induced patterns on two index sets.

    mode='direct': requires the two sets to be separated (|i - j| > 1 for
    every pair of members); checks that the patterns induced by w on s and
    on s2 are independent, each component Mallows of matching size.

    mode='inverse': requires both sets connected; conditions on how many
    of the values placed on the positions of s land inside the positions
    of s2 (``intersection_size`` 0 or 1) and checks that the pattern of w
    on s is independent of the pattern of the inverse on s2, again with
    Mallows marginals.
    """
    if s.n != law.n or s2.n != law.n:
        raise PreconditionViolated("index sets must match the law's size")
    if not s.members or not s2.members:
        raise PreconditionViolated("index sets must be non-empty")

    if mode == "direct":
        for i in s.members:
            for j in s2.members:
                if abs(i - j) <= 1:
                    raise PreconditionViolated(
                        f"pair indices {i} and {j} are not separated"
                    )
        weights = law.probs
        x_keys = _side_keys(law.words, s)
        y_keys = _side_keys(law.words, s2)
        y_words = law.words
    elif mode == "inverse":
        if not (s.is_connected() and s2.is_connected()):
            raise PreconditionViolated("inverse mode needs connected index sets")
        if intersection_size not in (0, 1):
            raise PreconditionViolated("intersection_size must be 0 or 1")
        placed = law.words[:, np.asarray(s.positions()) - 1]
        target = np.asarray(s2.positions())
        hits = np.isin(placed, target).sum(axis=1)
        mask = hits == intersection_size
        total = float(law.probs[mask].sum())
        if total <= 0.0:
            raise DomainError("conditioning event has probability zero")
        weights = law.probs[mask] / total
        x_keys = _side_keys(law.words[mask], s)
        y_words = law.inverse_words[mask]
        y_keys = _side_keys(y_words, s2)
    else:
        raise PreconditionViolated(f"unknown mode {mode!r}")

    joint: dict[tuple, float] = {}
    px: dict[tuple, float] = {}
    py: dict[tuple, float] = {}
    for kx, ky, wt in zip(x_keys, y_keys, weights):
        wt = float(wt)
        joint[(kx, ky)] = joint.get((kx, ky), 0.0) + wt
        px[kx] = px.get(kx, 0.0) + wt
        py[ky] = py.get(ky, 0.0) + wt
    joint_dev = max(
        abs(joint.get((kx, ky), 0.0) - pxv * pyv)
        for kx, pxv in px.items()
        for ky, pyv in py.items()
    )

    if mode == "direct":
        marg_words_x, marg_weights_x = law.words, weights
        marg_words_y, marg_weights_y = law.words, weights
    else:
        marg_words_x, marg_weights_x = law.words[mask], weights
        marg_words_y, marg_weights_y = y_words, weights
    marg_dev = max(
        _component_marginal_dev(marg_words_x, marg_weights_x, s, law.q),
        _component_marginal_dev(marg_words_y, marg_weights_y, s2, law.q),
    )
    return IndependenceReport(joint_deviation=joint_dev, marginal_deviation=marg_dev)


# ---------------------------------------------------------------------------
# Covariance-type sums of the variance decomposition
# ---------------------------------------------------------------------------

# Per-type bounds, each to be multiplied by (n - 1); types are covariance
# sums between the four move-delta aggregates (position/value moves on the
# word and on its inverse):
#   1: (position, position)           2: (position, position-on-inverse)
#   3: (position, value)              4: (position, value-on-inverse)
#   5: (value, value)                 6: (value, position-on-inverse)
TYPE_SUM_BOUNDS = {1: 56.0, 2: 56.0, 3: 128.0, 4: 256.0, 5: 6507.0, 6: 6507.0}

_TYPE_PAIRS = {1: (0, 0), 2: (0, 2), 3: (0, 1), 4: (0, 3), 5: (1, 1), 6: (1, 2)}

# Bound on the joint-probability part of type 5 when q is within
# (n-1)^(-1/2) of 1: sum over i, j of P(both adjacent pairs ascend by
# exactly 1) is at most this times (n - 1).
ADJACENT_JOINT_BOUND = 111.0


def _move_sum_matrix(law: ExactLaw) -> np.ndarray:
    """(n!, 4) matrix of move-delta sums for every word of the law."""
    cached = getattr(law, "_move_sums", None)
    if cached is not None:
        return cached
    from .coupling import move_delta_sums  # deferred: coupling imports this module

    rows = np.empty((len(law), 4), dtype=np.float64)
    for r in range(len(law)):
        t = move_delta_sums(law.permutation_at(r))
        rows[r] = (t.by_position, t.by_value, t.by_position_inverse, t.by_value_inverse)
    law._move_sums = rows
    return rows


def type_sum(kind: int, law: ExactLaw) -> float:
    """Exact covariance sum of one of the six aggregate types.

    Each type is the full double sum over pair indices of covariances of
    single-move descent deltas; by bilinearity that equals one covariance
    of two aggregate move-delta sums, which is what is evaluated here.
    """
    if kind not in _TYPE_PAIRS:
        raise PreconditionViolated("type must be 1..6")
    sums = _move_sum_matrix(law)
    a, b = _TYPE_PAIRS[kind]
    p = law.probs
    ea = float(p @ sums[:, a])
    eb = float(p @ sums[:, b])
    return float(p @ (sums[:, a] * sums[:, b])) - ea * eb


def type_sum_bound(kind: int, n: int) -> float:
    if kind not in TYPE_SUM_BOUNDS:
        raise PreconditionViolated("type must be 1..6")
    return TYPE_SUM_BOUNDS[kind] * (n - 1)


def adjacent_joint_sum(law: ExactLaw) -> float:
    """Sum over i, j of P(w(i+1) = w(i)+1 and w(j+1) = w(j)+1).

    This is the positive part of the type-5 sum; near q = 1 it admits the
    ADJACENT_JOINT_BOUND * (n-1) bound.
    """
    consec = ((law.words[:, 1:] - law.words[:, :-1]) == 1).sum(axis=1)
    consec = consec.astype(np.float64)
    return law.expectation(consec * consec)


# ---------------------------------------------------------------------------
# Small-q localisation events
# ---------------------------------------------------------------------------


def prob_displacement_exceeds_one(law: ExactLaw, i: int) -> float:
    """Exact P(|w(i) - i| > 1)."""
    if not 1 <= i <= law.n:
        raise PreconditionViolated(f"position {i} outside 1..{law.n}")
    mask = np.abs(law.words[:, i - 1].astype(np.int64) - i) > 1
    return float(law.probs[mask].sum())


def prob_descent_sets_equal(law: ExactLaw) -> float:
    """Exact P(descent set of w equals descent set of its inverse,
    position by position)."""
    d = law.words[:, :-1] > law.words[:, 1:]
    di = law.inverse_words[:, :-1] > law.inverse_words[:, 1:]
    mask = (d == di).all(axis=1)
    return float(law.probs[mask].sum())
