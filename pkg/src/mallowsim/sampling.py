"""Samplers for Mallows-distributed permutations.

Two routes are provided and kept deliberately independent so they can be
tested against each other:

* :func:`sample_finite` draws w of a fixed size n directly, by giving
  position i the j-th smallest unused value where j is a truncated
  geometric rank.  Each rank j contributes j-1 inversions, so the weight
  of w is proportional to q^inversions(w).
* :func:`sample_process_prefix` runs the infinite one-value-at-a-time
  construction (unbounded geometric ranks over all unused positive
  integers); the relative order of its first n values has the same law.

Randomness comes from :class:`RngStream`, a counter-based splittable
stream: (master_seed, label, counter) hashes to a Philox key, so any
replication can be regenerated in isolation and results never depend on
how work is scheduled.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import DomainError, PreconditionViolated
from .exact_law import MallowsParams
from .perms import Permutation, relative_order
from .util import chunk_plan, run_chunks

# Below this distance from q = 1 the geometric inversion formula loses
# precision to cancellation; the rank law is within ~1e-6 of uniform there,
# so an exact uniform rank is drawn instead.
UNIFORM_EPS = 1e-6

# Refuse to materialise sample matrices beyond this many int32 entries.
MAX_MATERIALIZED = 1 << 28


@dataclass(frozen=True)
class RngStream:
    """A named, counter-indexed random stream.

    The Philox key is a hash of (master_seed, label, counter), so streams
    are splittable: derive one per experiment via :meth:`child` with a new
    label, and one per work chunk via a new counter.  Identical triples
    give identical draws on every platform.
    """

    master_seed: int
    label: str = "main"
    counter: int = 0

    def child(self, label: str | None = None, counter: int | None = None) -> "RngStream":
        out = self
        if label is not None:
            out = replace(out, label=f"{out.label}/{label}", counter=0)
        if counter is not None:
            out = replace(out, counter=counter)
        return out

    def generator(self) -> np.random.Generator:
        digest = hashlib.blake2b(
            f"{self.master_seed}|{self.label}|{self.counter}".encode(),
            digest_size=16,
        ).digest()
        key = int.from_bytes(digest, "little")
        return np.random.Generator(np.random.Philox(key=key))


def _rank_matrix(n: int, q_eff: float, gen: np.random.Generator, count: int) -> np.ndarray:
    """Draw truncated geometric ranks, one row per replication.

    Column i (0-based) has m = n - i admissible ranks 1..m with
    P(j) proportional to q_eff^(j-1).  Inverse-CDF sampling; the common
    j = 1 outcome short-circuits the logarithm.
    """
    u = gen.random((count, n))
    m = np.arange(n, 0, -1, dtype=np.float64)
    m_int = m.astype(np.int64)
    if abs(1.0 - q_eff) < UNIFORM_EPS:
        ranks = 1 + np.floor(u * m).astype(np.int64)
    else:
        qm = q_eff ** m
        first = (1.0 - q_eff) / (1.0 - qm)  # P(rank = 1), per column
        ranks = np.ones((count, n), dtype=np.int64)
        rows, cols = np.nonzero(u >= first)
        if rows.size:
            uu = u[rows, cols]
            scale = 1.0 - qm[cols]
            ranks[rows, cols] = 1 + np.floor(
                np.log1p(-uu * scale) / np.log(q_eff)
            ).astype(np.int64)
    np.clip(ranks, 1, m_int[None, :], out=ranks)
    return ranks


def _effective(params: MallowsParams) -> tuple[float, bool]:
    """(q used for rank draws, whether rows must be flipped).

    Parameters q > 1 are served through the reversal symmetry: draw at 1/q
    and reverse the word, which multiplies the weight exponent by -1 up to
    the constant n(n-1)/2.
    """
    if params.q > 1.0:
        return 1.0 / params.q, True
    return params.q, False


def sample_words(
    params: MallowsParams, count: int, stream: RngStream, threads: int = 1
) -> np.ndarray:
    """Draw ``count`` one-line words as an int32 matrix of shape (count, n)."""
    if count < 0:
        raise PreconditionViolated("count must be >= 0")
    if count * params.n > MAX_MATERIALIZED:
        raise DomainError(
            f"{count} x {params.n} sample matrix is too large to materialise"
        )
    q_eff, flip = _effective(params)
    plan = chunk_plan(count, per_item=params.n)

    def work(idx: int, start: int, size: int) -> np.ndarray:
        gen = stream.child(counter=idx).generator()
        ranks = _rank_matrix(params.n, q_eff, gen, size)
        return _kernels.fenwick_decode_batch(ranks, flip)

    parts = run_chunks(plan, work, threads)
    if not parts:
        return np.empty((0, params.n), dtype=np.int32)
    return np.concatenate(parts, axis=0)


def sample_finite(params: MallowsParams, stream: RngStream) -> Permutation:
    """Draw one Mallows permutation of size params.n."""
    return Permutation(sample_words(params, 1, stream)[0])


def two_sided_samples(
    params: MallowsParams, count: int, stream: RngStream, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Descent counts of ``count`` draws and of their inverses.

    Returns (des, ides) int64 vectors of length ``count``.  The draw
    matrices are never materialised beyond one work chunk, so this scales
    to millions of replications.
    """
    if count < 0:
        raise PreconditionViolated("count must be >= 0")
    q_eff, flip = _effective(params)
    plan = chunk_plan(count, per_item=params.n)

    def work(idx: int, start: int, size: int):
        gen = stream.child(counter=idx).generator()
        ranks = _rank_matrix(params.n, q_eff, gen, size)
        return _kernels.two_sided_batch(ranks, flip)

    parts = run_chunks(plan, work, threads)
    if not parts:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy()
    des = np.concatenate([p[0] for p in parts])
    ides = np.concatenate([p[1] for p in parts])
    return des, ides


@dataclass(frozen=True)
class ProcessPrefix:
    """First n values of the infinite construction; distinct positive
    integers, not necessarily bounded by n."""

    values: np.ndarray
    q: float

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


def process_steps(q: float, stream: RngStream, block: int = 4096) -> Iterator[tuple[int, int]]:
    """Yield (value, surplus) pairs of the infinite construction.

    Step i receives the k-th smallest unused positive integer, with k
    geometric of success probability 1 - q.  ``surplus`` is the count of
    unused values below the running maximum; it hits 0 exactly when the
    values so far form a permutation of 1..i.

    Requires 0 < q < 1; only then does the construction exist.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"process construction needs 0 < q < 1, got q={q}")
    gen = stream.generator()
    holes: list[int] = []
    frontier = 0
    while True:
        for k in gen.geometric(1.0 - q, size=block):
            k = int(k)
            if k <= len(holes):
                v = holes.pop(k - 1)
            else:
                v = frontier + k - len(holes)
                if v > frontier + 1:
                    holes.extend(range(frontier + 1, v))
                frontier = v
            yield v, len(holes)


def sample_process_prefix(n: int, q: float, stream: RngStream) -> ProcessPrefix:
    """First n values of the infinite construction."""
    if n < 1:
        raise PreconditionViolated("prefix length must be >= 1")
    vals = np.fromiter(
        (v for v, _ in itertools.islice(process_steps(q, stream), n)),
        dtype=np.int64,
        count=n,
    )
    return ProcessPrefix(values=vals, q=q)


def prefix_relative_order(prefix: ProcessPrefix) -> Permutation:
    """Relative order of the prefix values; distributed as a size-n draw."""
    return relative_order(prefix.values)
