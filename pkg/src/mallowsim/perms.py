"""Permutations in one-line notation with 1-based positions.

A permutation w of size n is stored as the word (w(1), ..., w(n)).  All
position arguments in this module are 1-based, matching the usual
combinatorics convention; storage is int32 so words of size up to ~1e7
stay compact.

>>> w = from_one_line([3, 2, 5, 1, 4, 7, 6])
>>> inversions(w)
6
>>> descent_count(w)
3
>>> inverse(w).one_line()
'4 2 1 5 3 7 6'
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import IndexOutOfRange, NotABijection, PreconditionViolated


class Permutation:
    """Immutable permutation in one-line notation.

    Use :func:`from_one_line` to build one with validation; the raw
    constructor trusts its input.
    """

    __slots__ = ("_values",)

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values, dtype=np.int32)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "_values", arr)

    @property
    def values(self) -> np.ndarray:
        """Read-only int32 array (v[0] = w(1), ..., v[n-1] = w(n))."""
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __call__(self, i: int) -> int:
        """Value at 1-based position i."""
        if not 1 <= i <= self.n:
            raise IndexOutOfRange(f"position {i} outside 1..{self.n}")
        return int(self._values[i - 1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._values, other._values))

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        if self.n <= 12:
            return f"Permutation([{', '.join(map(str, self._values))}])"
        head = ", ".join(map(str, self._values[:6]))
        return f"Permutation([{head}, ...], n={self.n})"

    def one_line(self) -> str:
        """Space-separated one-line word, e.g. '3 2 5 1 4 7 6'."""
        return " ".join(map(str, self._values))

    def key(self) -> tuple[int, ...]:
        """Hashable tuple of values; handy for dict-keyed tables at small n."""
        return tuple(int(v) for v in self._values)


def from_one_line(values: Iterable[int]) -> Permutation:
    """Build a permutation from a one-line word, checking it is a bijection.

    >>> from_one_line([2, 1, 3]).one_line()
    '2 1 3'
    >>> from_one_line([1, 1, 3])
    Traceback (most recent call last):
        ...
    mallowsim.errors.NotABijection: word is not a permutation of 1..3
    """
    arr = np.asarray(list(values), dtype=np.int64)
    n = arr.shape[0]
    if n == 0:
        raise NotABijection("empty word")
    if arr.min() < 1 or arr.max() > n or np.bincount(arr, minlength=n + 1)[1:].max() > 1:
        raise NotABijection(f"word is not a permutation of 1..{n}")
    return Permutation(arr)


def identity(n: int) -> Permutation:
    if n < 1:
        raise PreconditionViolated("size must be >= 1")
    return Permutation(np.arange(1, n + 1, dtype=np.int32))


def inversions(w: Permutation) -> int:
    """Number of pairs i < j with w(i) > w(j).

    >>> inversions(from_one_line([3, 2, 5, 1, 4, 7, 6]))
    6
    >>> inversions(identity(5))
    0
    """
    return int(_kernels.count_inversions(w.values))


def descent_indicator(w: Permutation, i: int) -> int:
    """1 if w(i) > w(i+1), else 0, for 1 <= i <= n-1."""
    if not 1 <= i <= w.n - 1:
        raise IndexOutOfRange(f"adjacent pair index {i} outside 1..{w.n - 1}")
    return int(w.values[i - 1] > w.values[i])


def descent_set(w: Permutation) -> tuple[int, ...]:
    """Sorted tuple of positions i with w(i) > w(i+1)."""
    (idx,) = np.nonzero(w.values[:-1] > w.values[1:])
    return tuple(int(i) + 1 for i in idx)


def descent_count(w: Permutation) -> int:
    """Number of descents of w.

    >>> descent_count(from_one_line([3, 2, 5, 1, 4, 7, 6]))
    3
    """
    return int(np.count_nonzero(w.values[:-1] > w.values[1:]))


def inverse(w: Permutation) -> Permutation:
    """The inverse permutation: inverse(w)(v) = position of value v in w.

    >>> inverse(from_one_line([3, 2, 5, 1, 4, 7, 6])).one_line()
    '4 2 1 5 3 7 6'
    """
    inv = np.empty(w.n, dtype=np.int32)
    inv[w.values - 1] = np.arange(1, w.n + 1, dtype=np.int32)
    return Permutation(inv)


def reverse(w: Permutation) -> Permutation:
    """Left-right reversal: reverse(w)(i) = w(n - i + 1).

    >>> reverse(from_one_line([3, 2, 5, 1, 4, 7, 6])).one_line()
    '6 7 4 1 5 2 3'
    """
    return Permutation(w.values[::-1])


def two_sided_descents(w: Permutation) -> int:
    """descent_count(w) + descent_count(inverse(w)).

    >>> two_sided_descents(from_one_line([3, 2, 5, 1, 4, 7, 6]))
    7
    """
    inv = np.empty(w.n, dtype=np.int32)
    inv[w.values - 1] = np.arange(1, w.n + 1, dtype=np.int32)
    d = int(np.count_nonzero(w.values[:-1] > w.values[1:]))
    return d + int(np.count_nonzero(inv[:-1] > inv[1:]))


def relative_order(values: Sequence[int]) -> Permutation:
    """Permutation with the same relative order as the given distinct values.

    >>> relative_order([2, 5, 1]).one_line()
    '2 3 1'
    """
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise PreconditionViolated("need a non-empty 1-d sequence")
    if np.unique(arr).shape[0] != arr.shape[0]:
        raise PreconditionViolated("values must be distinct")
    ranks = np.empty(arr.shape[0], dtype=np.int32)
    ranks[np.argsort(arr, kind="stable")] = np.arange(1, arr.shape[0] + 1, dtype=np.int32)
    return Permutation(ranks)


@dataclass(frozen=True)
class IndexSet:
    """A set of adjacent-pair positions S, a subset of {1, ..., n-1}.

    Pair index i stands for the adjacent positions (i, i+1) of a size-n
    permutation.  ``positions`` is the union of those position pairs, and
    ``connected_components`` splits S into maximal runs of consecutive
    integers.
    """

    members: tuple[int, ...]
    n: int

    def __post_init__(self):
        members = tuple(sorted(set(int(i) for i in self.members)))
        object.__setattr__(self, "members", members)
        if self.n < 1:
            raise PreconditionViolated("size must be >= 1")
        for i in members:
            if not 1 <= i <= self.n - 1:
                raise PreconditionViolated(
                    f"pair index {i} outside 1..{self.n - 1}"
                )

    def connected_components(self) -> tuple[tuple[int, ...], ...]:
        """Maximal runs of consecutive pair indices.

        >>> IndexSet((2, 3, 5, 6), 7).connected_components()
        ((2, 3), (5, 6))
        """
        runs: list[list[int]] = []
        for i in self.members:
            if runs and i == runs[-1][-1] + 1:
                runs[-1].append(i)
            else:
                runs.append([i])
        return tuple(tuple(r) for r in runs)

    def positions(self) -> tuple[int, ...]:
        """All positions touched by the pairs in S (the set S-bar).

        >>> IndexSet((2, 3, 5, 6), 7).positions()
        (2, 3, 4, 5, 6, 7)
        """
        out = set()
        for i in self.members:
            out.add(i)
            out.add(i + 1)
        return tuple(sorted(out))

    def is_connected(self) -> bool:
        return len(self.connected_components()) <= 1


def induced(w: Permutation, s: IndexSet) -> tuple[Permutation, ...]:
    """Induced permutations of w on the components of an index set.

    Each connected component of pair indices {a, ..., b} spans positions
    a..b+1; the corresponding induced permutation is the relative order of
    the window (w(a), ..., w(b+1)).

    >>> w = from_one_line([3, 2, 5, 1, 4, 7, 6])
    >>> [p.one_line() for p in induced(w, IndexSet((2, 3, 5, 6), 7))]
    ['2 3 1', '1 3 2']
    """
    if s.n != w.n:
        raise PreconditionViolated(
            f"index set is for size {s.n}, permutation has size {w.n}"
        )
    out = []
    for run in s.connected_components():
        a, b = run[0], run[-1]
        out.append(relative_order(w.values[a - 1 : b + 1]))
    return tuple(out)
