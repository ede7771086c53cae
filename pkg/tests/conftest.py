"""Shared fixtures and independent reference implementations.

The reference helpers here deliberately do not reuse library code paths:
enumeration matches the largest element first (the library matches the
smallest), scoring is a nested loop, and the rank check is a from-scratch
Gaussian elimination over fractions. They exist so library results are
checked against something that cannot share their bugs.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pairing_tsp.core import Instance


def make_instance(n: int, seed: int, c_min: float = 0.0, c_max: float = 10000.0) -> Instance:
    rng = np.random.default_rng(seed)
    c = rng.uniform(c_min, c_max, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 0.0)
    return Instance(n=n, c=c, c_min=c_min, c_max=c_max)


def make_integer_instance(n: int, seed: int, lo: int = 0, hi: int = 10000) -> Instance:
    rng = np.random.default_rng(seed)
    raw = rng.integers(lo, hi + 1, (n, n))
    c = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            c[i][j] = int(raw[min(i, j)][max(i, j)])
        c[i][i] = 0
    return Instance(n=n, c=c, c_min=lo, c_max=hi)


def matrix_from_pairs(n: int, entries: dict[tuple[int, int], float]) -> np.ndarray:
    c = np.zeros((n, n))
    for (i, j), value in entries.items():
        c[i - 1][j - 1] = value
        c[j - 1][i - 1] = value
    return c


def reference_pairings(n: int) -> list[frozenset[frozenset[int]]]:
    """All pairings of 1..n, matching the largest element first."""
    def recurse(elements: tuple[int, ...]):
        if not elements:
            yield []
            return
        last = elements[-1]
        rest = elements[:-1]
        for pos in range(len(rest)):
            partner = rest[pos]
            remaining = rest[:pos] + rest[pos + 1 :]
            for tail in recurse(remaining):
                yield [(partner, last)] + tail

    return [
        frozenset(frozenset(p) for p in pairing)
        for pairing in recurse(tuple(range(1, n + 1)))
    ]


def reference_score(matrix: np.ndarray, pairs) -> float:
    total = 0.0
    for pair in pairs:
        i, j = sorted(pair)
        total += float(matrix[i - 1][j - 1])
    return total


def reference_rank(rows: list[list[int]]) -> int:
    """Rank over the rationals by textbook Gaussian elimination."""
    work = [[Fraction(v) for v in row] for row in rows]
    cols = len(work[0]) if work else 0
    rank = 0
    pivot_row = 0
    for col in range(cols):
        chosen = None
        for r in range(pivot_row, len(work)):
            if work[r][col] != 0:
                chosen = r
                break
        if chosen is None:
            continue
        work[pivot_row], work[chosen] = work[chosen], work[pivot_row]
        pivot = work[pivot_row][col]
        work[pivot_row] = [v / pivot for v in work[pivot_row]]
        for r in range(len(work)):
            if r != pivot_row and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [a - factor * b for a, b in zip(work[r], work[pivot_row])]
        pivot_row += 1
        rank += 1
    return rank


@pytest.fixture
def instance6() -> Instance:
    return make_instance(6, seed=1234)


@pytest.fixture
def instance8() -> Instance:
    return make_instance(8, seed=99)
