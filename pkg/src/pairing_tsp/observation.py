"""Recovering pairing-sum-equivalent compatibilities from sum-only queries.

Individual compatibilities are not identifiable from pairing totals; what is
identifiable is a shadow matrix with zero first row and column that preserves
the total of every pairing. The exchange rule

    [i,j,k,l] = (C[i][k] + C[j][l]) - (C[i][j] + C[k][l])

is the observable difference between two pairings that agree except for
rewiring {i,j},{k,l} into {i,k},{j,l}; two queries realize one rule. The
reconstruction below measures the rules [1,j,3,2] (row offsets along element
2), the rules [1,i,2,j] (column offsets), and one direct anchor observation,
then solves for the single remaining unknown. Observation cost is exactly
2(N-3) + (N-2)(N-3) + 1 queries unless callers opt into memo sharing, which
can only lower it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import Pairing, ValidationError
from .oracle import ObservationOracle


def _is_floatish(value) -> bool:
    return isinstance(value, (float, np.floating))


def exchange_rule_value(i: int, j: int, k: int, l: int, matrix: np.ndarray):
    """(m[i][k] + m[j][l]) - (m[i][j] + m[k][l]) on a symmetric matrix, 1-based."""
    n = matrix.shape[0]
    indices = (i, j, k, l)
    if len(set(indices)) != 4:
        raise ValidationError(f"exchange rule needs four distinct indices, got {indices}")
    for e in indices:
        if not 1 <= e <= n:
            raise ValidationError(f"index {e} is outside 1..{n}")
    m = matrix
    return (m[i - 1][k - 1] + m[j - 1][l - 1]) - (m[i - 1][j - 1] + m[k - 1][l - 1])


def canonical_completion(n: int, used: frozenset[int] | set[int]) -> list[tuple[int, int]]:
    """Pair the elements of 1..n outside `used` in ascending adjacent order."""
    rest = sorted(set(range(1, n + 1)) - set(used))
    if len(rest) % 2 != 0:
        raise ValidationError("completion needs an even number of leftover elements")
    return [(rest[k], rest[k + 1]) for k in range(0, len(rest), 2)]


def rule_pairings(n: int, i: int, j: int, k: int, l: int) -> tuple[Pairing, Pairing]:
    """The two pairings whose observation difference equals rule [i,j,k,l].

    Both share the canonical completion of the remaining elements, so the
    difference cancels everything except the rewired pairs.
    """
    indices = (i, j, k, l)
    if len(set(indices)) != 4:
        raise ValidationError(f"exchange rule needs four distinct indices, got {indices}")
    for e in indices:
        if not 1 <= e <= n:
            raise ValidationError(f"index {e} is outside 1..{n}")
    completion = canonical_completion(n, indices)

    def assemble(a: int, b: int, c: int, d: int) -> Pairing:
        pairs = [(a, b) if a < b else (b, a), (c, d) if c < d else (d, c)]
        pairs.extend(completion)
        pairs.sort()
        return Pairing._from_canonical(tuple(pairs))

    return assemble(i, j, k, l), assemble(i, k, j, l)


def _observe(oracle: ObservationOracle, pairing: Pairing, memo: Optional[dict]):
    if memo is None:
        return oracle.observe(pairing)
    if pairing not in memo:
        memo[pairing] = oracle.observe(pairing)
    return memo[pairing]


def measure_exchange_rule(
    oracle: ObservationOracle,
    i: int,
    j: int,
    k: int,
    l: int,
    memo: Optional[dict] = None,
):
    """Realize rule [i,j,k,l] as the difference of two oracle queries.

    With a memo dict, pairings already observed are not re-submitted.
    """
    before, after = rule_pairings(oracle.n, i, j, k, l)
    return _observe(oracle, after, memo) - _observe(oracle, before, memo)


@dataclass(frozen=True)
class TildeMatrix:
    """Shadow compatibilities: zero first row/column, pairing sums preserved."""

    n: int
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t)
        if t.shape != (self.n, self.n):
            raise ValidationError(f"matrix shape {t.shape} does not match n={self.n}")
        for j in range(self.n):
            if t[0][j] != 0 or t[j][0] != 0:
                raise ValidationError("first row and column must be exactly zero")
        if t.dtype != object:
            t = t.astype(np.float64, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def free_entry_count(self) -> int:
        """Structurally free entries below the diagonal: (n-1)(n-2)/2."""
        return (self.n - 1) * (self.n - 2) // 2

    def total(self, pairing: Pairing):
        """Pairing total over the shadow matrix; equals the hidden total."""
        from .core import pairing_sum

        return pairing_sum(self.t, pairing)


def definitional_tilde(matrix: np.ndarray) -> TildeMatrix:
    """Shadow matrix computed directly from a known matrix (no oracle).

    Entry (i, j) with i, j >= 2 is
        C[i][j] - C[1][i] - C[1][j] + (2 / (N-2)) * sum_k C[1][k];
    row and column 1 are zero. Exact inputs produce exact fractions.
    """
    n = matrix.shape[0]
    row1 = [matrix[0][k] for k in range(1, n)]
    row1_sum = row1[0]
    for value in row1[1:]:
        row1_sum = row1_sum + value
    if _is_floatish(row1_sum):
        correction = 2.0 * row1_sum / (n - 2)
        t = np.zeros((n, n), dtype=np.float64)
    else:
        correction = Fraction(2, n - 2) * row1_sum
        t = np.empty((n, n), dtype=object)
        t[:, :] = Fraction(0)
    for i in range(1, n):
        for j in range(i + 1, n):
            value = matrix[i][j] - matrix[0][i] - matrix[0][j] + correction
            t[i][j] = value
            t[j][i] = value
    return TildeMatrix(n=n, t=t)


def anchor_pairing(n: int) -> Pairing:
    """The pairing {{1,2},{3,4},...,{N-1,N}}."""
    if n % 2 != 0 or n < 2:
        raise ValidationError(f"element count must be even and >= 2, got {n}")
    return Pairing._from_canonical(tuple((k, k + 1) for k in range(1, n, 2)))


def observation_budget(n: int) -> int:
    """Query count of the reconstruction without memo sharing."""
    return 2 * (n - 3) + (n - 2) * (n - 3) + 1


def reconstruct_tilde(
    oracle: ObservationOracle, *, share_observations: bool = False
) -> tuple[TildeMatrix, int]:
    """Recover the shadow matrix from sum-only queries.

    Procedure: measure rules [1,j,3,2] for 4 <= j <= N, rules [1,i,2,j] for
    4 <= j <= N and 3 <= i < j, observe the anchor pairing, then express every
    entry as x plus a measured offset with x the (2,3) entry and solve for x
    from the anchor total. Without `share_observations` the query count is
    exactly ``observation_budget(n)``; with it, repeated pairings are served
    from a memo and the count can only drop.

    Returns the shadow matrix and the number of oracle queries spent here.
    Arithmetic follows the oracle's value type: float instances reconstruct
    in floating point, integer or fractional instances reconstruct exactly.
    """
    n = oracle.n
    if n < 4 or n % 2 != 0:
        raise ValidationError(f"reconstruction needs an even element count >= 4, got {n}")
    memo: Optional[dict] = {} if share_observations else None
    start_count = oracle.query_count

    row_offset = {j: measure_exchange_rule(oracle, 1, j, 3, 2, memo) for j in range(4, n + 1)}
    col_offset = {
        (i, j): measure_exchange_rule(oracle, 1, i, 2, j, memo)
        for j in range(4, n + 1)
        for i in range(3, j)
    }
    anchor_total = _observe(oracle, anchor_pairing(n), memo)
    spent = oracle.query_count - start_count

    def offset(i: int, j: int):
        # entry (i, j), 2 <= i < j, relative to the unknown x at (2, 3)
        if (i, j) == (2, 3):
            return 0
        if i == 2:
            return row_offset[j]
        return row_offset[j] + col_offset[(i, j)]

    # anchor total = (N/2 - 1) * x + sum of offsets over {3,4},{5,6},...
    offset_sum = 0
    for k in range(3, n, 2):
        offset_sum = offset_sum + offset(k, k + 1)
    residual = anchor_total - offset_sum
    if _is_floatish(residual):
        x = residual / (n // 2 - 1)
        t = np.zeros((n, n), dtype=np.float64)
    else:
        x = Fraction(residual, n // 2 - 1)
        t = np.empty((n, n), dtype=object)
        t[:, :] = Fraction(0)
    for i in range(2, n):
        for j in range(i + 1, n + 1):
            value = x + offset(i, j)
            t[i - 1][j - 1] = value
            t[j - 1][i - 1] = value
    return TildeMatrix(n=n, t=t), spent
