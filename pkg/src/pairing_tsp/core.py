"""Domain types for the pairing problem: instances, pairings, exact scoring.

Elements are numbered 1..N (N even) in all public interfaces; internal numpy
indexing is 0-based and never leaks out. A pairing is a partition of {1..N}
into N/2 unordered pairs, and its score is the sum of the matrix entries it
selects. The exact enumeration oracle walks all (N-1)!! pairings and is the
ground truth every heuristic is measured against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

#: Largest N the enumeration oracle accepts unless the caller raises the cap.
DEFAULT_ENUMERATION_CAP = 12


class ValidationError(ValueError):
    """Input violates a documented precondition (bad pairing, bad file, ...)."""


class InternalError(RuntimeError):
    """A self-check inside the library failed; never caused by user input."""


def double_factorial(n: int) -> int:
    """Product n * (n-2) * (n-4) * ...; by convention (-1)!! = 0!! = 1."""
    result = 1
    while n > 1:
        result *= n
        n -= 2
    return result


def pairing_count(n: int) -> int:
    """Number of distinct pairings of n elements, i.e. (n-1)!!."""
    if n % 2 != 0:
        raise ValidationError(f"element count must be even, got {n}")
    return double_factorial(n - 1)


@dataclass(frozen=True)
class Pairing:
    """A partition of {1..n} into unordered pairs, held in canonical form.

    Canonical form means i < j inside each pair and pairs sorted by their
    first element, so equality and hashing work structurally. Construction
    validates disjointness and full coverage and names the offending element
    on failure.
    """

    pairs: tuple[tuple[int, int], ...]

    def __init__(self, pairs: Iterable[Iterable[int]]):
        canonical = []
        for p in pairs:
            t = tuple(p)
            if len(t) != 2:
                raise ValidationError(f"pair {t} does not contain exactly two elements")
            for e in t:
                if not isinstance(e, (int, np.integer)):
                    raise ValidationError(f"element {e!r} is not an integer")
            a, b = sorted(int(e) for e in t)
            if a == b:
                raise ValidationError(f"element {a} is paired with itself")
            canonical.append((a, b))
        object.__setattr__(self, "pairs", tuple(sorted(canonical)))
        self._validate()

    def _validate(self) -> None:
        n = 2 * len(self.pairs)
        if n == 0:
            raise ValidationError("a pairing must contain at least one pair")
        seen = [False] * (n + 1)
        for p in self.pairs:
            for e in p:
                if not 1 <= e <= n:
                    raise ValidationError(
                        f"element {e} is outside 1..{n} for a pairing of {n // 2} pairs"
                    )
                if seen[e]:
                    raise ValidationError(f"element {e} appears in more than one pair")
                seen[e] = True
        # full coverage follows: n slots, n distinct in-range elements

    @classmethod
    def from_permutation(cls, order: Iterable[int]) -> "Pairing":
        """Pair consecutive entries of a permutation of 1..n."""
        seq = list(order)
        if len(seq) % 2 != 0:
            raise ValidationError(f"permutation length {len(seq)} is odd")
        return cls(zip(seq[0::2], seq[1::2]))

    @classmethod
    def _from_canonical(cls, pairs: tuple[tuple[int, int], ...]) -> "Pairing":
        # trusted fast path for internally generated canonical pairs; the
        # observation loop constructs tens of thousands of these
        self = object.__new__(cls)
        object.__setattr__(self, "pairs", pairs)
        return self

    @property
    def n(self) -> int:
        return 2 * len(self.pairs)

    @cached_property
    def _index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        # 0-based gather indices, cached because pairings are immutable
        m = len(self.pairs)
        rows = np.fromiter((p[0] - 1 for p in self.pairs), dtype=np.intp, count=m)
        cols = np.fromiter((p[1] - 1 for p in self.pairs), dtype=np.intp, count=m)
        return rows, cols

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{{{i},{j}}}" for i, j in self.pairs) + "}"


def pairing_sum(matrix: np.ndarray, pairing: Pairing):
    """Sum of matrix[i][j] over the pairing's pairs (matrix is 0-based, full)."""
    if matrix.shape[0] != pairing.n:
        raise ValidationError(
            f"pairing covers {pairing.n} elements but matrix is "
            f"{matrix.shape[0]}x{matrix.shape[1]}"
        )
    if matrix.dtype == object:
        total = matrix[pairing.pairs[0][0] - 1][pairing.pairs[0][1] - 1]
        for i, j in pairing.pairs[1:]:
            total = total + matrix[i - 1][j - 1]
        return total
    rows, cols = pairing._index_arrays
    return float(matrix[rows, cols].sum())


def _check_symmetric_bounded(c: np.ndarray, n: int, c_min, c_max) -> None:
    if c.dtype == object:
        for i in range(n):
            for j in range(i + 1, n):
                if c[i][j] != c[j][i]:
                    raise ValidationError(f"matrix is not symmetric at c[{i + 1}][{j + 1}]")
                if not c_min <= c[i][j] <= c_max:
                    raise ValidationError(
                        f"c[{i + 1}][{j + 1}]={c[i][j]} is outside [{c_min}, {c_max}]"
                    )
        return
    mism = np.argwhere(c != c.T)
    if len(mism):
        i, j = mism[0]
        raise ValidationError(f"matrix is not symmetric at c[{i + 1}][{j + 1}]")
    iu, ju = np.triu_indices(n, k=1)
    vals = c[iu, ju]
    bad = np.flatnonzero((vals < c_min) | (vals > c_max))
    if len(bad):
        k = bad[0]
        raise ValidationError(
            f"c[{iu[k] + 1}][{ju[k] + 1}]={vals[k]} is outside [{c_min}, {c_max}]"
        )


@dataclass(frozen=True)
class Instance:
    """A hidden symmetric compatibility matrix with declared value bounds.

    The diagonal is stored but never read; loaders accept any diagonal value.
    Entries are floats by default; an object array of ints / fractions keeps
    everything exact for the rational arithmetic mode used by the test suite.
    """

    n: int
    c: np.ndarray
    c_min: float
    c_max: float

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 4:
            raise ValidationError(f"element count must be even and >= 4, got {self.n}")
        c = np.asarray(self.c)
        if c.shape != (self.n, self.n):
            raise ValidationError(f"matrix shape {c.shape} does not match n={self.n}")
        if self.c_min > self.c_max:
            raise ValidationError(f"c_min={self.c_min} exceeds c_max={self.c_max}")
        if c.dtype != object:
            c = c.astype(np.float64, copy=True)
        _check_symmetric_bounded(c, self.n, self.c_min, self.c_max)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def value(self, i: int, j: int):
        """Compatibility of elements i and j (1-based, i != j)."""
        if i == j:
            raise ValidationError("the diagonal carries no compatibility value")
        return self.c[i - 1][j - 1]


def total_compatibility(instance: Instance, pairing: Pairing):
    """Total compatibility of a pairing: the sum of its N/2 selected entries."""
    return pairing_sum(instance.c, pairing)


def enumerate_pairings(n: int, *, max_n: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Pairing]:
    """Yield every pairing of 1..n exactly once, in lexicographic order.

    The smallest unpaired element is always matched first, with partners in
    ascending order, which makes the stream lexicographic on canonical forms.
    Refuses n above `max_n` (pass a bigger cap explicitly to override): the
    stream has (n-1)!! entries and grows double-factorially.
    """
    if n % 2 != 0 or n < 2:
        raise ValidationError(f"element count must be even and >= 2, got {n}")
    if n > max_n:
        raise ValidationError(
            f"enumerating {n} elements means {pairing_count(n)} pairings; "
            f"pass max_n={n} explicitly to allow it"
        )

    def recurse(remaining: list[int], acc: list[tuple[int, int]]) -> Iterator[Pairing]:
        if not remaining:
            # acc is canonical by construction: ascending first elements
            yield Pairing._from_canonical(tuple(acc))
            return
        first = remaining[0]
        for idx in range(1, len(remaining)):
            acc.append((first, remaining[idx]))
            yield from recurse(remaining[1:idx] + remaining[idx + 1 :], acc)
            acc.pop()

    yield from recurse(list(range(1, n + 1)), [])


def exact_best_pairing(
    instance: Instance, *, max_n: int = DEFAULT_ENUMERATION_CAP
) -> tuple[Pairing, float]:
    """Argmax pairing by full enumeration; ties go to the canonically smallest.

    Comparison is exact on the stored representation, so integer and rational
    instances break ties deterministically.
    """
    best_pairing = None
    best_score = None
    for pairing in enumerate_pairings(instance.n, max_n=max_n):
        score = total_compatibility(instance, pairing)
        if best_score is None or score > best_score:
            best_pairing, best_score = pairing, score
    assert best_pairing is not None
    return best_pairing, best_score


# ---------------------------------------------------------------------------
# Instance files.
#
# Text format: header line "N C_MIN C_MAX", then the strict upper triangle of
# the matrix row by row (row i contributes N-i values), whitespace-separated.
# JSON format: {"n": ..., "c_min": ..., "c_max": ..., "upper_triangle": [...]}
# with the same row-by-row flattening.
# ---------------------------------------------------------------------------


def _instance_from_upper(n: int, c_min: float, c_max: float, values: list[float]) -> Instance:
    if n % 2 != 0 or n < 4:
        raise ValidationError(f"element count must be even and >= 4, got {n}")
    expected = n * (n - 1) // 2
    if len(values) != expected:
        raise ValidationError(
            f"expected {expected} upper-triangle values for n={n}, got {len(values)}"
        )
    c = np.zeros((n, n), dtype=np.float64)
    iu, ju = np.triu_indices(n, k=1)
    c[iu, ju] = values
    c[ju, iu] = values
    return Instance(n=n, c=c, c_min=c_min, c_max=c_max)


def loads_instance_text(text: str) -> Instance:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValidationError("instance text needs a 'N C_MIN C_MAX' header")
    try:
        n = int(tokens[0])
        c_min, c_max = float(tokens[1]), float(tokens[2])
        values = [float(t) for t in tokens[3:]]
    except ValueError as exc:
        raise ValidationError(f"malformed number in instance file: {exc}") from exc
    return _instance_from_upper(n, c_min, c_max, values)


def loads_instance_json(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed instance JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("instance JSON must be an object")
    for key in ("n", "c_min", "c_max", "upper_triangle"):
        if key not in data:
            raise ValidationError(f"instance JSON is missing field '{key}'")
    return _instance_from_upper(
        int(data["n"]),
        float(data["c_min"]),
        float(data["c_max"]),
        [float(v) for v in data["upper_triangle"]],
    )


def load_instance(path: str | Path) -> Instance:
    """Load an instance file, sniffing JSON vs text from the content."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return loads_instance_json(text)
    return loads_instance_text(text)


def dumps_instance_text(instance: Instance) -> str:
    lines = [f"{instance.n} {float(instance.c_min)!r} {float(instance.c_max)!r}"]
    for i in range(instance.n):
        row = instance.c[i, i + 1 :]
        if len(row):
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def instance_to_json_dict(instance: Instance) -> dict:
    upper: list[float] = []
    for i in range(instance.n):
        upper.extend(float(v) for v in instance.c[i, i + 1 :])
    return {
        "n": instance.n,
        "c_min": float(instance.c_min),
        "c_max": float(instance.c_max),
        "upper_triangle": upper,
    }


def dumps_instance_json(instance: Instance) -> str:
    return json.dumps(instance_to_json_dict(instance), sort_keys=True, indent=2) + "\n"
