"""Minimum-size observation schedules and their execution.

(N-1)(N-2)/2 well-chosen pairings suffice to pin down the shadow matrix, and
no smaller schedule can. The schedule built here is inductive: the three
pairings of {1..4} seed the base, and each level l = 6, 8, ..., N adds, on
top of an ascending-adjacent tail of higher pairs,

    Y_a = {1,l}, {a,l-1} plus the ascending completion of {2..l-2} minus a,
    Z_a = {1,l-1}, {a,l} plus the same completion,
    T   = {1,2}, {3,l-1}, {4,l} plus the ascending completion of {5..l-2}.

Every shadow entry except the per-level unknowns u_l (the (l-1, l) entries)
is owned by exactly one Y or Z observation, which makes recovery a single
bottom-up sweep of affine forms in the u_l plus one small exact solve of the
T equations. That sweep is literally a block-triangular Gaussian elimination
of the full observation matrix, so its success certifies full rank in exact
arithmetic; a vanishing pivot raises, never passes silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import InternalError, Pairing, ValidationError
from .oracle import ObservationOracle
from .observation import TildeMatrix, _is_floatish


class PlanRankError(InternalError):
    """The planned observations do not determine every shadow entry."""


def plan_size(n: int) -> int:
    """Minimum number of observations for n elements: (n-1)(n-2)/2."""
    return (n - 1) * (n - 2) // 2


def _ascending_pairs(elements) -> list[tuple[int, int]]:
    e = sorted(elements)
    return [(e[k], e[k + 1]) for k in range(0, len(e), 2)]


def _plan_pairings(n: int) -> list[Pairing]:
    def tail(level: int) -> list[tuple[int, int]]:
        return [(k, k + 1) for k in range(level + 1, n, 2)]

    out = [
        Pairing([(1, 2), (3, 4)] + tail(4)),
        Pairing([(1, 3), (2, 4)] + tail(4)),
        Pairing([(1, 4), (2, 3)] + tail(4)),
    ]
    for level in range(6, n + 1, 2):
        lower = set(range(2, level - 1))
        for a in range(2, level - 1):
            rest = _ascending_pairs(lower - {a})
            out.append(Pairing([(1, level), (a, level - 1)] + rest + tail(level)))
        for a in range(2, level - 1):
            rest = _ascending_pairs(lower - {a})
            out.append(Pairing([(1, level - 1), (a, level)] + rest + tail(level)))
        out.append(
            Pairing([(1, 2), (3, level - 1), (4, level)] + _ascending_pairs(range(5, level - 1)) + tail(level))
        )
    return out


class _Affine:
    """const + sum(coef[l] * u_l) with exact rational coefficients."""

    __slots__ = ("const", "coefs")

    def __init__(self, const, coefs: dict[int, Fraction] | None = None):
        self.const = const
        self.coefs = coefs or {}

    def __add__(self, other: "_Affine") -> "_Affine":
        coefs = dict(self.coefs)
        for k, v in other.coefs.items():
            coefs[k] = coefs.get(k, Fraction(0)) + v
        return _Affine(self.const + other.const, coefs)

    def __sub__(self, other: "_Affine") -> "_Affine":
        coefs = dict(self.coefs)
        for k, v in other.coefs.items():
            coefs[k] = coefs.get(k, Fraction(0)) - v
        return _Affine(self.const - other.const, coefs)

    def resolve(self, u_values: dict[int, object]):
        value = self.const
        for k, coef in self.coefs.items():
            if coef:
                value = value + coef * u_values[k]
        return value


class _LinearForm:
    """Sparse rational combination of observation slots, used symbolically."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = terms or {}

    @classmethod
    def unit(cls, index: int) -> "_LinearForm":
        return cls({index: Fraction(1)})

    def _merge(self, other: "_LinearForm", sign: int) -> "_LinearForm":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            nv = terms.get(k, Fraction(0)) + sign * v
            if nv:
                terms[k] = nv
            else:
                terms.pop(k, None)
        return _LinearForm(terms)

    def __add__(self, other):
        return self._merge(other, 1)

    def __sub__(self, other):
        return self._merge(other, -1)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        if not scalar:
            return _LinearForm({})
        return _LinearForm({k: v * scalar for k, v in self.terms.items()})

    __rmul__ = __mul__

    def evaluate(self, values: Sequence):
        total = 0
        for k, coef in self.terms.items():
            total = total + coef * values[k]
        return total


def _recover_entries(n: int, values: Sequence, zero) -> dict[tuple[int, int], object]:
    """Solve the plan's observation system for every shadow entry.

    `values` is parallel to `_plan_pairings(n)`; `zero` is the additive
    identity of their type (0.0, Fraction(0), or an empty symbolic form).
    Raises PlanRankError when the T equations are singular.
    """
    levels = list(range(6, n + 1, 2))

    def tau(level: int) -> _Affine:
        return _Affine(zero, {k: Fraction(1) for k in levels if k > level})

    forms: dict[tuple[int, int], _Affine] = {}
    forms[(3, 4)] = _Affine(values[0]) - tau(4)
    forms[(2, 4)] = _Affine(values[1]) - tau(4)
    forms[(2, 3)] = _Affine(values[2]) - tau(4)

    def form_of(pair: tuple[int, int]) -> _Affine:
        if pair in forms:
            return forms[pair]
        x, y = pair
        if x == y - 1 and y in levels:
            return _Affine(zero, {y: Fraction(1)})
        raise InternalError(f"entry {pair} referenced before it was resolved")

    idx = 3
    equations: list[_Affine] = []
    for level in levels:
        lower = set(range(2, level - 1))
        # Y rows own entry (a, level-1); Z rows own entry (a, level).
        for owner_hi in (level - 1, level):
            for a in range(2, level - 1):
                rest = _Affine(zero)
                for p in _ascending_pairs(lower - {a}):
                    rest = rest + form_of(p)
                coord = (a, owner_hi)
                if coord in forms:
                    raise InternalError(f"entry {coord} resolved twice")
                forms[coord] = _Affine(values[idx]) - rest - tau(level)
                idx += 1
        residual = forms[(3, level - 1)] + forms[(4, level)] + tau(level) - _Affine(values[idx])
        for p in _ascending_pairs(range(5, level - 1)):
            residual = residual + form_of(p)
        equations.append(residual)
        idx += 1
    if idx != len(values):
        raise InternalError(f"consumed {idx} of {len(values)} observations")

    # Solve the T equations (one per level) for the u_l by exact elimination
    # on the rational coefficients; right-hand sides stay in the value type.
    rows = [[eq.coefs.get(k, Fraction(0)) for k in levels] for eq in equations]
    rhs = [zero - eq.const for eq in equations]
    m = len(levels)
    for col in range(m):
        pivot = next((r for r in range(col, m) if rows[r][col] != 0), None)
        if pivot is None:
            raise PlanRankError(
                f"observation plan for n={n} is rank deficient at level {levels[col]}"
            )
        rows[col], rows[pivot] = rows[pivot], rows[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        inv = Fraction(1) / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        rhs[col] = inv * rhs[col]
        for r in range(m):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
                rhs[r] = rhs[r] - factor * rhs[col]
    u_values = {level: rhs[k] for k, level in enumerate(levels)}

    entries: dict[tuple[int, int], object] = {}
    for level in levels:
        entries[(level - 1, level)] = u_values[level]
    for coord, form in forms.items():
        entries[coord] = form.resolve(u_values)
    return entries


@dataclass(frozen=True)
class ObservationPlan:
    """A minimum-size observation schedule with its recovery recipe.

    `pairings` is the exact submission order. `derivations` (computed on
    first access) expresses every exchange-rule value of the reconstruction
    procedure, and the anchor total, as a signed rational combination of the
    planned observations.
    """

    n: int
    pairings: tuple[Pairing, ...]

    @property
    def size(self) -> int:
        return len(self.pairings)

    @cached_property
    def derivations(self) -> dict[str, tuple[tuple[Fraction, int], ...]]:
        symbols = [_LinearForm.unit(i) for i in range(len(self.pairings))]
        entries = _recover_entries(self.n, symbols, _LinearForm({}))

        def combo(form: _LinearForm) -> tuple[tuple[Fraction, int], ...]:
            return tuple((coef, idx) for idx, coef in sorted(form.terms.items()))

        out: dict[str, tuple[tuple[Fraction, int], ...]] = {
            # the anchor pairing is scheduled first, so its total is direct
            "anchor": ((Fraction(1), 0),),
        }
        for j in range(4, self.n + 1):
            out[f"[1,{j},3,2]"] = combo(entries[(2, j)] - entries[(2, 3)])
        for j in range(4, self.n + 1):
            for i in range(3, j):
                out[f"[1,{i},2,{j}]"] = combo(entries[(i, j)] - entries[(2, j)])
        return out


def minimal_observation_plan(n: int) -> ObservationPlan:
    """Build and certify a schedule of exactly (n-1)(n-2)/2 observations.

    The certification runs the recovery sweep in exact arithmetic: it checks
    that every shadow entry is resolved exactly once and that the per-level
    equations are nonsingular, which together establish full rank of the
    observation vectors over the rationals.
    """
    if n % 2 != 0 or n < 4:
        raise ValidationError(f"element count must be even and >= 4, got {n}")
    pairings = _plan_pairings(n)
    expected = plan_size(n)
    if len(pairings) != expected or len(set(pairings)) != expected:
        raise PlanRankError(
            f"plan construction for n={n} produced {len(pairings)} pairings, "
            f"expected {expected} distinct"
        )
    _recover_entries(n, [Fraction(0)] * expected, Fraction(0))
    return ObservationPlan(n=n, pairings=tuple(pairings))


def execute_plan(oracle: ObservationOracle, plan: ObservationPlan) -> TildeMatrix:
    """Submit exactly the planned pairings and recover the shadow matrix."""
    if plan.n != oracle.n:
        raise ValidationError(f"plan is for n={plan.n} but oracle hides n={oracle.n}")
    values = [oracle.observe(p) for p in plan.pairings]
    if any(_is_floatish(v) for v in values):
        zero: object = 0.0
        t = np.zeros((plan.n, plan.n), dtype=np.float64)
    else:
        zero = Fraction(0)
        values = [Fraction(v) for v in values]
        t = np.empty((plan.n, plan.n), dtype=object)
        t[:, :] = Fraction(0)
    entries = _recover_entries(plan.n, values, zero)
    for (i, j), value in entries.items():
        t[i - 1][j - 1] = value
        t[j - 1][i - 1] = value
    return TildeMatrix(n=plan.n, t=t)
