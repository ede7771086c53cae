"""Sum-only observation interface over a hidden compatibility matrix.

The oracle is the only sanctioned way for the observation phase to touch an
instance: it answers total-compatibility queries for whole pairings, counts
every query, and never reveals individual entries. Counting includes
duplicate submissions; deduplication is deliberately left to callers so the
reconstruction algorithms own their own observation budgets.
"""

from __future__ import annotations

import threading
from typing import Optional

import numpy as np

from .core import Instance, Pairing, ValidationError


class ObservationOracle:
    """Counts total-compatibility queries against a hidden instance.

    The counter (and optional query log) is guarded by a lock so benchmark
    workers may share one oracle. An additive Gaussian noise hook exists for
    robustness experiments; it is off by default and every documented result
    here is noiseless.
    """

    def __init__(
        self,
        instance: Instance,
        *,
        log: bool = False,
        noise_sigma: float = 0.0,
        noise_seed: int = 0,
    ):
        self._hidden = instance
        self._rows = instance.c.tolist()  # plain lists make the hot loop cheap
        self._lock = threading.Lock()
        self._count = 0
        self._log: Optional[list[tuple[Pairing, float]]] = [] if log else None
        self._noise_sigma = noise_sigma
        self._noise_rng = np.random.Generator(np.random.PCG64(noise_seed))

    @property
    def n(self) -> int:
        """Element count of the hidden instance (not a secret)."""
        return self._hidden.n

    @property
    def query_count(self) -> int:
        with self._lock:
            return self._count

    @property
    def query_log(self) -> Optional[list[tuple[Pairing, float]]]:
        if self._log is None:
            return None
        with self._lock:
            return list(self._log)

    def observe(self, pairing: Pairing):
        """Total compatibility of `pairing`; increments the query counter.

        Invalid pairings raise before the counter moves.
        """
        if pairing.n != self._hidden.n:
            raise ValidationError(
                f"pairing covers {pairing.n} elements, oracle hides {self._hidden.n}"
            )
        rows = self._rows
        value = sum(rows[i - 1][j - 1] for i, j in pairing.pairs)
        if self._noise_sigma > 0.0:
            value = value + self._noise_rng.normal(0.0, self._noise_sigma)
        with self._lock:
            self._count += 1
            if self._log is not None:
                self._log.append((pairing, value))
        return value

    def reset(self) -> None:
        """Zero the counter and clear the log."""
        with self._lock:
            self._count = 0
            if self._log is not None:
                self._log.clear()
