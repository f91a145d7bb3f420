"""Types, type classes and multinomial arithmetic.

Types are stored non-normalized (integer occupation counts summing to N).
Every module indexes type-basis vectors with the order produced by
:func:`type_table`: ascending lexicographic order of the count vectors, so
for ``d = 2`` the index of ``(k, N - k)`` is ``k``.

All combinatorial magnitudes are handled in the log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ResourceCapError, ValidationError

#: Default ceiling on the number of types any enumeration may produce.
TYPE_COUNT_CAP = 10**7


@dataclass(frozen=True)
class TypeVector:
    """Occupation counts of ``d`` letters over ``N`` positions."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValidationError(f"negative count in type {self.counts}")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def d(self) -> int:
        return len(self.counts)

    def normalized(self) -> np.ndarray:
        n = self.N
        if n == 0:
            raise ValidationError("the empty type has no normalized view")
        return np.asarray(self.counts, dtype=float) / n

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, j):
        return self.counts[j]


def prob_vector(entries: Sequence[float], atol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector and return it as an array."""
    r = np.asarray(entries, dtype=float)
    if r.ndim != 1 or np.any(r < -atol) or abs(r.sum() - 1.0) > atol:
        raise ValidationError(f"not a probability vector: {entries!r}")
    return np.clip(r, 0.0, 1.0)


def num_types(N: int, d: int) -> int:
    """binom(N + d - 1, d - 1)."""
    if d < 1 or N < 0:
        raise ValidationError("need N >= 0 and d >= 1")
    return math.comb(N + d - 1, d - 1)


def _check_cap(N: int, d: int, cap: int | None) -> int:
    t = num_types(N, d)
    cap = TYPE_COUNT_CAP if cap is None else cap
    if t > cap:
        raise ResourceCapError(f"{t} types for N={N}, d={d} exceeds cap {cap}")
    return t


def _compositions(N: int, d: int) -> np.ndarray:
    if d == 1:
        return np.array([[N]], dtype=np.int64)
    blocks = []
    for first in range(N + 1):
        rest = _compositions(N - first, d - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


@lru_cache(maxsize=64)
def _type_table_cached(N: int, d: int) -> np.ndarray:
    if d == 2:
        k = np.arange(N + 1, dtype=np.int64)
        table = np.column_stack([k, N - k])
    else:
        table = _compositions(N, d)
    table.setflags(write=False)
    return table


def type_table(N: int, d: int, cap: int | None = None) -> np.ndarray:
    """All types of ``N`` over ``d`` letters as a read-only ``(T, d)`` int array."""
    _check_cap(N, d, cap)
    return _type_table_cached(N, d)


def enumerate_types(N: int, d: int, cap: int | None = None) -> list[TypeVector]:
    """All compositions of ``N`` into ``d`` parts in canonical order."""
    return [TypeVector(tuple(row)) for row in type_table(N, d, cap).tolist()]


def type_index(types: np.ndarray, N: int) -> np.ndarray:
    """Canonical index of each row of ``types`` (shape ``(..., d)``) among types of ``N``."""
    types = np.asarray(types, dtype=np.int64)
    d = types.shape[-1]
    if d == 1:
        return np.zeros(types.shape[:-1], dtype=np.int64)
    idx = np.zeros(types.shape[:-1], dtype=np.int64)
    rem = np.full(types.shape[:-1], N, dtype=np.int64)
    for j in range(d - 1):
        parts = d - j - 1  # letters after position j
        v = types[..., j]
        # number of compositions of (rem - u) into `parts` pieces, summed for u < v
        # sum_{u<v} C(rem-u+parts-1, parts-1) = C(rem+parts, parts) - C(rem-v+parts, parts)
        idx += _comb(rem + parts, parts) - _comb(rem - v + parts, parts)
        rem = rem - v
    return idx


def _comb(n: np.ndarray, k: int) -> np.ndarray:
    n = np.asarray(n, dtype=np.int64)
    out = np.ones_like(n)
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return np.where(n >= k, out, 0)


def type_of_string(X: str | Sequence, alphabet: Sequence) -> TypeVector:
    """Letter counts of ``X`` in the order of ``alphabet``."""
    pos = {a: j for j, a in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for ch in X:
        if ch not in pos:
            raise ValidationError(f"letter {ch!r} not in alphabet {list(alphabet)!r}")
        counts[pos[ch]] += 1
    return TypeVector(tuple(counts))


def type_class(L: TypeVector, alphabet: Sequence[str]) -> list[str]:
    """Explicit members of a type class. Exponential; for small examples only."""
    from itertools import permutations

    letters = "".join(a * c for a, c in zip(alphabet, L.counts))
    return sorted(set("".join(p) for p in permutations(letters)))


def log_type_class_size(L: TypeVector | Sequence[int] | np.ndarray) -> float | np.ndarray:
    """``ln(N! / prod_j L_j!)``; vectorized over leading axes for arrays."""
    counts = np.asarray(L.counts if isinstance(L, TypeVector) else L, dtype=float)
    n = counts.sum(axis=-1)
    out = gammaln(n + 1) - gammaln(counts + 1).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def log_multinomial_pmf(L, R) -> float | np.ndarray:
    """Log of the multinomial probability; ``-inf`` where ``R_j = 0 < L_j``."""
    counts = np.asarray(L.counts if isinstance(L, TypeVector) else L, dtype=float)
    R = np.asarray(R, dtype=float)
    if counts.shape[-1] != R.shape[-1]:
        raise ValidationError("type and distribution dimensions differ")
    with np.errstate(divide="ignore"):
        logs = xlogy(counts, R)
    out = log_type_class_size(counts) + logs.sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def multinomial_pmf(L, R) -> float | np.ndarray:
    """``|T[L]| prod_j R_j^{L_j}`` evaluated through the log domain."""
    return np.exp(log_multinomial_pmf(L, R))


def multinomial_table(N: int, R: Sequence[float], cap: int | None = None) -> np.ndarray:
    """Multinomial pmf over every type of ``N`` in canonical order."""
    R = np.asarray(R, dtype=float)
    return np.exp(log_multinomial_pmf(type_table(N, len(R), cap), R))


def typical_sequence_bound(N: int, d: int, eps: float) -> float:
    """Upper bound on ``P(||L - R||_1^2 > eps)`` for ``N`` iid letters, clamped to [0, 1]."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if N == 0:
        return 1.0
    exponent = -N * (eps / 2 - d * math.log(N + 1) / N)
    return 1.0 if exponent >= 0 else math.exp(exponent)


def l1_distance(a, b) -> float | np.ndarray:
    return np.abs(np.asarray(a, float) - np.asarray(b, float)).sum(axis=-1)


def l2_distance(a, b) -> float | np.ndarray:
    return np.sqrt(((np.asarray(a, float) - np.asarray(b, float)) ** 2).sum(axis=-1))
