"""Numeric and bit-vector primitives shared by the rest of the package.

Conventions used everywhere:

* logarithms are base 2;
* ``sign`` maps a real to a bit, with ``sign(0) == 1`` (the single tie-break rule);
* bits and signs are related by ``sign_value = (-1) ** bit``;
* index sets are 1-based, matching ``[n] = {1, ..., n}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# rounding slack tolerated before an argument is declared out of [-1, 1]
CORRELATION_SLACK = 1e-9


class BudgetExceeded(RuntimeError):
    """An exact computation would exceed its configured enumeration budget."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class BitVector:
    """Fixed-length vector over {0, 1}."""

    bits: tuple[int, ...]

    def __init__(self, bits: Iterable[int] | str):
        if isinstance(bits, str):
            bits = [int(ch) for ch in bits]
        values = tuple(int(b) for b in np.asarray(bits).ravel())
        if not values:
            raise ValueError("BitVector must have positive length")
        if any(b not in (0, 1) for b in values):
            raise ValueError("BitVector entries must be 0 or 1")
        object.__setattr__(self, "bits", values)

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __xor__(self, other: "BitVector") -> "BitVector":
        _check_same_length(self, other)
        return BitVector([a ^ b for a, b in zip(self.bits, other.bits)])

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def packed(self) -> np.ndarray:
        """Word-packed view (big-endian bit order inside each byte)."""
        return np.packbits(self.array())

    def to_signs(self) -> "SignVector":
        return SignVector(bits_to_signs(self.array()))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class SignVector:
    """Fixed-length vector over {-1, +1}."""

    entries: tuple[int, ...]

    def __init__(self, entries: Iterable[int]):
        values = tuple(int(e) for e in np.asarray(entries).ravel())
        if not values:
            raise ValueError("SignVector must have positive length")
        if any(e not in (-1, 1) for e in values):
            raise ValueError("SignVector entries must be -1 or +1")
        object.__setattr__(self, "entries", values)

    @property
    def length(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int8)

    def to_bits(self) -> BitVector:
        return BitVector(signs_to_bits(self.array()))


@dataclass(frozen=True)
class IndexSubset:
    """A subset of ``[universe_size]`` stored as a strictly increasing tuple."""

    indices: tuple[int, ...]
    universe_size: int

    def __init__(self, indices: Iterable[int], universe_size: int):
        idx = tuple(int(i) for i in indices)
        if universe_size < 0:
            raise ValueError("universe_size must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 1 or idx[-1] > universe_size):
            raise ValueError(f"indices {idx} outside [1, {universe_size}]")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "universe_size", int(universe_size))

    @classmethod
    def from_indicator(cls, indicator: Sequence[int] | np.ndarray) -> "IndexSubset":
        ind = np.asarray(indicator).ravel()
        return cls((np.flatnonzero(ind) + 1).tolist(), len(ind))

    def indicator(self) -> np.ndarray:
        z = np.zeros(self.universe_size, dtype=np.uint8)
        if self.indices:
            z[np.array(self.indices) - 1] = 1
        return z

    def zero_based(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp) - 1

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in set(self.indices)

    def issubset(self, other: "IndexSubset") -> bool:
        return set(self.indices) <= set(other.indices)

    def __sub__(self, other: "IndexSubset") -> "IndexSubset":
        rest = sorted(set(self.indices) - set(other.indices))
        return IndexSubset(rest, self.universe_size)


@dataclass(frozen=True, order=True)
class SortedTuple:
    """Strictly increasing tuple of integers in ``[1, bound]``."""

    values: tuple[int, ...]
    bound: int

    def __init__(self, values: Iterable[int], bound: int):
        vals = tuple(int(v) for v in values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"tuple must be strictly increasing: {vals}")
        if vals and (vals[0] < 1 or vals[-1] > bound):
            raise ValueError(f"tuple {vals} outside [1, {bound}]")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "bound", int(bound))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def prefix(self) -> "SortedTuple":
        return SortedTuple(self.values[:-1], self.bound)

    def suffix(self) -> "SortedTuple":
        return SortedTuple(self.values[1:], self.bound)


@dataclass(frozen=True)
class SubsetFamily:
    """k subsets of ``[n]``, one per block."""

    subsets: tuple[IndexSubset, ...]
    block_size: int

    def __init__(self, subsets: Iterable[IndexSubset | Iterable[int]], block_size: int):
        subs = tuple(s if isinstance(s, IndexSubset) else IndexSubset(s, block_size)
                     for s in subsets)
        if not subs:
            raise ValueError("SubsetFamily needs at least one block")
        if any(s.universe_size != block_size for s in subs):
            raise ValueError("every subset must live in [block_size]")
        object.__setattr__(self, "subsets", subs)
        object.__setattr__(self, "block_size", int(block_size))

    @classmethod
    def from_indicator(cls, indicator) -> "SubsetFamily":
        ind = np.asarray(indicator)
        if ind.ndim != 2:
            raise ValueError("indicator must be a (k, n) array")
        return cls([IndexSubset.from_indicator(row) for row in ind], ind.shape[1])

    @property
    def block_count(self) -> int:
        return len(self.subsets)

    def indicator(self) -> np.ndarray:
        return np.stack([s.indicator() for s in self.subsets])

    def sizes(self) -> list[int]:
        return [len(s) for s in self.subsets]

    def __len__(self) -> int:
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)

    def __getitem__(self, i) -> IndexSubset:
        return self.subsets[i]


@dataclass(frozen=True)
class BitBlockString:
    """k blocks of n bits each."""

    blocks: tuple[BitVector, ...]

    def __init__(self, blocks):
        if isinstance(blocks, np.ndarray) and blocks.ndim == 2:
            blocks = [BitVector(row) for row in blocks]
        bl = tuple(b if isinstance(b, BitVector) else BitVector(b) for b in blocks)
        if not bl or len({len(b) for b in bl}) != 1:
            raise ValueError("BitBlockString needs k >= 1 blocks of identical length")
        object.__setattr__(self, "blocks", bl)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def block_size(self) -> int:
        return len(self.blocks[0])

    def array(self) -> np.ndarray:
        return np.array([b.bits for b in self.blocks], dtype=np.uint8)


def as_blocks(v) -> np.ndarray:
    if isinstance(v, BitBlockString):
        return v.array()
    arr = np.asarray(v, dtype=np.uint8)
    return arr


def as_family_indicator(f) -> np.ndarray:
    if isinstance(f, SubsetFamily):
        return f.indicator()
    return np.asarray(f, dtype=np.uint8)


def _check_same_length(u, v) -> None:
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} != {len(v)}")


# ---------------------------------------------------------------------------
# encodings


def bits_to_signs(bits) -> np.ndarray:
    """0 -> +1, 1 -> -1."""
    return (1 - 2 * np.asarray(bits, dtype=np.int8)).astype(np.int8)


def signs_to_bits(signs) -> np.ndarray:
    """+1 -> 0, -1 -> 1."""
    s = np.asarray(signs)
    if not np.all(np.abs(s) == 1):
        raise ValueError("sign vector entries must be +-1")
    return (s < 0).astype(np.uint8)


def as_bits(v) -> np.ndarray:
    if isinstance(v, BitVector):
        return v.array()
    arr = np.asarray(v, dtype=np.uint8)
    return arr


def as_signs(v) -> np.ndarray:
    if isinstance(v, SignVector):
        return v.array()
    arr = np.asarray(v)
    if arr.size and not np.all(np.abs(arr) == 1):
        raise ValueError("sign vector entries must be +-1")
    return arr.astype(np.int8)


# ---------------------------------------------------------------------------
# primitives


def sign(x: float) -> int:
    """1 if ``x >= 0`` else 0."""
    if not math.isfinite(x):
        raise ValueError("sign of a non-finite value")
    return 1 if x >= 0 else 0


def sign_array(x) -> np.ndarray:
    return (np.asarray(x) >= 0).astype(np.uint8)


def iterated_log(t: int, n: float) -> float:
    """``log^{(t)}(n)``: log2 applied t times, floored at 1 after the first."""
    if t < 1 or n < 1:
        raise ValueError("iterated_log needs t >= 1 and n >= 1")
    value = math.log2(n)
    for _ in range(t - 1):
        value = max(math.log2(value), 1.0) if value > 0 else 1.0
    return value


def hamming_distance(u, v) -> int:
    a, b = as_bits(u), as_bits(v)
    _check_same_length(a, b)
    return int(np.count_nonzero(a != b))


def f2_inner(s, w) -> int:
    """Parity of ``w`` restricted to ``s`` (an IndexSubset or an indicator)."""
    wb = as_bits(w)
    if isinstance(s, IndexSubset):
        if s.universe_size != len(wb):
            raise ValueError("subset universe does not match vector length")
        if not s.indices:
            return 0
        return int(wb[s.zero_based()].sum() & 1)
    ind = as_bits(s)
    _check_same_length(ind, wb)
    return int(np.bitwise_and(ind, wb).sum() & 1)


def _clamp_correlation(rho: float) -> float:
    if abs(rho) > 1 + CORRELATION_SLACK or math.isnan(rho):
        raise ValueError(f"correlation {rho} outside [-1, 1]")
    return min(1.0, max(-1.0, rho))


def sheppard(rho: float) -> float:
    """Sign-disagreement probability of rho-correlated zero-mean Gaussians."""
    return math.acos(_clamp_correlation(rho)) / math.pi


def majority_stability_bound(rho: float) -> float:
    return 1.0 - 2.0 * math.acos(_clamp_correlation(rho)) / math.pi


def hoeffding_trials(accuracy: float, failure_prob: float) -> int:
    """Smallest k with ``2 exp(-2 accuracy^2 k) <= failure_prob``."""
    if not 0 < accuracy < 1 or not 0 < failure_prob < 1:
        raise ValueError("accuracy and failure_prob must lie in (0, 1)")

    def ok(k: int) -> bool:
        return 2.0 * math.exp(-2.0 * accuracy**2 * k) <= failure_prob

    k = max(1, math.ceil(math.log(2.0 / failure_prob) / (2.0 * accuracy**2)))
    # repair floating-point error in the closed form
    while not ok(k):
        k += 1
    while k > 1 and ok(k - 1):
        k -= 1
    return k


# ---------------------------------------------------------------------------
# randomness


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, keys)``.

    Streams are derived by hashing the key path, so no state is shared between
    workers and the result does not depend on evaluation order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def random_bits(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform {0,1} array of the given shape (uint8)."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    total = int(np.prod(shape)) if shape else 1
    raw = np.frombuffer(rng.bytes((total + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw, count=total).reshape(shape)


def bernoulli_bits(rng: np.random.Generator, p: float, shape) -> np.ndarray:
    """Independent bits equal to 1 with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability outside [0, 1]")
    if p == 0.0:
        return np.zeros(shape, dtype=np.uint8)
    if p == 1.0:
        return np.ones(shape, dtype=np.uint8)
    if p == 0.5:
        return random_bits(rng, shape)
    return (rng.random(shape) < p).astype(np.uint8)


# ---------------------------------------------------------------------------
# reporting


@dataclass
class ExperimentReport:
    """Point estimate with standard error and a 95% normal interval."""

    experiment_id: str
    trials: int
    estimate: float
    stderr: float
    seed: int
    params: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.959963984540054 * self.stderr
        return (self.estimate - half, self.estimate + half)

    @classmethod
    def from_counts(cls, experiment_id: str, successes: int, trials: int, seed: int,
                    params: dict | None = None, **kw) -> "ExperimentReport":
        if trials < 1:
            raise ValueError("trials must be positive")
        p = successes / trials
        se = math.sqrt(p * (1 - p) / trials)
        return cls(experiment_id, trials, p, se, seed, dict(params or {}), **kw)

    @classmethod
    def from_mean(cls, experiment_id: str, total: float, total_sq: float, trials: int,
                  seed: int, params: dict | None = None, **kw) -> "ExperimentReport":
        mean = total / trials
        var = max(total_sq / trials - mean * mean, 0.0)
        se = math.sqrt(var / trials) if trials > 1 else 0.0
        return cls(experiment_id, trials, mean, se, seed, dict(params or {}), **kw)

    def within(self, target: float, n_stderr: float, allowance: float = 0.0) -> bool:
        return abs(self.estimate - target) <= n_stderr * self.stderr + allowance

    def as_row(self) -> dict:
        lo, hi = self.ci95
        row = {"experiment_id": self.experiment_id}
        row.update({k: self.params[k] for k in sorted(self.params)})
        row.update(trials=self.trials, estimate=repr(float(self.estimate)),
                   stderr=repr(float(self.stderr)), ci95_lo=repr(float(lo)),
                   ci95_hi=repr(float(hi)), seed=self.seed)
        return row
