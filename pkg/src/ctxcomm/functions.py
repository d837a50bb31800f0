"""Function families and the weighted distance between two of them.

Each family is a small frozen dataclass with a scalar ``__call__`` in its
native encoding (signs for the subset-majority family, bits elsewhere) and an
``on_batch`` method that evaluates a :class:`~ctxcomm.samplers.Batch` of bit
samples.  Bits enter sign-valued families through ``(-1) ** bit``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    ExperimentReport,
    IndexSubset,
    SubsetFamily,
    as_bits,
    as_blocks,
    as_signs,
    f2_inner,
    hamming_distance,
    sign,
    substream,
)
from .samplers import (
    DEFAULT_SUPPORT_BUDGET,
    ConditionedNoisy,
    KappaEpsilon,
    NoisyPairs,
    NuEpsilon,
    UniformPairs,
    iter_support,
    sample_batch,
)

MC_CHUNK = 2**13


class PromiseViolation(ValueError):
    """A partial function was evaluated outside its promise."""


class DomainMismatch(ValueError):
    """A function and a distribution disagree on the input shape."""


# ---------------------------------------------------------------------------
# scalar evaluators


def subset_majority(S: IndexSubset, X, Y) -> int:
    """Sign of sum_{i in S} X_i Y_i for sign vectors X, Y."""
    xs, ys = as_signs(X), as_signs(Y)
    if len(xs) != len(ys) or len(xs) != S.universe_size:
        raise ValueError("X, Y and S must share the universe size")
    if not S.indices:
        return 1
    idx = S.zero_based()
    return sign(int(np.dot(xs[idx].astype(np.int64), ys[idx])))


def xor_parity(S: IndexSubset, x, y) -> int:
    """<S, x xor y> over F2."""
    xb, yb = as_bits(x), as_bits(y)
    if len(xb) != len(yb):
        raise ValueError("length mismatch")
    return f2_inner(S, xb ^ yb)


def maj_subset_parity(T: SubsetFamily, x, y) -> int:
    """Sign(sum_i (-1)^{<T_i, x_i xor y_i>})."""
    xb, yb = as_blocks(x), as_blocks(y)
    ind = T.indicator()
    if xb.shape != yb.shape or xb.shape != ind.shape:
        raise ValueError(f"shape mismatch: {xb.shape}, {yb.shape}, family {ind.shape}")
    parities = ((xb ^ yb) & ind).sum(axis=1) & 1
    return sign(int((1 - 2 * parities.astype(np.int64)).sum()))


def hd_threshold(k: int, u, v) -> int:
    """1 iff the Hamming distance of u, v is at least floor(k/2)."""
    ub, vb = as_bits(u), as_bits(v)
    if len(ub) != k or len(vb) != k:
        raise ValueError("both strings must have length k")
    return int(hamming_distance(ub, vb) >= k // 2)


# ---------------------------------------------------------------------------
# families


def _x_width(dist) -> int | None:
    if isinstance(dist, UniformPairs):
        return dist.n
    if isinstance(dist, (NoisyPairs, NuEpsilon, KappaEpsilon, ConditionedNoisy)):
        return dist.k * dist.n
    return None


def _flat(a: np.ndarray) -> np.ndarray:
    return a.reshape(len(a), -1)


@dataclass(frozen=True)
class SubsetMajority:
    S: IndexSubset

    def __call__(self, X, Y) -> int:
        return subset_majority(self.S, X, Y)

    def validate(self, dist) -> None:
        if _x_width(dist) != self.S.universe_size:
            raise DomainMismatch(f"{self} needs inputs of width {self.S.universe_size}")

    def on_batch(self, batch) -> np.ndarray:
        d = _flat(batch.x) ^ _flat(batch.y)
        if not self.S.indices:
            return np.ones(len(d), dtype=np.uint8)
        minus = d[:, self.S.zero_based()].sum(axis=1, dtype=np.int64)
        return (len(self.S) - 2 * minus >= 0).astype(np.uint8)


@dataclass(frozen=True)
class XorParity:
    S: IndexSubset

    def __call__(self, x, y) -> int:
        return xor_parity(self.S, x, y)

    def validate(self, dist) -> None:
        if _x_width(dist) != self.S.universe_size:
            raise DomainMismatch(f"{self} needs inputs of width {self.S.universe_size}")

    def on_batch(self, batch) -> np.ndarray:
        d = _flat(batch.x) ^ _flat(batch.y)
        if not self.S.indices:
            return np.zeros(len(d), dtype=np.uint8)
        return (d[:, self.S.zero_based()].sum(axis=1) & 1).astype(np.uint8)


def _block_majority(parities: np.ndarray) -> np.ndarray:
    return ((1 - 2 * parities.astype(np.int64)).sum(axis=1) >= 0).astype(np.uint8)


@dataclass(frozen=True)
class MajOfSubsetParity:
    T: SubsetFamily

    def __call__(self, x, y) -> int:
        return maj_subset_parity(self.T, x, y)

    def validate(self, dist) -> None:
        shape = (getattr(dist, "k", None), getattr(dist, "n", None))
        if _x_width(dist) is None or isinstance(dist, UniformPairs) or shape != (
                self.T.block_count, self.T.block_size):
            raise DomainMismatch(f"{self} needs k={self.T.block_count}, n={self.T.block_size}")

    def on_batch(self, batch) -> np.ndarray:
        ind = self.T.indicator()
        par = ((batch.x ^ batch.y) & ind).sum(axis=2) & 1
        return _block_majority(par)


@dataclass(frozen=True)
class ComposedF:
    """F((S, x), (T, y)) = f_T(x, y), with T read from Bob's input."""

    def __call__(self, alice, bob) -> int:
        (_, x), (T, y) = alice, bob
        if not isinstance(T, SubsetFamily):
            T = SubsetFamily.from_indicator(T)
        return maj_subset_parity(T, x, y)

    def validate(self, dist) -> None:
        if not isinstance(dist, (NuEpsilon, KappaEpsilon)):
            raise DomainMismatch("ComposedF needs a distribution over ((S, x), (T, y))")

    def on_batch(self, batch) -> np.ndarray:
        par = ((batch.x ^ batch.y) & batch.t).sum(axis=2) & 1
        return _block_majority(par)


@dataclass(frozen=True)
class HammingThreshold:
    k: int

    def __call__(self, u, v) -> int:
        return hd_threshold(self.k, u, v)

    def validate(self, dist) -> None:
        if _x_width(dist) != self.k:
            raise DomainMismatch(f"{self} needs inputs of width {self.k}")

    def on_batch(self, batch) -> np.ndarray:
        d = (_flat(batch.x) != _flat(batch.y)).sum(axis=1)
        return (d >= self.k // 2).astype(np.uint8)


@dataclass(frozen=True)
class GapInnerProduct:
    """1 if the average agreement E_i[u_i v_i] is at least c, 0 if at most s."""

    c: float
    s: float
    d: int

    def __post_init__(self):
        if not -1 <= self.s < self.c <= 1:
            raise ValueError("GapInnerProduct needs -1 <= s < c <= 1")

    def _decide(self, mean: np.ndarray) -> np.ndarray:
        if np.any((mean < self.c) & (mean > self.s)):
            raise PromiseViolation("average agreement inside the gap (s, c)")
        return (mean >= self.c).astype(np.uint8)

    def __call__(self, u, v) -> int:
        us, vs = as_signs(u), as_signs(v)
        if len(us) != self.d or len(vs) != self.d:
            raise ValueError("vectors must have length d")
        return int(self._decide(np.array([np.mean(us * vs)]))[0])

    def validate(self, dist) -> None:
        if _x_width(dist) != self.d:
            raise DomainMismatch(f"{self} needs inputs of width {self.d}")

    def on_batch(self, batch) -> np.ndarray:
        d = _flat(batch.x) ^ _flat(batch.y)
        return self._decide(1.0 - 2.0 * d.mean(axis=1))


@dataclass(frozen=True)
class Constant:
    value: int

    def __call__(self, *_args) -> int:
        return self.value

    def validate(self, dist) -> None:
        return None

    def on_batch(self, batch) -> np.ndarray:
        n = len(next(a for a in batch if a is not None))
        return np.full(n, self.value, dtype=np.uint8)


FunctionSpec = Union[SubsetMajority, XorParity, MajOfSubsetParity, ComposedF,
                     HammingThreshold, GapInnerProduct, Constant]


# ---------------------------------------------------------------------------
# distances


def distance_exact(f, g, dist, budget: int = DEFAULT_SUPPORT_BUDGET) -> float:
    """Pr_{dist}[f != g] by full enumeration of the support."""
    f.validate(dist)
    g.validate(dist)
    if f == g:
        return 0.0
    parts = []
    for batch, p in iter_support(dist, budget):
        parts.append(float(p[f.on_batch(batch) != g.on_batch(batch)].sum()))
    return math.fsum(parts)


def _disagreements(f, g, dist, seed: int, chunk_index: int, size: int) -> int:
    batch = sample_batch(dist, size, substream(seed, chunk_index))
    return int(np.count_nonzero(f.on_batch(batch) != g.on_batch(batch)))


def distance_monte_carlo(f, g, dist, trials: int, seed: int, workers: int = 1,
                         chunk: int = MC_CHUNK) -> ExperimentReport:
    """Monte Carlo estimate of Pr_{dist}[f != g].

    Trials are split into fixed-size chunks, chunk i drawing from substream
    ``(seed, i)``; the reported counts do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    f.validate(dist)
    g.validate(dist)
    start = time.perf_counter()
    sizes = [min(chunk, trials - i) for i in range(0, trials, chunk)]
    if f == g:
        hits = 0
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda a: _disagreements(f, g, dist, seed, *a),
                                enumerate(sizes)))
    else:
        hits = sum(_disagreements(f, g, dist, seed, i, s) for i, s in enumerate(sizes))
    return ExperimentReport.from_counts(
        "distance", hits, trials, seed, wall_clock=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# the two families used in the experiments


def default_delta_prime(delta: float, alpha: float = 0.01) -> float:
    return alpha * delta * delta


def default_ell(delta_prime: float) -> int:
    """Smallest ell keeping the Gaussian-approximation error below the target gap."""
    return math.ceil(64.0 / delta_prime)


def subset_majority_pair(ell: int, removed: int, n: int | None = None):
    """(f_S, f_T) with T = {1..ell} and S = T minus its last ``removed`` elements."""
    n = ell if n is None else n
    if not 0 <= removed <= ell <= n:
        raise ValueError("need 0 <= removed <= ell <= n")
    T = IndexSubset(range(1, ell + 1), n)
    S = IndexSubset(range(1, ell - removed + 1), n)
    return SubsetMajority(S), SubsetMajority(T)


def subset_parity_pair(k: int, n: int, rng: np.random.Generator, size: int | None = None):
    """(f_S, f_T) with |S_i| = size (default n/2) and T_i = S_i plus one element."""
    size = n // 2 if size is None else size
    if not 0 <= size < n:
        raise ValueError("need 0 <= size < n")
    s_sets, t_sets = [], []
    for _ in range(k):
        chosen = rng.choice(n, size=size + 1, replace=False) + 1
        s_sets.append(sorted(chosen[:size].tolist()))
        t_sets.append(sorted(chosen.tolist()))
    return (MajOfSubsetParity(SubsetFamily(s_sets, n)),
            MajOfSubsetParity(SubsetFamily(t_sets, n)))


def block_correlation(S: SubsetFamily, T: SubsetFamily, eta: float) -> list[float]:
    """E[a_i b_i] = (1 - 2 eta)^{|S_i symmetric-difference T_i|} under eta-noisy pairs."""
    return [(1 - 2 * eta) ** len(set(s.indices) ^ set(t.indices)) for s, t in zip(S, T)]
