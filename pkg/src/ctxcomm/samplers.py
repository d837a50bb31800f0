"""Input distributions and randomness sources.

Every distribution can be sampled (one draw or a vectorised batch) and, when
small, enumerated exactly.  Samples are :class:`Batch` tuples whose fields are
bit arrays; fields that a distribution does not produce are ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Union

import numpy as np
from scipy import stats

from .core import (
    BitVector,
    BudgetExceeded,
    SubsetFamily,
    as_bits,
    as_family_indicator,
    bernoulli_bits,
    random_bits,
    substream,
)

DEFAULT_SUPPORT_BUDGET = 2**26
CHUNK = 2**16


class Batch(NamedTuple):
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    s: np.ndarray | None = None
    t: np.ndarray | None = None

    def key(self) -> bytes:
        """Hashable encoding of a single (unbatched) sample."""
        parts = [np.asarray(a, dtype=np.uint8).ravel() for a in self if a is not None]
        return np.concatenate(parts).tobytes()


# ---------------------------------------------------------------------------
# distribution specs


def _check_rate(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _check_shape(**dims: int) -> None:
    for name, v in dims.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v}")


@dataclass(frozen=True)
class UniformPairs:
    """(x, y) uniform on {0,1}^n x {0,1}^n."""

    n: int

    def __post_init__(self):
        _check_shape(n=self.n)


@dataclass(frozen=True)
class NoisyPairs:
    """x uniform on {0,1}^{k x n}; y an eta-noisy copy of x."""

    k: int
    n: int
    eta: float

    def __post_init__(self):
        _check_shape(k=self.k, n=self.n)
        _check_rate("eta", self.eta)


@dataclass(frozen=True)
class SubsetNoise:
    """S uniform k-tuple of subsets of [n]; T a q-noisy copy of S."""

    k: int
    n: int
    q: float

    def __post_init__(self):
        _check_shape(k=self.k, n=self.n)
        _check_rate("q", self.q)


@dataclass(frozen=True)
class NuEpsilon:
    """Subset noise at rate eps, independent of noisy pairs at rate 2 eps - 2 eps^2."""

    k: int
    n: int
    eps: float

    def __post_init__(self):
        _check_shape(k=self.k, n=self.n)
        _check_rate("eps", self.eps)

    @property
    def pair_noise(self) -> float:
        return 2 * self.eps - 2 * self.eps * self.eps


@dataclass(frozen=True)
class KappaEpsilon:
    """Subset noise at rate eps, independent of noisy pairs at rate eps."""

    k: int
    n: int
    eps: float

    def __post_init__(self):
        _check_shape(k=self.k, n=self.n)
        _check_rate("eps", self.eps)

    @property
    def pair_noise(self) -> float:
        return self.eps


@dataclass(frozen=True)
class ConditionedNoisy:
    """(X, Y) noisy copies of a shared Z, each conditioned on uniform block parities."""

    t_hat: SubsetFamily
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("ConditionedNoisy needs eps in (0, 1)")
        if any(len(s) == 0 for s in self.t_hat):
            raise ValueError("ConditionedNoisy needs every block of T_hat nonempty")

    @property
    def k(self) -> int:
        return self.t_hat.block_count

    @property
    def n(self) -> int:
        return self.t_hat.block_size


DistributionSpec = Union[UniformPairs, NoisyPairs, SubsetNoise, NuEpsilon, KappaEpsilon,
                         ConditionedNoisy]

PRODUCT_KINDS = (UniformPairs,)


def noise_rate(dist) -> float | None:
    if isinstance(dist, NoisyPairs):
        return dist.eta
    if isinstance(dist, (NuEpsilon, KappaEpsilon)):
        return dist.pair_noise
    if isinstance(dist, UniformPairs):
        return 0.5
    return None


# ---------------------------------------------------------------------------
# randomness sources


@dataclass(frozen=True)
class Deterministic:
    kind: str = "deterministic"


@dataclass(frozen=True)
class Private:
    seed_a: int
    seed_b: int
    kind: str = "private"


@dataclass(frozen=True)
class Public:
    shared_seed: int
    kind: str = "public"


@dataclass(frozen=True)
class ISR:
    """Imperfectly shared randomness: Bob's bits are Alice's flipped w.p. (1 - rho)/2."""

    rho: float
    shared_seed: int
    kind: str = "isr"

    def __post_init__(self):
        _check_rate("rho", self.rho)


RandomnessSource = Union[Deterministic, Private, Public, ISR]

_FLIP_DIGITS = 32


@lru_cache(maxsize=None)
def _flip_digits(p: float) -> tuple[int, ...]:
    # nearest 32-digit binary fraction to p; the bias is below 2**-33
    scaled = int(round(p * 2**_FLIP_DIGITS))
    digits = [(scaled >> (_FLIP_DIGITS - 1 - i)) & 1 for i in range(_FLIP_DIGITS)]
    while digits and digits[-1] == 0:
        digits.pop()
    return tuple(digits)


def _random_words(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2**64 - 1, size=shape, dtype=np.uint64, endpoint=True)


def biased_words(rng: np.random.Generator, p: float, shape) -> np.ndarray:
    """uint64 words whose bits are independently 1 with probability ~p.

    Uses the binary expansion of p, one uniform word per digit, so p = 1/4
    costs two words and is exact.
    """
    digits = _flip_digits(p)
    if not digits:
        return np.zeros(shape, dtype=np.uint64)
    acc = None
    for bit in reversed(digits):
        r = _random_words(rng, shape)
        if acc is None:
            acc = r if bit else np.zeros(shape, dtype=np.uint64)
        elif bit:
            acc |= r
        else:
            acc &= r
    return acc


def isr_words(rho: float, shape, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Alice's and Bob's ISR streams as packed uint64 words."""
    _check_rate("rho", rho)
    alice = _random_words(rng, shape)
    flips = biased_words(rng, (1.0 - rho) / 2.0, shape)
    return alice, alice ^ flips


def _words_to_bits(words: np.ndarray, length: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:length]


def isr_streams(rho: float, length: int, shared_seed: int) -> tuple[BitVector, BitVector]:
    """``(r, r')`` with r uniform and each bit of r' flipped w.p. (1 - rho)/2."""
    nwords = (length + 63) // 64
    a, b = isr_words(rho, nwords, substream(shared_seed, 0))
    return BitVector(_words_to_bits(a, length)), BitVector(_words_to_bits(b, length))


# ---------------------------------------------------------------------------
# sampling


def noisy_copy(bits, eta: float, rng: np.random.Generator) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8)
    return b ^ bernoulli_bits(rng, eta, b.shape)


def sample_batch(dist, size: int, rng: np.random.Generator) -> Batch:
    """``size`` independent draws stacked along a leading axis."""
    if isinstance(dist, UniformPairs):
        xy = random_bits(rng, (size, 2, dist.n))
        return Batch(x=xy[:, 0], y=xy[:, 1])
    if isinstance(dist, NoisyPairs):
        x = random_bits(rng, (size, dist.k, dist.n))
        return Batch(x=x, y=noisy_copy(x, dist.eta, rng))
    if isinstance(dist, SubsetNoise):
        s = random_bits(rng, (size, dist.k, dist.n))
        return Batch(s=s, t=noisy_copy(s, dist.q, rng))
    if isinstance(dist, (NuEpsilon, KappaEpsilon)):
        s = random_bits(rng, (size, dist.k, dist.n))
        t = noisy_copy(s, dist.eps, rng)
        x = random_bits(rng, (size, dist.k, dist.n))
        return Batch(x=x, y=noisy_copy(x, dist.pair_noise, rng), s=s, t=t)
    if isinstance(dist, ConditionedNoisy):
        k = dist.k
        u = random_bits(rng, (size, k))
        v = random_bits(rng, (size, k))
        z = random_bits(rng, (size, k, dist.n))
        ind = dist.t_hat.indicator()
        x = _conditioned_batch(ind, dist.eps, z, u, rng)
        y = _conditioned_batch(ind, dist.eps, z, v, rng)
        return Batch(x=x, y=y)
    raise TypeError(f"unknown distribution {dist!r}")


def sample(dist, rng: np.random.Generator) -> Batch:
    """One draw from ``dist``."""
    b = sample_batch(dist, 1, rng)
    return Batch(*(None if a is None else a[0] for a in b))


def _conditioned_batch(ind: np.ndarray, eps: float, z: np.ndarray, target: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Per-block rejection: eps-noisy copies of z whose block parities equal target."""
    out = np.empty_like(z)
    pending = np.ones(target.shape, dtype=bool)
    while pending.any():
        rows, blocks = np.nonzero(pending)
        trial = z[rows, blocks] ^ bernoulli_bits(rng, eps, (len(rows), z.shape[-1]))
        parity = (trial & ind[blocks]).sum(axis=1) & 1
        ok = parity == target[rows, blocks]
        out[rows[ok], blocks[ok]] = trial[ok]
        pending[rows[ok], blocks[ok]] = False
    return out


def sample_conditioned(t_hat: SubsetFamily, eps: float, u, v, rng: np.random.Generator):
    """``(Z, X, Y)``: shared uniform Z, X and Y eps-noisy copies of Z with block
    parities over ``t_hat`` equal to ``u`` and ``v`` respectively."""
    ind = as_family_indicator(t_hat)
    ub, vb = as_bits(u), as_bits(v)
    k, n = ind.shape
    if len(ub) != k or len(vb) != k:
        raise ValueError("U and V must have one bit per block")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    z = random_bits(rng, (1, k, n))
    for target in (ub, vb):
        for i in range(k):
            if target[i] and not ind[i].any():
                raise ValueError(f"block {i} of T_hat is empty, so parity 1 is unsatisfiable")
            if eps in (0.0, 1.0):
                forced = (z[0, i] ^ int(eps)) & ind[i]
                if (forced.sum() & 1) != target[i]:
                    raise ValueError(f"parity condition on block {i} is unsatisfiable")
    x = _conditioned_batch(ind, eps, z, ub[None, :], rng)
    y = _conditioned_batch(ind, eps, z, vb[None, :], rng)
    return z[0], x[0], y[0]


def is_typical(t_hat) -> bool:
    """Every block size lies in [n/3, 2n/3]."""
    ind = as_family_indicator(t_hat)
    n = ind.shape[1]
    sizes = ind.sum(axis=1)
    return bool(np.all((3 * sizes >= n) & (3 * sizes <= 2 * n)))


def random_typical_family(k: int, n: int, rng: np.random.Generator,
                          max_attempts: int = 10_000) -> SubsetFamily:
    """Uniform subset family conditioned on being typical (by filtering)."""
    for _ in range(max_attempts):
        ind = random_bits(rng, (k, n))
        if is_typical(ind):
            return SubsetFamily.from_indicator(ind)
    raise RuntimeError("could not draw a typical family")


# ---------------------------------------------------------------------------
# exact enumeration


def _decode(idx: np.ndarray, nbits: int) -> np.ndarray:
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _noise_weight(a: np.ndarray, b: np.ndarray, rate: float) -> np.ndarray:
    """Pr[b | a] for b an independent rate-noisy copy of a (leading batch axis)."""
    m = a.reshape(len(a), -1).shape[1]
    d = (a != b).reshape(len(a), -1).sum(axis=1)
    return rate**d * (1.0 - rate) ** (m - d)


def support_size(dist) -> int:
    """Number of points the enumerator walks (zero-probability points included)."""
    if isinstance(dist, UniformPairs):
        return 4**dist.n
    if isinstance(dist, (NoisyPairs, SubsetNoise, ConditionedNoisy)):
        return 4 ** (dist.k * dist.n)
    if isinstance(dist, (NuEpsilon, KappaEpsilon)):
        return 16 ** (dist.k * dist.n)
    raise TypeError(f"unknown distribution {dist!r}")


def conditioned_block_table(block: np.ndarray, eps: float) -> np.ndarray:
    """Exact law of one block of ConditionedNoisy as a 2^n x 2^n matrix.

    ``P[x, y] = 2^-n / 4 * sum_z A[x, z] A[y, z]`` with
    ``A[x, z] = N_eps(z)(x) / Pr[parity of an eps-noisy copy of z = parity(x)]``.
    """
    block = np.asarray(block, dtype=np.uint8)
    n = len(block)
    pts = _decode(np.arange(2**n), n)
    dist = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
    noise = eps**dist * (1.0 - eps) ** (n - dist)
    par = (pts & block).sum(axis=1) & 1
    bias = (1.0 - 2.0 * eps) ** int(block.sum())
    agree = par[:, None] == par[None, :]
    p_match = np.where(agree, (1.0 + bias) / 2.0, (1.0 - bias) / 2.0)
    a = noise / p_match
    return (a @ a.T) / (4.0 * 2**n)


def iter_support(dist, budget: int = DEFAULT_SUPPORT_BUDGET,
                 chunk: int = CHUNK) -> Iterator[tuple[Batch, np.ndarray]]:
    """Chunks ``(batch, probabilities)`` covering the full support of ``dist``."""
    total = support_size(dist)
    if total > budget:
        raise BudgetExceeded(f"support of {dist!r} has {total} points > budget {budget}")
    tables = None
    if isinstance(dist, ConditionedNoisy):
        tables = [conditioned_block_table(b, dist.eps) for b in dist.t_hat.indicator()]
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield _decode_chunk(dist, idx, tables)


def _decode_chunk(dist, idx: np.ndarray, tables) -> tuple[Batch, np.ndarray]:
    if isinstance(dist, UniformPairs):
        bits = _decode(idx, 2 * dist.n)
        p = np.full(len(idx), 1.0 / 4**dist.n)
        return Batch(x=bits[:, : dist.n], y=bits[:, dist.n:]), p
    k, n = dist.k, dist.n
    m = k * n
    if isinstance(dist, (NoisyPairs, SubsetNoise)):
        bits = _decode(idx, 2 * m)
        a = bits[:, :m].reshape(-1, k, n)
        b = bits[:, m:].reshape(-1, k, n)
        rate = dist.eta if isinstance(dist, NoisyPairs) else dist.q
        p = _noise_weight(a, b, rate) / 2.0**m
        if isinstance(dist, NoisyPairs):
            return Batch(x=a, y=b), p
        return Batch(s=a, t=b), p
    if isinstance(dist, (NuEpsilon, KappaEpsilon)):
        bits = _decode(idx, 4 * m)
        s, t, x, y = (bits[:, i * m:(i + 1) * m].reshape(-1, k, n) for i in range(4))
        p = (_noise_weight(s, t, dist.eps) * _noise_weight(x, y, dist.pair_noise)
             / 4.0**m)
        return Batch(x=x, y=y, s=s, t=t), p
    if isinstance(dist, ConditionedNoisy):
        bits = _decode(idx, 2 * m)
        x = bits[:, :m].reshape(-1, k, n)
        y = bits[:, m:].reshape(-1, k, n)
        weights = 1 << np.arange(n - 1, -1, -1)
        xc = (x * weights).sum(axis=2)
        yc = (y * weights).sum(axis=2)
        p = np.ones(len(idx))
        for i, table in enumerate(tables):
            p *= table[xc[:, i], yc[:, i]]
        return Batch(x=x, y=y), p
    raise TypeError(f"unknown distribution {dist!r}")


def enumerate_support(dist, budget: int = DEFAULT_SUPPORT_BUDGET) -> list[tuple[Batch, float]]:
    """Every positive-probability point with its exact probability."""
    out = []
    for batch, p in iter_support(dist, budget):
        for i in np.flatnonzero(p > 0):
            out.append((Batch(*(None if a is None else a[i] for a in batch)), float(p[i])))
    return out


def support_table(dist, budget: int = DEFAULT_SUPPORT_BUDGET) -> dict[bytes, float]:
    """``{sample key: probability}`` over positive-probability points."""
    table: dict[bytes, float] = {}
    for batch, p in iter_support(dist, budget):
        fields = [a.reshape(len(p), -1) for a in batch if a is not None]
        flat = np.concatenate(fields, axis=1)
        for i in np.flatnonzero(p > 0):
            table[flat[i].tobytes()] = float(p[i])
    return table


def common_source_pair_table(k: int, n: int, eps: float) -> np.ndarray:
    """Law of (X, Y) with X, Y independent eps-noisy copies of a uniform Z.

    Returned as a 2^{kn} x 2^{kn} matrix indexed by the flattened bit codes, by
    explicit summation over Z.
    """
    m = k * n
    pts = _decode(np.arange(2**m), m)
    d = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
    a = eps**d * (1.0 - eps) ** (m - d)
    return (a @ a.T) / 2.0**m


def noisy_pair_table(k: int, n: int, eta: float) -> np.ndarray:
    """Direct law of an eta-noisy pair as a 2^{kn} x 2^{kn} matrix."""
    m = k * n
    pts = _decode(np.arange(2**m), m)
    d = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
    return eta**d * (1.0 - eta) ** (m - d) / 2.0**m


def chi_square_gof(dist, samples: int, seed: int, alpha: float = 0.01,
                   budget: int = 2**16) -> tuple[bool, float]:
    """Pearson goodness-of-fit of ``samples`` draws against the exact support.

    Cells with expected count below 5 are pooled into one.  Returns
    ``(passes, p_value)``.
    """
    table = support_table(dist, budget)
    keys = list(table)
    index = {kk: i for i, kk in enumerate(keys)}
    probs = np.array([table[kk] for kk in keys])
    counts = np.zeros(len(keys), dtype=np.int64)
    done = 0
    block = 0
    while done < samples:
        size = min(CHUNK * 4, samples - done)
        batch = sample_batch(dist, size, substream(seed, block))
        fields = [a.reshape(size, -1) for a in batch if a is not None]
        flat = np.concatenate(fields, axis=1)
        packed = np.packbits(flat, axis=1)
        # map rows back to the table keys (which are unpacked bytes)
        uniq, inv, cnt = np.unique(packed, axis=0, return_inverse=True, return_counts=True)
        for row, c in zip(uniq, cnt):
            bits = np.unpackbits(row)[: flat.shape[1]].astype(np.uint8)
            counts[index[bits.tobytes()]] += c
        done += size
        block += 1
    expected = probs * samples
    small = expected < 5
    if small.any():
        obs = np.append(counts[~small], counts[small].sum())
        exp = np.append(expected[~small], expected[small].sum())
    else:
        obs, exp = counts, expected
    pval = float(stats.chisquare(obs, exp).pvalue)
    return pval >= alpha, pval


def tv_from_tables(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def pair_noise_value(eps: float) -> float:
    """2 eps - 2 eps^2, the rate at which two eps-noisy copies of Z disagree."""
    return 2 * eps - 2 * eps * eps

