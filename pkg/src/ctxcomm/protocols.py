"""One-way protocols: certain baselines, hashing set recovery, the ISR
weighted inner-product estimator, and the uncertain protocol built on it.

Every protocol here splits into an Alice function that sees only her input,
her randomness and public parameters, and a Bob function that receives her
message.  Tests replay Alice with mutated Bob inputs to confirm this.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import (
    BitVector,
    BudgetExceeded,
    IndexSubset,
    SubsetFamily,
    as_blocks,
    as_signs,
    bits_to_signs,
    sign,
    substream,
)
from .samplers import (
    ISR,
    PRODUCT_KINDS,
    Public,
    UniformPairs,
    _random_words,
    isr_words,
    iter_support,
    NoisyPairs,
)

BLOCK_BITS = 64
REPETITION_CHUNK = 256
REPLICATION_CAP = 2**14
DEFAULT_REPETITION_CONSTANT = 8.0
CALIBRATION_SEED = 0x5EED
CALIBRATION_REPETITIONS = 2**18
CALIBRATION_WIDTH = 64

_ALICE_KEY = 1
_HASH_KEY = 2


@dataclass(frozen=True)
class ProtocolRun:
    message: BitVector | None          # None when nothing is sent
    output: int
    bits_communicated: int
    randomness_used: object = None
    detail: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# certain baselines


def certain_subset_protocol(T: IndexSubset, X, Y) -> ProtocolRun:
    """Alice sends (X_j : j in T); Bob evaluates the subset majority himself."""
    xs, ys = as_signs(X), as_signs(Y)
    idx = T.zero_based()
    sent = xs[idx]
    if not len(idx):
        return ProtocolRun(None, 1, 0)
    message = BitVector(((1 - sent) // 2).astype(np.uint8))
    # Bob reads the signs back from the message
    received = 1 - 2 * message.array().astype(np.int64)
    return ProtocolRun(message, sign(int(np.dot(received, ys[idx]))), len(message))


def certain_parity_protocol(S: SubsetFamily, x, y) -> ProtocolRun:
    """Alice sends her k block parities; Bob combines them with his own."""
    xb, yb = as_blocks(x), as_blocks(y)
    ind = S.indicator()
    if xb.shape != ind.shape or yb.shape != ind.shape:
        raise ValueError("inputs must have the family's (k, n) shape")
    message = BitVector((xb & ind).sum(axis=1) & 1)
    bob = (yb & ind).sum(axis=1) & 1
    terms = 1 - 2 * (message.array() ^ bob).astype(np.int64)
    return ProtocolRun(message, sign(int(terms.sum())), len(message))


# ---------------------------------------------------------------------------
# public-coin hashing


@dataclass(frozen=True)
class SetRecovery:
    recovered: IndexSubset | None
    bits_communicated: int
    tag_bits: int
    ambiguous: bool


def hash_tag_bits(ell: int, failure_prob: float) -> int:
    if ell < 1:
        return 0
    return max(1, math.ceil(math.log2(ell * ell / failure_prob)))


def _hash_table(universe: int, bits: int, shared_seed: int) -> np.ndarray:
    return substream(shared_seed, _HASH_KEY).integers(0, 2**bits, size=universe, dtype=np.int64)


def hash_set_recovery(S: IndexSubset, T: IndexSubset, failure_prob: float,
                      source: Public) -> SetRecovery:
    """Bob (holding T) learns S from |S| shared-hash tags sent by Alice.

    Recovery fails only if some tag matches two elements of T, which has
    probability at most |S| |T| 2^-b <= failure_prob.
    """
    if not 0 < failure_prob < 1:
        raise ValueError("failure_prob must lie in (0, 1)")
    if not S.issubset(T):
        raise ValueError("S must be a subset of T")
    ell = len(T)
    b = hash_tag_bits(ell, failure_prob)
    if b > 62:
        raise ValueError("tag width exceeds 62 bits")
    table = _hash_table(T.universe_size, b, source.shared_seed)
    tags = [int(table[i - 1]) for i in S.indices]          # Alice's message
    by_tag: dict[int, list[int]] = {}
    for j in T.indices:
        by_tag.setdefault(int(table[j - 1]), []).append(j)
    found, ambiguous = [], False
    for tag in tags:
        hits = by_tag.get(tag, [])
        if len(hits) != 1:
            ambiguous = True
            break
        found.append(hits[0])
    recovered = None if ambiguous else IndexSubset(found, T.universe_size)
    return SetRecovery(recovered, b * len(tags), b, ambiguous)


# ---------------------------------------------------------------------------
# weighted inner product under imperfectly shared randomness


@dataclass(frozen=True)
class GipEstimate:
    estimates: tuple[float, ...]
    repetitions: int
    theta: float
    rho: float
    message: np.ndarray = field(compare=False, repr=False)
    agreement: tuple[float, ...] = ()


def repetitions_needed(theta: float, rho: float, targets: int,
                       constant: float = DEFAULT_REPETITION_CONSTANT) -> int:
    return math.ceil(constant * math.log(3 * targets / theta) / (theta * theta * rho * rho))


def _as_fraction(w) -> Fraction:
    if isinstance(w, (Fraction, int, np.integer)):
        return Fraction(w)
    f = Fraction(float(w)).limit_denominator(REPLICATION_CAP)
    if abs(float(f) - float(w)) > 1e-12:
        raise ValueError(f"weight {w} is not a rational with denominator <= {REPLICATION_CAP}")
    return f


def replication_counts(weights, d: int, cap: int = REPLICATION_CAP) -> np.ndarray:
    """Integer multiplicities proportional to rational weights over d coordinates."""
    if weights is None:
        return np.ones(d, dtype=np.int64)
    fr = [_as_fraction(w) for w in weights]
    if len(fr) != d:
        raise ValueError("one weight per coordinate is required")
    if any(f < 0 for f in fr) or sum(fr) != 1:
        raise ValueError("weights must be nonnegative and sum to 1")
    denom = math.lcm(*(f.denominator for f in fr))
    if denom > cap:
        raise BudgetExceeded(f"replication length {denom} exceeds cap {cap}")
    return np.array([f.numerator * (denom // f.denominator) for f in fr], dtype=np.int64)


def block_sums(words: np.ndarray) -> np.ndarray:
    """Normalized +-1 sums of the 64 bits in each word: mean 0, variance 1."""
    return (BLOCK_BITS - 2.0 * np.bitwise_count(words)) / math.sqrt(BLOCK_BITS)


def _negative_projection(words: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """1 where <block_sums(words), v> < 0, for each row v of ``vectors``.

    Works on popcounts so every intermediate is an integer exactly
    representable in float32; ties land on Sign(0) = +1 deterministically.
    """
    pc = np.bitwise_count(words).astype(np.float32)
    half = (BLOCK_BITS // 2) * vectors.sum(axis=1)
    # <64 - 2 pc, v> < 0  <=>  32 sum(v) < <pc, v>
    return (pc @ vectors.T > half).astype(np.uint8)


def _chunks(m: int, size: int = REPETITION_CHUNK):
    for c, start in enumerate(range(0, m, size)):
        yield c, start, min(size, m - start)


def _replicate(vectors, counts: np.ndarray) -> np.ndarray:
    return np.repeat(np.stack([as_signs(v) for v in vectors]).astype(np.float32), counts, axis=1)


def gip_alice_message(u, counts: np.ndarray, repetitions: int, shared_seed: int) -> np.ndarray:
    """Alice's bits: sign of <G_A, u> per repetition, 1 meaning negative.

    Depends on u, the replication, the repetition count and Alice's own ISR
    words only.
    """
    u_rep = _replicate([u], counts)
    out = []
    for c, _, size in _chunks(repetitions):
        words = _random_words(substream(shared_seed, _ALICE_KEY, c), (size, u_rep.shape[1]))
        out.append(_negative_projection(words, u_rep)[:, 0])
    return np.concatenate(out)


def gip_bob_agreement(message: np.ndarray, targets, counts: np.ndarray, rho: float,
                      shared_seed: int) -> np.ndarray:
    """Fraction of repetitions where Bob's sign for each target matches Alice's bit."""
    V = _replicate(targets, counts)
    agree = np.zeros(len(V), dtype=np.int64)
    for c, start, size in _chunks(len(message)):
        _, words = isr_words(rho, (size, V.shape[1]), substream(shared_seed, _ALICE_KEY, c))
        bob = _negative_projection(words, V)
        agree += (bob == message[start:start + size, None]).sum(axis=0)
    return agree / len(message)


def _gip_single_pass(u, targets, counts, repetitions, rho, shared_seed):
    # same streams as gip_alice_message followed by gip_bob_agreement, drawn once
    u_rep, V = _replicate([u], counts), _replicate(targets, counts)
    message = np.empty(repetitions, dtype=np.uint8)
    agree = np.zeros(len(V), dtype=np.int64)
    for c, start, size in _chunks(repetitions):
        alice, bob = isr_words(rho, (size, V.shape[1]), substream(shared_seed, _ALICE_KEY, c))
        bits = _negative_projection(alice, u_rep)[:, 0]
        message[start:start + size] = bits
        agree += (_negative_projection(bob, V) == bits[:, None]).sum(axis=0)
    return message, agree / repetitions


def invert_agreement(p: np.ndarray, rho_eff: float) -> np.ndarray:
    return np.clip(np.cos(np.pi * (1.0 - np.asarray(p))) / rho_eff, -1.0, 1.0)


@lru_cache(maxsize=None)
def calibrated_correlation(rho: float) -> float:
    """Effective correlation of the block-sum signs, measured at inner product 1."""
    if rho == 1.0:
        return 1.0
    u = np.ones(CALIBRATION_WIDTH, dtype=np.int8)
    counts = np.ones(CALIBRATION_WIDTH, dtype=np.int64)
    msg = gip_alice_message(u, counts, CALIBRATION_REPETITIONS, CALIBRATION_SEED)
    p = gip_bob_agreement(msg, [u], counts, rho, CALIBRATION_SEED)[0]
    return float(np.cos(np.pi * (1.0 - p)))


def gip_estimate(u, targets, weights=None, theta: float = 0.1, rho: float | None = None,
                 source: ISR | None = None,
                 constant: float = DEFAULT_REPETITION_CONSTANT) -> GipEstimate:
    """Estimate E_{i~P}[u_i v_i] for every target v with accuracy theta.

    Alice sends one sign bit per repetition; Bob inverts the per-target
    agreement rate through the sign-agreement law of correlated Gaussians.
    """
    if source is None:
        raise ValueError("an ISR source is required")
    rho = source.rho if rho is None else rho
    if rho != source.rho:
        raise ValueError("rho disagrees with the ISR source")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    targets = list(targets)
    if not targets:
        raise ValueError("at least one target is required")
    d = len(as_signs(u))
    if any(len(as_signs(v)) != d for v in targets):
        raise ValueError("targets must match the length of u")
    counts = replication_counts(weights, d)
    m = repetitions_needed(theta, rho, len(targets), constant)
    message, agree = _gip_single_pass(u, targets, counts, m, rho, source.shared_seed)
    est = invert_agreement(agree, calibrated_correlation(rho))
    return GipEstimate(tuple(float(e) for e in est), m, theta, rho, message,
                       tuple(float(a) for a in agree))


def weighted_inner_product(u, v, weights=None) -> float:
    a, b = as_signs(u).astype(np.float64), as_signs(v).astype(np.float64)
    if weights is None:
        return float(np.mean(a * b))
    return float(np.dot(np.asarray(weights, dtype=np.float64), a * b))


# ---------------------------------------------------------------------------
# protocols as finite tables


@dataclass(frozen=True, eq=False)
class OneWayTable:
    """Deterministic one-way protocol on indexed finite domains.

    ``messages[x]`` is Alice's message on input x and ``outputs[j, y]`` is
    Bob's answer B_j(y) on message j.
    """

    messages: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        msg = np.asarray(self.messages, dtype=np.int64)
        out = np.asarray(self.outputs, dtype=np.uint8)
        if out.ndim != 2 or msg.ndim != 1:
            raise ValueError("messages must be 1-d and outputs 2-d")
        if len(msg) and (msg.min() < 0 or msg.max() >= out.shape[0]):
            raise ValueError("message index outside the output table")
        object.__setattr__(self, "messages", msg)
        object.__setattr__(self, "outputs", out)

    @property
    def message_count(self) -> int:
        return self.outputs.shape[0]

    @property
    def bits(self) -> int:
        return math.ceil(math.log2(self.message_count)) if self.message_count > 1 else 0

    def row(self, x: int) -> np.ndarray:
        """The function y -> output on Alice's input x."""
        return self.outputs[self.messages[x]]

    def evaluate(self, x: int, y: int) -> int:
        return int(self.outputs[self.messages[x], y])

    def truth_table(self) -> np.ndarray:
        return self.outputs[self.messages]


def decode_codes(codes: np.ndarray, nbits: int) -> np.ndarray:
    """Integer codes to bit rows, most significant bit first."""
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(codes, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def encode_bits(bits) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8).ravel():
        out = (out << 1) | int(b)
    return out


def parity_protocol_table(S: SubsetFamily) -> OneWayTable:
    """The k-bit certain protocol for maj-of-subset-parity as a table over {0,1}^{kn}."""
    k, n = S.block_count, S.block_size
    if k * n > 16:
        raise BudgetExceeded("table protocols are limited to k*n <= 16")
    ind = S.indicator()
    pts = decode_codes(np.arange(2 ** (k * n)), k * n).reshape(-1, k, n)
    par = (pts & ind).sum(axis=2) & 1                       # (|X|, k)
    messages = par @ (1 << np.arange(k - 1, -1, -1))
    j_bits = decode_codes(np.arange(2**k), k)                # (L, k)
    terms = 1 - 2 * (j_bits[:, None, :] ^ par[None, :, :]).astype(np.int64)
    outputs = (terms.sum(axis=2) >= 0).astype(np.uint8)
    return OneWayTable(messages, outputs)


def truth_table_protocol(f_table) -> OneWayTable:
    """Alice sends her whole input; Bob looks up the answer."""
    f = np.asarray(f_table, dtype=np.uint8)
    return OneWayTable(np.arange(f.shape[0]), f)


class NonProductDistribution(ValueError):
    pass


def _product_marginal_y(dist) -> np.ndarray:
    if not isinstance(dist, PRODUCT_KINDS):
        raise NonProductDistribution(f"{type(dist).__name__} is not a product distribution")
    return np.full(2**dist.n, 2.0**-dist.n)


def isr_uncertain_protocol(f_protocol: OneWayTable, g_protocol: OneWayTable, x: int, y: int,
                           theta: float, source: ISR, dist=None,
                           constant: float = DEFAULT_REPETITION_CONSTANT,
                           max_messages: int = 2**16) -> ProtocolRun:
    """Bob outputs g's answer using only an inner-product sketch of f(x, .).

    Alice knows f and x; Bob knows g's certain protocol and y.  Bob picks the
    message j whose answer table B_j best agrees with f(x, .) under the
    y-marginal and outputs B_j(y).
    """
    if dist is None:
        raise NonProductDistribution("a product distribution is required")
    weights_y = _product_marginal_y(dist)
    L = g_protocol.message_count
    if L > max_messages:
        raise BudgetExceeded(f"{L} candidate messages exceed the budget {max_messages}")
    if f_protocol.outputs.shape[1] != len(weights_y) or g_protocol.outputs.shape[1] != len(weights_y):
        raise ValueError("protocol tables do not match the distribution's Y domain")
    u = bits_to_signs(f_protocol.row(x))
    targets = [bits_to_signs(b) for b in g_protocol.outputs]
    uniform = np.all(weights_y == weights_y[0])
    est = gip_estimate(u, targets, None if uniform else weights_y, theta / 3, source.rho,
                       source, constant)
    j = int(np.argmax(est.estimates))                        # lowest index on ties
    return ProtocolRun(BitVector(est.message), int(g_protocol.outputs[j, y]), est.repetitions,
                       source, {"selected": j, "estimates": est.estimates})


# ---------------------------------------------------------------------------
# exhaustive search over deterministic one-way protocols


def protocol_tables(f, dist, budget: int = 2**16) -> tuple[np.ndarray, np.ndarray]:
    """(f_table, p_table) indexed by (x code, y code) for pair distributions."""
    if not isinstance(dist, (UniformPairs, NoisyPairs)):
        raise TypeError("only (x, y) pair distributions have tables")
    f_table = p_table = None
    for batch, p in iter_support(dist, budget):
        xs = batch.x.reshape(len(p), -1)
        ys = batch.y.reshape(len(p), -1)
        w = xs.shape[1]
        if f_table is None:
            f_table = np.zeros((2**w, 2**w), dtype=np.uint8)
            p_table = np.zeros((2**w, 2**w))
        weights = 1 << np.arange(w - 1, -1, -1)
        xi, yi = xs @ weights, ys @ weights
        f_table[xi, yi] = f.on_batch(batch)
        np.add.at(p_table, (xi, yi), p)
    return f_table, p_table


def brute_force_best_protocol(f_table, p_table, c: int, budget: int = 2**16):
    """Minimum error over every message function X -> [2^c], Bob answering optimally.

    Returns (error, witness) where witness[x] is the message on input x; the
    first minimizer in lexicographic order is reported.
    """
    f = np.asarray(f_table, dtype=np.float64)
    p = np.asarray(p_table, dtype=np.float64)
    if f.shape != p.shape or f.ndim != 2:
        raise ValueError("f_table and p_table must share a 2-d shape")
    nx = f.shape[0]
    L = 2**c
    if L**nx > budget:
        raise BudgetExceeded(f"{L}^{nx} message functions exceed the budget {budget}")
    ones, zeros = p * f, p * (1 - f)
    best_err, best = math.inf, None
    funcs = np.array(list(itertools.product(range(L), repeat=nx)), dtype=np.int64).reshape(-1, nx)
    for start in range(0, len(funcs), 4096):
        block = funcs[start:start + 4096]
        onehot = (block[:, :, None] == np.arange(L)).astype(np.float64)
        w1 = np.einsum("fxl,xy->fly", onehot, ones)
        w0 = np.einsum("fxl,xy->fly", onehot, zeros)
        err = p.sum() - np.maximum(w0, w1).sum(axis=(1, 2))
        i = int(np.argmin(err))
        if err[i] < best_err - 1e-15:
            best_err, best = float(err[i]), tuple(int(v) for v in block[i])
    return max(best_err, 0.0), best
