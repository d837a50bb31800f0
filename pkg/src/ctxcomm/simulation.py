"""Simulation protocol, exact closeness of the input laws, intermediate
information cost, and the posterior-argmax estimator on small joint tables.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping

import numpy as np

from .core import SubsetFamily, as_family_indicator
from .functions import ComposedF
from .samplers import (
    DEFAULT_SUPPORT_BUDGET,
    ConditionedNoisy,
    KappaEpsilon,
    NoisyPairs,
    NuEpsilon,
    _decode,
    is_typical,
    iter_support,
    noisy_copy,
    pair_noise_value,
    sample_conditioned,
    support_table,
)

PROBABILITY_SLACK = 1e-12


class UntypicalFamily(ValueError):
    pass


# ---------------------------------------------------------------------------
# simulation protocol


def simulation_protocol(U, V, t_hat: SubsetFamily, eps: float, q: float | None = None,
                        inner_protocol=None, rng: np.random.Generator | None = None) -> int:
    """Run the inner protocol on inputs synthesized from parity strings U, V.

    Shared Z is uniform; Alice's X and Bob's Y are eps-noisy copies of Z whose
    block parities over t_hat equal U and V; Alice's S is a q-noisy copy of
    t_hat (q defaults to eps).
    """
    if rng is None:
        raise ValueError("an explicit generator is required")
    if not is_typical(t_hat):
        raise UntypicalFamily("every block of t_hat must have size in [n/3, 2n/3]")
    q = eps if q is None else q
    inner_protocol = ComposedF() if inner_protocol is None else inner_protocol
    _, x, y = sample_conditioned(t_hat, eps, U, V, rng)
    s_ind = noisy_copy(t_hat.indicator(), q, rng)
    S = SubsetFamily.from_indicator(s_ind)
    return int(inner_protocol((S, x), (t_hat, y)))


def _noisy_parity_table(block: np.ndarray, eps: float) -> np.ndarray:
    """Pr[X = x | Z = z, parity(X) = u] indexed [u, z, x], by explicit normalization."""
    n = len(block)
    pts = _decode(np.arange(2**n), n)
    dist = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)       # [z, x]
    noise = eps**dist * (1.0 - eps) ** (n - dist)
    par = (pts & block).sum(axis=1) & 1
    out = np.zeros((2, 2**n, 2**n))
    for u in (0, 1):
        masked = noise * (par[None, :] == u)
        totals = masked.sum(axis=1, keepdims=True)
        out[u] = np.divide(masked, totals, out=np.zeros_like(masked), where=totals > 0)
    return out


def simulation_input_law(t_hat: SubsetFamily, eps: float) -> np.ndarray:
    """Exact law of the simulated (X, Y) under uniform U, V, as a 2^{kn} x 2^{kn} matrix.

    Built block by block from the protocol's own sampling steps (sum over
    U, V and Z), then combined with a Kronecker product.
    """
    law = np.ones((1, 1))
    for block in as_family_indicator(t_hat):
        n = len(block)
        cond = _noisy_parity_table(block, eps)
        blk = np.zeros((2**n, 2**n))
        for u in (0, 1):
            for v in (0, 1):
                blk += cond[u].T @ cond[v] / (4.0 * 2**n)
        law = np.kron(law, blk)
    return law


# ---------------------------------------------------------------------------
# total variation


def tv_distance_exact(p, q) -> float:
    """Half the L1 distance between two enumerated laws (dicts or aligned arrays)."""
    if isinstance(p, Mapping) and isinstance(q, Mapping):
        keys = set(p) | set(q)
        return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    a, b = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("aligned arrays must share a shape")
    return 0.5 * math.fsum(np.abs(a - b).ravel())


def tv_between(dist_a, dist_b, budget: int = DEFAULT_SUPPORT_BUDGET) -> float:
    """Exact TV between two distribution specs over the same sample space."""
    try:
        parts = []
        for (ba, pa), (bb, pb) in zip(iter_support(dist_a, budget), iter_support(dist_b, budget),
                                      strict=True):
            if any((x is None) != (y is None) or (x is not None and not np.array_equal(x, y))
                   for x, y in zip(ba, bb)):
                raise LookupError
            parts.append(math.fsum(np.abs(pa - pb)))
        return 0.5 * math.fsum(parts)
    except (LookupError, ValueError):
        return tv_distance_exact(support_table(dist_a, budget), support_table(dist_b, budget))


def half_density_family(k: int, n: int) -> SubsetFamily:
    """Each block is {1, ..., n/2}."""
    if n % 2:
        raise ValueError("n must be even")
    return SubsetFamily([range(1, n // 2 + 1)] * k, n)


def closeness_tv(n: int, eps: float, k: int = 1, t_hat: SubsetFamily | None = None,
                 budget: int = DEFAULT_SUPPORT_BUDGET) -> float:
    """TV between independent (2 eps - 2 eps^2)-noisy pairs and the parity-conditioned law."""
    t_hat = half_density_family(k, n) if t_hat is None else t_hat
    return tv_between(NoisyPairs(k, n, pair_noise_value(eps)), ConditionedNoisy(t_hat, eps), budget)


@dataclass(frozen=True)
class ExponentialFit:
    C: float
    beta: float
    eps: float

    def bound(self, n: int) -> float:
        return self.C * 2.0 ** (-self.beta * self.eps * n)


def fit_exponential_bound(ns, tvs, eps: float) -> ExponentialFit:
    """(C, beta) with C 2^{-beta eps n} passing through the first two points."""
    (n0, n1), (v0, v1) = ns[:2], tvs[:2]
    if v0 <= 0 or v1 <= 0:
        raise ValueError("fit needs positive values")
    beta = (math.log2(v0) - math.log2(v1)) / (eps * (n1 - n0))
    return ExponentialFit(v0 * 2.0 ** (beta * eps * n0), beta, eps)


# ---------------------------------------------------------------------------
# information quantities


def _entropy_bits(probs) -> float:
    p = np.asarray([float(v) for v in probs], dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / math.log(2))


def conditional_mutual_information(table: Mapping[tuple, float]) -> float:
    """I(A; B | C) in bits for a law given as {(a, b, c): probability}."""
    ac, bc, c_only = defaultdict(float), defaultdict(float), defaultdict(float)
    for (a, b, c), p in table.items():
        ac[a, c] += float(p)
        bc[b, c] += float(p)
        c_only[c] += float(p)
    value = (_entropy_bits(ac.values()) + _entropy_bits(bc.values())
             - _entropy_bits(table.values()) - _entropy_bits(c_only.values()))
    return max(value, 0.0)


def _row_codes(a: np.ndarray) -> np.ndarray:
    flat = a.reshape(len(a), -1).astype(np.int64)
    return flat @ (1 << np.arange(flat.shape[1] - 1, -1, -1, dtype=np.int64))


def intermediate_info_cost(message: Callable, dist,
                           budget: int = DEFAULT_SUPPORT_BUDGET) -> float:
    """I((<T_i, X_i>)_i ; M | Y, T) in bits under an enumerable (S, X, T, Y) law.

    ``message`` maps a Batch to one integer code per row; a one-way message
    reads only the ``s`` and ``x`` fields.
    """
    if not isinstance(dist, (KappaEpsilon, NuEpsilon)):
        raise TypeError("need a distribution over (S, X, T, Y)")
    table: dict[tuple, float] = defaultdict(float)
    for batch, p in iter_support(dist, budget):
        keep = p > 0
        par = ((batch.x & batch.t).sum(axis=2) & 1)[keep]
        m = np.asarray(message(batch), dtype=np.int64)[keep]
        cond = np.stack([_row_codes(batch.y[keep]), _row_codes(batch.t[keep])], axis=1)
        keys = np.concatenate([_row_codes(par)[:, None], m[:, None], cond], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        sums = np.bincount(inv.ravel(), weights=p[keep])
        for row, w in zip(uniq, sums):
            table[int(row[0]), int(row[1]), (int(row[2]), int(row[3]))] += float(w)
    return conditional_mutual_information(table)


# ---------------------------------------------------------------------------
# joint tables and the posterior-argmax estimator


def _parse_probability(token: str) -> Fraction:
    return Fraction(token)


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact law of (Q, W, B) as {(q, w, b): probability}."""

    probabilities: dict

    def __post_init__(self):
        probs = dict(self.probabilities)
        if any(len(k) != 3 for k in probs):
            raise ValueError("atoms must be (q, w, b) triples")
        if any(p < 0 for p in probs.values()):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(float(p) for p in probs.values())
        if abs(total - 1.0) > PROBABILITY_SLACK:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probabilities", probs)

    def alphabets(self) -> tuple[list, list, list]:
        return tuple(sorted({k[i] for k in self.probabilities}, key=str) for i in range(3))

    def to_text(self) -> str:
        lines = []
        for (q, w, b), p in sorted(self.probabilities.items(), key=lambda kv: tuple(map(str, kv[0]))):
            for tok in (q, w, b):
                if not str(tok) or any(ch.isspace() for ch in str(tok)):
                    raise ValueError(f"atom {tok!r} cannot be written as a single token")
            lines.append(f"{q} {w} {b} {p}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "JointTable":
        probs: dict = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'q w b probability'")
            key = tuple(parts[:3])
            if key in probs:
                raise ValueError(f"line {lineno}: duplicate atom {key}")
            probs[key] = _parse_probability(parts[3])
        return cls(probs)

    def mutual_information_bw_given_q(self) -> float:
        return conditional_mutual_information(
            {(b, w, q): p for (q, w, b), p in self.probabilities.items()})


def posterior_argmax_estimator(table: JointTable):
    """E(q, w) = argmax_b Pr[B = b | Q = q, W = w] and Pr[E(Q, W) = B].

    Ties go to the smallest b in string order, so the rule is deterministic.
    """
    grouped: dict[tuple, dict] = defaultdict(dict)
    for (q, w, b), p in table.probabilities.items():
        grouped[q, w][b] = p
    rule, success = {}, []
    for qw, dist in grouped.items():
        top = max(dist.values())
        best = min((b for b, p in dist.items() if p == top), key=str)
        rule[qw] = best
        success.append(dist[best])
    exact = all(isinstance(p, Fraction) for p in success)
    return rule, (sum(success, Fraction(0)) if exact else math.fsum(map(float, success)))


def rule_success(table: JointTable, rule: Mapping[tuple, Hashable]) -> float:
    """Pr[rule(Q, W) = B] for any guessing rule."""
    return math.fsum(float(p) for (q, w, b), p in table.probabilities.items()
                     if rule.get((q, w)) == b)
