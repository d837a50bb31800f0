"""Stretching, the shift game and its graph, and the reduction protocol that
decides the shift game using a black box for subset majority.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    BudgetExceeded,
    ExperimentReport,
    IndexSubset,
    SortedTuple,
    iterated_log,
    substream,
)

VERTEX_BUDGET = 4096
EXACT_COLORING_BUDGET = 64
COORDINATE_LAW_BUDGET = 2**24


# ---------------------------------------------------------------------------
# stretch


@dataclass(frozen=True)
class StretchParams:
    r: int
    a: int
    d: int

    def __post_init__(self):
        if self.r < 1 or self.a < 0 or self.d < 1:
            raise ValueError("stretch needs r >= 1, a >= 0, d >= 1")

    @property
    def length(self) -> int:
        return self.d * self.r + self.a


def stretch(sigma: SortedTuple, params: StretchParams) -> tuple[SortedTuple, IndexSubset]:
    """Repeat each indicator bit of sigma over [d] r times, then append a ones."""
    if sigma.values and sigma.values[-1] > params.d:
        raise ValueError(f"{sigma} does not fit in [1, {params.d}]")
    z = np.zeros(params.d, dtype=np.uint8)
    if sigma.values:
        z[np.array(sigma.values) - 1] = 1
    w = np.concatenate([np.repeat(z, params.r), np.ones(params.a, dtype=np.uint8)])
    idx = (np.flatnonzero(w) + 1).tolist()
    return SortedTuple(idx, params.length), IndexSubset(idx, params.length)


WORKED_EXAMPLE_PARAMS = StretchParams(r=2, a=3, d=9)
WORKED_EXAMPLE_INPUTS = {"sigma": (2, 4, 5, 7, 9), "phi": (2, 4, 5, 7), "psi": (4, 5, 7, 9)}


def stretch_worked_example() -> dict[str, tuple[int, ...]]:
    """The stretched tuples of the r = 2, a = 3, d = 9 worked example."""
    return {name: stretch(SortedTuple(v, 9), WORKED_EXAMPLE_PARAMS)[0].values
            for name, v in WORKED_EXAMPLE_INPUTS.items()}


# ---------------------------------------------------------------------------
# shift graph and exact colouring


@dataclass(frozen=True, eq=False)
class Graph:
    vertices: tuple
    adjacency: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @classmethod
    def from_edges(cls, vertices, edges) -> "Graph":
        index = {v: i for i, v in enumerate(vertices)}
        adj = [set() for _ in vertices]
        for u, v in edges:
            i, j = index[u], index[v]
            if i != j:
                adj[i].add(j)
                adj[j].add(i)
        return cls(tuple(vertices), tuple(frozenset(a) for a in adj))


def shift_graph(m: int, t: int, budget: int = VERTEX_BUDGET) -> Graph:
    """Sorted t-subsets of [m]; sigma ~ pi when one's tail equals the other's head."""
    if not 1 <= t <= m:
        raise ValueError("need 1 <= t <= m")
    if math.comb(m, t) > budget:
        raise BudgetExceeded(f"C({m},{t}) = {math.comb(m, t)} vertices exceed {budget}")
    vertices = list(itertools.combinations(range(1, m + 1), t))
    by_head: dict[tuple, list[int]] = {}
    for i, v in enumerate(vertices):
        by_head.setdefault(v[:-1], []).append(i)
    adj = [set() for _ in vertices]
    for i, v in enumerate(vertices):
        for j in by_head.get(v[1:], []):
            if j != i:
                adj[i].add(j)
                adj[j].add(i)
    return Graph(tuple(vertices), tuple(frozenset(a) for a in adj))


def _fmt_vertex(v) -> str:
    return "(" + ",".join(map(str, v)) + ")"


def graph_to_text(graph: Graph) -> str:
    """One line per vertex: ``(1,2,3): (2,3,4) (2,3,5)``."""
    lines = []
    for i, v in enumerate(graph.vertices):
        nbrs = " ".join(_fmt_vertex(graph.vertices[j]) for j in sorted(graph.adjacency[i]))
        lines.append(f"{_fmt_vertex(v)}:{' ' + nbrs if nbrs else ''}")
    return "\n".join(lines) + "\n"


def _parse_vertex(token: str) -> tuple[int, ...]:
    token = token.strip()
    if not (token.startswith("(") and token.endswith(")")):
        raise ValueError(f"malformed vertex {token!r}")
    body = token[1:-1].strip()
    return tuple(int(p) for p in body.split(",")) if body else ()


def graph_from_text(text: str) -> Graph:
    vertices, edges = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        head, _, rest = line.partition(":")
        v = _parse_vertex(head)
        vertices.append(v)
        for tok in rest.split():
            edges.append((v, _parse_vertex(tok)))
    known = set(vertices)
    if any(b not in known for _, b in edges):
        raise ValueError("neighbour list mentions an undeclared vertex")
    return Graph.from_edges(vertices, edges)


def _greedy_clique(adj: list[frozenset[int]]) -> int:
    best = 0
    order = sorted(range(len(adj)), key=lambda v: -len(adj[v]))
    for start in order:
        clique = [start]
        cand = set(adj[start])
        while cand:
            v = max(cand, key=lambda u: len(adj[u] & cand))
            clique.append(v)
            cand &= adj[v]
        best = max(best, len(clique))
    return best


def chromatic_number_exact(graph: Graph, budget: int = EXACT_COLORING_BUDGET) -> int:
    """Exact chromatic number by DSATUR branch and bound."""
    n = len(graph)
    if n == 0:
        raise ValueError("graph has no vertices")
    if n > budget:
        raise BudgetExceeded(f"{n} vertices exceed the exact-colouring budget {budget}")
    adj = list(graph.adjacency)
    lower = _greedy_clique(adj)
    best = [n + 1]
    colors = [-1] * n

    def search(colored: int, used: int) -> None:
        if used >= best[0]:
            return
        if colored == n:
            best[0] = used
            return
        # uncoloured vertex with most distinct neighbour colours, then highest degree
        v, sat_v = -1, None
        for u in range(n):
            if colors[u] < 0:
                sat = {colors[w] for w in adj[u] if colors[w] >= 0}
                key = (len(sat), len(adj[u]))
                if sat_v is None or key > sat_v[0]:
                    v, sat_v = u, (key, sat)
        taken = sat_v[1]
        for c in range(used):
            if c not in taken:
                colors[v] = c
                search(colored + 1, used)
                colors[v] = -1
                if best[0] <= lower:
                    return
        if used + 1 < best[0]:
            colors[v] = used
            search(colored + 1, used + 1)
            colors[v] = -1

    search(0, 0)
    return best[0]


def chromatic_lower_bound(m: int, t: int) -> float:
    """The iterated-log bound for G_{m,t}; t = 1 reads log^(0)(m) as m."""
    return float(m) if t == 1 else iterated_log(t - 1, m)


def odd_shift_instances(max_vertices: int = EXACT_COLORING_BUDGET, max_m: int | None = None):
    """Every (m, t) with odd t, m <= max_m and C(m, t) <= max_vertices.

    t = m always gives a single vertex, so m is capped (default: max_vertices).
    """
    max_m = max_vertices if max_m is None else max_m
    return [(m, t) for m in range(1, max_m + 1) for t in range(1, m + 1, 2)
            if math.comb(m, t) <= max_vertices]


# ---------------------------------------------------------------------------
# the reduction protocol


class Side(enum.Enum):
    PREFIX = "prefix"
    SUFFIX = "suffix"


@dataclass(frozen=True)
class ShiftGameInstance:
    sigma: SortedTuple
    alice_side: Side

    def __post_init__(self):
        if len(self.sigma) < 1 or len(self.sigma) > self.sigma.bound:
            raise ValueError("need 1 <= t <= m")

    def alice_tuple(self) -> SortedTuple:
        return self.sigma.prefix() if self.alice_side is Side.PREFIX else self.sigma.suffix()


@dataclass(frozen=True)
class Pi1Params:
    """Reduction parameters; every derived length must come out integral."""

    epsilon: float
    delta_prime: float
    ell: int
    eta: float
    delta: float | None = None
    eps_prime: float = field(init=False)
    t: int = field(init=False)
    r: int = field(init=False)
    a: int = field(init=False)
    s: int = field(init=False)
    k: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in (0, 1/2]")
        if not 0 < self.delta_prime < 1:
            raise ValueError("delta_prime must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        dp = Fraction(str(self.delta_prime))
        eps_prime = 1.0 - math.cos(self.epsilon * math.pi)
        t = math.ceil(eps_prime / self.delta_prime)
        r = dp * self.ell
        a = self.ell * (1 - t * dp)
        s = self.ell * (1 - dp)
        for name, v in (("r", r), ("a", a), ("s", s)):
            if v.denominator != 1 or v < 0:
                raise ValueError(f"{name} = {v} is not a nonnegative integer; choose ell "
                                 f"as a multiple of {dp.denominator}")
        if r < 1:
            raise ValueError("r must be at least 1")
        if s != (t - 1) * r + a:
            raise ValueError("inconsistent stretched length")
        for name, v in (("eps_prime", eps_prime), ("t", t), ("r", int(r)), ("a", int(a)),
                        ("s", int(s)), ("k", math.ceil(4 / self.eta**2))):
            object.__setattr__(self, name, v)

    @classmethod
    def from_delta(cls, epsilon: float, delta: float, eta: float, alpha: float = 0.01,
                   ell: int | None = None) -> "Pi1Params":
        dp = Fraction(str(alpha)) * Fraction(str(delta)) ** 2
        if ell is None:
            ell = math.ceil(64 / dp)
            ell += (-ell) % dp.denominator
        return cls(epsilon, float(dp), ell, eta, delta)

    def stretch_params(self, m: int) -> StretchParams:
        return StretchParams(self.r, self.a, m)

    def input_length(self, m: int) -> int:
        return m * self.r + self.a


@dataclass(frozen=True)
class ExactSubsetOracle:
    """Exact f_T(X, Y) = Sign(sum_{i in T} X_i Y_i); rows of X, Y are separate calls."""

    cost: int = 0

    def __call__(self, alice, bob) -> np.ndarray:
        (_, x), (T, y) = alice, bob
        idx = T.zero_based()
        minus = (x[:, idx] ^ y[:, idx]).sum(axis=1, dtype=np.int64)
        return (len(idx) - 2 * minus >= 0).astype(np.uint8)


@dataclass(eq=False)
class CoinFlipOracle:
    """Ignores its inputs and answers with fresh private coins."""

    rng: np.random.Generator
    cost: int = 0

    def __call__(self, alice, bob) -> np.ndarray:
        (_, x), _ = alice, bob
        return self.rng.integers(0, 2, size=len(x), dtype=np.uint8)


def scores(Lambda: SortedTuple, Other: SortedTuple, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sign(sum_j X_{Lambda_j} Y_{Other_j}) for every row, in the bit encoding."""
    li = np.array(Lambda.values, dtype=np.intp) - 1
    oi = np.array(Other.values, dtype=np.intp) - 1
    minus = (x[..., li] ^ y[..., oi]).sum(axis=-1, dtype=np.int64)
    return (len(li) - 2 * minus >= 0).astype(np.uint8)


def prefix_suffix_scores(Lambda: SortedTuple, Phi: SortedTuple, Psi: SortedTuple, X, Y):
    """(g(X, Y), h(X, Y)) for sign vectors X, Y."""
    if not len(Lambda) == len(Phi) == len(Psi):
        raise ValueError("Lambda, Phi and Psi must share a length")
    xs, ys = np.asarray(X), np.asarray(Y)
    if xs.shape != ys.shape:
        raise ValueError("X and Y must share a length")
    xb, yb = (xs < 0).astype(np.uint8), (ys < 0).astype(np.uint8)
    return int(scores(Lambda, Phi, xb, yb)), int(scores(Lambda, Psi, xb, yb))


@dataclass(frozen=True)
class PiPrimeRun:
    answer: str
    bits_communicated: int
    prefix_errors: int
    suffix_errors: int


def protocol_pi_prime(instance: ShiftGameInstance, params: Pi1Params, black_box,
                      rng: np.random.Generator) -> PiPrimeRun:
    """Decide whether Alice holds the prefix or the suffix of Bob's tuple."""
    sigma = instance.sigma
    if len(sigma) != params.t:
        raise ValueError(f"sigma must have length t = {params.t}")
    m = sigma.bound
    sp = params.stretch_params(m)
    n = sp.length
    alice_rng, bob_rng = rng.spawn(2)
    Lambda, S = stretch(instance.alice_tuple(), sp)                 # Alice
    _, T = stretch(sigma, sp)                                       # Bob
    x = np.unpackbits(np.frombuffer(alice_rng.bytes(params.k * ((n + 7) // 8)), np.uint8)
                      .reshape(params.k, -1), axis=1, count=n)
    y = np.unpackbits(np.frombuffer(bob_rng.bytes(params.k * ((n + 7) // 8)), np.uint8)
                      .reshape(params.k, -1), axis=1, count=n)
    answers = np.asarray(black_box((S, x), (T, y)), dtype=np.uint8)
    sent = x[:, np.array(Lambda.values) - 1]                         # influential bits
    # Bob's side from here on
    Phi, _ = stretch(sigma.prefix(), sp)
    Psi, _ = stretch(sigma.suffix(), sp)
    received = SortedTuple(range(1, params.s + 1), params.s)
    err_p = int(np.count_nonzero(scores(received, Phi, sent, y) != answers))
    err_s = int(np.count_nonzero(scores(received, Psi, sent, y) != answers))
    bits = params.k * (getattr(black_box, "cost", 0) + params.s)
    return PiPrimeRun("YES" if err_p <= err_s else "NO", bits, err_p, err_s)


def random_sorted_tuple(m: int, t: int, rng: np.random.Generator) -> SortedTuple:
    return SortedTuple(sorted((rng.choice(m, size=t, replace=False) + 1).tolist()), m)


_SIDE_KEY = {Side.PREFIX: 0, Side.SUFFIX: 1}


def shift_game_experiment(params: Pi1Params, m: int, instances: int, side: Side,
                          oracle: str, seed: int) -> ExperimentReport:
    """Fraction of instances on which the reduction answers correctly."""
    if m < params.t:
        raise ValueError("m must be at least t")
    start = time.perf_counter()
    expected = "YES" if side is Side.PREFIX else "NO"
    correct = 0
    for i in range(instances):
        key = _SIDE_KEY[side]
        sigma = random_sorted_tuple(m, params.t, substream(seed, key, i, 0))
        if oracle == "exact":
            box = ExactSubsetOracle(cost=params.ell)
        elif oracle == "coin":
            box = CoinFlipOracle(substream(seed, key, i, 2))
        else:
            raise ValueError(f"unknown oracle {oracle!r}")
        run = protocol_pi_prime(ShiftGameInstance(sigma, side), params, box,
                                substream(seed, key, i, 1))
        correct += run.answer == expected
    return ExperimentReport.from_counts(
        "shift-game", correct, instances, seed,
        {"oracle": oracle, "side": side.value, "m": m, "t": params.t, "k": params.k},
        wall_clock=time.perf_counter() - start)


def predicted_gh_distance(params) -> float:
    """Gaussian prediction arccos(a/s)/pi for Pr[g != h]."""
    return math.acos(params.a / params.s) / math.pi


def gh_distance_mc(params: Pi1Params, m: int, trials: int, seed: int,
                   chunk: int = 2048) -> ExperimentReport:
    """Monte Carlo Pr[g != h] over uniform X, Y in the prefix case Lambda = Phi."""
    start = time.perf_counter()
    sigma = random_sorted_tuple(m, params.t, substream(seed, 0))
    sp = params.stretch_params(m)
    Phi, _ = stretch(sigma.prefix(), sp)
    Psi, _ = stretch(sigma.suffix(), sp)
    n = sp.length
    hits = 0
    for c, lo in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - lo)
        rng = substream(seed, 1, c)
        x = np.unpackbits(np.frombuffer(rng.bytes(size * ((n + 7) // 8)), np.uint8)
                          .reshape(size, -1), axis=1, count=n)
        y = np.unpackbits(np.frombuffer(rng.bytes(size * ((n + 7) // 8)), np.uint8)
                          .reshape(size, -1), axis=1, count=n)
        hits += int(np.count_nonzero(scores(Phi, Phi, x, y) != scores(Phi, Psi, x, y)))
    return ExperimentReport.from_counts(
        "gh-distance", hits, trials, seed, {"t": params.t, "r": params.r, "a": params.a, "m": m},
        wall_clock=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# exact law of the coordinate pairs


@dataclass(frozen=True)
class StretchShape:
    t: int
    r: int
    a: int

    @property
    def s(self) -> int:
        return (self.t - 1) * self.r + self.a


def _coordinate_tuples(shape, sigma: SortedTuple | None, side: Side):
    if shape.t < 2:
        raise ValueError("the coordinate law needs t >= 2")
    if sigma is None:
        sigma = SortedTuple(range(1, shape.t + 1), shape.t)
    if len(sigma) != shape.t:
        raise ValueError("sigma must have length t")
    sp = StretchParams(shape.r, shape.a, sigma.bound)
    Phi, _ = stretch(sigma.prefix(), sp)
    Psi, _ = stretch(sigma.suffix(), sp)
    Lambda = Phi if side is Side.PREFIX else Psi
    return Lambda, Phi, Psi


def coordinate_law_direct(shape, sigma=None, side: Side = Side.PREFIX,
                          budget: int = 2**22) -> dict[tuple, int]:
    """Counts of (X_Lambda_j Y_Phi_j, X_Lambda_j Y_Psi_j)_j over every (X, Y).

    Only coordinates that appear in Lambda, Phi or Psi are enumerated; each
    pattern is a tuple of per-coordinate pairs in the sign encoding.
    """
    Lambda, Phi, Psi = _coordinate_tuples(shape, sigma, side)
    xs = sorted(set(Lambda.values))
    ys = sorted(set(Phi.values) | set(Psi.values))
    total = len(xs) + len(ys)
    if 2**total > budget:
        raise BudgetExceeded(f"2^{total} joint inputs exceed {budget}")
    xpos = {v: i for i, v in enumerate(xs)}
    ypos = {v: i for i, v in enumerate(ys)}
    codes = np.arange(2**total, dtype=np.int64)
    xb = (codes[:, None] >> np.arange(len(xs))) & 1
    yb = (codes[:, None] >> (len(xs) + np.arange(len(ys)))) & 1
    li = [xpos[v] for v in Lambda.values]
    g = 1 - 2 * (xb[:, li] ^ yb[:, [ypos[v] for v in Phi.values]])
    h = 1 - 2 * (xb[:, li] ^ yb[:, [ypos[v] for v in Psi.values]])
    pairs = np.stack([g, h], axis=2).reshape(len(codes), -1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    return {tuple(map(tuple, row.reshape(-1, 2).tolist())): int(c) for row, c in zip(uniq, counts)}


def product_law_counts(shape, total: int) -> dict[tuple, int]:
    """Counts the factorized law assigns to each pattern out of 2^total inputs."""
    s, a = shape.s, shape.a
    free = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    diag = [(-1, -1), (1, 1)]
    support = 4 ** (s - a) * 2**a
    each = 2**total // support
    return {p: each for p in itertools.product(*([free] * (s - a) + [diag] * a))}


def parity_difference_counts(shape, sigma=None, side: Side = Side.PREFIX,
                             budget: int = COORDINATE_LAW_BUDGET) -> np.ndarray:
    """Histogram over c in {0,1}^s of c_j = Y_Phi_j xor Y_Psi_j.

    For fixed Y exactly one X_Lambda realizes each pattern whose pairwise
    parities equal c(Y), so this histogram determines the joint law exactly.
    """
    _, Phi, Psi = _coordinate_tuples(shape, sigma, side)
    ys = sorted(set(Phi.values) | set(Psi.values))
    if 2 ** len(ys) > budget:
        raise BudgetExceeded(f"2^{len(ys)} Y assignments exceed {budget}")
    ypos = {v: i for i, v in enumerate(ys)}
    pp = np.array([ypos[v] for v in Phi.values], dtype=np.int64)
    qp = np.array([ypos[v] for v in Psi.values], dtype=np.int64)
    s = len(pp)
    hist = np.zeros(2**s, dtype=np.int64)
    step = 2**20
    for lo in range(0, 2 ** len(ys), step):
        y = np.arange(lo, min(lo + step, 2 ** len(ys)), dtype=np.int64)
        c = np.zeros_like(y)
        for j in range(s):
            c |= (((y >> pp[j]) ^ (y >> qp[j])) & 1) << j
        hist += np.bincount(c, minlength=2**s)
    return hist


def verify_indep_coord(shape, sigma: SortedTuple | None = None, side: Side = Side.PREFIX,
                       budget: int = COORDINATE_LAW_BUDGET) -> bool:
    """True iff the coordinate pairs are independent with the stated marginals.

    Free coordinates (j <= s - a) must be uniform on {+-1}^2 and appended
    ones must be uniform on the diagonal; equivalently c(Y) is uniform on
    {0,1}^(s-a) with all appended parities zero.
    """
    s, a = shape.s, shape.a
    if s > 24:
        raise BudgetExceeded("s too large for exact enumeration")
    hist = parity_difference_counts(shape, sigma, side, budget)
    total = int(hist.sum())
    expected = np.zeros_like(hist)
    free_mask = (1 << (s - a)) - 1
    expected[: free_mask + 1] = total // 2 ** (s - a)
    return bool(total % 2 ** (s - a) == 0 and np.array_equal(hist, expected))


def enumerable_shapes(max_s: int = 12):
    """Every (t, r, a) with t >= 2, r >= 1, a >= 0 and (t-1) r + a <= max_s."""
    out = []
    for t in range(2, max_s + 2):
        for r in range(1, max_s // (t - 1) + 1):
            for a in range(0, max_s - (t - 1) * r + 1):
                out.append(StretchShape(t, r, a))
    return out
