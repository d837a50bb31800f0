"""Acceptance battery: one function per criterion, each returning CheckResults.

``AcceptanceConfig.fast`` divides every trial count by ten and widens
statistical tolerances by sqrt(10), the factor by which stderr grows.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import IndexSubset, SubsetFamily, sheppard, substream
from .functions import (
    ComposedF,
    Constant,
    HammingThreshold,
    MajOfSubsetParity,
    XorParity,
    distance_exact,
    distance_monte_carlo,
    hd_threshold,
    subset_majority_pair,
    subset_parity_pair,
)
from .protocols import (
    brute_force_best_protocol,
    gip_estimate,
    isr_uncertain_protocol,
    parity_protocol_table,
    weighted_inner_product,
)
from .reductions import (
    Pi1Params,
    Side,
    chromatic_lower_bound,
    chromatic_number_exact,
    enumerable_shapes,
    gh_distance_mc,
    odd_shift_instances,
    shift_game_experiment,
    shift_graph,
    stretch_worked_example,
    verify_indep_coord,
)
from .samplers import ISR, NoisyPairs, NuEpsilon, UniformPairs, is_typical, random_typical_family
from .simulation import closeness_tv, fit_exponential_bound, simulation_protocol
from .verifiers import noise_stability_mc, sheppard_mc

WORKED_EXAMPLE_EXPECTED = {
    "sigma": (3, 4, 7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21),
    "phi": (3, 4, 7, 8, 9, 10, 13, 14, 19, 20, 21),
    "psi": (7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21),
}

# parameters shared by the reduction experiments
REDUCTION_EPSILON = 0.25
REDUCTION_DELTA = 0.1
REDUCTION_ALPHA = 1.0
REDUCTION_ETA = 0.1
REDUCTION_M = 40

TOY_REPETITION_CONSTANT = 0.05


@dataclass(frozen=True)
class AcceptanceConfig:
    fast: bool = False
    seed: int = 20240601
    workers: int = 1

    def trials(self, n: int) -> int:
        return max(1, n // 10) if self.fast else n

    def widen(self, tol: float) -> float:
        return tol * math.sqrt(10) if self.fast else tol


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.criterion}] {self.name}: {self.detail}"


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def check_stretch_example(cfg: AcceptanceConfig) -> list[CheckResult]:
    got, secs = _timed(stretch_worked_example)
    ok = got == WORKED_EXAMPLE_EXPECTED and secs < 1.0
    return [CheckResult(1, "stretch worked example", ok, f"{got} in {secs:.3f}s")]


def check_sheppard(cfg: AcceptanceConfig) -> list[CheckResult]:
    out = []
    tol = cfg.widen(0.005)
    for i, rho in enumerate((-0.9, -0.5, 0.0, 0.5, 0.9)):
        rep = sheppard_mc(rho, cfg.trials(10**6), cfg.seed + i)
        err = abs(rep.estimate - sheppard(rho))
        out.append(CheckResult(2, f"sign disagreement rho={rho}", err <= tol,
                               f"estimate {rep.estimate:.5f} vs {sheppard(rho):.5f} (|err| {err:.5f} <= {tol:.4f})"))
    return out


def check_subset_majority_distance(cfg: AcceptanceConfig) -> list[CheckResult]:
    f, g = subset_majority_pair(1000, 40)
    rep = distance_monte_carlo(f, g, UniformPairs(1000), cfg.trials(10**6), cfg.seed, cfg.workers)
    target = math.acos(math.sqrt(1 - 0.04)) / math.pi
    ok = rep.within(target, 3, 0.01) and rep.wall_clock < 120
    return [CheckResult(3, "subset-majority distance, ell=1000", ok,
                        f"estimate {rep.estimate:.5f} +- {rep.stderr:.5f} vs {target:.5f}")]


def check_parity_distance(cfg: AcceptanceConfig) -> list[CheckResult]:
    dp = 0.02
    f, g = subset_parity_pair(99, 128, substream(cfg.seed, 4))
    rep = distance_monte_carlo(f, g, NoisyPairs(99, 128, dp), cfg.trials(10**5), cfg.seed,
                               cfg.workers)
    bound = math.acos(1 - 2 * dp) / math.pi
    ok = rep.estimate <= bound + 3 * rep.stderr and rep.wall_clock < 120
    return [CheckResult(4, "maj-of-parity distance, k=99", ok,
                        f"estimate {rep.estimate:.5f} +- {rep.stderr:.5f} <= {bound:.5f}")]


def reduction_params() -> Pi1Params:
    return Pi1Params.from_delta(REDUCTION_EPSILON, REDUCTION_DELTA, REDUCTION_ETA,
                                alpha=REDUCTION_ALPHA)


def check_gh_distance(cfg: AcceptanceConfig) -> list[CheckResult]:
    params = reduction_params()
    rep = gh_distance_mc(params, REDUCTION_M, cfg.trials(10**5), cfg.seed)
    floor = params.epsilon - REDUCTION_DELTA
    ok = rep.estimate >= floor - 3 * rep.stderr
    return [CheckResult(5, "prefix/suffix score distance", ok,
                        f"estimate {rep.estimate:.5f} +- {rep.stderr:.5f} >= {floor:.3f}")]


def check_indep_coord(cfg: AcceptanceConfig) -> list[CheckResult]:
    shapes = enumerable_shapes(12)
    bad = [(sh, side) for sh in shapes for side in Side if not verify_indep_coord(sh, side=side)]
    return [CheckResult(6, "coordinate-pair independence, s<=12", not bad,
                        f"{2 * len(shapes) - len(bad)}/{2 * len(shapes)} instances exact")]


def check_chromatic(cfg: AcceptanceConfig) -> list[CheckResult]:
    insts = odd_shift_instances()
    bad = []
    for m, t in insts:
        chi = chromatic_number_exact(shift_graph(m, t))
        if chi < chromatic_lower_bound(m, t):
            bad.append((m, t, chi))
    return [CheckResult(7, "shift-graph chromatic number, <=64 vertices", not bad,
                        f"{len(insts) - len(bad)}/{len(insts)} instances meet the bound"
                        + (f"; violations {bad[:5]}" if bad else ""))]


def check_shift_game(cfg: AcceptanceConfig) -> list[CheckResult]:
    params = reduction_params()
    n = cfg.trials(200)
    out = []
    for side in Side:
        rep = shift_game_experiment(params, REDUCTION_M, n, side, "exact", cfg.seed)
        out.append(CheckResult(8, f"reduction with exact oracle, {side.value}",
                               rep.estimate >= 0.9, f"correct rate {rep.estimate:.3f} >= 0.9"))
    tol = cfg.widen(0.1)
    for side in Side:
        rep = shift_game_experiment(params, REDUCTION_M, n, side, "coin", cfg.seed)
        out.append(CheckResult(8, f"reduction with coin-flip oracle, {side.value}",
                               abs(rep.estimate - 0.5) <= tol,
                               f"correct rate {rep.estimate:.3f} within {tol:.3f} of 0.5"))
    return out


def gip_failure_rate(rho: float, runs: int, seed: int, d: int = 512, theta: float = 0.1):
    """Number of runs whose estimate misses the true inner product by more than theta."""
    fails, bits = 0, []
    for i in range(runs):
        rng = substream(seed, i)
        u = 1 - 2 * rng.integers(0, 2, d, dtype=np.int8)
        v = 1 - 2 * rng.integers(0, 2, d, dtype=np.int8)
        est = gip_estimate(u, [v], theta=theta, source=ISR(rho, int(rng.integers(2**62))))
        fails += abs(est.estimates[0] - weighted_inner_product(u, v)) > theta
        bits.append(est.repetitions)
    return fails, bits


def toy_isr_error(trials: int, seed: int, theta: float = 0.1, rho: float = 0.5,
                  constant: float = TOY_REPETITION_CONSTANT):
    """Empirical error of the uncertain protocol with f = g on the k=2, n=4 class."""
    T = random_typical_family(2, 4, substream(seed, 0))
    table = parity_protocol_table(T)
    errors = 0
    for i in range(trials):
        rng = substream(seed, 1, i)
        x, y = (int(v) for v in rng.integers(0, 256, 2))
        run = isr_uncertain_protocol(table, table, x, y, theta,
                                     ISR(rho, int(rng.integers(2**62))), UniformPairs(8),
                                     constant=constant)
        errors += run.output != table.evaluate(x, y)
    return errors, trials


def check_gip(cfg: AcceptanceConfig) -> list[CheckResult]:
    out = []
    theta = 0.1
    runs = cfg.trials(10**3)
    for rho in (1.0, 0.5):
        fails, _ = gip_failure_rate(rho, runs, cfg.seed + int(rho * 8))
        rate = fails / runs
        out.append(CheckResult(9, f"inner-product estimator failure rate, rho={rho}",
                               rate <= theta, f"{rate:.4f} <= {theta} over {runs} runs"))
    errors, n = toy_isr_error(cfg.trials(10**4), cfg.seed)
    p = errors / n
    se = math.sqrt(p * (1 - p) / n)
    out.append(CheckResult(9, "uncertain protocol toy class error", p <= theta + 3 * se,
                           f"{p:.4f} <= {theta} + 3*{se:.4f}"))
    u = np.ones(512, dtype=np.int8)
    bits = [len(gip_estimate(u, [u], theta=theta, source=ISR(r, cfg.seed)).message)
            for r in (1.0, 0.5, 0.25)]
    ratios = [b / a for a, b in zip(bits, bits[1:])]
    out.append(CheckResult(9, "communication scales as rho^-2",
                           all(abs(q - 4) <= 0.4 for q in ratios),
                           f"bits {bits}, ratios {[round(q, 4) for q in ratios]}"))
    return out


def check_closeness(cfg: AcceptanceConfig) -> list[CheckResult]:
    eps = 0.25
    ns = (4, 6, 8, 10)
    tvs, secs = _timed(lambda: [closeness_tv(n, eps) for n in ns])
    fit = fit_exponential_bound(ns, tvs, eps)
    ok = (all(v > 0 for v in tvs) and all(b <= a for a, b in zip(tvs, tvs[1:]))
          and fit.beta > 0 and all(v <= fit.bound(n) * (1 + 1e-12) for n, v in zip(ns, tvs))
          and secs < 60)
    return [CheckResult(10, "exact TV of the simulated input law", ok,
                        f"tv {[round(v, 7) for v in tvs]}, C={fit.C:.4f}, beta={fit.beta:.4f}")]


def _typical_families(k: int, n: int):
    blocks = [s for r in range(n + 1) for s in itertools.combinations(range(1, n + 1), r)]
    for choice in itertools.product(blocks, repeat=k):
        fam = SubsetFamily(choice, n)
        if is_typical(fam):
            yield fam


def check_simulation_identity(cfg: AcceptanceConfig) -> list[CheckResult]:
    total, mismatches, example = 0, 0, None
    for k in (1, 2):
        for n in range(1, 5):
            for fam in _typical_families(k, n):
                for U, V in itertools.product(itertools.product((0, 1), repeat=k), repeat=2):
                    got = simulation_protocol(U, V, fam, 0.25, rng=substream(cfg.seed, total),
                                              inner_protocol=ComposedF())
                    want = hd_threshold(k, U, V)
                    total += 1
                    if got != want:
                        mismatches += 1
                        example = example or (k, n, U, V, got, want)
    return [CheckResult(11, "simulation output equals the Hamming threshold", mismatches == 0,
                        f"{total - mismatches}/{total} inputs agree"
                        + (f"; first mismatch (k, n, U, V, got, want) = {example}" if example else ""))]


def oracle_families(seed: int):
    """(name, f, g, dist) with enumerable supports."""
    rng = substream(seed, 12)
    f8, g8 = subset_majority_pair(8, 2)
    fp, gp = subset_parity_pair(3, 3, rng, size=1)
    return [
        ("subset majority", f8, g8, UniformPairs(8)),
        ("xor parity", XorParity(IndexSubset([1, 2], 6)), XorParity(IndexSubset([1, 2, 3], 6)),
         NoisyPairs(2, 3, 0.1)),
        ("maj of parity", fp, gp, NoisyPairs(3, 3, 0.1)),
        ("composed", ComposedF(), Constant(1), NuEpsilon(2, 2, 0.25)),
        ("hamming threshold", HammingThreshold(4), Constant(1), UniformPairs(4)),
        ("maj of parity vs constant", MajOfSubsetParity(SubsetFamily([[1], [2]], 2)),
         Constant(0), NoisyPairs(2, 2, 0.3)),
    ]


def check_oracle_equivalence(cfg: AcceptanceConfig) -> list[CheckResult]:
    out = []
    for i, (name, f, g, dist) in enumerate(oracle_families(cfg.seed)):
        exact = distance_exact(f, g, dist)
        rep = distance_monte_carlo(f, g, dist, cfg.trials(10**5), cfg.seed + i, cfg.workers)
        out.append(CheckResult(12, f"exact vs Monte Carlo distance, {name}",
                               rep.within(exact, 4) if rep.stderr > 0 else rep.estimate == exact,
                               f"exact {exact:.5f}, estimate {rep.estimate:.5f} +- {rep.stderr:.5f}"))
    uniform = np.full((2, 2), 0.25)
    xor = np.array([[0, 1], [1, 0]])
    cases = [
        ("f = x, c = 1", np.array([[0, 0], [1, 1]]), 1, 0.0),
        ("xor, c = 0", xor, 0, 0.5),
        ("xor, c = 1", xor, 1, 0.0),
    ]
    for name, table, c, want in cases:
        err, _ = brute_force_best_protocol(table, uniform, c)
        out.append(CheckResult(12, f"brute force {name}", err == want, f"error {err} == {want}"))
    return out


def _fingerprints(cfg: AcceptanceConfig, workers: int) -> list[dict]:
    seed = cfg.seed
    f, g = subset_majority_pair(64, 8)
    params = reduction_params()
    reps = [
        distance_monte_carlo(f, g, UniformPairs(64), 50_000, seed, workers, chunk=4096),
        sheppard_mc(0.3, 100_000, seed),
        noise_stability_mc(5, 0.4, 100_000, seed),
        gh_distance_mc(params, REDUCTION_M, 2_000, seed),
        shift_game_experiment(params, REDUCTION_M, 4, Side.SUFFIX, "coin", seed),
    ]
    rows = [r.as_row() for r in reps]
    u = np.ones(128, dtype=np.int8)
    est = gip_estimate(u, [u], theta=0.2, source=ISR(0.5, seed))
    rows.append({"gip": est.estimates, "message": est.message.tobytes().hex()})
    return rows


def check_determinism(cfg: AcceptanceConfig) -> list[CheckResult]:
    a = _fingerprints(cfg, 1)
    b = _fingerprints(cfg, 4)
    return [CheckResult(13, "same seed, different worker count", a == b,
                        f"{len(a)} experiments compared")]


CRITERIA = {
    1: check_stretch_example,
    2: check_sheppard,
    3: check_subset_majority_distance,
    4: check_parity_distance,
    5: check_gh_distance,
    6: check_indep_coord,
    7: check_chromatic,
    8: check_shift_game,
    9: check_gip,
    10: check_closeness,
    11: check_simulation_identity,
    12: check_oracle_equivalence,
    13: check_determinism,
}


def run_acceptance(cfg: AcceptanceConfig | None = None, only=None) -> list[CheckResult]:
    cfg = AcceptanceConfig() if cfg is None else cfg
    results = []
    for n, fn in CRITERIA.items():
        if only is None or n in only:
            results.extend(fn(cfg))
    return results
