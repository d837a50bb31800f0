"""Numerical oracles: Gaussian-approximation checks for subset sums, noise
stability of majority, and the sign-agreement law of correlated Gaussians.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import ExperimentReport, sheppard, substream
from .protocols import CALIBRATION_WIDTH, gip_alice_message, gip_bob_agreement

CALIBRATION_FORMAT = "ctxcomm-calibration v1"


# ---------------------------------------------------------------------------
# Gaussian approximation of the (T-sum, S-sum) pair


@dataclass(frozen=True)
class GaussianCheckReport:
    ell: int
    delta_prime: float
    trials: int
    empirical: tuple[float, float, float, float]
    predicted: tuple[float, float, float, float]
    max_deviation: float
    error_scale: float
    covariance: tuple[tuple[float, float], tuple[float, float]]
    degenerate: bool


def covariance_eigenvalues(delta_prime: float) -> tuple[float, float]:
    """Smallest and largest eigenvalues of [[1, 1-d], [1-d, 1-d]]."""
    c = 1.0 - delta_prime
    root = math.sqrt(5 * c * c - 2 * c + 1)
    return c / 2 - root / 2 + 0.5, c / 2 + root / 2 + 0.5


def orthant_probabilities(rho: float) -> tuple[float, float, float, float]:
    """(++, +-, -+, --) probabilities of a standard bivariate normal with correlation rho."""
    same = 0.5 - sheppard(rho) / 2
    diff = sheppard(rho) / 2
    return (same, diff, diff, same)


def berry_esseen_check(delta_prime: float, ell: int, trials: int, seed: int) -> GaussianCheckReport:
    """Compare sign orthants of (sum over T, sum over S) of X_i Y_i with the Gaussian law.

    |T| = ell and |T \\ S| = round(delta_prime * ell); each product X_i Y_i is a
    uniform sign, so both sums are drawn exactly as shifted binomials.
    """
    if ell < 16:
        raise ValueError("ell must be at least 16")
    if trials < 10**5:
        raise ValueError("at least 10^5 trials are required")
    removed = round(delta_prime * ell)
    kept = ell - removed
    rng = substream(seed, 0)
    s_sum = 2 * rng.binomial(kept, 0.5, size=trials) - kept
    rest = 2 * rng.binomial(removed, 0.5, size=trials) - removed if removed else 0
    t_sum = s_sum + rest
    a, b = t_sum >= 0, s_sum >= 0
    empirical = tuple(float(np.mean(m)) for m in (a & b, a & ~b, ~a & b, ~a & ~b))
    dp = removed / ell
    predicted = orthant_probabilities(math.sqrt(1 - dp))
    lam, _ = covariance_eigenvalues(dp)
    degenerate = lam <= 1e-12
    scale = math.inf if degenerate else 1.0 / (lam**1.5 * math.sqrt(ell))
    norm = np.stack([t_sum, s_sum]).astype(np.float64) / math.sqrt(ell)
    cov = np.cov(norm, bias=True)
    return GaussianCheckReport(
        ell, dp, trials, empirical, predicted,
        max(abs(e - p) for e, p in zip(empirical, predicted)), scale,
        ((float(cov[0, 0]), float(cov[0, 1])), (float(cov[1, 0]), float(cov[1, 1]))),
        degenerate)


def fit_power_law(xs, ys) -> tuple[float, float]:
    """(c, exponent) of the least-squares line through log y = log c + exponent log x."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(math.exp(intercept)), float(slope)


# ---------------------------------------------------------------------------
# noise stability


def _pm_majority(signs: np.ndarray) -> np.ndarray:
    return np.where(signs.sum(axis=-1) >= 0, 1, -1)


def noise_stability_exact(k: int, rho: float) -> float:
    """E[Maj(x) Maj(y)] by enumerating all 4^k weighted input pairs (k <= 10)."""
    if k > 10:
        raise ValueError("exact enumeration is limited to k <= 10")
    pts = np.array(list(itertools.product((1, -1), repeat=k)), dtype=np.int64)
    agree = (pts[:, None, :] == pts[None, :, :]).sum(axis=2)
    w = ((1 + rho) / 2) ** agree * ((1 - rho) / 2) ** (k - agree) / 2**k
    maj = _pm_majority(pts)
    return float((w * np.outer(maj, maj)).sum())


def noise_stability_mc(k: int, rho: float, trials: int, seed: int,
                       chunk: int = 2**16) -> ExperimentReport:
    """Monte Carlo Stab_rho of the +-1 majority on k bits."""
    if k < 1 or trials < 1:
        raise ValueError("k and trials must be positive")
    if not -1 <= rho <= 1:
        raise ValueError("rho must lie in [-1, 1]")
    start = time.perf_counter()
    total = 0
    for c, lo in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - lo)
        rng = substream(seed, c)
        x = 1 - 2 * rng.integers(0, 2, size=(size, k), dtype=np.int8).astype(np.int64)
        keep = rng.random((size, k)) < (1 + rho) / 2
        y = np.where(keep, x, -x)
        total += int((_pm_majority(x) * _pm_majority(y)).sum())
    return ExperimentReport.from_mean("stability", total, trials, trials, seed,
                                      {"k": k, "rho": rho},
                                      wall_clock=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# sign agreement of correlated Gaussians


def sheppard_mc(rho: float, trials: int, seed: int, chunk: int = 2**18) -> ExperimentReport:
    """Monte Carlo Pr[sign(G1) != sign(G2)] for standard normals with correlation rho."""
    if not -1 <= rho <= 1:
        raise ValueError("rho must lie in [-1, 1]")
    start = time.perf_counter()
    hits = 0
    comp = math.sqrt(max(0.0, 1 - rho * rho))
    for c, lo in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - lo)
        g = substream(seed, c).standard_normal((2, size))
        g2 = rho * g[0] + comp * g[1]
        hits += int(np.count_nonzero((g[0] >= 0) != (g2 >= 0)))
    return ExperimentReport.from_counts("sheppard", hits, trials, seed, {"rho": rho},
                                        wall_clock=time.perf_counter() - start)


def vectors_with_inner_product(target: float, d: int) -> tuple[np.ndarray, np.ndarray, float]:
    """u = all ones and v with the nearest achievable average agreement to target."""
    flips = round(d * (1 - target) / 2)
    u = np.ones(d, dtype=np.int8)
    v = u.copy()
    v[:flips] = -1
    return u, v, 1 - 2 * flips / d


@dataclass(frozen=True)
class CalibrationRow:
    rho: float
    target: float
    agreement: float
    stderr: float


@dataclass(frozen=True)
class CalibrationTable:
    rho_grid: tuple[float, ...]
    d: int
    repetitions: int
    seed: int
    rows: tuple[CalibrationRow, ...]

    def to_text(self) -> str:
        head = [f"# {CALIBRATION_FORMAT}",
                "# rho_grid: " + " ".join(repr(r) for r in self.rho_grid),
                f"# d: {self.d}", f"# repetitions: {self.repetitions}", f"# seed: {self.seed}",
                "rho target agreement stderr"]
        body = [f"{r.rho!r} {r.target!r} {r.agreement!r} {r.stderr!r}" for r in self.rows]
        return "\n".join(head + body) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CalibrationTable":
        lines = text.splitlines()
        if not lines or lines[0] != f"# {CALIBRATION_FORMAT}":
            raise ValueError("unrecognized calibration file version")
        meta = {}
        for line in lines[1:5]:
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        if lines[5].split() != ["rho", "target", "agreement", "stderr"]:
            raise ValueError("missing column header")
        rows = tuple(CalibrationRow(*map(float, ln.split())) for ln in lines[6:] if ln.strip())
        return cls(tuple(float(v) for v in meta["rho_grid"].split()), int(meta["d"]),
                   int(meta["repetitions"]), int(meta["seed"]), rows)

    def agreement(self, rho: float) -> list[tuple[float, float]]:
        return [(r.target, r.agreement) for r in self.rows if r.rho == rho]


DEFAULT_TARGETS = (-0.8, -0.4, 0.0, 0.4, 0.8, 1.0)


def sheppard_calibration(rho_grid, d: int = CALIBRATION_WIDTH, repetitions: int = 2**15,
                         seed: int = 0, targets=DEFAULT_TARGETS) -> CalibrationTable:
    """Measured sign-agreement rate of the block-sum estimator per (rho, target)."""
    if d < 64:
        raise ValueError("d must be at least 64")
    counts = np.ones(d, dtype=np.int64)
    rows = []
    for i, rho in enumerate(rho_grid):
        for j, target in enumerate(targets):
            u, v, actual = vectors_with_inner_product(target, d)
            shared = int(substream(seed, i, j).integers(0, 2**63))
            msg = gip_alice_message(u, counts, repetitions, shared)
            p = float(gip_bob_agreement(msg, [v], counts, rho, shared)[0])
            rows.append(CalibrationRow(float(rho), actual, p,
                                       math.sqrt(p * (1 - p) / repetitions)))
    return CalibrationTable(tuple(float(r) for r in rho_grid), d, repetitions, seed, tuple(rows))


def predicted_agreement(rho: float, inner: float) -> float:
    """1 - arccos(rho * inner)/pi for correlated Gaussian projections."""
    return 1.0 - sheppard(rho * inner)
