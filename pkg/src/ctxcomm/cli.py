"""Command-line experiment runner with strict JSON configs and CSV/JSON reports.

Exit status: 0 on success, 2 on an invalid configuration, 3 when a check fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance
from .core import ExperimentReport, IndexSubset, SubsetFamily, sign, substream
from .functions import (
    MajOfSubsetParity,
    distance_monte_carlo,
    subset_majority_pair,
    subset_parity_pair,
)
from .protocols import (
    brute_force_best_protocol,
    certain_parity_protocol,
    gip_alice_message,
    hash_set_recovery,
    protocol_tables,
)
from .reductions import (
    Pi1Params,
    Side,
    chromatic_lower_bound,
    chromatic_number_exact,
    odd_shift_instances,
    shift_game_experiment,
    shift_graph,
    stretch_worked_example,
)
from .samplers import KappaEpsilon, NoisyPairs, NuEpsilon, Public, UniformPairs
from .simulation import closeness_tv, intermediate_info_cost
from .verifiers import (
    CalibrationTable,
    berry_esseen_check,
    noise_stability_mc,
    sheppard_calibration,
    sheppard_mc,
)

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3
CONFIG_KEYS = ("kind", "params", "trials", "master_seed", "worker_count", "out")
DEFAULT_SEED = 20240601


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# per-kind parameters


@dataclass(frozen=True)
class DistanceParams:
    family: str = "subset-majority"
    ell: int = 1000
    removed: int = 40
    k: int = 99
    n: int = 128
    delta_prime: float = 0.02
    same: bool = False

    def validate(self):
        if self.family not in ("subset-majority", "subset-parity"):
            raise ConfigError("family must be 'subset-majority' or 'subset-parity'")
        if self.family == "subset-majority" and not 0 <= self.removed <= self.ell:
            raise ConfigError("need 0 <= removed <= ell")
        if self.family == "subset-parity":
            NoisyPairs(self.k, self.n, self.delta_prime)


@dataclass(frozen=True)
class StabilityParams:
    k: int = 3
    rho: float = 0.5

    def validate(self):
        if self.k < 1 or not -1 <= self.rho <= 1:
            raise ConfigError("need k >= 1 and rho in [-1, 1]")


@dataclass(frozen=True)
class SheppardParams:
    rho: float = 0.5

    def validate(self):
        if not -1 <= self.rho <= 1:
            raise ConfigError("rho must lie in [-1, 1]")


@dataclass(frozen=True)
class GipParams:
    d: int = 512
    rho: float = 0.5
    theta: float = 0.1

    def validate(self):
        if self.d < 1 or not 0 < self.rho <= 1 or not 0 < self.theta < 1:
            raise ConfigError("need d >= 1, rho in (0, 1], theta in (0, 1)")


@dataclass(frozen=True)
class IsrProtocolParams:
    rho: float = 0.5
    theta: float = 0.1
    constant: float = acceptance.TOY_REPETITION_CONSTANT

    def validate(self):
        if not 0 < self.rho <= 1 or not 0 < self.theta < 1 or self.constant <= 0:
            raise ConfigError("need rho in (0, 1], theta in (0, 1), constant > 0")


@dataclass(frozen=True)
class SetRecoveryParams:
    universe: int = 4096
    ell: int = 256
    removed: int = 4
    failure_prob: float = 0.01

    def validate(self):
        if not 0 <= self.removed <= self.ell <= self.universe:
            raise ConfigError("need 0 <= removed <= ell <= universe")
        if not 0 < self.failure_prob < 1:
            raise ConfigError("failure_prob must lie in (0, 1)")


@dataclass(frozen=True)
class ShiftGameParams:
    oracle: str = "exact"
    side: str = "prefix"
    m: int = acceptance.REDUCTION_M
    epsilon: float = acceptance.REDUCTION_EPSILON
    delta: float = acceptance.REDUCTION_DELTA
    eta: float = acceptance.REDUCTION_ETA
    alpha: float = acceptance.REDUCTION_ALPHA

    def validate(self):
        if self.oracle not in ("exact", "coin"):
            raise ConfigError("oracle must be 'exact' or 'coin'")
        if self.side not in ("prefix", "suffix"):
            raise ConfigError("side must be 'prefix' or 'suffix'")
        params = Pi1Params.from_delta(self.epsilon, self.delta, self.eta, self.alpha)
        if self.m < params.t:
            raise ConfigError(f"m must be at least t = {params.t}")


@dataclass(frozen=True)
class ChromaticParams:
    max_vertices: int = 64

    def validate(self):
        if not 1 <= self.max_vertices <= 64:
            raise ConfigError("max_vertices must lie in [1, 64]")


@dataclass(frozen=True)
class ClosenessParams:
    ns: tuple = (4, 6, 8, 10)
    eps: float = 0.25
    k: int = 1

    def validate(self):
        if any(n < 2 or n % 2 for n in self.ns) or not 0 < self.eps <= 0.5 or self.k < 1:
            raise ConfigError("need even n >= 2, eps in (0, 1/2], k >= 1")
        if max(self.ns) * self.k > 12:
            raise ConfigError("k * n must stay at most 12 for exact enumeration")


@dataclass(frozen=True)
class InfoCostParams:
    k: int = 2
    n: int = 2
    eps: float = 0.5
    law: str = "kappa"
    message: str = "parities"

    def validate(self):
        if self.law not in ("kappa", "nu"):
            raise ConfigError("law must be 'kappa' or 'nu'")
        if self.message not in ("parities", "input", "nothing"):
            raise ConfigError("message must be 'parities', 'input' or 'nothing'")
        if self.k * self.n > 6:
            raise ConfigError("k * n must stay at most 6 for exact enumeration")
        (KappaEpsilon if self.law == "kappa" else NuEpsilon)(self.k, self.n, self.eps)


@dataclass(frozen=True)
class BerryEsseenParams:
    delta_prime: float = 0.04
    ells: tuple = (64, 256, 1024)

    def validate(self):
        if any(e < 16 for e in self.ells) or not 0 <= self.delta_prime < 1:
            raise ConfigError("need every ell >= 16 and delta_prime in [0, 1)")


@dataclass(frozen=True)
class BruteForceParams:
    function: str = "xor"
    c: int = 1

    def validate(self):
        if self.function not in ("xor", "identity", "and"):
            raise ConfigError("function must be 'xor', 'identity' or 'and'")
        if not 0 <= self.c <= 2:
            raise ConfigError("c must lie in [0, 2]")


@dataclass(frozen=True)
class SuiteParams:
    name: str = "acceptance"
    fast: bool = False
    criteria: tuple = ()

    def validate(self):
        if self.name not in SUITES:
            raise ConfigError(f"unknown suite {self.name!r}")


@dataclass(frozen=True)
class EmptyParams:
    def validate(self):
        return None


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: object
    trials: int
    master_seed: int = DEFAULT_SEED
    worker_count: int = 1
    out: str | None = None

    def echo(self) -> dict:
        return dataclasses.asdict(self.params)


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        return tuple(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string")
    return value


def build_params(kind: str, raw: dict):
    cls, _, _ = KINDS[kind]
    defaults = {f.name: f.default for f in dataclasses.fields(cls)}
    unknown = set(raw) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {kind}: {sorted(unknown)}")
    values = {k: _coerce(k, v, defaults[k]) for k, v in raw.items()}
    params = cls(**values)
    try:
        params.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return params


def load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    return raw


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def make_config(kind: str | None, args) -> ExperimentConfig:
    raw = load_config_file(args.config) if args.config else {}
    file_kind = raw.get("kind")
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(f"config kind {file_kind!r} does not match subcommand {kind!r}")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise ConfigError("params must be a JSON object")
    params_raw = {**params_raw, **_parse_set(getattr(args, "set", None))}
    if kind == "suite" and getattr(args, "fast", False):
        params_raw["fast"] = True
    if kind == "suite" and getattr(args, "name", None):
        params_raw["name"] = args.name
    params = build_params(kind, params_raw)
    trials = args.trials if args.trials is not None else raw.get("trials", KINDS[kind][2])
    seed = args.seed if args.seed is not None else raw.get("master_seed", DEFAULT_SEED)
    workers = args.workers if args.workers is not None else raw.get("worker_count", 1)
    out = args.out if args.out is not None else raw.get("out")
    for name, v in (("trials", trials), ("master_seed", seed), ("worker_count", workers)):
        if isinstance(v, bool) or not isinstance(v, int) or v < (0 if name == "master_seed" else 1):
            raise ConfigError(f"{name} must be a positive integer")
    if seed >= 2**64:
        raise ConfigError("master_seed must fit in 64 bits")
    return ExperimentConfig(kind, params, trials, seed, workers, out)


# ---------------------------------------------------------------------------
# runners: each returns a list of reports


def _echo(cfg: ExperimentConfig, **extra) -> dict:
    return {**cfg.echo(), **extra}


def _with_params(rep: ExperimentReport, params: dict) -> ExperimentReport:
    rep.params = dict(params)
    return rep


def run_distance(cfg):
    p = cfg.params
    if p.family == "subset-majority":
        f, g = subset_majority_pair(p.ell, p.removed)
        dist = UniformPairs(p.ell)
    else:
        f, g = subset_parity_pair(p.k, p.n, substream(cfg.master_seed, 4))
        dist = NoisyPairs(p.k, p.n, p.delta_prime)
    if p.same:
        g = f
    rep = distance_monte_carlo(f, g, dist, cfg.trials, cfg.master_seed, cfg.worker_count)
    return [_with_params(rep, _echo(cfg))]


def run_stability(cfg):
    rep = noise_stability_mc(cfg.params.k, cfg.params.rho, cfg.trials, cfg.master_seed)
    return [_with_params(rep, _echo(cfg))]


def run_sheppard(cfg):
    return [_with_params(sheppard_mc(cfg.params.rho, cfg.trials, cfg.master_seed), _echo(cfg))]


def run_gip(cfg):
    p = cfg.params
    start = time.perf_counter()
    fails, reps = acceptance.gip_failure_rate(p.rho, cfg.trials, cfg.master_seed, p.d, p.theta)
    rep = ExperimentReport.from_counts("gip", fails, cfg.trials,
                                       cfg.master_seed, _echo(cfg, bits=reps[0]),
                                       wall_clock=time.perf_counter() - start)
    return [rep]


def run_isr_protocol(cfg):
    p = cfg.params
    start = time.perf_counter()
    errors, n = acceptance.toy_isr_error(cfg.trials, cfg.master_seed, p.theta, p.rho, p.constant)
    return [ExperimentReport.from_counts("isr-protocol", errors, n, cfg.master_seed, _echo(cfg),
                                         wall_clock=time.perf_counter() - start)]


def run_set_recovery(cfg):
    p = cfg.params
    start = time.perf_counter()
    failures, bits = 0, 0
    for i in range(cfg.trials):
        rng = substream(cfg.master_seed, i)
        chosen = rng.choice(p.universe, size=p.ell, replace=False) + 1
        S = IndexSubset(sorted(chosen[: p.ell - p.removed].tolist()), p.universe)
        T = IndexSubset(sorted(chosen.tolist()), p.universe)
        res = hash_set_recovery(S, T, p.failure_prob, Public(int(rng.integers(2**62))))
        failures += res.recovered is None or res.recovered != S
        bits = res.bits_communicated
    return [ExperimentReport.from_counts("set-recovery", failures, cfg.trials, cfg.master_seed,
                                         _echo(cfg, bits=bits),
                                         wall_clock=time.perf_counter() - start)]


def run_shift_game(cfg):
    p = cfg.params
    params = Pi1Params.from_delta(p.epsilon, p.delta, p.eta, p.alpha)
    rep = shift_game_experiment(params, p.m, cfg.trials, Side(p.side), p.oracle, cfg.master_seed)
    return [_with_params(rep, _echo(cfg, t=params.t, k=params.k))]


def _exact_report(experiment_id, value, cfg, **params) -> ExperimentReport:
    return ExperimentReport(experiment_id, 1, float(value), 0.0, cfg.master_seed, params)


def run_chromatic(cfg):
    out = []
    for m, t in odd_shift_instances(cfg.params.max_vertices):
        start = time.perf_counter()
        chi = chromatic_number_exact(shift_graph(m, t))
        rep = _exact_report("chromatic", chi, cfg, m=m, t=t,
                            lower_bound=chromatic_lower_bound(m, t))
        rep.wall_clock = time.perf_counter() - start
        out.append(rep)
    return out


def run_closeness(cfg):
    p = cfg.params
    return [_exact_report("closeness", closeness_tv(n, p.eps, p.k), cfg, n=n, eps=p.eps, k=p.k)
            for n in p.ns]


def _info_message(kind: str):
    def parities(batch):
        par = (batch.x & batch.s).sum(axis=2) & 1
        return par @ (1 << np.arange(par.shape[1] - 1, -1, -1))

    def full_input(batch):
        flat = np.concatenate([batch.s.reshape(len(batch.s), -1),
                               batch.x.reshape(len(batch.x), -1)], axis=1).astype(np.int64)
        return flat @ (1 << np.arange(flat.shape[1] - 1, -1, -1, dtype=np.int64))

    def nothing(batch):
        return np.zeros(len(batch.x), dtype=np.int64)

    return {"parities": parities, "input": full_input, "nothing": nothing}[kind]


def run_info_cost(cfg):
    p = cfg.params
    dist = (KappaEpsilon if p.law == "kappa" else NuEpsilon)(p.k, p.n, p.eps)
    value = intermediate_info_cost(_info_message(p.message), dist)
    return [_exact_report("info-cost", value, cfg, **cfg.echo())]


def run_berry_esseen(cfg):
    out = []
    trials = max(cfg.trials, 10**5)
    for ell in cfg.params.ells:
        start = time.perf_counter()
        r = berry_esseen_check(cfg.params.delta_prime, ell, trials, cfg.master_seed)
        rep = ExperimentReport("berry-esseen", trials, r.max_deviation, 0.0, cfg.master_seed,
                               {"delta_prime": cfg.params.delta_prime, "ell": ell,
                                "error_scale": r.error_scale},
                               wall_clock=time.perf_counter() - start)
        out.append(rep)
    return out


BRUTE_FORCE_TABLES = {
    "xor": np.array([[0, 1], [1, 0]]),
    "identity": np.array([[0, 0], [1, 1]]),
    "and": np.array([[0, 0], [0, 1]]),
}


def run_bruteforce(cfg):
    p = cfg.params
    err, witness = brute_force_best_protocol(BRUTE_FORCE_TABLES[p.function],
                                             np.full((2, 2), 0.25), p.c)
    rep = _exact_report("bruteforce", err, cfg, **cfg.echo())
    rep.extra["witness"] = list(witness)
    return [rep]


# ---------------------------------------------------------------------------
# suites


@dataclass
class SuiteOutcome:
    lines: list[str] = field(default_factory=list)
    passed: bool = True

    def add(self, ok: bool, text: str) -> None:
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {text}")
        self.passed &= ok


def suite_acceptance(cfg) -> SuiteOutcome:
    acfg = acceptance.AcceptanceConfig(cfg.params.fast, cfg.master_seed, cfg.worker_count)
    only = set(cfg.params.criteria) or None
    out = SuiteOutcome()
    for res in acceptance.run_acceptance(acfg, only):
        out.lines.append(res.line())
        out.passed &= res.passed
    return out


def suite_invariants(cfg) -> SuiteOutcome:
    out = SuiteOutcome()
    seed = cfg.master_seed
    out.add(sign(0) == 1, "Sign(0) = 1")
    f, _ = subset_majority_pair(16, 2)
    rep = distance_monte_carlo(f, f, UniformPairs(16), 1000, seed)
    out.add(rep.estimate == 0.0, "distance of a function to itself is 0")
    a = distance_monte_carlo(*subset_majority_pair(32, 4), UniformPairs(32), 20_000, seed, 1, 1024)
    b = distance_monte_carlo(*subset_majority_pair(32, 4), UniformPairs(32), 20_000, seed, 3, 1024)
    out.add(a.as_row() == b.as_row(), "worker count does not change estimates")
    fam = SubsetFamily([[1, 2], [2, 3]], 3)
    rng = substream(seed, 1)
    x = rng.integers(0, 2, (2, 3), dtype=np.uint8)
    runs = [certain_parity_protocol(fam, x, rng.integers(0, 2, (2, 3), dtype=np.uint8))
            for _ in range(3)]
    out.add(len({r.message.array().tobytes() for r in runs}) == 1,
            "one-way message ignores Bob's input")
    u = np.ones(64, dtype=np.int8)
    counts = np.ones(64, dtype=np.int64)
    m1 = gip_alice_message(u, counts, 512, seed)
    m2 = gip_alice_message(u, counts, 512, seed)
    out.add(np.array_equal(m1, m2), "inner-product sketch is a pure function of Alice's view")
    table = protocol_tables(MajOfSubsetParity(SubsetFamily([[1, 2], [2]], 2)),
                            NoisyPairs(2, 2, 0.1))
    errs = [brute_force_best_protocol(*table, c, budget=2**32)[0] for c in (0, 1)]
    out.add(errs[1] <= errs[0], f"brute-force error nonincreasing in c: {errs}")
    chi = chromatic_number_exact(shift_graph(5, 3))
    out.add(chi >= chromatic_lower_bound(5, 3), f"chromatic number of G(5,3) = {chi}")
    tvs = [closeness_tv(n, 0.25) for n in (4, 6)]
    out.add(tvs[1] <= tvs[0], "closeness TV decreases from n=4 to n=6")
    return out


CALIBRATION_RHOS = (0.25, 0.5, 1.0)


def suite_calibration(cfg) -> SuiteOutcome:
    out = SuiteOutcome()
    table = sheppard_calibration(CALIBRATION_RHOS, repetitions=2**15, seed=cfg.master_seed)
    text = table.to_text()
    if cfg.out:
        path = Path(cfg.out) / "sheppard_calibration.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        out.lines.append(f"wrote {path}")
    out.add(CalibrationTable.from_text(text) == table, "calibration table round-trips")
    for rho in CALIBRATION_RHOS:
        agr = [p for _, p in sorted(table.agreement(rho))]
        out.add(all(b > a for a, b in zip(agr, agr[1:])),
                f"agreement increasing in target at rho={rho}")
    ones = [r.agreement for r in table.rows if r.rho == 1.0 and r.target == 1.0]
    out.add(ones == [1.0], "rho = 1, inner product 1 gives agreement 1")
    return out


SUITES = {"acceptance": suite_acceptance, "invariants": suite_invariants,
          "calibration": suite_calibration}


# ---------------------------------------------------------------------------
# registry and output


KINDS = {
    "distance": (DistanceParams, run_distance, 10**5),
    "stability": (StabilityParams, run_stability, 10**6),
    "sheppard": (SheppardParams, run_sheppard, 10**6),
    "gip": (GipParams, run_gip, 100),
    "isr-protocol": (IsrProtocolParams, run_isr_protocol, 1000),
    "set-recovery": (SetRecoveryParams, run_set_recovery, 1000),
    "shift-game": (ShiftGameParams, run_shift_game, 200),
    "chromatic": (ChromaticParams, run_chromatic, 1),
    "closeness": (ClosenessParams, run_closeness, 1),
    "info-cost": (InfoCostParams, run_info_cost, 1),
    "berry-esseen": (BerryEsseenParams, run_berry_esseen, 10**5),
    "bruteforce": (BruteForceParams, run_bruteforce, 1),
    "stretch-figure1": (EmptyParams, None, 1),
    "suite": (SuiteParams, None, 1),
}

CSV_TAIL = ("trials", "estimate", "stderr", "ci95_lo", "ci95_hi", "seed")


def reports_to_csv(reports) -> str:
    rows = [r.as_row() for r in reports]
    names = []
    for row in rows:
        for key in row:
            if key not in names and key != "experiment_id" and key not in CSV_TAIL:
                names.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, ["experiment_id", *names, *CSV_TAIL], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(v) for k, v in row.items()})
    return buf.getvalue()


def _csv_value(v):
    if isinstance(v, (list, tuple)):
        return " ".join(map(str, v))
    if isinstance(v, float):
        return repr(v)
    return v


def reports_to_json(cfg: ExperimentConfig, reports) -> str:
    doc = {"kind": cfg.kind, "master_seed": cfg.master_seed, "worker_count": cfg.worker_count,
           "params": cfg.echo(), "reports": []}
    for r in reports:
        lo, hi = r.ci95
        doc["reports"].append({
            "experiment_id": r.experiment_id, "params": r.params, "trials": r.trials,
            "estimate": r.estimate, "stderr": r.stderr, "ci95": [lo, hi],
            "wall_clock": r.wall_clock, "seed": r.seed, **({"extra": r.extra} if r.extra else {})})
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(type(o).__name__)


def execute(cfg: ExperimentConfig, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    if cfg.kind == "stretch-figure1":
        tuples = stretch_worked_example()
        text = "".join(f"{name}: {tuple(v)}\n" for name, v in tuples.items())
        stdout.write(text)
        if cfg.out:
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
            (Path(cfg.out) / "stretch-figure1.txt").write_text(text)
        return EXIT_OK
    if cfg.kind == "suite":
        outcome = SUITES[cfg.params.name](cfg)
        text = "".join(line + "\n" for line in outcome.lines)
        stdout.write(text)
        if cfg.out:
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
            (Path(cfg.out) / f"suite-{cfg.params.name}.txt").write_text(text)
        return EXIT_OK if outcome.passed else EXIT_CHECK
    _, runner, _ = KINDS[cfg.kind]
    reports = runner(cfg)
    csv_text = reports_to_csv(reports)
    stdout.write(csv_text)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.kind}.csv").write_text(csv_text)
        (out / f"{cfg.kind}.json").write_text(reports_to_json(cfg, reports))
    return EXIT_OK


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--trials", type=int, help="number of trials")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--fast", action="store_true", help="tenfold fewer trials (suite)")
    parser.add_argument("--out", help="directory for CSV/JSON reports")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one experiment parameter (JSON value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxcomm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        if kind == "suite":
            continue
        _common(sub.add_parser(kind, help=f"run the {kind} experiment"))
    suite = sub.add_parser("suite", help="run a named check battery")
    suite.add_argument("name", choices=sorted(SUITES))
    _common(suite)
    run = sub.add_parser("run", help="run the experiment named by a config or --kind")
    run.add_argument("--kind", help="experiment kind (overrides nothing in the config)")
    _common(run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    kind = args.command
    if kind == "run":
        kind = args.kind
        if kind is None and not args.config:
            print("error: run needs --config or --kind", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = make_config(kind, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
