"""Experiment presets binding the simulator, PDE solver, chain analytics and metrics.

Every preset consumes an ExperimentConfig and produces an ExperimentReport
whose bytes are fully determined by (config, master seed).  Replica tasks
are independent; with workers > 1 they run in a process pool and are merged
in replica order, so parallel and serial runs emit identical files.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bdchain, metrics, pde
from .model import ModelParams, make_rate, rate_difference
from .report import ExperimentReport
from .rng import stream
from .simulate import coupled_domination_run, estimate_explosion_time, simulate

__version__ = "0.1.0"

PRESETS = ("lln-sweep", "blowup-sweep", "domination-check", "scheme-order", "bd-hitting")

PHI_REGISTRY = {
    "one": lambda x: np.ones_like(x),
    "one+half-sin2": lambda x: 1.0 + 0.5 * np.sin(np.pi * x) ** 2,
    "one+sin2": lambda x: 1.0 + np.sin(np.pi * x) ** 2,
    "ramp": lambda x: np.asarray(x, dtype=float),
}

# Median band for the lln-sweep pass rule at the largest N.  Calibrated from
# pilot runs of this harness; there are no published numerical experiments to
# anchor to, so this is an artifact-local threshold with generous headroom
# over the observed spread.
DEFAULT_LLN_BAND = 0.5
LLN_BAND_PROVENANCE = ("pilot: master seed 1000, N=128, ell=N, T=0.5, "
                       "10 replicas -> sup errors 0.342..0.413, median 0.383; "
                       "band = 0.5")


@dataclass
class ExperimentConfig:
    preset: str
    n_list: list = field(default_factory=lambda: [32, 64, 128])
    ell_rule: str = "N"
    birth: str = "power:2"
    death: str = "zero"
    phi: str = "one"
    t_end: float = 0.5
    m_stop: float = 50.0
    replicas: int = 20
    seed: int = 0
    sample_count: int = 9
    lln_band: float | None = DEFAULT_LLN_BAND
    band_provenance: str = LLN_BAND_PROVENANCE
    gamma_list: list = field(default_factory=lambda: [0.05, 0.1])
    event_budget: int = 10 ** 10
    y_cap_factor: int = 2
    bd_replicas: int = 100_000

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if any(n < 2 for n in self.n_list):
            raise ValueError("every N must be >= 2")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        ell_of(self.ell_rule, max(self.n_list))  # A2 guard

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls(**json.load(fh))

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def ell_of(rule: str, n: int) -> int:
    """The particles-per-site schedule ell(N).

    Both built-in rules satisfy condition A2 (sum N^3 exp(-c ell(N)) finite
    for every c > 0); schedules growing slower than log N are refused.
    """
    if rule == "N":
        return n
    if rule == "N^{3/4}":
        return int(math.ceil(n ** 0.75))
    if rule.startswith("const:"):
        raise ValueError(
            f"ell rule {rule!r} grows slower than log N and violates condition A2 "
            "(sum_N N^3 exp(-c ell(N)) diverges); use 'N' or 'N^{3/4}'")
    raise ValueError(f"unknown ell rule {rule!r}")


def _params(cfg: ExperimentConfig, n: int, *, birth=None, death=None) -> ModelParams:
    return ModelParams(n=n, ell=ell_of(cfg.ell_rule, n),
                       b=make_rate(birth or cfg.birth),
                       d=make_rate(death or cfg.death),
                       phi=PHI_REGISTRY[cfg.phi])


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config": asdict(cfg),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "version": __version__,
        "note": ("statistical pass bands are pilot-calibrated, not derived: "
                 "the limit theorems carry no finite-N rates"),
    }


def _pool_map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------- lln-sweep

def _lln_task(args):
    cfg_dict, n, replica, times = args
    cfg = ExperimentConfig(**cfg_dict)
    params = _params(cfg, n)
    out = simulate(params, cfg.t_end, cfg.m_stop, times,
                   stream(cfg.seed, n, replica), event_budget=cfg.event_budget)
    return {"n": n, "replica": replica, "events": out.events_processed,
            "snapshots": [(t, s) for t, s in out.snapshots]}


def run_lln_sweep(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Sup-distance of the particle density to the PDE reference over [0, T].

    Pass rule: per-N medians strictly decreasing in N, and the largest-N
    median below the pilot-calibrated band from the config.
    """
    times = np.linspace(0.0, config.t_end, config.sample_count)
    f = rate_difference(make_rate(config.birth), make_rate(config.death))
    refs = {}
    for n in config.n_list:
        n_ref = 4 * n
        u0 = PHI_REGISTRY[config.phi](np.arange(n_ref) / n_ref)
        _, traj, bu = pde.integrate(u0, f, config.t_end, sample_times=times,
                                    u_cap=1e6)
        if bu is not None:
            raise ValueError(f"T={config.t_end} is past the PDE blow-up time "
                             f"{bu.t_est}; lln-sweep needs T < T_max")
        refs[n] = traj

    tasks = [(asdict(config), n, r, tuple(times))
             for n in config.n_list for r in range(config.replicas)]
    rows = _pool_map(_lln_task, tasks, workers)

    per_replica, medians = [], {}
    for n in config.n_list:
        ell = ell_of(config.ell_rule, n)
        errs = []
        for row in rows:
            if row["n"] != n:
                continue
            eps = max(metrics.sup_distance(metrics.field_from_config(snap, ell),
                                           refs[n][i])
                      for i, (_, snap) in enumerate(row["snapshots"]))
            errs.append(eps)
            per_replica.append({"n": n, "replica": row["replica"],
                                "events": row["events"], "sup_error": eps})
        medians[n] = float(np.median(errs))

    ns = sorted(config.n_list)
    slope = float(np.polyfit(np.log([float(n) for n in ns]),
                             np.log([medians[n] for n in ns]), 1)[0]) \
        if len(ns) > 1 else float("nan")
    decreasing = all(medians[a] > medians[b] for a, b in zip(ns, ns[1:]))
    band_ok = config.lln_band is None or medians[ns[-1]] <= config.lln_band
    report = ExperimentReport(
        preset="lln-sweep", per_replica=per_replica,
        aggregates={"medians": {str(n): medians[n] for n in ns},
                    "decay_slope": slope,
                    "strictly_decreasing": decreasing,
                    "band": config.lln_band,
                    "band_provenance": config.band_provenance},
        passed=decreasing and band_ok,
        provenance=_provenance(config),
        plots=[("error_vs_n", "N", "median sup error",
                [("median", [(float(n), medians[n]) for n in ns])], True)])
    return report


# -------------------------------------------------------------- blowup-sweep

def _blowup_task(args):
    cfg_dict, n, replica = args
    cfg = ExperimentConfig(**cfg_dict)
    params = _params(cfg, n)
    out = simulate(params, cfg.t_end, cfg.m_stop, (),
                   stream(cfg.seed, n, replica), event_budget=cfg.event_budget)
    if not out.exploded:
        return {"n": n, "replica": replica, "exploded": 0,
                "t_raw": math.nan, "t_est": math.nan, "events": out.events_processed}
    t_raw, t_est = estimate_explosion_time(out, make_rate(cfg.birth), params)
    return {"n": n, "replica": replica, "exploded": 1, "t_raw": t_raw,
            "t_est": t_est, "events": out.events_processed}


def run_blowup_sweep(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Distribution of the estimated explosion time against the PDE blow-up time.

    Pass rule: largest-N median within +-0.1 of the target and both tail
    fractions at gamma = 0.1 nonincreasing in N.
    """
    f = rate_difference(make_rate(config.birth), make_rate(config.death))
    n_pde = 4 * max(32, min(config.n_list))
    u0 = PHI_REGISTRY[config.phi](np.arange(n_pde) / n_pde)
    t_target = pde.blowup_time(u0, f).t_est

    cfg = config
    if cfg.t_end <= t_target:
        cfg = ExperimentConfig(**{**asdict(config), "t_end": 4.0 * t_target})
    tasks = [(asdict(cfg), n, r) for n in cfg.n_list for r in range(cfg.replicas)]
    rows = _pool_map(_blowup_task, tasks, workers)

    ns = sorted(cfg.n_list)
    agg = {"t_max_pde": t_target, "per_n": {}}
    for n in ns:
        ts = np.array([row["t_est"] for row in rows if row["n"] == n])
        entry = {"median": float(np.median(ts)),
                 "iqr": float(np.subtract(*np.percentile(ts, [75, 25]))),
                 "exploded_fraction": float(np.mean([row["exploded"]
                                                     for row in rows if row["n"] == n]))}
        for g in cfg.gamma_list:
            entry[f"frac_below_gamma_{g}"] = float(np.mean(ts < t_target - g))
            entry[f"frac_above_gamma_{g}"] = float(np.mean(ts > t_target + g))
        agg["per_n"][str(n)] = entry
    g = max(cfg.gamma_list)
    lower = [agg["per_n"][str(n)][f"frac_below_gamma_{g}"] for n in ns]
    upper = [agg["per_n"][str(n)][f"frac_above_gamma_{g}"] for n in ns]
    tails_ok = all(a >= b for a, b in zip(lower, lower[1:])) and \
        all(a >= b for a, b in zip(upper, upper[1:]))
    median_ok = abs(agg["per_n"][str(ns[-1])]["median"] - t_target) <= 0.1
    all_exploded = all(agg["per_n"][str(n)]["exploded_fraction"] == 1.0 for n in ns)
    report = ExperimentReport(
        preset="blowup-sweep", per_replica=rows,
        aggregates={**agg, "tails_nonincreasing": tails_ok,
                    "median_within_band": median_ok},
        passed=tails_ok and median_ok and all_exploded,
        provenance=_provenance(cfg),
        plots=[("explosion_median", "N", "median T_est",
                [("median", [(float(n), agg["per_n"][str(n)]["median"]) for n in ns])],
                False)])
    return report


# ---------------------------------------------------------- domination-check

DOMINATION_VARIANTS = {
    "bounded": {"death": "bounded:0.25", "birth": "power:2+bounded:0.25"},
    "linear": {"death": "linear:1", "birth": "power:2+linear:1"},
}


def _domination_task(args):
    cfg_dict, variant, n, replica = args
    cfg = ExperimentConfig(**cfg_dict)
    params = _params(cfg, n, **DOMINATION_VARIANTS[variant])
    ell_n = params.ell * params.n
    out, ytraj, dominated = coupled_domination_run(
        params, y0=ell_n, t_end=1e9, rng=stream(cfg.seed, n, replica),
        y_cap=cfg.y_cap_factor * ell_n, m_stop=cfg.m_stop,
        event_budget=cfg.event_budget)
    return {"variant": variant, "n": n, "replica": replica,
            "dominated": int(dominated), "y_hit_time": ytraj.hit_time,
            "y_final": ytraj.final, "events": out.events_processed}


def run_domination_check(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Y(t) <= total(t) at every event, plus the explosion-time cross-oracle.

    The bounded-d variant's Y is marginally the dominating birth-death chain,
    so its explosion-time samples (hit time of the cap plus the analytic
    residual) are compared with the recursion value within 3 SE.  In the
    linear-d variant Y's deaths are paired with the system's, which biases Y
    slow; only domination is asserted there.

    Y runs below the system total, so the cap must sit low enough that Y
    reaches it before the system trips its own density stop; replicas where
    that ordering failed would censor the sample, so the pass rule demands
    none (y_cap_factor = 2 leaves a wide margin).
    """
    n = max(config.n_list)
    tasks = [(asdict(config), variant, n, r)
             for variant in DOMINATION_VARIANTS for r in range(config.replicas)]
    rows = _pool_map(_domination_task, tasks, workers)
    all_dominated = all(row["dominated"] for row in rows)

    params = _params(config, n, **DOMINATION_VARIANTS["bounded"])
    ell_n = params.ell * params.n
    spec = bdchain.BirthDeathSpec.from_model(params)
    analytic, _, _ = bdchain.expected_explosion_time(spec, ell_n, 1e-4, floor=1)
    resid, _, _ = bdchain.expected_explosion_time(
        spec, config.y_cap_factor * ell_n, 1e-4, floor=1)
    bounded_rows = [row for row in rows if row["variant"] == "bounded"]
    samples = np.array([row["y_hit_time"] + resid for row in bounded_rows
                        if row["y_hit_time"] is not None])
    # replicas where the system stop fired before Y reached its cap would bias
    # the mean low; demand none so the comparison is unconditional
    y_hit_fraction = len(samples) / len(bounded_rows)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(len(samples)))
    oracle_ok = y_hit_fraction == 1.0 and abs(mean - analytic) <= 3.0 * se
    report = ExperimentReport(
        preset="domination-check", per_replica=rows,
        aggregates={"all_dominated": all_dominated,
                    "replicas_total": len(rows),
                    "y_hit_fraction": y_hit_fraction,
                    "y_explosion_mean": mean, "y_explosion_se": se,
                    "y_explosion_analytic": analytic,
                    "oracle_within_3se": oracle_ok},
        passed=all_dominated and oracle_ok,
        provenance=_provenance(config))
    return report


# ------------------------------------------------------------- scheme-order

def run_scheme_order(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Empirical order of the semidiscrete scheme against a 4x-refined reference.

    Pass rule: least-squares slope of log error vs log N in [-2.3, -1.7].
    """
    f = rate_difference(make_rate(config.birth), make_rate(config.death))
    phi = PHI_REGISTRY[config.phi]
    rows = []
    for n in config.n_list:
        u0 = phi(np.arange(n) / n)
        _, traj, _ = pde.integrate(u0, f, config.t_end)
        u0_ref = phi(np.arange(4 * n) / (4 * n))
        _, traj_ref, _ = pde.integrate(u0_ref, f, config.t_end)
        err = float(np.abs(traj[-1] - traj_ref[-1][::4]).max())
        rows.append({"n": n, "replica": 0, "sup_error": err})
    ns = [row["n"] for row in rows]
    errs = [row["sup_error"] for row in rows]
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    passed = -2.3 <= slope <= -1.7
    report = ExperimentReport(
        preset="scheme-order", per_replica=rows,
        aggregates={"errors": {str(n): e for n, e in zip(ns, errs)},
                    "slope": slope, "slope_band": [-2.3, -1.7]},
        passed=passed,
        provenance=_provenance(config),
        plots=[("order", "N", "sup error",
                [("error", [(float(n), e) for n, e in zip(ns, errs)])], True)])
    return report


# -------------------------------------------------------------- bd-hitting

BD_EXAMPLES = {
    "constant": {"b": "const:3.0", "d": "zero", "states": [0, 1, 5]},
    "quadratic": {"b": "sq1", "d": "zero", "states": [1, 2, 5]},
    "geometric": {"b": "pow2", "d": "one-from-1", "states": [0, 1, 2]},
}


def _bd_rates(tag: str):
    if tag == "const:3.0":
        return lambda r: 3.0 * np.ones_like(np.asarray(r, dtype=float))
    if tag == "sq1":
        # r^2 for r >= 1, 1 at r = 0
        return lambda r: np.maximum(np.asarray(r, dtype=float), 1.0) ** 2
    if tag == "pow2":
        return lambda r: np.exp2(np.asarray(r, dtype=float))
    if tag == "zero":
        return lambda r: np.zeros_like(np.asarray(r, dtype=float))
    if tag == "one-from-1":
        return lambda r: np.where(np.asarray(r, dtype=float) > 0, 1.0, 0.0)
    raise ValueError(tag)


def _bd_mc_passage(spec: bdchain.BirthDeathSpec, r: int, replicas: int,
                   seed: int) -> tuple[float, float]:
    """Monte Carlo mean (and SE) of the first-passage time r -> r+1."""
    samples = bdchain.mc_first_passage(spec, r, r + 1, replicas, stream(seed, r))
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(replicas))


def run_bd_hitting(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Hitting-time recursion against Monte Carlo first passage (3 SE) for the
    example chains, plus exact pure-birth and Basel-sum checks."""
    rows = []
    all_ok = True
    for name, ex in BD_EXAMPLES.items():
        spec = bdchain.BirthDeathSpec(b=_bd_rates(ex["b"]), d=_bd_rates(ex["d"]))
        ht = bdchain.expected_hitting_times(spec, max(ex["states"]) + 1)
        for r in ex["states"]:
            mc_mean, mc_se = _bd_mc_passage(spec, r, config.bd_replicas, config.seed)
            ok = bool(abs(mc_mean - ht.f[r]) <= 3.0 * mc_se)
            all_ok &= ok
            rows.append({"chain": name, "state": r, "recursion": float(ht.f[r]),
                         "mc_mean": mc_mean, "mc_se": mc_se, "within_3se": int(ok),
                         "replica": 0})
    # analytic anchors: pure-birth waits and the Basel sum
    const_spec = bdchain.BirthDeathSpec(b=_bd_rates("const:3.0"), d=_bd_rates("zero"))
    ht = bdchain.expected_hitting_times(const_spec, 10)
    pure_birth_err = float(np.abs(ht.f - 1.0 / 3.0).max())
    sq_spec = bdchain.BirthDeathSpec(b=_bd_rates("sq1"), d=_bd_rates("zero"))
    basel, _, _ = bdchain.expected_explosion_time(sq_spec, 1, 5e-7)
    basel_err = abs(basel - (math.pi ** 2 / 6.0))
    anchors_ok = pure_birth_err <= 1e-6 and basel_err <= 1e-6
    report = ExperimentReport(
        preset="bd-hitting", per_replica=rows,
        aggregates={"all_within_3se": all_ok,
                    "pure_birth_max_err": pure_birth_err,
                    "basel_sum_err": basel_err},
        passed=all_ok and anchors_ok,
        provenance=_provenance(config))
    return report


RUNNERS = {
    "lln-sweep": run_lln_sweep,
    "blowup-sweep": run_blowup_sweep,
    "domination-check": run_domination_check,
    "scheme-order": run_scheme_order,
    "bd-hitting": run_bd_hitting,
}


def run_preset(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    return RUNNERS[config.preset](config, workers)
