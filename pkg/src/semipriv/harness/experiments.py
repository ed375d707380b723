"""Trial sweeps behind each subcommand.

Every trial draws from generators keyed by ``(root seed, cell, trial)``, so
adding trials never reshuffles earlier ones.  Records are appended to
``records.jsonl`` one line at a time and flushed; rerunning into the same
directory skips trials already on disk.  Wall times go to ``timings.jsonl``
so that records and summaries stay byte-identical across reruns.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache, partial
from typing import Callable

import numpy as np
from scipy.stats import binom

from ..cover import build_cover, cover_failure_bound, cover_radius, public_sample_size
from ..datagen import (
    DataDistribution,
    MixtureDistribution,
    Noisy,
    Realizable,
    UniformRandom,
    dummy_distribution,
    mc_mixture_error,
    mixture_error,
    population_error,
    sample_labeled,
    streams,
)
from ..dpaudit import clopper_pearson, empirical_audit, enumerate_neighbors, enumerate_samples, exact_audit
from ..hypothesis import ConceptClass, Hypothesis, IntervalUnions, UnsupportedPairing, _check_member, hypothesis_to_dict
from ..learner import plan_sizes, public_erm, sspp_learn_detailed, sspp_output_distribution
from ..mechanism import exact_distribution, select_exp_mech
from ..reduction import (
    ReductionConfig,
    completion_probability,
    cover_learner,
    priv_samp_completes,
    reduce_to_private_detailed,
)
from .config import ConfigError, ExperimentConfig

RECORDS = "records.jsonl"
TIMINGS = "timings.jsonl"
SUMMARY = "summary.csv"
CHECKS = "checks.csv"
CONFIG = "config.json"
LEVEL = 0.05  # miscoverage of every reported interval


# --------------------------------------------------------------------------
# output plumbing


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class Summary:
    kind: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def rows_csv(self) -> str:
        return _csv(self.rows)

    def checks_csv(self) -> str:
        return _csv([{"check": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks])


def _csv(rows: list[dict]) -> str:
    names: list[str] = []
    for r in rows:
        names += [k for k in r if k not in names]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class RecordStore:
    """Append-only trial records, optionally backed by a directory."""

    def __init__(self, config: ExperimentConfig, out_dir: str | None):
        self.out_dir = out_dir
        self.records: dict[str, dict] = {}
        self._fh = self._timings = None
        if out_dir is None:
            return
        os.makedirs(out_dir, exist_ok=True)
        cfg_path = os.path.join(out_dir, CONFIG)
        # the trial count may grow between runs; everything else must match
        fingerprint = {k: v for k, v in config.to_dict().items() if k not in ("trials", "out")}
        if os.path.exists(cfg_path):
            with open(cfg_path) as fh:
                old = json.load(fh)
            if {k: v for k, v in old.items() if k not in ("trials", "out")} != fingerprint:
                raise ConfigError(f"{out_dir} holds records from a different configuration")
        with open(cfg_path, "w") as fh:
            fh.write(config.to_json())
        path = os.path.join(out_dir, RECORDS)
        if os.path.exists(path):
            self._load(path)
        self._fh = open(path, "a")
        self._timings = open(os.path.join(out_dir, TIMINGS), "a")

    def _load(self, path):
        good = 0
        with open(path, "rb") as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break
                if not line.endswith(b"\n"):
                    break
                self.records[rec["key"]] = rec
                good += len(line)
        # drop a torn final line left by an interrupted run
        with open(path, "r+b") as fh:
            fh.truncate(good)

    def __contains__(self, key):
        return key in self.records

    def get(self, key):
        return self.records[key]

    def put(self, key: str, record: dict, wall: float) -> dict:
        rec = _jsonable(dict(record, key=key))
        self.records[key] = rec
        if self._fh is not None:
            self._fh.write(json.dumps(rec, sort_keys=True) + "\n")
            self._fh.flush()
            self._timings.write(json.dumps({"key": key, "wall_time": wall}) + "\n")
            self._timings.flush()
        return rec

    def finish(self, summary: Summary) -> None:
        if self.out_dir is None:
            return
        with open(os.path.join(self.out_dir, SUMMARY), "w") as fh:
            fh.write(summary.rows_csv())
        with open(os.path.join(self.out_dir, CHECKS), "w") as fh:
            fh.write(summary.checks_csv())
        self.close()

    def close(self):
        for fh in (self._fh, self._timings):
            if fh is not None:
                fh.close()
        self._fh = self._timings = None


def _timed(fn, args):
    t0 = time.perf_counter()
    rec = fn(*args)
    return rec, time.perf_counter() - t0


def _run_trials(store: RecordStore, prefix: str, trials: range, fn: Callable, args: tuple,
                workers: int = 1) -> list[dict]:
    """Run ``fn(*args, trial)`` for every trial not yet stored; records come back in trial order."""
    keys = [f"{prefix}/{t}" for t in trials]
    todo = [t for t, k in zip(trials, keys) if k not in store]
    jobs = [args + (t,) for t in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(partial(_timed, fn), jobs)
            for t, (rec, wall) in zip(todo, results):
                store.put(f"{prefix}/{t}", rec, wall)
    else:
        for t, job in zip(todo, jobs):
            rec, wall = _timed(fn, job)
            store.put(f"{prefix}/{t}", rec, wall)
    return [store.get(k) for k in keys]


# --------------------------------------------------------------------------
# statistics


def proportion_row(k: int, n: int, prefix: str) -> dict:
    lo, hi = clopper_pearson(k, n, LEVEL)
    return {f"{prefix}_count": k, f"{prefix}_rate": k / n, f"{prefix}_ci_low": lo, f"{prefix}_ci_high": hi}


def quantile_ci(values, q: float) -> tuple[float, float, float]:
    """Sample quantile with a distribution-free order-statistic interval."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    lo = int(binom.ppf(LEVEL / 2, n, q))
    hi = int(binom.ppf(1 - LEVEL / 2, n, q))
    return float(np.quantile(v, q)), float(v[max(lo - 1, 0)]), float(v[min(hi, n - 1)])


def fit_slope(xs, ys) -> tuple[float, list[float]]:
    """Least-squares slope of ``log ys`` against ``log xs``, with residuals."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), (ly - (slope * lx + icpt)).tolist()


# --------------------------------------------------------------------------
# shared pieces


def class_optimum(concept_class: ConceptClass, dist: DataDistribution) -> float:
    """Smallest population error in the class, in closed form."""
    rule = dist.labeling
    if isinstance(rule, UniformRandom):
        return 0.5
    try:
        _check_member(concept_class, rule.target)
    except ValueError as exc:
        raise UnsupportedPairing(f"no closed-form optimum: {exc}") from exc
    return rule.eta if isinstance(rule, Noisy) else 0.0


def _d(concept_class) -> int:
    return concept_class.vc_dim


def _grid(cfg: ExperimentConfig):
    return list(itertools.product(cfg.alphas, cfg.betas, cfg.epsilons))


# --------------------------------------------------------------------------
# cover-rate


def _cover_trial(cfg: ExperimentConfig, cell: int, alpha: float, n_pub: int, trial: int) -> dict:
    rng = streams(cfg.seed, cell, trial)["public"]
    cover = build_cover(cfg.concept, cfg.data.marginal.sample(n_pub, rng))
    radius = cover_radius(cover, cfg.data.marginal)
    return {"seed": [cfg.seed, cell, trial], "alpha": alpha, "n_pub": n_pub, "cover_size": len(cover),
            "radius": radius, "alpha_cover": radius <= alpha + 1e-12}


def run_cover_rate(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    cls = cfg.concept
    if isinstance(cls, IntervalUnions):
        raise ConfigError("cover-rate needs an exact cover check, unavailable for unions of intervals")
    store = RecordStore(cfg, out)
    summary = Summary(cfg.kind)
    for cell, (alpha, beta) in enumerate(itertools.product(cfg.alphas, cfg.betas)):
        n_pub = int(cfg.params.get("n_pub") or public_sample_size(_d(cls), alpha, beta))
        recs = _run_trials(store, f"cover/{cell}", range(cfg.trials), _cover_trial, (cfg, cell, alpha, n_pub), workers)
        fails = sum(not r["alpha_cover"] for r in recs)
        T = len(recs)
        bound = cover_failure_bound(_d(cls), alpha, n_pub)
        sigma = math.sqrt(bound * (1 - bound) / T)
        beta_limit = beta + 3 * math.sqrt(beta / T)
        row = {"alpha": alpha, "beta": beta, "n_pub": n_pub, "trials": T}
        row.update(proportion_row(fails, T, "failure"))
        row.update({"bound": bound, "bound_sigma": sigma, "beta_limit": beta_limit,
                    "max_radius": max(r["radius"] for r in recs)})
        summary.rows.append(row)
        rate = fails / T
        summary.checks.append(Check(f"cover-rate alpha={alpha} beta={beta}: failure <= beta + 3 sqrt(beta/T)",
                                    rate <= beta_limit, f"{rate} vs {beta_limit}"))
        summary.checks.append(Check(f"cover-rate alpha={alpha} beta={beta}: failure <= failure bound",
                                    rate <= bound, f"{rate} vs {bound}"))
    store.finish(summary)
    return summary


# --------------------------------------------------------------------------
# learn-curve


def _learn_trial(cfg: ExperimentConfig, cell: int, alpha: float, epsilon: float, n_priv: int, n_pub: int,
                 with_erm: bool, trial: int) -> dict:
    cls, dist = cfg.concept, cfg.data
    s = streams(cfg.seed, cell, trial)
    public = sample_labeled(dist, n_pub, s["public"])
    private = sample_labeled(dist, n_priv, s["data"])
    res = sspp_learn_detailed(cls, private, public.xs, epsilon, s["mechanism"])
    opt = class_optimum(cls, dist)
    excess = population_error(res.hypothesis, dist) - opt
    try:
        radius = cover_radius(res.cover, dist.marginal)
    except UnsupportedPairing:
        radius = None
    rec = {
        "seed": [cfg.seed, cell, trial], "alpha": alpha, "epsilon": epsilon,
        "n_priv": n_priv, "n_pub": n_pub, "excess": excess, "success": excess <= alpha,
        "draw_index": res.index, "cover_size": len(res.cover), "cover_radius": radius,
        "cover_alpha_status": None if radius is None else radius <= alpha / 2 + 1e-12,
        "hypothesis": hypothesis_to_dict(res.hypothesis),
    }
    if with_erm:
        erm_excess = population_error(public_erm(cls, public), dist) - opt
        rec.update({"erm_excess": erm_excess, "erm_success": erm_excess <= alpha})
    return rec


def _learn_row(recs, alpha, beta, epsilon) -> tuple[dict, Check]:
    T = len(recs)
    wins = sum(r["success"] for r in recs)
    sigma = math.sqrt(beta * (1 - beta) / T)
    need = 1 - beta - 3 * sigma
    row = {"alpha": alpha, "beta": beta, "epsilon": epsilon, "n_priv": recs[0]["n_priv"],
           "n_pub": recs[0]["n_pub"], "trials": T}
    row.update(proportion_row(wins, T, "sspp_success"))
    med, lo, hi = quantile_ci([r["excess"] for r in recs], 0.5)
    row.update({"sspp_median_excess": med, "sspp_median_ci_low": lo, "sspp_median_ci_high": hi,
                "sspp_q90_excess": float(np.quantile([r["excess"] for r in recs], 0.9)),
                "success_threshold": need})
    status = [r["cover_alpha_status"] for r in recs if r["cover_alpha_status"] is not None]
    if status:
        row.update(proportion_row(sum(status), len(status), "cover_ok"))
    if "erm_excess" in recs[0]:
        row.update(proportion_row(sum(r["erm_success"] for r in recs), T, "erm_success"))
        med, lo, hi = quantile_ci([r["erm_excess"] for r in recs], 0.5)
        row.update({"erm_median_excess": med, "erm_median_ci_low": lo, "erm_median_ci_high": hi})
    check = Check(f"learn-curve alpha={alpha} beta={beta} epsilon={epsilon}: success >= 1 - beta - 3 sigma",
                  wins / T >= need, f"{wins}/{T} vs {need:.4f}")
    return row, check


def run_learn_curve(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    cls, dist = cfg.concept, cfg.data
    class_optimum(cls, dist)  # fail fast on pairings without a closed form
    with_erm = bool(cfg.params.get("erm", True))
    store = RecordStore(cfg, out)
    summary = Summary(cfg.kind)
    for cell, (alpha, beta, epsilon) in enumerate(_grid(cfg)):
        plan = plan_sizes(_d(cls), alpha, beta, epsilon)
        n_priv = int(cfg.params.get("n_priv") or plan.n_priv)
        n_pub = int(cfg.params.get("n_pub") or plan.n_pub)
        recs = _run_trials(store, f"learn/{cell}", range(cfg.trials), _learn_trial,
                           (cfg, cell, alpha, epsilon, n_priv, n_pub, with_erm), workers)
        row, check = _learn_row(recs, alpha, beta, epsilon)
        summary.rows.append(row)
        summary.checks.append(check)
    store.finish(summary)
    return summary


# --------------------------------------------------------------------------
# scaling


def _search(success: Callable[[int], float], target: float, lo: int, hi: int, cap: int):
    """Smallest n in (lo, hi] with success(n) >= target, assuming monotonicity.

    Returns (n, probes, flags); every probed size is kept so that a
    non-monotone response can be flagged.
    """
    probes: dict[int, float] = {}

    def ok(n):
        if n not in probes:
            probes[n] = success(n)
        return probes[n] >= target

    flags = []
    if ok(lo):
        flags.append("lower bracket already succeeds")
        return lo, probes, flags
    while not ok(hi):
        if hi >= cap:
            flags.append("upper bracket never succeeds")
            return None, probes, flags
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    sizes = sorted(probes)
    if any(probes[a] >= target and probes[b] < target for a, b in itertools.combinations(sizes, 2)):
        flags.append("non-monotone success in n")
    return hi, probes, flags


def run_scaling(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    """Required public and private sizes per alpha, and the public-ERM contrast.

    A size "succeeds" when at least ``success_fraction`` of the trials reach
    excess at most alpha.  The private axis is searched with n_pub at plan,
    the public axis with n_priv at plan.  The contrast cell (alphas up to
    ``erm_alpha_max``) runs both learners at planned sizes, under label noise
    ``erm_eta`` when that knob is set.
    """
    cls, dist = cfg.concept, cfg.data
    class_optimum(cls, dist)
    target = float(cfg.params.get("success_fraction", 0.9))
    erm_alpha_max = float(cfg.params.get("erm_alpha_max", 0.05))
    private_axis = bool(cfg.params.get("private_axis", True))
    compare_d = int(cfg.params.get("compare_d", 2))
    beta, epsilon = cfg.betas[0], cfg.epsilons[0]
    contrast_cfg = cfg
    if "erm_eta" in cfg.params:
        if isinstance(dist.labeling, UniformRandom):
            raise ConfigError("erm_eta needs a target hypothesis")
        noisy = {"kind": "noisy", "target": hypothesis_to_dict(dist.labeling.target),
                 "eta": float(cfg.params["erm_eta"])}
        contrast_cfg = replace(cfg, distribution=dict(cfg.distribution, labeling=noisy))
    store = RecordStore(cfg, out)
    summary = Summary(cfg.kind)
    alphas = sorted(cfg.alphas, reverse=True)
    found_pub, found_priv, planned_priv = [], [], []
    for ai, alpha in enumerate(alphas):
        plan = plan_sizes(_d(cls), alpha, beta, epsilon)
        planned_priv.append(plan.n_priv)

        def rate(axis, n, n_priv, n_pub):
            recs = _run_trials(store, f"scaling/{ai}/{axis}/{n}", range(cfg.trials), _learn_trial,
                               (cfg, 10_000 + 2 * ai + (axis == "priv"), alpha, epsilon, n_priv, n_pub, False),
                               workers)
            return sum(r["success"] for r in recs) / len(recs)

        n_pub_req, probes, flags = _search(lambda n: rate("pub", n, plan.n_priv, n), target, 1,
                                           plan.n_pub, 16 * plan.n_pub)
        found_pub.append(n_pub_req)
        row = {"alpha": alpha, "beta": beta, "epsilon": epsilon, "success_fraction": target,
               "trials": cfg.trials, "plan_n_pub": plan.n_pub, "plan_n_priv": plan.n_priv,
               "required_n_pub": n_pub_req, "n_pub_probes": len(probes), "n_pub_flags": ";".join(flags)}
        if n_pub_req is not None:
            # binomial interval on the success fraction at the found size
            row.update(proportion_row(round(probes[n_pub_req] * cfg.trials), cfg.trials, "pub_success"))
        if private_axis:
            n_priv_req, probes, flags = _search(lambda n: rate("priv", n, n, plan.n_pub), target, 1,
                                                plan.n_priv, 16 * plan.n_priv)
            found_priv.append(n_priv_req)
            row.update({"required_n_priv": n_priv_req, "n_priv_probes": len(probes),
                        "n_priv_flags": ";".join(flags)})
        row["compare_d"] = compare_d
        row["compare_plan_n_pub"] = plan_sizes(compare_d, alpha, beta, epsilon).n_pub
        if alpha <= erm_alpha_max:
            erm_trials = int(cfg.params.get("erm_trials", cfg.trials))
            recs = _run_trials(store, f"scaling/{ai}/plan", range(erm_trials), _learn_trial,
                               (contrast_cfg, 20_000 + ai, alpha, epsilon, plan.n_priv, plan.n_pub, True), workers)
            lrow, lcheck = _learn_row(recs, alpha, beta, epsilon)
            erm_med = lrow["erm_median_excess"]
            row.update({k: lrow[k] for k in lrow if k.startswith(("sspp_", "erm_"))})
            summary.checks.append(Check(f"scaling alpha={alpha}: sspp at planned sizes passes", lcheck.passed,
                                        lcheck.detail))
            summary.checks.append(Check(f"scaling alpha={alpha}: public ERM with n_pub labels fails (median excess > alpha)",
                                        erm_med > alpha, f"median excess {erm_med:.5f} vs {alpha}"))
        summary.rows.append(row)

    inv = [1 / a for a in alphas]
    slope_rows = []
    if all(n is not None for n in found_pub) and len(alphas) >= 2:
        slope, resid = fit_slope(inv, found_pub)
        slope_rows.append(("required_n_pub", slope, resid, (0.8, 1.3)))
    else:
        summary.checks.append(Check("scaling: required n_pub found for every alpha", False, str(found_pub)))
    if len(alphas) >= 2:
        slope_rows.append(("planned_n_priv", *fit_slope(inv, planned_priv), (1.7, 2.3)))
        if private_axis and all(n is not None for n in found_priv):
            slope_rows.append(("required_n_priv", *fit_slope(inv, found_priv), None))
    for name, slope, resid, band in slope_rows:
        summary.rows.append({"alpha": "slope", "quantity": name, "slope": slope,
                             "residuals": " ".join(f"{r:.4f}" for r in resid),
                             "band_low": band[0] if band else "", "band_high": band[1] if band else ""})
        if band:
            summary.checks.append(Check(f"scaling: slope of {name} vs 1/alpha in [{band[0]}, {band[1]}]",
                                        band[0] <= slope <= band[1], f"{slope:.4f}"))
    above = all(r["compare_plan_n_pub"] > r["plan_n_pub"] for r in summary.rows if "plan_n_pub" in r)
    if compare_d > _d(cls):
        summary.checks.append(Check(f"scaling: planned n_pub for d={compare_d} above d={_d(cls)} at every alpha",
                                    above, ""))
    store.finish(summary)
    return summary


# --------------------------------------------------------------------------
# reduction


def _reduction_trial(cfg: ExperimentConfig, rc: ReductionConfig, alpha: float, epsilon: float, draws: int,
                     trial: int) -> dict:
    cls, dist = cfg.concept, cfg.data
    s = streams(cfg.seed, 0, trial)
    real = sample_labeled(dist, rc.tilde_n, s["data"])
    dummy = dummy_distribution(dist.marginal)
    trace = reduce_to_private_detailed(cover_learner(cls, epsilon, s["mechanism"]), real, rc, s["coins"], dummy)
    del real
    h = trace.hypothesis
    err = population_error(h, dist)
    completed, used = trace.private.completed, int(trace.private.real_positions.size)
    public = trace.public.xs
    del trace
    bound = 100 * rc.n_pub * alpha
    cover = build_cover(cls, public)
    best = min(population_error(cover.hypothesis(k), dist) for k in range(len(cover)))
    mix = MixtureDistribution(rc.p, dist, dummy)
    est = mc_mixture_error(h, mix, draws, s["eval"])
    predicted = mixture_error(h, mix)
    return {
        "seed": [cfg.seed, 0, trial], "n_priv": rc.n_priv, "n_pub": rc.n_pub, "tilde_n": rc.tilde_n, "p": rc.p,
        "hypothesis": hypothesis_to_dict(h), "error": err, "bound": bound, "success": err <= bound,
        "best_cover_error": best, "cover_within_bound": best <= bound,
        "completed": completed, "real_used": used,
        "mixture_measured": est.value, "mixture_predicted": predicted, "mixture_stderr": est.stderr,
        "mixture_z": (est.value - predicted) / est.stderr,
    }


def _completion_trial(cfg: ExperimentConfig, rc: ReductionConfig, run: int) -> dict:
    rng = streams(cfg.seed, 1, run)["coins"]
    return {"seed": [cfg.seed, 1, run], "completed": priv_samp_completes(rc.p, rc.n_priv, rc.tilde_n, rng)}


def run_reduction(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    cls, dist = cfg.concept, cfg.data
    if not isinstance(dist.labeling, Realizable):
        raise ConfigError("the reduction experiment needs realizable data")
    class_optimum(cls, dist)
    alpha, epsilon = cfg.alphas[0], cfg.epsilons[0]
    n_pub = int(cfg.params.get("n_pub", 2))
    rc = ReductionConfig.for_cover_learner(cls, alpha, n_pub, epsilon)
    if cfg.params.get("n_priv"):
        rc = ReductionConfig(int(cfg.params["n_priv"]), n_pub)
    draws = int(cfg.params.get("mixture_draws", 10**6))
    runs = int(cfg.params.get("completion_runs", 10**4))
    store = RecordStore(cfg, out)
    summary = Summary(cfg.kind)

    recs = _run_trials(store, "reduction", range(cfg.trials), _reduction_trial, (cfg, rc, alpha, epsilon, draws),
                       workers)
    T = len(recs)
    bound = 100 * n_pub * alpha
    sigma = math.sqrt((15 / 16) * (1 / 16) / T)
    need = 15 / 16 - 3 * sigma
    wins = sum(r["success"] for r in recs)
    row = {"quantity": "error <= 100 n_pub alpha", "n_priv": rc.n_priv, "n_pub": n_pub, "tilde_n": rc.tilde_n,
           "p": rc.p, "bound": bound, "trials": T, "threshold": need}
    row.update(proportion_row(wins, T, "success"))
    row.update(proportion_row(sum(r["cover_within_bound"] for r in recs), T, "cover_premise"))
    summary.rows.append(row)
    summary.checks.append(Check("reduction: error <= 100 n_pub alpha in >= 15/16 - 3 sigma of trials",
                                wins / T >= need, f"{wins}/{T} vs {need:.4f}"))

    comp = _run_trials(store, "completion", range(runs), _completion_trial, (cfg, rc), workers)
    done = sum(r["completed"] for r in comp)
    c_sigma = math.sqrt(0.99 * 0.01 / runs)
    c_need = 0.99 - 3 * c_sigma
    row = {"quantity": "priv_samp completion", "trials": runs, "threshold": c_need,
           "exact_probability": completion_probability(rc)}
    row.update(proportion_row(done, runs, "completion"))
    summary.rows.append(row)
    summary.checks.append(Check("reduction: completion rate >= 0.99 - 3 sigma", done / runs >= c_need,
                                f"{done}/{runs} vs {c_need:.5f}"))

    zs = [abs(r["mixture_z"]) for r in recs]
    summary.rows.append({"quantity": "mixture identity", "trials": T, "draws": draws, "max_abs_z": max(zs),
                         "max_abs_residual": max(abs(r["mixture_measured"] - r["mixture_predicted"]) for r in recs),
                         "limit_z": 4.0})
    summary.checks.append(Check("reduction: mixture identity residual <= 4 standard errors", max(zs) <= 4.0,
                                f"max |z| = {max(zs):.3f}"))
    store.finish(summary)
    return summary


# --------------------------------------------------------------------------
# audit


def _audit_candidates(cls: ConceptClass, k: int, rng: np.random.Generator) -> list[Hypothesis]:
    cover = build_cover(cls, rng.random(max(k, 2)))
    return [cover.hypothesis(i) for i in range(min(k, len(cover)))]


@lru_cache(maxsize=4)
def _all_pairs(atoms: tuple, n: int) -> list:
    # base samples as multisets: both audited mechanisms ignore example order
    return [pr for base in enumerate_samples(atoms, n) for pr in enumerate_neighbors(base, atoms)]


def _audit_trial(cfg: ExperimentConfig, mechanism: str, epsilon: float, trial: int) -> dict:
    cls = cfg.concept
    n = int(cfg.params.get("n", 6))
    atoms = [float(a) for a in cfg.params.get("atoms", [0.125, 0.375, 0.625, 0.875])]
    public = [float(a) for a in cfg.params.get("public_points", [0.25, 0.5, 0.75])]
    k = int(cfg.params.get("candidates", 8))
    s = streams(cfg.seed, 2, trial)
    if mechanism == "select_exp_mech":
        cands = _audit_candidates(cls, k, s["audit"])

        def counts(sample):
            return np.array([np.count_nonzero(h.predict_array(sample.xs) != sample.ys) for h in cands])

        def exact(sample):
            return exact_distribution(counts(sample), len(sample), epsilon)

        def draw(sample, rng, size):
            c = counts(sample)
            return np.array([select_exp_mech(c, len(sample), epsilon, rng).index for _ in range(size)])

        n_out = len(cands)
    else:
        def exact(sample):
            return sspp_output_distribution(cls, sample, public, epsilon)[1]

        def draw(sample, rng, size):
            p = exact(sample)
            return rng.choice(p.size, size=size, p=p)

        n_out = len(build_cover(cls, public))
    pairs = _all_pairs(tuple(atoms), n)
    report = exact_audit(exact, pairs, epsilon)
    rec = {"seed": [cfg.seed, 2, trial], "mechanism": mechanism, "epsilon": epsilon, "candidates": n_out,
           "exact": report.to_dict()}
    emp = int(cfg.params.get("empirical_trials", 0))
    if emp:
        few = pairs[:: max(1, len(pairs) // int(cfg.params.get("empirical_pairs", 4)))]
        rec["empirical"] = empirical_audit(draw, few, epsilon, emp, 0.95, s["eval"], outcomes=range(n_out)).to_dict()
    return rec


def run_audit(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    store = RecordStore(cfg, out)
    summary = Summary(cfg.kind)
    for mechanism in ("select_exp_mech", "sspp_learn"):
        for ei, epsilon in enumerate(cfg.epsilons):
            rec = _run_trials(store, f"audit/{mechanism}/{ei}", range(1), _audit_trial, (cfg, mechanism, epsilon),
                              workers)[0]
            ex = rec["exact"]
            row = {"mechanism": mechanism, "epsilon": epsilon, "candidates": rec["candidates"],
                   "pairs": ex["pairs_checked"], "max_log_ratio": ex["max_log_ratio"], "passed": ex["passed"],
                   "skipped_outcomes": len(ex["skipped_outcomes"])}
            if "empirical" in rec:
                em = rec["empirical"]
                row.update({"empirical_upper": em["max_log_ratio"], "empirical_lower": em["lower_bound"],
                            "empirical_refuted": em["refuted"], "empirical_confidence": em["confidence"]})
            summary.rows.append(row)
            summary.checks.append(Check(f"audit {mechanism} epsilon={epsilon}: max log-ratio <= epsilon",
                                        bool(ex["passed"]), f"{ex['max_log_ratio']}"))
    store.finish(summary)
    return summary


RUNNERS = {
    "cover-rate": run_cover_rate,
    "learn-curve": run_learn_curve,
    "scaling": run_scaling,
    "reduction": run_reduction,
    "audit": run_audit,
}


def run_experiment(cfg: ExperimentConfig, out: str | None = None, workers: int = 1) -> Summary:
    try:
        return RUNNERS[cfg.kind](cfg, out if out is not None else cfg.out, workers)
    except UnsupportedPairing as exc:
        raise ConfigError(str(exc)) from exc
