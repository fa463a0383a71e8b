"""Seeded episode runner and Monte Carlo aggregation.

One replication = one seed. The seed feeds a counter-based generator
(Philox) split into two independent streams, one for rewards and one
for policy randomness, so traces are platform-stable and replication k
never depends on how many other replications run.

Regret is pseudo-regret computed from true means and play counts, not
realized rewards. At every checkpoint the recorded value equals
dot(counts_at_t, gaps) exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .estimation import ClusterHistory, ball_contains, mle
from .instance import BanditInstance
from .models import BERNOULLI_LINK, GAUSSIAN_SCALED
from .policies import (PHASE_INDEX, UCB_D, UNIFORM_RANDOM, VANILLA_UCB,
                       make_policy, vanilla_widths)

# coverage statistics start here so the early index rounds (tiny N_C,
# huge radius) do not mask calibration problems
COVER_MIN_T = 10

POLICY_KINDS = (UCB_D, VANILLA_UCB, UNIFORM_RANDOM)


def default_checkpoints(T: int, n_arms: int) -> list[int]:
    """Geometric grid: powers of two, doublings of M, and T, T/2, T/4."""
    pts = {T, max(1, T // 2), max(1, T // 4)}
    v = 1
    while v <= T:
        pts.add(v)
        v *= 2
    v = n_arms
    while v <= T:
        pts.add(v)
        v *= 2
    return sorted(pts)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one Monte Carlo experiment needs, validated up front."""

    instance: BanditInstance
    policies: tuple[str, ...]
    horizon: int
    replications: int
    seed: int
    kappa: float | None = None
    checkpoints: tuple[int, ...] = ()
    audit: bool = False
    recompute_every: int = 1
    threads: int = 1
    force_generic: bool = False

    def __post_init__(self):
        if self.horizon < self.instance.n_arms:
            raise ConfigurationError(
                f"horizon {self.horizon} is shorter than the initialization "
                f"pass over {self.instance.n_arms} arms")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if not self.policies:
            raise ConfigurationError("no policies requested")
        for p in self.policies:
            if p not in POLICY_KINDS:
                raise ConfigurationError(f"unknown policy kind {p!r}")
        if UCB_D in self.policies and (self.kappa is None or not self.kappa > 0):
            raise ConfigurationError("ucb_d needs a positive kappa")
        if not self.checkpoints:
            object.__setattr__(self, "checkpoints", tuple(
                default_checkpoints(self.horizon, self.instance.n_arms)))
        cps = self.checkpoints
        if list(cps) != sorted(set(cps)) or cps[0] < 1 or cps[-1] != self.horizon:
            raise ConfigurationError(
                "checkpoints must be strictly increasing, >= 1, ending at the horizon")


@dataclass(frozen=True)
class RunTrace:
    """Pseudo-regret trajectory of one seeded run."""

    policy: str
    seed: int
    checkpoints: tuple[int, ...]
    regret: tuple[float, ...]
    final_counts: tuple[int, ...]
    audit: tuple | None = None
    # confidence-ball calibration: per-cluster hit counts over the
    # index rounds with t >= COVER_MIN_T (ucb_d only)
    cover_hits: tuple[int, ...] | None = None
    cover_rounds: int = 0


@dataclass(frozen=True)
class AggregateResult:
    """Per-policy, per-checkpoint mean, sample sd and 95% half-width."""

    policies: tuple[str, ...]
    checkpoints: tuple[int, ...]
    replications: int
    mean: dict[str, tuple[float, ...]]
    sd: dict[str, tuple[float, ...]]
    ci95: dict[str, tuple[float, ...]]


def _regret_at_checkpoints(instance: BanditInstance, choices: np.ndarray,
                           checkpoints: Sequence[int]) -> tuple[list[float], list[int]]:
    gaps = np.asarray(instance.gaps, dtype=np.float64)
    m = instance.n_arms
    regret = []
    for cp in checkpoints:
        counts = np.bincount(choices[:cp], minlength=m).astype(np.float64)
        regret.append(float(counts @ gaps))
    final = np.bincount(choices, minlength=m)
    return regret, [int(c) for c in final]


def _homogeneous_family(instance: BanditInstance) -> str | None:
    fams = {a.family for a in instance.arms}
    if len(fams) == 1:
        return next(iter(fams))
    return None


def _ucb_d_kernel_args(instance: BanditInstance) -> dict:
    """Flat arrays the compiled/pure kernels consume; local arm order
    inside each cluster matches ClusterHistory exactly."""
    offsets = [0]
    cluster_arms = []
    theta_star = []
    lo = []
    hi = []
    for c in instance.clusters:
        cluster_arms.extend(a - 1 for a in c.arm_ids)
        offsets.append(len(cluster_arms))
        theta_star.append(c.theta_star[0])
        lo.append(c.space.lower[0])
        hi.append(c.space.upper[0])
    return {
        "offsets": np.asarray(offsets, dtype=np.int64),
        "cluster_arms": np.asarray(cluster_arms, dtype=np.int64),
        "theta_star": np.asarray(theta_star, dtype=np.float64),
        "lo": np.asarray(lo, dtype=np.float64),
        "hi": np.asarray(hi, dtype=np.float64),
        "mean_true": np.asarray(instance.means, dtype=np.float64),
    }


def _run_kernel(instance: BanditInstance, kind: str, T: int,
                reward_rng: np.random.Generator, kappa: float | None,
                family: str) -> tuple:
    """Dispatch to the flat-array kernels. Returns (choices, rewards,
    cover_hits | None, cover_rounds)."""
    m = instance.n_arms
    if family == GAUSSIAN_SCALED:
        draws = reward_rng.standard_normal(T)
    else:
        draws = reward_rng.random(T)

    if kind == VANILLA_UCB:
        noise = np.asarray(
            [getattr(a, "noise", 0.0) for a in instance.arms], dtype=np.float64)
        two_sig2 = np.asarray(vanilla_widths(instance), dtype=np.float64)
        fam_code = 0 if family == GAUSSIAN_SCALED else 1
        choices, rewards = kernels.run_vanilla(
            T, m, fam_code, np.asarray(instance.means, dtype=np.float64),
            noise, two_sig2, draws)
        return choices, rewards, None, 0

    args = _ucb_d_kernel_args(instance)
    if family == BERNOULLI_LINK:
        is_mirror = np.asarray(
            [1 if a.mirrored else 0 for a in instance.arms], dtype=np.uint8)
        choices, rewards, hits, rounds = kernels.run_ucb_d_bernoulli(
            T, m, is_mirror, args["offsets"], args["cluster_arms"],
            args["theta_star"], args["lo"], args["hi"], args["mean_true"],
            kappa, draws, COVER_MIN_T)
    else:
        scale = np.asarray([a.scale for a in instance.arms], dtype=np.float64)
        noise = np.asarray([a.noise for a in instance.arms], dtype=np.float64)
        a1 = np.asarray(
            [a.scale / (a.noise * a.noise) for a in instance.arms], dtype=np.float64)
        a2 = np.asarray(
            [(a.scale * a.scale) / (a.noise * a.noise) for a in instance.arms],
            dtype=np.float64)
        kcoef = np.asarray(
            [(a.scale * a.scale) / (2.0 * (a.noise * a.noise)) for a in instance.arms],
            dtype=np.float64)
        choices, rewards, hits, rounds = kernels.run_ucb_d_gaussian(
            T, m, args["offsets"], args["cluster_arms"], scale, noise,
            a1, a2, kcoef, args["theta_star"], args["lo"], args["hi"],
            args["mean_true"], kappa, draws, COVER_MIN_T)
    return choices, rewards, tuple(int(h) for h in hits), int(rounds)


def run_single(instance: BanditInstance, policy_kind: str, T: int, seed: int,
               kappa: float | None = None, *,
               checkpoints: Sequence[int] | None = None,
               audit: bool = False, recompute_every: int = 1,
               force_generic: bool = False) -> RunTrace:
    """One seeded episode: select, sample from the true instance, update.

    Fully deterministic in (instance, policy, T, seed, kappa). Episodes
    with no audit requirement and per-round recomputation run on the
    flat-array kernels; the generic policy loop produces bit-identical
    traces and is kept as the reference path.
    """
    if policy_kind not in POLICY_KINDS:
        raise ConfigurationError(f"unknown policy kind {policy_kind!r}")
    if policy_kind == UCB_D and (kappa is None or not kappa > 0):
        raise ConfigurationError("ucb_d needs a positive kappa")
    if T < instance.n_arms:
        raise ConfigurationError(
            f"horizon {T} is shorter than the initialization pass "
            f"over {instance.n_arms} arms")
    if checkpoints is None:
        cps = tuple(default_checkpoints(T, instance.n_arms))
    else:
        cps = tuple(int(c) for c in checkpoints)
        if list(cps) != sorted(set(cps)) or cps[0] < 1 or cps[-1] != T:
            raise ConfigurationError(
                "checkpoints must be strictly increasing, >= 1, ending at the horizon")

    root = np.random.SeedSequence(seed)
    reward_seq, policy_seq = root.spawn(2)
    reward_rng = np.random.Generator(np.random.Philox(reward_seq))

    family = _homogeneous_family(instance)
    kernel_ok = (
        not audit and not force_generic and family is not None
        and policy_kind in (UCB_D, VANILLA_UCB)
        and (policy_kind != UCB_D or recompute_every == 1))

    if kernel_ok:
        choices, _, hits, rounds = _run_kernel(
            instance, policy_kind, T, reward_rng, kappa, family)
        regret, final = _regret_at_checkpoints(instance, choices, cps)
        return RunTrace(policy_kind, seed, cps, tuple(regret), tuple(final),
                        None, hits, rounds)

    policy_rng = np.random.Generator(np.random.Philox(policy_seq))
    policy = make_policy(policy_kind, instance, kappa=kappa, rng=policy_rng,
                         audit=audit, recompute_every=recompute_every)
    cluster_models = {c.cid: instance.cluster_models(c) for c in instance.clusters}
    track_cover = policy_kind == UCB_D and recompute_every == 1
    hits = [0] * instance.n_clusters if track_cover else None
    rounds = 0
    choices = np.empty(T, dtype=np.int64)
    audit_log = [] if audit else None
    for t in range(1, T + 1):
        d = policy.select(t)
        if track_cover and d.phase == PHASE_INDEX and t >= COVER_MIN_T:
            rounds += 1
            for k, c in enumerate(instance.clusters):
                ball = policy.ball_of(c.cid)
                if ball_contains(ball, cluster_models[c.cid], c.theta_star):
                    hits[k] += 1
        arm = d.arm
        model = instance.arm(arm)
        reward = model.sample(instance.cluster_of(arm).theta_star, reward_rng)
        policy.update(arm, reward)
        choices[t - 1] = arm - 1
        if audit:
            audit_log.append(d)

    regret, final = _regret_at_checkpoints(instance, choices, cps)
    return RunTrace(policy_kind, seed, cps, tuple(regret), tuple(final),
                    tuple(audit_log) if audit else None,
                    tuple(hits) if track_cover else None, rounds)


def run_replications(config: ExperimentConfig) -> list[RunTrace]:
    """All (policy, seed) episodes of the experiment, in policy-major
    order with seeds base..base+R-1. Thread count never changes the
    result: jobs are folded in submission order."""
    jobs = [(kind, config.seed + r)
            for kind in config.policies
            for r in range(config.replications)]

    def one(job: tuple[str, int]) -> RunTrace:
        kind, seed = job
        return run_single(
            config.instance, kind, config.horizon, seed, config.kappa,
            checkpoints=config.checkpoints, audit=config.audit,
            recompute_every=config.recompute_every,
            force_generic=config.force_generic)

    if config.threads == 1:
        results = []
        for job in jobs:
            try:
                results.append(one(job))
            except Exception as exc:
                raise RuntimeError(
                    f"replication failed (policy={job[0]}, seed={job[1]}): {exc}"
                ) from exc
        return results

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(one, job) for job in jobs]
        results = []
        for job, fut in zip(jobs, futures):
            try:
                results.append(fut.result())
            except Exception as exc:
                raise RuntimeError(
                    f"replication failed (policy={job[0]}, seed={job[1]}): {exc}"
                ) from exc
    return results


def aggregate_traces(traces: Sequence[RunTrace], policies: Sequence[str],
                     replications: int) -> AggregateResult:
    """Deterministic fold over replication index order."""
    if not traces:
        raise ConfigurationError("no traces to aggregate")
    cps = traces[0].checkpoints
    mean: dict[str, tuple[float, ...]] = {}
    sd: dict[str, tuple[float, ...]] = {}
    ci95: dict[str, tuple[float, ...]] = {}
    by_policy: dict[str, list[RunTrace]] = {p: [] for p in policies}
    for tr in traces:
        by_policy[tr.policy].append(tr)
    for p in policies:
        rows = by_policy[p]
        if len(rows) != replications:
            raise ConfigurationError(
                f"policy {p}: expected {replications} traces, got {len(rows)}")
        arr = np.asarray([tr.regret for tr in rows], dtype=np.float64)
        mu = arr.mean(axis=0)
        if replications > 1:
            dev = arr.std(axis=0, ddof=1)
        else:
            dev = np.zeros_like(mu)
        hw = 1.96 * dev / math.sqrt(replications)
        mean[p] = tuple(float(x) for x in mu)
        sd[p] = tuple(float(x) for x in dev)
        ci95[p] = tuple(float(x) for x in hw)
    return AggregateResult(tuple(policies), cps, replications, mean, sd, ci95)


def run_monte_carlo(config: ExperimentConfig) -> AggregateResult:
    """R replications per policy, seeds base..base+R-1, optionally in
    parallel; the aggregate is identical at any thread count."""
    traces = run_replications(config)
    return aggregate_traces(traces, config.policies, config.replications)


def uniform_analytic_regret(instance: BanditInstance, T: int) -> float:
    """Expected pseudo-regret of the uniform-random baseline: the mean
    gap accrues every round."""
    gaps = instance.gaps
    return T * (sum(gaps) / len(gaps))


def mle_consistency_experiment(instance: BanditInstance, cluster_id: int,
                               schedule: Sequence[int], replications: int,
                               seed: int = 0) -> list[tuple[int, float]]:
    """Round-robin pulls of one cluster; per-n median KL from the truth
    to the pooled MLE across replications.

    KL is measured through the arms: max_i KL_i(theta_star || theta_hat),
    the same geometry the confidence ball uses.
    """
    sched = sorted(set(int(n) for n in schedule))
    if not sched or sched[0] < 1:
        raise ConfigurationError("schedule entries must be >= 1")
    if replications < 1:
        raise ConfigurationError("replications must be >= 1")
    cluster = instance.cluster(cluster_id)
    models = instance.cluster_models(cluster)
    size = cluster.size
    n_max = sched[-1]
    marks = set(sched)

    kls = {n: [] for n in sched}
    children = np.random.SeedSequence(seed).spawn(replications)
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        hist = ClusterHistory(cluster)
        for pull in range(n_max):
            arm_id = cluster.arm_ids[pull % size]
            model = models[pull % size]
            hist.observe(arm_id, model.sample(cluster.theta_star, rng))
            n = pull + 1
            if n in marks:
                est = mle(hist, cluster, models)
                kl = max(m.kl(cluster.theta_star, est.theta_hat) for m in models)
                kls[n].append(kl)
    return [(n, float(np.median(kls[n]))) for n in sched]


# -- CSV emission --------------------------------------------------------


def _fmt(x: float) -> str:
    # repr of a Python float: shortest round-trip form, stable bytes
    return repr(float(x))


def write_trace_csv(path, traces: Sequence[RunTrace]) -> None:
    lines = ["policy,seed,t,regret"]
    for tr in traces:
        for t, r in zip(tr.checkpoints, tr.regret):
            lines.append(f"{tr.policy},{tr.seed},{t},{_fmt(r)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_aggregate_csv(path, agg: AggregateResult) -> None:
    lines = ["policy,t,mean,sd,ci95"]
    for p in agg.policies:
        for k, t in enumerate(agg.checkpoints):
            lines.append(
                f"{p},{t},{_fmt(agg.mean[p][k])},{_fmt(agg.sd[p][k])},"
                f"{_fmt(agg.ci95[p][k])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
