"""Shared fixtures and instance builders.

Cheap instances are rebuilt per test.  The Monte Carlo runs backing the
acceptance checks (hundreds of seeded episodes at T=10^4) are expensive,
so they are session-scoped and shared by every test that needs them.
"""

import os
import time

import numpy as np
import pytest

from depbandits import (
    BernoulliLinkArm,
    ClusterDef,
    ExperimentConfig,
    FiniteSupportLinearArm,
    GaussianScaledArm,
    ParameterSpace,
    aggregate_traces,
    build_instance,
    mle_consistency_experiment,
    run_replications,
)
from depbandits.config import load_bundled_config, resolve_kappa

# Thread count for the heavy fixtures only; determinism tests pin their own.
WORKERS = max(1, min(4, os.cpu_count() or 1))


def mirrored_instance(thetas, lo=0.01, hi=0.99):
    """One identity arm plus one mirror arm per cluster."""
    space = ParameterSpace.interval(lo, hi)
    defs = [
        ClusterDef(th, [BernoulliLinkArm(space, link="identity"),
                        BernoulliLinkArm(space, link="mirror")])
        for th in thetas
    ]
    return build_instance(defs)


def scaled_gaussian_instance(specs, lo=0.0, hi=1.0, noise=1.0):
    """specs: iterable of (theta_star, scales) tuples, one per cluster."""
    space = ParameterSpace.interval(lo, hi)
    defs = [
        ClusterDef(th, [GaussianScaledArm(space, s, noise) for s in scales])
        for th, scales in specs
    ]
    return build_instance(defs)


def finite_support_cluster_arms(space, mixing=None):
    support = (0.0, 1.0, 2.0)
    arms = [FiniteSupportLinearArm(space, support)]
    if mixing is not None:
        arms.append(FiniteSupportLinearArm(space, support, mixing))
    return arms


@pytest.fixture
def fig1a_instance():
    return mirrored_instance((0.1, 0.5, 0.2))


@pytest.fixture
def pair_cluster_instance():
    return mirrored_instance((0.3,))


@pytest.fixture
def r2_instance():
    # one cluster observed at scales 1 and 2, plus a separate best arm
    return scaled_gaussian_instance([(0.3, (1.0, 2.0)), (0.9, (1.0,))])


@pytest.fixture
def two_singleton_gaussians():
    return scaled_gaussian_instance([(1.0, (1.0,)), (0.2, (1.0,))])


@pytest.fixture
def wide_gaussian_pair():
    return scaled_gaussian_instance([(0.5, (1.0,)), (0.0, (1.0,))],
                                    lo=-1.0, hi=1.0)


@pytest.fixture
def single_cluster_gaussian():
    return scaled_gaussian_instance([(0.5, (1.0, 2.0))])


@pytest.fixture
def finite_support_instance():
    space = ParameterSpace.simplex_interior(2, 0.01)
    arms = finite_support_cluster_arms(space, [[0.7, 0.3], [0.3, 0.7]])
    lone = finite_support_cluster_arms(space)
    return build_instance([ClusterDef((0.2, 0.3), arms),
                           ClusterDef((0.5, 0.3), lone)])


@pytest.fixture
def pinsker_instance():
    space = ParameterSpace.simplex_interior(1, 0.01)
    support = (0.0, 1.0)
    arms = [FiniteSupportLinearArm(space, support),
            FiniteSupportLinearArm(space, support, [[1.0]])]
    lone = [FiniteSupportLinearArm(space, support)]
    return build_instance([ClusterDef((0.2,), arms),
                           ClusterDef((0.6,), lone)])


def _run_bundle(name, threads):
    bundle = load_bundled_config(name)
    kappa = resolve_kappa(bundle)
    config = ExperimentConfig(
        instance=bundle.instance,
        policies=bundle.policies,
        horizon=bundle.horizon,
        replications=bundle.replications,
        seed=bundle.seed,
        kappa=kappa,
        audit=bundle.audit,
        recompute_every=bundle.recompute_every,
        threads=threads,
    )
    t0 = time.perf_counter()
    traces = run_replications(config)
    elapsed = time.perf_counter() - t0
    agg = aggregate_traces(traces, config.policies, config.replications)
    return {
        "bundle": bundle,
        "config": config,
        "kappa": kappa,
        "traces": traces,
        "aggregate": agg,
        "elapsed": elapsed,
    }


@pytest.fixture(scope="session")
def fig1a_run():
    """Full bundled fig1a benchmark: all policies, T=10^4, 100 reps."""
    return _run_bundle("fig1a", WORKERS)


@pytest.fixture(scope="session")
def fig2_runs():
    """Bundled fig2a (8 arms) and fig2b (40 arms) at T=10^4, 100 reps."""
    return {name: _run_bundle(name, WORKERS) for name in ("fig2a", "fig2b")}


@pytest.fixture(scope="session")
def consistency_table():
    """Round-robin estimation error medians on one mirrored pair."""
    inst = mirrored_instance((0.3,))
    return mle_consistency_experiment(
        inst, 1, (100, 1000, 10000), replications=200, seed=424242)


def mean_at(agg, policy, t):
    """Mean regret of `policy` at checkpoint `t` from an AggregateResult."""
    cp = list(agg.checkpoints)
    return agg.mean[policy][cp.index(t)]


def rng_for(tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(tag)))
