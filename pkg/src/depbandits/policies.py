"""Arm-selection policies behind one sequential select/update interface.

All policies share the protocol: select(t) proposes an arm for round t,
update(arm, reward) feeds the observed reward back. Ties always break
to the lowest arm id so traces are reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ProtocolError
from .estimation import (ClusterHistory, _arm_sup_on_interval, ball_interval,
                         make_ball, mle, sup_mean_over_ball)
from .instance import BanditInstance

UCB_D = "ucb_d"
VANILLA_UCB = "vanilla_ucb"
UNIFORM_RANDOM = "uniform_random"

PHASE_INIT = "initialization"
PHASE_INDEX = "index"


def vanilla_widths(instance: BanditInstance) -> list[float]:
    """Per-arm 2*sigma^2 terms for the classical UCB exploration bonus."""
    return [2.0 * a.subgaussian().sigma ** 2 for a in instance.arms]


@dataclass(frozen=True)
class Decision:
    t: int
    arm: int
    phase: str
    indices: tuple[float, ...] | None = None


class Policy:
    """Base select/update protocol with round bookkeeping."""

    kind: str = ""

    def __init__(self, instance: BanditInstance):
        self.instance = instance
        self.n_arms = instance.n_arms
        self._rounds_done = 0
        self._pending: Decision | None = None

    def _pre_select(self, t: int) -> None:
        if self._pending is not None:
            raise ProtocolError(
                f"select called for round {t} while round "
                f"{self._pending.t} still awaits its update")
        if t != self._rounds_done + 1:
            raise ProtocolError(
                f"select called for round {t}; expected round {self._rounds_done + 1}")

    def select(self, t: int) -> Decision:
        raise NotImplementedError

    def update(self, arm: int, reward: float) -> None:
        if self._pending is None:
            raise ProtocolError("update called with no pending decision")
        if arm != self._pending.arm:
            raise ProtocolError(
                f"update for arm {arm} does not match the pending decision "
                f"(arm {self._pending.arm})")
        self._apply(arm, reward)
        self._pending = None
        self._rounds_done += 1

    def _apply(self, arm: int, reward: float) -> None:
        raise NotImplementedError

    def _emit(self, decision: Decision) -> Decision:
        self._pending = decision
        return decision


class UcbDPolicy(Policy):
    """Algorithm: one initialization pass over the arms, then per round
    recompute every cluster's MLE and play the arm with the largest
    optimistic mean over its cluster's confidence ball."""

    kind = UCB_D

    def __init__(self, instance: BanditInstance, kappa: float, *,
                 audit: bool = False, recompute_every: int = 1):
        if not kappa > 0:
            raise ConfigurationError("kappa must be positive")
        if recompute_every < 1:
            raise ConfigurationError("recompute_every must be >= 1")
        super().__init__(instance)
        self.kappa = kappa
        self.audit = audit
        self.recompute_every = recompute_every
        self.histories = {c.cid: ClusterHistory(c) for c in instance.clusters}
        self._models = {c.cid: instance.cluster_models(c) for c in instance.clusters}
        self._estimates = {}
        # interval optimisation applies when the weighted KL over the
        # cluster is unimodal around the center with monotone arm means
        self._interval_ok = {
            c.cid: c.space.dim == 1 and all(m.mean_monotone for m in self._models[c.cid])
            for c in instance.clusters
        }

    def select(self, t: int) -> Decision:
        self._pre_select(t)
        if t <= self.n_arms:
            return self._emit(Decision(t, t, PHASE_INIT))
        indices = self._compute_indices(t)
        best = -math.inf
        arm = 0
        for k, v in enumerate(indices):
            if v > best:
                best = v
                arm = k + 1
        return self._emit(Decision(
            t, arm, PHASE_INDEX, tuple(indices) if self.audit else None))

    def _compute_indices(self, t: int) -> list[float]:
        recompute = (t - self.n_arms - 1) % self.recompute_every == 0
        uc = [0.0] * self.n_arms
        for c in self.instance.clusters:
            hist = self.histories[c.cid]
            hist.tick(t)
            models = self._models[c.cid]
            if recompute or c.cid not in self._estimates:
                self._estimates[c.cid] = mle(hist, c, models)
            ball = make_ball(hist, self._estimates[c.cid], self.kappa)
            if self._interval_ok[c.cid]:
                lo_b, hi_b = ball_interval(ball, models, c.space)
                for k, a in enumerate(c.arm_ids):
                    uc[a - 1] = _arm_sup_on_interval(
                        models[k], lo_b, hi_b, ball.center[0])
            else:
                for k, a in enumerate(c.arm_ids):
                    uc[a - 1] = sup_mean_over_ball(ball, models, c.space, k)
        return uc

    def _apply(self, arm: int, reward: float) -> None:
        cluster = self.instance.cluster_of(arm)
        self.histories[cluster.cid].observe(arm, reward)

    def ball_of(self, cid: int):
        """Current ball snapshot of a cluster (diagnostics and tests)."""
        hist = self.histories[cid]
        return make_ball(hist, self._estimates[cid], self.kappa)


class VanillaUcbPolicy(Policy):
    """Empirical mean plus the sqrt(2 sigma^2 log t / N_i) width, with
    sigma taken from each arm's sub-Gaussian certificate."""

    kind = VANILLA_UCB

    def __init__(self, instance: BanditInstance, *, audit: bool = False):
        super().__init__(instance)
        self.audit = audit
        self.counts = [0] * self.n_arms
        self.sums = [0.0] * self.n_arms
        self.two_sig2 = vanilla_widths(instance)

    def select(self, t: int) -> Decision:
        self._pre_select(t)
        if t <= self.n_arms:
            return self._emit(Decision(t, t, PHASE_INIT))
        logt = math.log(t)
        best = -math.inf
        arm = 0
        indices = [0.0] * self.n_arms
        for k in range(self.n_arms):
            v = self.sums[k] / self.counts[k] + math.sqrt(
                self.two_sig2[k] * logt / self.counts[k])
            indices[k] = v
            if v > best:
                best = v
                arm = k + 1
        return self._emit(Decision(
            t, arm, PHASE_INDEX, tuple(indices) if self.audit else None))

    def _apply(self, arm: int, reward: float) -> None:
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward


class UniformRandomPolicy(Policy):
    """Seeded uniform arm choice each round."""

    kind = UNIFORM_RANDOM

    def __init__(self, instance: BanditInstance, rng: np.random.Generator):
        super().__init__(instance)
        self.rng = rng

    def select(self, t: int) -> Decision:
        self._pre_select(t)
        arm = int(self.rng.integers(0, self.n_arms)) + 1
        return self._emit(Decision(t, arm, PHASE_INDEX))

    def _apply(self, arm: int, reward: float) -> None:
        pass


def make_policy(kind: str, instance: BanditInstance, *, kappa: float | None = None,
                rng: np.random.Generator | None = None, audit: bool = False,
                recompute_every: int = 1) -> Policy:
    if kind == UCB_D:
        if kappa is None:
            raise ConfigurationError("ucb_d needs kappa")
        return UcbDPolicy(instance, kappa, audit=audit,
                          recompute_every=recompute_every)
    if kind == VANILLA_UCB:
        return VanillaUcbPolicy(instance, audit=audit)
    if kind == UNIFORM_RANDOM:
        if rng is None:
            raise ConfigurationError("uniform_random needs a generator")
        return UniformRandomPolicy(instance, rng)
    raise ConfigurationError(f"unknown policy kind {kind!r}")
