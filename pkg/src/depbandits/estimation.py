"""Per-cluster estimation: histories, the pooled MLE, and the
count-weighted KL confidence ball.

The ball for cluster C at round t is the set of parameters theta with

    sum_i (N_i / N_C) * KL_i(theta_hat || theta) <= d_C(t),
    d_C(t) = sqrt(kappa * log t / N_C(t)).

KL is always evaluated center-first, matching the ball definition; the
analysis constant B is what licenses direction swaps in proofs, not
here.

The scalar ball-boundary solver below is the reference algorithm for
the compiled kernels: any change here must be mirrored there (the two
are required to be bit-identical).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StateError
from .instance import BanditInstance, Cluster, StructuralConstants
from .models import (BERNOULLI_LINK, GAUSSIAN_SCALED, ArmModel,
                     BernoulliLinkArm, GaussianScaledArm)
from .spaces import ParameterSpace

log = logging.getLogger("depbandits")

GOLDEN_TOL = 1e-6
# coarse scan intervals bracketing the golden-section start; guards
# against multimodal cluster likelihoods
SCAN_INTERVALS = 64
BISECT_ITERS = 64


class ClusterHistory:
    """Mutable play record of one cluster, owned by a single run loop.

    Stores raw per-arm rewards (append-only) so generic solvers work for
    any family; closed forms read only counts and sums. The global round
    counter t is advanced by the owner via tick().
    """

    def __init__(self, cluster: Cluster):
        self.cluster = cluster
        self.arm_ids = cluster.arm_ids
        self._local = {a: k for k, a in enumerate(cluster.arm_ids)}
        n = len(cluster.arm_ids)
        self.counts = [0] * n
        self.sums = [0.0] * n
        self.sq = [0.0] * n
        self.rewards = [[] for _ in range(n)]
        self.t = 0

    @property
    def n_total(self) -> int:
        return sum(self.counts)

    def local_index(self, arm_id: int) -> int:
        return self._local[arm_id]

    def tick(self, t: int) -> None:
        if t < self.t:
            raise StateError(f"round counter moved backwards: {t} < {self.t}")
        self.t = t

    def observe(self, arm_id: int, reward: float) -> None:
        k = self._local[arm_id]
        self.counts[k] += 1
        self.sums[k] += reward
        self.sq[k] += reward * reward
        self.rewards[k].append(reward)

    def weights(self) -> list[float]:
        n_c = float(self.n_total)
        return [c / n_c for c in self.counts]


@dataclass(frozen=True)
class ClusterEstimate:
    """MLE output: theta_hat in the space, its pooled log-likelihood
    (unnormalised sum of log densities), and how it was solved."""

    theta_hat: tuple[float, ...]
    log_likelihood: float
    method: str


@dataclass(frozen=True)
class ConfidenceBall:
    center: tuple[float, ...]
    radius: float
    weights: tuple[float, ...]


def _pooled_loglik(history: ClusterHistory, models, theta) -> float:
    if len(theta) == 1:
        point = np.asarray([theta[0]])
    else:
        point = np.asarray([theta])
    total = 0.0
    for k, m in enumerate(models):
        if history.counts[k]:
            total += float(m.log_likelihood_array(
                np.asarray(history.rewards[k]), point)[0])
    return total


def _loglik_grid(history: ClusterHistory, models, grid: np.ndarray) -> np.ndarray:
    n = grid.shape[0]
    total = np.zeros(n)
    for k, m in enumerate(models):
        if history.counts[k]:
            total += m.log_likelihood_array(np.asarray(history.rewards[k]), grid)
    return total


def _loglik_closed(history: ClusterHistory, models, theta) -> float:
    """Pooled log-likelihood from per-arm aggregates only.

    Valid for the closed-form families (Bernoulli and Gaussian), whose
    log-likelihood depends on the data through counts, sums and sums of
    squares. Avoids touching the raw reward lists on the per-round path.
    """
    th = theta[0]
    total = 0.0
    for k, m in enumerate(models):
        n = history.counts[k]
        if not n:
            continue
        if m.family == BERNOULLI_LINK:
            mu = m.mean((th,))
            s = history.sums[k]
            total += s * math.log(mu) + (n - s) * math.log(1.0 - mu)
        else:
            v = m.noise * m.noise
            mu = m.scale * th
            total += (-0.5 * n * math.log(2.0 * math.pi * v)
                      - (history.sq[k] - 2.0 * mu * history.sums[k] + n * mu * mu)
                      / (2.0 * v))
    return total


def _mle_gaussian(history: ClusterHistory, space: ParameterSpace, models) -> float:
    # stationary point of the pooled Gaussian log-likelihood: weighted
    # least squares over all (scale_s, y_s) observations
    sxy = 0.0
    sxx = 0.0
    for k, m in enumerate(models):
        nv = m.noise * m.noise
        sxy += (m.scale / nv) * history.sums[k]
        sxx += history.counts[k] * ((m.scale * m.scale) / nv)
    return sxy / sxx


def _mle_bernoulli(history: ClusterHistory, models) -> float:
    # mirror arms contribute failures as evidence for theta
    succ = 0.0
    n = 0
    for k, m in enumerate(models):
        if m.mirrored:
            succ += history.counts[k] - history.sums[k]
        else:
            succ += history.sums[k]
        n += history.counts[k]
    return succ / n


def _golden_section(fn, lo: float, hi: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def mle(history: ClusterHistory, cluster: Cluster, models) -> ClusterEstimate:
    """Maximise the pooled cluster log-likelihood over the space.

    Gaussian-only and Bernoulli-only clusters use their closed forms
    projected to the space; otherwise scalar spaces get a coarse scan
    plus golden-section search and d >= 2 spaces a full grid search.
    Deterministic for fixed input.
    """
    if history.n_total < 1:
        raise StateError("cluster history is empty; the MLE is undefined")
    space = cluster.space
    families = {m.family for m in models}

    if families == {GAUSSIAN_SCALED}:
        raw = _mle_gaussian(history, space, models)
        th = _project_scalar(raw, space)
        return ClusterEstimate((th,), _loglik_closed(history, models, (th,)), "closed-form")
    if families == {BERNOULLI_LINK}:
        raw = _mle_bernoulli(history, models)
        th = _project_scalar(raw, space)
        return ClusterEstimate((th,), _loglik_closed(history, models, (th,)), "closed-form")

    if space.dim == 1:
        lo, hi = space.lower[0], space.upper[0]

        def nll(x: float) -> float:
            return _pooled_loglik(history, models, (x,))

        # coarse scan to bracket the global maximum, then refine
        xs = np.linspace(lo, hi, SCAN_INTERVALS + 1)
        vals = [nll(float(x)) for x in xs]
        k = int(np.argmax(vals))
        a = float(xs[max(0, k - 1)])
        b = float(xs[min(len(xs) - 1, k + 1)])
        th = _golden_section(nll, a, b, GOLDEN_TOL)
        return ClusterEstimate((th,), nll(th), "golden-section")

    grid = space.grid()
    ll = _loglik_grid(history, models, grid)
    k = int(np.argmax(ll))
    th = tuple(float(x) for x in np.atleast_1d(grid[k]))
    return ClusterEstimate(th, float(ll[k]), "grid")


def _project_scalar(raw: float, space: ParameterSpace) -> float:
    lo, hi = space.lower[0], space.upper[0]
    if raw < lo:
        log.debug("mle projected to lower bound: raw=%r", raw)
        return lo
    if raw > hi:
        log.debug("mle projected to upper bound: raw=%r", raw)
        return hi
    return raw


def radius(history: ClusterHistory, kappa: float) -> float:
    """Ball radius d_C(t) = sqrt(kappa log t / N_C(t))."""
    if not kappa > 0:
        raise ConfigurationError("kappa must be positive")
    if history.t < 2:
        raise StateError(f"radius undefined before round 2 (t={history.t})")
    n_c = history.n_total
    if n_c < 1:
        raise StateError("radius undefined for an unplayed cluster")
    return math.sqrt(kappa * math.log(history.t) / n_c)


def make_ball(history: ClusterHistory, estimate: ClusterEstimate,
              kappa: float) -> ConfidenceBall:
    return ConfidenceBall(
        center=estimate.theta_hat,
        radius=radius(history, kappa),
        weights=tuple(history.weights()),
    )


def kappa_floor(instance: BanditInstance, constants: StructuralConstants,
                L_p: float, sigma: float | None, m: int) -> float:
    """Right-hand side of the kappa condition: the configured kappa must
    exceed this in strict-theory mode.

    sigma=None takes the largest certified sub-Gaussian parameter.
    """
    if int(m) != m or m <= 3:
        raise ConfigurationError("m must be a natural number greater than 3")
    if not L_p > 0:
        raise ConfigurationError("L_p must be positive")
    if sigma is None:
        sigma = max(a.subgaussian().sigma for a in instance.arms)
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    big_b = max(constants.B.values())
    worst = 0.0
    for c in instance.clusters:
        cc = constants.clusters[c.cid]
        max_lb = max(cc.lb.values())
        val = 2.0 * big_b * big_b * L_p * L_p * sigma * sigma \
            * (c.size + m) * max_lb * max_lb
        worst = max(worst, val)
    return worst


def practical_kappa(instance: BanditInstance, constants: StructuralConstants) -> float:
    """Default practical kappa: 2 sigma^2 scaled by the largest lb^2.

    The full floor involves the proof constant L_p, which is not
    computable at runtime; this surrogate keeps the radius on the same
    scale. Experiments may override kappa explicitly.
    """
    sigma = max(a.subgaussian().sigma for a in instance.arms)
    max_lb = max(max(cc.lb.values()) for cc in constants.clusters.values())
    return 2.0 * sigma * sigma * max_lb * max_lb


# -- ball geometry ------------------------------------------------------


def weighted_kl(models, weights, center, theta) -> float:
    """sum_i w_i KL_i(center || theta), accumulated in arm order."""
    s = 0.0
    for w, m in zip(weights, models):
        s += w * m.kl(center, theta)
    return s


def ball_contains(ball: ConfidenceBall, models, theta) -> bool:
    """Membership predicate of the confidence ball."""
    return weighted_kl(models, ball.weights, ball.center, theta) <= ball.radius


def _weighted_kl_grid(models, weights, center, grid: np.ndarray) -> np.ndarray:
    total = np.zeros(grid.shape[0])
    c = np.asarray(center)
    for w, m in zip(weights, models):
        if m.space.dim == 1:
            total += w * m.kl_array(c[0], grid)
        else:
            total += w * m.kl_array(np.broadcast_to(c, grid.shape), grid)
    return total


def ball_interval(ball: ConfidenceBall, models, space: ParameterSpace) -> tuple[float, float]:
    """Extent [lo_b, hi_b] of a scalar ball around its center.

    The weighted KL of every scalar family here is unimodal with its
    minimum at the center, so the ball is an interval. Gaussian-only
    clusters solve the quadratic exactly; otherwise each side is found
    by a fixed 64-iteration bisection (bit-stable across platforms).
    This is the algorithm the compiled kernels replicate.
    """
    lo, hi = space.lower[0], space.upper[0]
    c0 = ball.center[0]
    r = ball.radius

    if all(m.family == GAUSSIAN_SCALED for m in models):
        coef = 0.0
        for w, m in zip(ball.weights, models):
            coef += w * ((m.scale * m.scale) / (2.0 * (m.noise * m.noise)))
        hw = math.sqrt(r / coef)
        lo_b = c0 - hw
        hi_b = c0 + hw
        if lo_b < lo:
            lo_b = lo
        if hi_b > hi:
            hi_b = hi
        return lo_b, hi_b

    def g(x: float) -> float:
        s = 0.0
        for w, m in zip(ball.weights, models):
            s += w * m.kl(ball.center, (x,))
        return s

    if g(hi) <= r:
        hi_b = hi
    else:
        a, b = c0, hi
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (a + b)
            if g(mid) <= r:
                a = mid
            else:
                b = mid
        hi_b = a
    if g(lo) <= r:
        lo_b = lo
    else:
        a, b = lo, c0
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (a + b)
            if g(mid) <= r:
                b = mid
            else:
                a = mid
        lo_b = b
    return lo_b, hi_b


def _arm_sup_on_interval(model: ArmModel, lo_b: float, hi_b: float, c0: float) -> float:
    a = model.mean((lo_b,))
    b = model.mean((hi_b,))
    c = model.mean((c0,))
    best = a
    if b > best:
        best = b
    if c > best:
        best = c
    return best


def sup_mean_over_ball(ball: ConfidenceBall, models, space: ParameterSpace,
                       local_arm: int, strategy: str = "auto") -> float:
    """Optimistic index: the largest mean the arm attains on the ball.

    Scalar spaces whose arms all have monotone means use the interval
    endpoints; everything else maximises over the grid points inside
    the ball. Never returns less than the mean at the center.
    """
    model = models[local_arm]
    if strategy == "auto":
        strategy = "interval" if (
            space.dim == 1 and all(m.mean_monotone for m in models)) else "grid"
    if strategy == "interval":
        lo_b, hi_b = ball_interval(ball, models, space)
        return _arm_sup_on_interval(model, lo_b, hi_b, ball.center[0])
    if strategy != "grid":
        raise ConfigurationError(f"unknown sup strategy {strategy!r}")
    grid = space.grid()
    member = _weighted_kl_grid(models, ball.weights, ball.center, grid) <= ball.radius
    center_mean = model.mean(ball.center)
    if not member.any():
        log.warning("confidence ball contains no grid point; "
                    "falling back to the mean at the center")
        return center_mean
    best = float(model.mean_array(grid[member]).max())
    return best if best > center_mean else center_mean
