"""Numeric evaluation of the analytic regret quantities.

Everything here is a grid computation with the resolution recorded in
the report; the variational quantities have no general closed form.
Empty feasible sets yield an infinite sentinel rather than an error, so
reports stay total: sums skip sentinel terms and the report is flagged
partial.

Gaussian arms also have closed-form fast paths (method="analytic"),
kept for cross-checks; the report itself always uses grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .instance import BanditInstance, StructuralConstants, certify_instance
from .models import GAUSSIAN_SCALED, ArmModel

SENTINEL = math.inf


def fun_d(s: float, t: float, kappa: float) -> float:
    """d(s, t) = sqrt(kappa log t / s); the ball radius is d(N_C(t), t)."""
    if not (s > 0 and t >= 2 and kappa > 0):
        raise ConfigurationError("fun_d needs s > 0, t >= 2, kappa > 0")
    return math.sqrt(kappa * math.log(t) / s)


def _pair_tables(instance: BanditInstance, arm_id: int):
    cluster = instance.cluster_of(arm_id)
    model = instance.arm(arm_id)
    grid = cluster.space.grid()
    means = model.mean_array(grid)
    kl = model.kl_matrix(grid)
    gaps = np.abs(means[:, None] - means[None, :])
    return kl, gaps


def psi_bar(instance: BanditInstance, arm_id: int, x: float,
            method: str = "grid") -> float:
    """Largest mean shift reachable within a KL budget of x."""
    if x < 0:
        raise ConfigurationError("psi_bar needs x >= 0")
    if method == "analytic":
        return _psi_bar_gaussian(instance.arm(arm_id),
                                 instance.cluster_of(arm_id).space, x)
    kl, gaps = _pair_tables(instance, arm_id)
    mask = kl <= x
    return float(gaps[mask].max()) if mask.any() else 0.0


def psi_inv(instance: BanditInstance, arm_id: int, x: float,
            method: str = "grid") -> float:
    """Smallest KL cost of moving the mean by at least x.

    Returns the infinite sentinel when no grid pair attains the gap.
    """
    if x < 0:
        raise ConfigurationError("psi_inv needs x >= 0")
    if x == 0:
        return 0.0
    if method == "analytic":
        return _psi_inv_gaussian(instance.arm(arm_id),
                                 instance.cluster_of(arm_id).space, x)
    kl, gaps = _pair_tables(instance, arm_id)
    mask = gaps >= x
    return float(kl[mask].min()) if mask.any() else SENTINEL


def phi(instance: BanditInstance, arm_id: int, mu_target: float,
        method: str = "grid") -> float:
    """Cheapest confusion: inf over parameters giving arm_id a mean of at
    least mu_target of the worst-case KL from theta_star across the
    arm's cluster. Sentinel when no grid parameter reaches the target.
    """
    cluster = instance.cluster_of(arm_id)
    if method == "analytic":
        return _phi_gaussian(instance, arm_id, mu_target)
    grid = cluster.space.grid()
    feasible = instance.arm(arm_id).mean_array(grid) >= mu_target
    if not feasible.any():
        return SENTINEL
    worst = np.zeros(grid.shape[0])
    theta_star = np.asarray(cluster.theta_star)
    for m in instance.cluster_models(cluster):
        if cluster.space.dim == 1:
            kl = m.kl_array(theta_star[0], grid)
        else:
            kl = m.kl_array(np.broadcast_to(theta_star, grid.shape), grid)
        worst = np.maximum(worst, kl)
    return float(worst[feasible].min())


def kl_ball(instance: BanditInstance, arm_id: int, theta, r: float) -> np.ndarray:
    """Boolean membership mask of {x on the grid : KL_i(theta || x) <= r},
    aligned with the cluster space's grid()."""
    if r < 0:
        raise ConfigurationError("kl_ball needs r >= 0")
    cluster = instance.cluster_of(arm_id)
    model = instance.arm(arm_id)
    th = cluster.space.require(theta)
    grid = cluster.space.grid()
    if cluster.space.dim == 1:
        kl = model.kl_array(th[0], grid)
    else:
        kl = model.kl_array(np.broadcast_to(np.asarray(th), grid.shape), grid)
    return kl <= r


# -- Gaussian closed forms (cross-checked against grids in tests) -------


def _require_gaussian(model: ArmModel):
    if model.family != GAUSSIAN_SCALED:
        raise ConfigurationError("analytic fast path exists only for Gaussian arms")


def _psi_bar_gaussian(model, space, x: float) -> float:
    _require_gaussian(model)
    span = space.span()[0]
    reach = model.noise * math.sqrt(2.0 * x)
    cap = abs(model.scale) * span
    return min(reach, cap)


def _psi_inv_gaussian(model, space, x: float) -> float:
    _require_gaussian(model)
    span = space.span()[0]
    if x > abs(model.scale) * span:
        return SENTINEL
    return x * x / (2.0 * model.noise * model.noise)


def _phi_gaussian(instance: BanditInstance, arm_id: int, mu_target: float) -> float:
    cluster = instance.cluster_of(arm_id)
    model = instance.arm(arm_id)
    _require_gaussian(model)
    for m in instance.cluster_models(cluster):
        _require_gaussian(m)
    lo, hi = cluster.space.lower[0], cluster.space.upper[0]
    ts = cluster.theta_star[0]
    # feasible set {theta: scale * theta >= mu_target} is a half-line
    bound = mu_target / model.scale
    if model.scale > 0:
        if bound > hi:
            return SENTINEL
        closest = ts if bound <= ts else bound
    else:
        if bound < lo:
            return SENTINEL
        closest = ts if bound >= ts else bound
    worst = 0.0
    for m in instance.cluster_models(cluster):
        worst = max(worst, m.kl((ts,), (closest,)))
    return worst


# -- bound report --------------------------------------------------------


@dataclass(frozen=True)
class ArmBounds:
    arm: int
    cluster: int
    gap: float
    psi_inv_half_gap: float
    phi_star: float


@dataclass(frozen=True)
class ClusterBounds:
    cluster: int
    optimal: bool
    lower_term: float | None
    lemma1_coefficient: float | None
    upper_term: float | None


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound quantities; coefficients multiply log T."""

    kappa: float
    arms: tuple[ArmBounds, ...]
    clusters: tuple[ClusterBounds, ...]
    lower_coefficient: float
    upper_coefficient: float
    partial: bool
    grid_resolution: dict

    def to_dict(self) -> dict:
        def num(v):
            if v is None or v == SENTINEL:
                return None
            return v

        return {
            "schema": 1,
            "kappa": self.kappa,
            "grid_resolution": {str(k): v for k, v in sorted(self.grid_resolution.items())},
            "arms": [
                {
                    "arm": a.arm,
                    "cluster": a.cluster,
                    "gap": a.gap,
                    "psi_inv_half_gap": num(a.psi_inv_half_gap),
                    "phi_star": num(a.phi_star),
                }
                for a in self.arms
            ],
            "clusters": [
                {
                    "cluster": c.cluster,
                    "optimal": c.optimal,
                    "lower_term": num(c.lower_term),
                    "lemma1_coefficient": num(c.lemma1_coefficient),
                    "upper_term": num(c.upper_term),
                }
                for c in self.clusters
            ],
            "lower_bound_coefficient": self.lower_coefficient,
            "upper_bound_coefficient": self.upper_coefficient,
            "partial": self.partial,
        }


def lower_bound(instance: BanditInstance) -> tuple[float, dict]:
    """Theorem-1 coefficient of log T and the per-cluster terms.

    Sum over suboptimal clusters of (min gap in C) * max_i 1/phi_i.
    Clusters whose every phi is sentinel get term None (unavailable).
    """
    terms = {}
    total = 0.0
    for c in instance.clusters:
        if c.cid == instance.best_cluster:
            continue
        inv_phis = []
        for a in c.arm_ids:
            p = phi(instance, a, instance.mu_star)
            if p != SENTINEL and p > 0:
                inv_phis.append(1.0 / p)
        if not inv_phis:
            terms[c.cid] = None
            continue
        min_gap = min(instance.gaps[a - 1] for a in c.arm_ids)
        term = min_gap * max(inv_phis)
        terms[c.cid] = term
        total += term
    return total, terms


def upper_bound(instance: BanditInstance, kappa: float,
                constants: StructuralConstants | None = None) -> tuple[float, dict, dict]:
    """Theorem-3 coefficient of log T, its per-cluster terms, and the
    per-cluster Lemma-1 play-count coefficients.

    The Lemma-1 coefficient of cluster C is the max over its
    positive-gap arms j of kappa / (Sigma_j psi_inv_j(Delta_j / 2))^2;
    zero-gap arms cost nothing and clusters with only sentinel values
    are marked unavailable (None).
    """
    if not kappa > 0:
        raise ConfigurationError("kappa must be positive")
    if constants is None:
        constants = certify_instance(instance)
    lemma1 = {}
    terms = {}
    total = 0.0
    for c in instance.clusters:
        candidates = []
        for a in c.arm_ids:
            gap = instance.gaps[a - 1]
            if gap <= 0:
                continue
            pinv = psi_inv(instance, a, gap / 2.0)
            if pinv == SENTINEL or pinv <= 0:
                continue
            denom = constants.Sigma[a] * pinv
            candidates.append(kappa / (denom * denom))
        has_suboptimal = any(instance.gaps[a - 1] > 0 for a in c.arm_ids)
        if not has_suboptimal:
            lemma1[c.cid] = 0.0
            terms[c.cid] = 0.0
            continue
        if not candidates:
            lemma1[c.cid] = None
            terms[c.cid] = None
            continue
        coeff = max(candidates)
        lemma1[c.cid] = coeff
        term = max(instance.gaps[a - 1] for a in c.arm_ids) * coeff
        terms[c.cid] = term
        total += term
    return total, terms, lemma1


def bound_report(instance: BanditInstance, kappa: float,
                 constants: StructuralConstants | None = None) -> BoundReport:
    """Evaluate every bound quantity into one immutable report."""
    if constants is None:
        constants = certify_instance(instance)
    arms = []
    for c in instance.clusters:
        for a in c.arm_ids:
            gap = instance.gaps[a - 1]
            arms.append(ArmBounds(
                arm=a,
                cluster=c.cid,
                gap=gap,
                psi_inv_half_gap=psi_inv(instance, a, gap / 2.0) if gap > 0 else 0.0,
                phi_star=phi(instance, a, instance.mu_star),
            ))
    lo_total, lo_terms = lower_bound(instance)
    up_total, up_terms, lemma1 = upper_bound(instance, kappa, constants)
    clusters = []
    partial = False
    for c in instance.clusters:
        optimal = c.cid == instance.best_cluster
        lo_term = None if optimal else lo_terms.get(c.cid)
        up_term = up_terms.get(c.cid)
        if (not optimal and lo_term is None) or up_term is None:
            partial = True
        clusters.append(ClusterBounds(
            cluster=c.cid,
            optimal=optimal,
            lower_term=lo_term,
            lemma1_coefficient=lemma1.get(c.cid),
            upper_term=up_term,
        ))
    resolution = {c.cid: c.space.grid_resolution for c in instance.clusters}
    return BoundReport(
        kappa=kappa,
        arms=tuple(arms),
        clusters=tuple(clusters),
        lower_coefficient=lo_total,
        upper_coefficient=up_total,
        partial=partial,
        grid_resolution=resolution,
    )
