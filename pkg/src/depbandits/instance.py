"""Bandit instances: clustered arms, hidden parameters, gap profiles,
and numeric certification of the KL-equivalence constants.

Certification sweeps a uniform grid over each cluster's parameter
space. The constants it produces (lb pairs, B, Sigma, Gamma) are the
inputs the bound evaluators treat as known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CertificationError, ConfigurationError
from .models import ArmModel, FiniteSupportLinearArm
from .spaces import ParameterSpace, common_space

# grid pairs with kl below this are excluded from ratio computation
KL_RATIO_FLOOR = 1e-15
# certified lb infima below this reject the instance unless forced
LB_REJECT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class Cluster:
    cid: int
    arm_ids: tuple[int, ...]
    theta_star: tuple[float, ...]
    space: ParameterSpace

    @property
    def size(self) -> int:
        return len(self.arm_ids)


@dataclass(frozen=True)
class ClusterDef:
    """Declarative description of one cluster: hidden parameter plus arms.

    arm_ids are optional; when omitted arms are numbered consecutively
    in declaration order across the whole instance.
    """

    theta_star: object
    arms: Sequence[ArmModel]
    arm_ids: Sequence[int] | None = None


class BanditInstance:
    """Validated instance: arms indexed 1..M partitioned into clusters.

    Derived quantities (true means, optimal arm, gaps) are computed once
    at construction. Instances are immutable and safe to share.
    """

    def __init__(self, arms: dict[int, ArmModel], clusters: Sequence[Cluster]):
        self.clusters = tuple(clusters)
        m = len(arms)
        if set(arms) != set(range(1, m + 1)):
            missing = sorted(set(range(1, m + 1)) - set(arms))
            raise ConfigurationError(
                f"arm ids must be exactly 1..{m}; missing or duplicate ids {missing}")
        self.arms = tuple(arms[i] for i in range(1, m + 1))
        self._cluster_of = {}
        for c in self.clusters:
            for a in c.arm_ids:
                if a in self._cluster_of:
                    raise ConfigurationError(f"arm {a} assigned to two clusters")
                self._cluster_of[a] = c
        if len(self._cluster_of) != m:
            raise ConfigurationError("cluster arm lists must partition the arm set")

        means = []
        for i in range(1, m + 1):
            c = self._cluster_of[i]
            means.append(self.arms[i - 1].mean(c.theta_star))
        self.means = tuple(means)
        self.mu_star = max(means)
        self.best_arm = means.index(self.mu_star) + 1
        self.best_cluster = self._cluster_of[self.best_arm].cid
        self.gaps = tuple(self.mu_star - mu for mu in means)
        positive = [g for g in self.gaps if g > 0]
        if not positive:
            raise ConfigurationError(
                "all arms are tied at the optimum; the gap profile is degenerate")
        self.delta_min = min(positive)
        self.delta_max = max(self.gaps)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def arm(self, arm_id: int) -> ArmModel:
        return self.arms[arm_id - 1]

    def cluster_of(self, arm_id: int) -> Cluster:
        return self._cluster_of[arm_id]

    def cluster(self, cid: int) -> Cluster:
        for c in self.clusters:
            if c.cid == cid:
                return c
        raise ConfigurationError(f"no cluster with id {cid}")

    def cluster_models(self, cluster: Cluster) -> list[ArmModel]:
        return [self.arms[a - 1] for a in cluster.arm_ids]


def build_instance(cluster_defs: Sequence[ClusterDef]) -> BanditInstance:
    """Assemble and validate an instance from per-cluster definitions."""
    if not cluster_defs:
        raise ConfigurationError("an instance needs at least one cluster")
    arms: dict[int, ArmModel] = {}
    clusters = []
    next_id = 1
    for k, cdef in enumerate(cluster_defs, start=1):
        if not cdef.arms:
            raise ConfigurationError(f"cluster {k} has no arms")
        space = common_space(m.space for m in cdef.arms)
        theta = space.require(cdef.theta_star)
        if cdef.arm_ids is not None:
            ids = tuple(int(a) for a in cdef.arm_ids)
            if len(ids) != len(cdef.arms):
                raise ConfigurationError(f"cluster {k}: arm_ids/arms length mismatch")
        else:
            ids = tuple(range(next_id, next_id + len(cdef.arms)))
            next_id += len(cdef.arms)
        for a, model in zip(ids, cdef.arms):
            if a in arms:
                raise ConfigurationError(f"duplicate arm id {a}")
            arms[a] = model
        clusters.append(Cluster(k, ids, theta, space))
    return BanditInstance(arms, clusters)


# -- structural constants (Assumption 1) -------------------------------


@dataclass(frozen=True)
class ClusterConstants:
    """Certified KL-equivalence constants for one cluster.

    lb maps ordered local pairs (j, i) of arm ids to the grid infimum of
    KL_j / KL_i. violations lists pairs whose infimum was numerically
    zero or negative.
    """

    cid: int
    lb: dict
    violations: tuple
    grid_points: int
    grid_resolution: float

    def sigma(self, arm_id: int) -> float:
        return min(v for (j, i), v in self.lb.items() if i == arm_id)

    def gamma(self, arm_id: int) -> float:
        return max(v for (j, i), v in self.lb.items() if i == arm_id)


@dataclass(frozen=True)
class StructuralConstants:
    clusters: dict
    B: dict
    Sigma: dict
    Gamma: dict

    def cluster_constants(self, cid: int) -> ClusterConstants:
        return self.clusters[cid]


def _grid_for_certification(space: ParameterSpace) -> np.ndarray:
    grid = space.grid()
    n_axis = len(space.axis_points(0))
    if n_axis < 3:
        raise ConfigurationError(
            f"certification grid too coarse: {n_axis} points per axis (need >= 3)")
    return grid


def certify_lb_constants(instance: BanditInstance, cluster_id: int, *,
                         kl_floor: float = KL_RATIO_FLOOR,
                         reject_below: float = LB_REJECT_THRESHOLD,
                         force: bool = False) -> ClusterConstants:
    """Grid infimum of KL_j / KL_i for every ordered arm pair of a cluster.

    Pairs of grid parameters whose denominator KL falls below kl_floor
    are excluded from the ratio. A certified infimum below reject_below
    means Assumption 1.1 effectively fails for the instance; this raises
    unless force is set.
    """
    cluster = instance.cluster(cluster_id)
    models = instance.cluster_models(cluster)
    grid = _grid_for_certification(cluster.space)
    n = grid.shape[0]
    off_diag = ~np.eye(n, dtype=bool)

    kls = [m.kl_matrix(grid) for m in models]
    lb = {}
    violations = []
    for li, i in enumerate(cluster.arm_ids):
        for lj, j in enumerate(cluster.arm_ids):
            if i == j:
                lb[(j, i)] = 1.0
                continue
            denom = kls[li]
            numer = kls[lj]
            mask = off_diag & (denom >= kl_floor)
            if not mask.any():
                violations.append((j, i))
                lb[(j, i)] = 0.0
                continue
            val = float(np.min(numer[mask] / denom[mask]))
            lb[(j, i)] = val
            if val <= 0.0 or val < kl_floor:
                violations.append((j, i))
    worst = min(lb.values())
    if (violations or worst < reject_below) and not force:
        raise CertificationError(
            f"cluster {cluster_id}: certified lb infimum {worst:.3e} below "
            f"{reject_below:.0e}; Assumption 1.1 effectively fails "
            f"(violating pairs: {violations or 'none'})")
    return ClusterConstants(
        cid=cluster_id,
        lb=lb,
        violations=tuple(violations),
        grid_points=n,
        grid_resolution=cluster.space.grid_resolution,
    )


def certify_B_constant(instance: BanditInstance, arm_id: int, *,
                       kl_floor: float = KL_RATIO_FLOOR) -> float:
    """Grid supremum of KL_i(a||b) / KL_i(b||a) over distinct pairs."""
    cluster = instance.cluster_of(arm_id)
    model = instance.arm(arm_id)
    grid = _grid_for_certification(cluster.space)
    kl = model.kl_matrix(grid)
    mask = ~np.eye(kl.shape[0], dtype=bool) & (kl.T >= kl_floor)
    if not mask.any():
        raise CertificationError(
            f"arm {arm_id}: no grid pair with positive reverse KL; "
            "cannot certify Assumption 1.2")
    return float(np.max(kl[mask] / kl.T[mask]))


def certify_instance(instance: BanditInstance, *,
                     kl_floor: float = KL_RATIO_FLOOR,
                     reject_below: float = LB_REJECT_THRESHOLD,
                     force: bool = False) -> StructuralConstants:
    """Certify every cluster and arm; the bounds module consumes this."""
    clusters = {}
    big_b = {}
    sigma = {}
    gamma = {}
    for c in instance.clusters:
        cc = certify_lb_constants(instance, c.cid, kl_floor=kl_floor,
                                  reject_below=reject_below, force=force)
        clusters[c.cid] = cc
        for a in c.arm_ids:
            big_b[a] = certify_B_constant(instance, a, kl_floor=kl_floor)
            sigma[a] = cc.sigma(a)
            gamma[a] = cc.gamma(a)
    return StructuralConstants(clusters=clusters, B=big_b, Sigma=sigma, Gamma=gamma)


def constants_to_dict(constants: StructuralConstants) -> dict:
    """JSON-ready view of certified constants, keyed per cluster and pair."""
    out = {"schema": 1, "clusters": []}
    for cid in sorted(constants.clusters):
        cc = constants.clusters[cid]
        pairs = [
            {"pair": [j, i], "lb": cc.lb[(j, i)]}
            for (j, i) in sorted(cc.lb)
        ]
        arms = sorted({i for (_, i) in cc.lb})
        out["clusters"].append({
            "cluster": cid,
            "grid_points": cc.grid_points,
            "grid_resolution": cc.grid_resolution,
            "pairs": pairs,
            "violations": [list(p) for p in cc.violations],
            "arms": [
                {
                    "arm": a,
                    "B": constants.B[a],
                    "Sigma": constants.Sigma[a],
                    "Gamma": constants.Gamma[a],
                }
                for a in arms
            ],
        })
    return out


def example2_pinsker_bounds(instance: BanditInstance, cluster_id: int) -> tuple[float, float]:
    """Closed-form Pinsker bounds on the lb constants of a two-arm
    finite-support cluster whose second arm mixes by an explicit matrix.

    Returns (min A^2 * floor / 2, floor / max A^2): certified grid lb
    values always dominate these.
    """
    cluster = instance.cluster(cluster_id)
    models = instance.cluster_models(cluster)
    for m in models:
        if not isinstance(m, FiniteSupportLinearArm):
            raise TypeError(
                f"cluster {cluster_id} has a non-finite-support arm; "
                "Pinsker bounds apply only to the finite-support family")
    if len(models) != 2:
        raise ConfigurationError("Pinsker bounds need a two-arm cluster")
    d = cluster.space.dim
    a = models[1].mixing
    mat = np.eye(d) if a is None else np.asarray(a, dtype=float)
    a_sq = mat * mat
    if float(a_sq.min()) <= 0.0:
        raise ConfigurationError(
            "mixing matrix has a zero entry; the bound requires min A^2 > 0")
    floor = cluster.space.floor
    lower = float(a_sq.min()) * floor / 2.0
    upper = floor / float(a_sq.max())
    return lower, upper
