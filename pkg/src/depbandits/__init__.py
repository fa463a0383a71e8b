"""Bandits with cluster-dependent arms.

Arms are grouped into clusters sharing a hidden parameter; pulling any
arm of a cluster informs the whole cluster. The package provides the
confidence-ball index policy built on that structure, classical UCB and
uniform baselines, regret bound evaluators, structural-constant
certification, and a reproducible experiment harness with CSV/SVG
output.
"""

from .bounds import (BoundReport, bound_report, fun_d, kl_ball, lower_bound,
                     phi, psi_bar, psi_inv, upper_bound)
from .errors import (CertificationError, ConfigurationError, DataError,
                     DepBanditsError, DomainError, ProtocolError, StateError)
from .estimation import (ClusterEstimate, ClusterHistory, ConfidenceBall,
                         ball_contains, ball_interval, kappa_floor, make_ball,
                         mle, practical_kappa, radius, sup_mean_over_ball,
                         weighted_kl)
from .harness import (AggregateResult, ExperimentConfig, RunTrace,
                      aggregate_traces, default_checkpoints,
                      mle_consistency_experiment, run_monte_carlo,
                      run_replications, run_single, uniform_analytic_regret,
                      write_aggregate_csv, write_trace_csv)
from .instance import (BanditInstance, Cluster, ClusterConstants, ClusterDef,
                       StructuralConstants, build_instance,
                       certify_B_constant, certify_instance,
                       certify_lb_constants, constants_to_dict,
                       example2_pinsker_bounds)
from .models import (ArmModel, BernoulliLinkArm, FiniteSupportLinearArm,
                     GaussianScaledArm, SubGaussianCert, bernoulli_kl)
from .policies import (Decision, Policy, UcbDPolicy, UniformRandomPolicy,
                       VanillaUcbPolicy, make_policy)
from .spaces import ParameterSpace, common_space

__version__ = "0.1.0"

__all__ = [
    "AggregateResult",
    "ArmModel",
    "BanditInstance",
    "BernoulliLinkArm",
    "BoundReport",
    "CertificationError",
    "Cluster",
    "ClusterConstants",
    "ClusterDef",
    "ClusterEstimate",
    "ClusterHistory",
    "ConfidenceBall",
    "ConfigurationError",
    "DataError",
    "Decision",
    "DepBanditsError",
    "DomainError",
    "ExperimentConfig",
    "FiniteSupportLinearArm",
    "GaussianScaledArm",
    "ParameterSpace",
    "Policy",
    "ProtocolError",
    "RunTrace",
    "StateError",
    "StructuralConstants",
    "SubGaussianCert",
    "UcbDPolicy",
    "UniformRandomPolicy",
    "VanillaUcbPolicy",
    "aggregate_traces",
    "ball_contains",
    "ball_interval",
    "bernoulli_kl",
    "bound_report",
    "build_instance",
    "certify_B_constant",
    "certify_instance",
    "certify_lb_constants",
    "common_space",
    "constants_to_dict",
    "default_checkpoints",
    "example2_pinsker_bounds",
    "fun_d",
    "kappa_floor",
    "kl_ball",
    "lower_bound",
    "make_ball",
    "make_policy",
    "mle",
    "mle_consistency_experiment",
    "phi",
    "practical_kappa",
    "psi_bar",
    "psi_inv",
    "radius",
    "run_monte_carlo",
    "run_replications",
    "run_single",
    "sup_mean_over_ball",
    "uniform_analytic_regret",
    "upper_bound",
    "weighted_kl",
    "write_aggregate_csv",
    "write_trace_csv",
]
