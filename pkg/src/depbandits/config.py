"""Declarative experiment configs: one TOML document per experiment.

The schema is strict: unknown keys are rejected at every level so typos
fail loudly instead of silently running defaults. All relative paths in
a config resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import importlib.resources
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .estimation import kappa_floor, practical_kappa
from .instance import (BanditInstance, ClusterDef, StructuralConstants,
                       build_instance, certify_instance)
from .models import (ArmModel, BernoulliLinkArm, FiniteSupportLinearArm,
                     GaussianScaledArm)
from .spaces import ParameterSpace

SCHEMA_VERSION = 1

KAPPA_FLOOR = "floor"

_TOP_KEYS = {"schema", "space", "cluster", "experiment", "output"}
_SPACE_KEYS = {"kind", "lower", "upper", "dim", "floor", "grid_resolution"}
_CLUSTER_KEYS = {"theta_star", "arms", "space",
                 "bernoulli_mirrored", "gaussian_scales", "noise"}
_ARM_KEYS = {"family", "link", "scale", "noise", "support", "mixing"}
_EXPERIMENT_KEYS = {"policies", "horizon", "replications", "seed", "kappa",
                    "kappa_floor", "audit", "recompute_every", "checkpoints"}
_KAPPA_FLOOR_KEYS = {"L_p", "m", "sigma"}
_OUTPUT_KEYS = {"directory"}


@dataclass(frozen=True)
class ConfigBundle:
    """A parsed, validated config plus everything derived from it."""

    name: str
    instance: BanditInstance
    policies: tuple[str, ...]
    horizon: int
    replications: int
    seed: int
    kappa_spec: float | str | None     # number, "floor", or None (practical default)
    kappa_floor_args: dict
    audit: bool
    recompute_every: int
    checkpoints: tuple[int, ...]
    out_dir: Path
    source_sha256: str = ""

    def with_overrides(self, *, horizon=None, replications=None, seed=None,
                       kappa=None, audit=None, out_dir=None) -> "ConfigBundle":
        changes = {}
        if horizon is not None:
            changes["horizon"] = int(horizon)
            changes["checkpoints"] = ()
        if replications is not None:
            changes["replications"] = int(replications)
        if seed is not None:
            changes["seed"] = int(seed)
        if kappa is not None:
            changes["kappa_spec"] = kappa
        if audit is not None:
            changes["audit"] = bool(audit)
        if out_dir is not None:
            changes["out_dir"] = Path(out_dir)
        return replace(self, **changes)


def _check_keys(table: dict, allowed: set, context: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {unknown} in {context}; allowed: {sorted(allowed)}")


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigurationError(f"{context} is missing required key {key!r}")
    return table[key]


def _as_int(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{context} must be an integer, got {value!r}")
    return value


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{context} must be a number, got {value!r}")
    return float(value)


def _parse_space(table: dict, context: str) -> ParameterSpace:
    if not isinstance(table, dict):
        raise ConfigurationError(f"{context} must be a table")
    _check_keys(table, _SPACE_KEYS, context)
    kind = _require(table, "kind", context)
    res = table.get("grid_resolution")
    if res is not None:
        res = _as_float(res, f"{context}.grid_resolution")
    if kind == "interval":
        lo = _as_float(_require(table, "lower", context), f"{context}.lower")
        hi = _as_float(_require(table, "upper", context), f"{context}.upper")
        if res is None:
            return ParameterSpace.interval(lo, hi)
        return ParameterSpace.interval(lo, hi, res)
    if kind == "box":
        lo = _require(table, "lower", context)
        hi = _require(table, "upper", context)
        if not isinstance(lo, list) or not isinstance(hi, list) or len(lo) != len(hi):
            raise ConfigurationError(
                f"{context}: box bounds must be equal-length arrays")
        bounds = [( _as_float(a, f"{context}.lower"),
                    _as_float(b, f"{context}.upper")) for a, b in zip(lo, hi)]
        return ParameterSpace.box(bounds, res)
    if kind == "simplex_interior":
        dim = _as_int(_require(table, "dim", context), f"{context}.dim")
        floor = _as_float(table.get("floor", 0.01), f"{context}.floor")
        return ParameterSpace.simplex_interior(dim, floor, res)
    raise ConfigurationError(
        f"{context}.kind must be interval, box or simplex_interior, got {kind!r}")


def _parse_arm(table: dict, space: ParameterSpace, context: str) -> ArmModel:
    if not isinstance(table, dict):
        raise ConfigurationError(f"{context} must be a table")
    _check_keys(table, _ARM_KEYS, context)
    family = _require(table, "family", context)
    if family == "bernoulli_link":
        link = table.get("link", "identity")
        return BernoulliLinkArm(space, link=link)
    if family == "gaussian_scaled":
        scale = _as_float(_require(table, "scale", context), f"{context}.scale")
        noise = _as_float(_require(table, "noise", context), f"{context}.noise")
        return GaussianScaledArm(space, scale, noise)
    if family == "finite_support":
        support = _require(table, "support", context)
        mixing = table.get("mixing")
        return FiniteSupportLinearArm(space, support, mixing)
    raise ConfigurationError(
        f"{context}.family must be bernoulli_link, gaussian_scaled or "
        f"finite_support, got {family!r}")


def _parse_cluster(table: dict, default_space: ParameterSpace | None,
                   index: int) -> ClusterDef:
    context = f"cluster[{index}]"
    if not isinstance(table, dict):
        raise ConfigurationError(f"{context} must be a table")
    _check_keys(table, _CLUSTER_KEYS, context)
    if "space" in table:
        space = _parse_space(table["space"], f"{context}.space")
    elif default_space is not None:
        space = default_space
    else:
        raise ConfigurationError(
            f"{context} has no space and the config declares no default [space]")

    raw_theta = _require(table, "theta_star", context)
    if isinstance(raw_theta, list):
        theta = tuple(_as_float(x, f"{context}.theta_star") for x in raw_theta)
    else:
        theta = (_as_float(raw_theta, f"{context}.theta_star"),)

    sugar = [k for k in ("arms", "bernoulli_mirrored", "gaussian_scales") if k in table]
    if len(sugar) != 1:
        raise ConfigurationError(
            f"{context} needs exactly one of arms, bernoulli_mirrored or "
            f"gaussian_scales, got {sugar or 'none'}")

    if "bernoulli_mirrored" in table:
        if table["bernoulli_mirrored"] is not True:
            raise ConfigurationError(
                f"{context}.bernoulli_mirrored must be true when present")
        arms = [BernoulliLinkArm(space, link="identity"),
                BernoulliLinkArm(space, link="mirror")]
    elif "gaussian_scales" in table:
        scales = table["gaussian_scales"]
        if not isinstance(scales, list) or not scales:
            raise ConfigurationError(
                f"{context}.gaussian_scales must be a non-empty array")
        noise = _as_float(_require(table, "noise", context), f"{context}.noise")
        arms = [GaussianScaledArm(space, _as_float(s, f"{context}.gaussian_scales"),
                                  noise) for s in scales]
    else:
        if "noise" in table:
            raise ConfigurationError(
                f"{context}.noise only applies with gaussian_scales")
        raw_arms = table["arms"]
        if not isinstance(raw_arms, list) or not raw_arms:
            raise ConfigurationError(f"{context}.arms must be a non-empty array")
        arms = [_parse_arm(a, space, f"{context}.arms[{k}]")
                for k, a in enumerate(raw_arms)]

    return ClusterDef(theta_star=theta, arms=arms)


def _parse_experiment(table: dict) -> dict:
    context = "experiment"
    if not isinstance(table, dict):
        raise ConfigurationError("[experiment] must be a table")
    _check_keys(table, _EXPERIMENT_KEYS, context)
    policies = _require(table, "policies", context)
    if (not isinstance(policies, list) or not policies
            or not all(isinstance(p, str) for p in policies)):
        raise ConfigurationError("experiment.policies must be a non-empty string array")
    horizon = _as_int(_require(table, "horizon", context), "experiment.horizon")
    reps = _as_int(_require(table, "replications", context), "experiment.replications")
    seed = _as_int(_require(table, "seed", context), "experiment.seed")

    kappa_spec = table.get("kappa")
    if kappa_spec is not None:
        if isinstance(kappa_spec, str):
            if kappa_spec != KAPPA_FLOOR:
                raise ConfigurationError(
                    f'experiment.kappa must be a number or "floor", got {kappa_spec!r}')
        else:
            kappa_spec = _as_float(kappa_spec, "experiment.kappa")

    floor_args = {}
    if "kappa_floor" in table:
        ft = table["kappa_floor"]
        if not isinstance(ft, dict):
            raise ConfigurationError("experiment.kappa_floor must be a table")
        _check_keys(ft, _KAPPA_FLOOR_KEYS, "experiment.kappa_floor")
        floor_args = dict(ft)
    if kappa_spec == KAPPA_FLOOR:
        missing = [k for k in ("L_p", "m") if k not in floor_args]
        if missing:
            raise ConfigurationError(
                f'experiment.kappa = "floor" needs kappa_floor inputs; '
                f"missing {missing}")

    audit = table.get("audit", False)
    if not isinstance(audit, bool):
        raise ConfigurationError("experiment.audit must be a boolean")
    recompute = _as_int(table.get("recompute_every", 1), "experiment.recompute_every")
    checkpoints = table.get("checkpoints", [])
    if not isinstance(checkpoints, list):
        raise ConfigurationError("experiment.checkpoints must be an array")
    checkpoints = tuple(_as_int(c, "experiment.checkpoints") for c in checkpoints)

    return {
        "policies": tuple(policies),
        "horizon": horizon,
        "replications": reps,
        "seed": seed,
        "kappa_spec": kappa_spec,
        "kappa_floor_args": floor_args,
        "audit": audit,
        "recompute_every": recompute,
        "checkpoints": checkpoints,
    }


def parse_config(doc: dict, name: str, base_dir: Path,
                 source_sha256: str = "") -> ConfigBundle:
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a table")
    _check_keys(doc, _TOP_KEYS, "config")
    schema = _as_int(_require(doc, "schema", "config"), "schema")
    if schema != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported schema {schema}; this build reads schema {SCHEMA_VERSION}")

    default_space = None
    if "space" in doc:
        default_space = _parse_space(doc["space"], "space")

    raw_clusters = _require(doc, "cluster", "config")
    if not isinstance(raw_clusters, list) or not raw_clusters:
        raise ConfigurationError("config needs at least one [[cluster]]")
    cluster_defs = [_parse_cluster(c, default_space, k)
                    for k, c in enumerate(raw_clusters)]
    instance = build_instance(cluster_defs)

    exp = _parse_experiment(_require(doc, "experiment", "config"))

    out_dir = base_dir / name
    if "output" in doc:
        out = doc["output"]
        if not isinstance(out, dict):
            raise ConfigurationError("[output] must be a table")
        _check_keys(out, _OUTPUT_KEYS, "output")
        directory = _require(out, "directory", "output")
        if not isinstance(directory, str):
            raise ConfigurationError("output.directory must be a string")
        out_dir = base_dir / directory

    return ConfigBundle(name=name, instance=instance, out_dir=out_dir,
                        source_sha256=source_sha256, **exp)


def load_config(path) -> ConfigBundle:
    """Read and validate a TOML config from an explicit path."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {p}") from None
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"invalid TOML in {p}: {exc}") from None
    return parse_config(doc, p.stem, p.parent.resolve(),
                        hashlib.sha256(raw).hexdigest())


def bundled_config_names() -> list[str]:
    root = importlib.resources.files("depbandits") / "configs"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".toml"))


def load_bundled_config(name: str) -> ConfigBundle:
    """Load one of the configs shipped with the package by bare name."""
    root = importlib.resources.files("depbandits") / "configs"
    res = root / f"{name}.toml"
    if not res.is_file():
        raise ConfigurationError(
            f"no bundled config named {name!r}; available: {bundled_config_names()}")
    raw = res.read_bytes()
    doc = tomllib.loads(raw.decode("utf-8"))
    return parse_config(doc, name, Path.cwd(),
                        hashlib.sha256(raw).hexdigest())


def find_config(ref: str) -> ConfigBundle:
    """Resolve a config reference: a path if it exists, else a bundled name."""
    p = Path(ref)
    if p.suffix == ".toml" or p.exists():
        return load_config(p)
    return load_bundled_config(ref)


def resolve_kappa(bundle: ConfigBundle,
                  constants: StructuralConstants | None = None) -> float:
    """Turn the configured kappa into a number.

    Numbers pass through; "floor" evaluates the theoretical floor from
    the configured L_p/m inputs; an absent kappa falls back to the
    practical default. The latter two need certified constants, which
    are computed on demand when not supplied.
    """
    spec = bundle.kappa_spec
    if isinstance(spec, float):
        if not spec > 0:
            raise ConfigurationError("kappa must be positive")
        return spec
    if constants is None:
        constants = certify_instance(bundle.instance)
    if spec == KAPPA_FLOOR:
        args = bundle.kappa_floor_args
        missing = [k for k in ("L_p", "m") if k not in args]
        if missing:
            raise ConfigurationError(
                f'kappa "floor" needs kappa_floor inputs; missing {missing}')
        return kappa_floor(bundle.instance, constants,
                           L_p=_as_float(args["L_p"], "kappa_floor.L_p"),
                           sigma=(None if "sigma" not in args else
                                  _as_float(args["sigma"], "kappa_floor.sigma")),
                           m=_as_int(args["m"], "kappa_floor.m"))
    return practical_kappa(bundle.instance, constants)
