"""Command-line front end: simulate, bounds, certify, plot.

Exit codes are a stable scripting contract:
  0 success, 1 usage/config error, 2 runtime failure,
  3 certification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bounds import bound_report
from .config import ConfigBundle, find_config, resolve_kappa
from .errors import (CertificationError, ConfigurationError, DataError,
                     DepBanditsError, DomainError)
from .harness import (ExperimentConfig, aggregate_traces, run_replications,
                      write_aggregate_csv, write_trace_csv)
from .instance import (LB_REJECT_THRESHOLD, certify_instance,
                       constants_to_dict)
from .svgplot import plot_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_CERTIFICATION = 3

MANIFEST_SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    """argparse's default error path exits 2; remap to the usage code."""

    def error(self, message):
        raise ConfigurationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="depbandits",
                     description="Cluster-dependent bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_arg(p):
        p.add_argument("--config", required=True,
                       help="path to a TOML config, or a bundled config name")
        p.add_argument("--out", help="output directory (overrides the config)")

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    add_config_arg(sim)
    sim.add_argument("--seed", type=int, help="override the base seed")
    sim.add_argument("--horizon", type=int, help="override the horizon")
    sim.add_argument("--reps", type=int, help="override the replication count")
    sim.add_argument("--kappa", help='override kappa: a number or "floor"')
    sim.add_argument("--audit", action="store_true",
                     help="record per-round decisions (forces the generic path)")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: DEPBANDITS_THREADS or 1)")

    bnd = sub.add_parser("bounds", help="evaluate the regret bound report")
    add_config_arg(bnd)
    bnd.add_argument("--kappa", help='override kappa: a number or "floor"')
    bnd.add_argument("--horizon", type=int, help="override the horizon")

    cert = sub.add_parser("certify", help="certify the structural constants")
    add_config_arg(cert)

    plot = sub.add_parser("plot", help="render an aggregate CSV as SVG")
    plot.add_argument("csv", help="aggregate CSV (policy,t,mean,sd,ci95)")
    plot.add_argument("svg", help="output SVG path")
    plot.add_argument("--title", default="", help="plot title")

    return parser


def _parse_kappa_override(raw: str | None):
    if raw is None:
        return None
    if raw == "floor":
        return "floor"
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(
            f'--kappa must be a number or "floor", got {raw!r}') from None


def _apply_overrides(bundle: ConfigBundle, args) -> ConfigBundle:
    return bundle.with_overrides(
        horizon=getattr(args, "horizon", None),
        replications=getattr(args, "reps", None),
        seed=getattr(args, "seed", None),
        kappa=_parse_kappa_override(getattr(args, "kappa", None)),
        audit=True if getattr(args, "audit", False) else None,
        out_dir=getattr(args, "out", None),
    )


def _threads_from(args) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("DEPBANDITS_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(
                f"DEPBANDITS_THREADS must be an integer, got {env!r}") from None
    return 1


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


class _OutputSet:
    """Tracks files written by one command so a failure can remove the
    partial results instead of leaving a half-finished directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.written.append(p)
        return p

    def discard(self) -> None:
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def cmd_simulate(args) -> int:
    bundle = _apply_overrides(find_config(args.config), args)
    kappa = resolve_kappa(bundle)
    threads = _threads_from(args)
    config = ExperimentConfig(
        instance=bundle.instance,
        policies=bundle.policies,
        horizon=bundle.horizon,
        replications=bundle.replications,
        seed=bundle.seed,
        kappa=kappa,
        checkpoints=bundle.checkpoints,
        audit=bundle.audit,
        recompute_every=bundle.recompute_every,
        threads=threads,
    )
    traces = run_replications(config)
    agg = aggregate_traces(traces, config.policies, config.replications)

    out = _OutputSet(bundle.out_dir)
    try:
        write_trace_csv(out.path("trace.csv"), traces)
        write_aggregate_csv(out.path("aggregate.csv"), agg)
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "config": bundle.name,
            "config_sha256": bundle.source_sha256,
            "policies": list(config.policies),
            "horizon": config.horizon,
            "replications": config.replications,
            "seed_base": config.seed,
            "seeds": list(range(config.seed, config.seed + config.replications)),
            "kappa": kappa,
            "kappa_spec": bundle.kappa_spec,
            "checkpoints": list(config.checkpoints),
            "audit": config.audit,
            "recompute_every": config.recompute_every,
            "kernels": kernels.IMPLEMENTATION,
            "versions": {
                "depbandits": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
        }
        _write_json(out.path("manifest.json"), manifest)
    except BaseException:
        out.discard()
        raise
    print(f"wrote {out.out_dir}/trace.csv, aggregate.csv, manifest.json")
    return EXIT_OK


def cmd_bounds(args) -> int:
    bundle = _apply_overrides(find_config(args.config), args)
    constants = certify_instance(bundle.instance)
    kappa = resolve_kappa(bundle, constants)
    report = bound_report(bundle.instance, kappa, constants)
    payload = report.to_dict()
    payload["config"] = bundle.name
    payload["horizon"] = bundle.horizon
    out = _OutputSet(bundle.out_dir)
    try:
        _write_json(out.path("bounds.json"), payload)
    except BaseException:
        out.discard()
        raise
    print(f"wrote {out.out_dir}/bounds.json "
          f"(lower {report.lower_coefficient:.6g} log T, "
          f"upper {report.upper_coefficient:.6g} log T)")
    return EXIT_OK


def cmd_certify(args) -> int:
    bundle = _apply_overrides(find_config(args.config), args)
    # force=True so a failing instance still yields the full picture;
    # the exit code carries the verdict
    constants = certify_instance(bundle.instance, force=True)
    payload = constants_to_dict(constants)
    payload["config"] = bundle.name
    failures = []
    for cid, cc in sorted(constants.clusters.items()):
        worst = min(cc.lb.values())
        if cc.violations or worst < LB_REJECT_THRESHOLD:
            failures.append((cid, worst))
    payload["certified"] = not failures
    out = _OutputSet(bundle.out_dir)
    try:
        _write_json(out.path("constants.json"), payload)
    except BaseException:
        out.discard()
        raise
    if failures:
        detail = ", ".join(f"cluster {cid} (worst lb {w:.3e})" for cid, w in failures)
        print(f"certification FAILED: {detail}", file=sys.stderr)
        print(f"wrote {out.out_dir}/constants.json")
        return EXIT_CERTIFICATION
    print(f"certified OK; wrote {out.out_dir}/constants.json")
    return EXIT_OK


def cmd_plot(args) -> int:
    plot_csv(args.csv, args.svg, args.title)
    print(f"wrote {args.svg}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "certify": cmd_certify,
    "plot": cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CertificationError as exc:
        print(f"certification error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (ConfigurationError, DomainError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DepBanditsError, RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
