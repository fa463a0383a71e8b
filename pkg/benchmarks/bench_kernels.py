"""Timing comparison of the compiled simulation kernels against the
pure-Python twins, on the bundled experiment scenarios.

The two implementations are required to be bit-identical; this script
asserts exact equality of every output array before reporting timings,
so a drift between them fails loudly rather than skewing the numbers.

Usage: python3 benchmarks/bench_kernels.py [--horizon N] [--repeat K]
"""

import argparse
import time

import numpy as np

from depbandits import _fast
from depbandits.config import load_bundled_config
from depbandits.harness import COVER_MIN_T, _ucb_d_kernel_args
from depbandits.kernels import pure
from depbandits.models import BERNOULLI_LINK, GAUSSIAN_SCALED
from depbandits.policies import vanilla_widths


def _draws(instance, T: int, seed: int) -> np.ndarray:
    reward_seq, _ = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.Generator(np.random.Philox(reward_seq))
    family = instance.arms[0].family
    if family == GAUSSIAN_SCALED:
        return rng.standard_normal(T)
    return rng.random(T)


def _ucb_d_call(instance, T: int, kappa: float, draws: np.ndarray):
    """Bind one scenario's flat arrays; returns fn(impl) -> outputs."""
    args = _ucb_d_kernel_args(instance)
    m = instance.n_arms
    family = instance.arms[0].family
    if family == BERNOULLI_LINK:
        is_mirror = np.asarray(
            [1 if a.mirrored else 0 for a in instance.arms], dtype=np.uint8)

        def call(impl):
            return impl.run_ucb_d_bernoulli(
                T, m, is_mirror, args["offsets"], args["cluster_arms"],
                args["theta_star"], args["lo"], args["hi"], args["mean_true"],
                kappa, draws, COVER_MIN_T)
    else:
        scale = np.asarray([a.scale for a in instance.arms], dtype=np.float64)
        noise = np.asarray([a.noise for a in instance.arms], dtype=np.float64)
        a1 = np.asarray([a.scale / (a.noise * a.noise) for a in instance.arms])
        a2 = np.asarray(
            [(a.scale * a.scale) / (a.noise * a.noise) for a in instance.arms])
        kcoef = np.asarray(
            [(a.scale * a.scale) / (2.0 * (a.noise * a.noise))
             for a in instance.arms])

        def call(impl):
            return impl.run_ucb_d_gaussian(
                T, m, args["offsets"], args["cluster_arms"], scale, noise,
                a1, a2, kcoef, args["theta_star"], args["lo"], args["hi"],
                args["mean_true"], kappa, draws, COVER_MIN_T)

    return call


def _vanilla_call(instance, T: int, draws: np.ndarray):
    m = instance.n_arms
    family = instance.arms[0].family
    fam_code = 0 if family == GAUSSIAN_SCALED else 1
    mean_true = np.asarray(instance.means, dtype=np.float64)
    noise = np.asarray(
        [getattr(a, "noise", 0.0) for a in instance.arms], dtype=np.float64)
    two_sig2 = np.asarray(vanilla_widths(instance), dtype=np.float64)

    def call(impl):
        return impl.run_vanilla(T, m, fam_code, mean_true, noise, two_sig2, draws)

    return call


def _time(call, impl, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        call(impl)
        best = min(best, time.perf_counter() - t0)
    return best


def _check_identical(call) -> None:
    got_fast = call(_fast)
    got_pure = call(pure)
    for a, b in zip(got_fast, got_pure):
        assert np.array_equal(np.asarray(a), np.asarray(b)), \
            "compiled and pure kernels disagree"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()
    T = args.horizon

    rows = []
    for name, kind in [("fig1a", "ucb_d"), ("fig2a", "ucb_d"),
                       ("fig2b", "ucb_d"), ("fig1a", "vanilla")]:
        bundle = load_bundled_config(name)
        inst = bundle.instance
        draws = _draws(inst, T, args.seed)
        if kind == "ucb_d":
            kappa = bundle.kappa_spec if isinstance(bundle.kappa_spec, float) else 0.5
            call = _ucb_d_call(inst, T, kappa, draws)
        else:
            call = _vanilla_call(inst, T, draws)
        _check_identical(call)
        t_fast = _time(call, _fast, args.repeat)
        t_pure = _time(call, pure, args.repeat)
        rows.append((f"{name}/{kind}", inst.n_arms, t_fast, t_pure))

    print(f"horizon T={T}, best of {args.repeat} (outputs verified identical)")
    print(f"{'scenario':<16}{'arms':>5}{'compiled':>12}{'pure':>12}{'speedup':>9}")
    for label, m, t_fast, t_pure in rows:
        print(f"{label:<16}{m:>5}{t_fast:>11.4f}s{t_pure:>11.4f}s"
              f"{t_pure / t_fast:>8.1f}x")


if __name__ == "__main__":
    main()
