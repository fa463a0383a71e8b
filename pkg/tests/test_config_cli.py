"""TOML config parsing, kappa resolution, and the command-line front end."""

import hashlib
import json
from pathlib import Path

import pytest

from depbandits import ConfigurationError
from depbandits.cli import main
from depbandits.config import (
    bundled_config_names,
    find_config,
    load_bundled_config,
    load_config,
    resolve_kappa,
)

BASE = """\
schema = 1

[space]
kind = "interval"
lower = 0.01
upper = 0.99

[[cluster]]
theta_star = 0.3
bernoulli_mirrored = true

[experiment]
policies = ["vanilla_ucb"]
horizon = 100
replications = 2
seed = 7
"""

TINY_SIM = """\
schema = 1

[space]
kind = "interval"
lower = 0.01
upper = 0.99

[[cluster]]
theta_star = 0.3
bernoulli_mirrored = true

[[cluster]]
theta_star = 0.45
bernoulli_mirrored = true

[experiment]
policies = ["ucb_d", "vanilla_ucb", "uniform_random"]
horizon = 120
replications = 3
seed = 5
"""

FLOOR_CONFIG = """\
schema = 1

[space]
kind = "interval"
lower = 0.0
upper = 1.0

[[cluster]]
theta_star = 0.2
gaussian_scales = [1.0, 1.0]
noise = 1.0

[[cluster]]
theta_star = 0.5
gaussian_scales = [1.0]
noise = 1.0

[experiment]
policies = ["ucb_d"]
horizon = 100
replications = 2
seed = 7
kappa = "floor"

[experiment.kappa_floor]
L_p = 1.0
m = 4
"""

DEGENERATE_MIXING = """\
schema = 1

[space]
kind = "simplex_interior"
dim = 2
floor = 0.01

[[cluster]]
theta_star = [0.2, 0.3]

[[cluster.arms]]
family = "finite_support"
support = [0.0, 1.0, 2.0]

[[cluster.arms]]
family = "finite_support"
support = [0.0, 1.0, 2.0]
mixing = [[0.5, 0.5], [0.5, 0.5]]

[[cluster]]
theta_star = [0.5, 0.3]

[[cluster.arms]]
family = "finite_support"
support = [0.0, 1.0, 2.0]

[experiment]
policies = ["vanilla_ucb"]
horizon = 100
replications = 2
seed = 7
"""


def write_config(tmp_path, text, name="exp"):
    p = tmp_path / f"{name}.toml"
    p.write_text(text)
    return p


def parse(tmp_path, text, name="exp"):
    return load_config(write_config(tmp_path, text, name))


class TestBundledConfigs:
    def test_names(self):
        assert bundled_config_names() == ["fig1a", "fig1b", "fig2a", "fig2b"]

    def test_fig1a_fields(self):
        b = load_bundled_config("fig1a")
        assert b.name == "fig1a"
        assert b.instance.n_arms == 6 and b.instance.n_clusters == 3
        assert b.policies == ("ucb_d", "vanilla_ucb", "uniform_random")
        assert (b.horizon, b.replications, b.seed) == (10_000, 100, 1001)
        assert b.kappa_spec is None and b.kappa_floor_args == {}
        assert b.audit is False and b.recompute_every == 1
        assert b.checkpoints == ()
        assert len(b.source_sha256) == 64

    def test_all_bundles_parse(self):
        sizes = {"fig1a": 6, "fig1b": 18, "fig2a": 8, "fig2b": 40}
        for name, m in sizes.items():
            b = load_bundled_config(name)
            assert b.instance.n_arms == m
        assert load_bundled_config("fig2a").kappa_spec == 2.0
        assert load_bundled_config("fig2b").kappa_spec == 2.0

    def test_unknown_bundle(self):
        with pytest.raises(ConfigurationError, match="fig1a"):
            load_bundled_config("fig9z")


class TestParsing:
    def test_valid_minimal(self, tmp_path):
        b = parse(tmp_path, BASE)
        assert b.name == "exp"
        assert b.instance.n_arms == 2
        assert b.out_dir == tmp_path / "exp"
        raw = (tmp_path / "exp.toml").read_bytes()
        assert b.source_sha256 == hashlib.sha256(raw).hexdigest()

    def test_output_directory(self, tmp_path):
        b = parse(tmp_path, BASE + '\n[output]\ndirectory = "res"\n')
        assert b.out_dir == tmp_path / "res"

    def test_unknown_keys_rejected_at_every_level(self, tmp_path):
        cases = [
            BASE + "\nextra = 1\n",
            BASE.replace('upper = 0.99', 'upper = 0.99\nscale = 1.0'),
            BASE.replace("bernoulli_mirrored = true",
                         "bernoulli_mirrored = true\nfoo = 1"),
            BASE.replace("seed = 7", "seed = 7\nalpha = 0.1"),
            BASE + '\n[output]\ndirectory = "res"\nmode = "w"\n',
            FLOOR_CONFIG.replace("m = 4", "m = 4\nq = 1"),
        ]
        for text in cases:
            with pytest.raises(ConfigurationError, match="unknown key"):
                parse(tmp_path, text)

    def test_schema_required_and_versioned(self, tmp_path):
        with pytest.raises(ConfigurationError, match="schema"):
            parse(tmp_path, BASE.replace("schema = 1\n", ""))
        with pytest.raises(ConfigurationError, match="unsupported schema"):
            parse(tmp_path, BASE.replace("schema = 1", "schema = 2"))

    def test_kappa_string_must_be_floor(self, tmp_path):
        bad = BASE.replace("seed = 7", 'seed = 7\nkappa = "auto"')
        with pytest.raises(ConfigurationError, match="floor"):
            parse(tmp_path, bad)

    def test_floor_requires_inputs(self, tmp_path):
        bad = BASE.replace("seed = 7", 'seed = 7\nkappa = "floor"')
        with pytest.raises(ConfigurationError, match=r"missing \['L_p', 'm'\]"):
            parse(tmp_path, bad)
        nearly = FLOOR_CONFIG.replace("m = 4\n", "")
        with pytest.raises(ConfigurationError, match=r"missing \['m'\]"):
            parse(tmp_path, nearly)

    def test_cluster_sugar_is_exclusive(self, tmp_path):
        both = BASE.replace(
            "bernoulli_mirrored = true",
            'bernoulli_mirrored = true\narms = [{family = "bernoulli_link"}]')
        with pytest.raises(ConfigurationError, match="exactly one"):
            parse(tmp_path, both)
        neither = BASE.replace("bernoulli_mirrored = true\n", "")
        with pytest.raises(ConfigurationError, match="exactly one"):
            parse(tmp_path, neither)

    def test_mirrored_false_rejected(self, tmp_path):
        bad = BASE.replace("bernoulli_mirrored = true", "bernoulli_mirrored = false")
        with pytest.raises(ConfigurationError, match="must be true"):
            parse(tmp_path, bad)

    def test_noise_needs_gaussian_scales(self, tmp_path):
        bad = BASE.replace(
            "bernoulli_mirrored = true",
            'arms = [{family = "bernoulli_link"}, '
            '{family = "bernoulli_link", link = "mirror"}]\nnoise = 1.0')
        with pytest.raises(ConfigurationError, match="noise"):
            parse(tmp_path, bad)

    def test_gaussian_scales_validation(self, tmp_path):
        bad = BASE.replace("bernoulli_mirrored = true",
                           "gaussian_scales = []\nnoise = 1.0")
        with pytest.raises(ConfigurationError, match="gaussian_scales"):
            parse(tmp_path, bad)
        missing_noise = BASE.replace("bernoulli_mirrored = true",
                                     "gaussian_scales = [1.0]")
        with pytest.raises(ConfigurationError, match="noise"):
            parse(tmp_path, missing_noise)

    def test_explicit_arm_tables(self, tmp_path):
        text = BASE.replace(
            "bernoulli_mirrored = true",
            'arms = [{family = "bernoulli_link"}, '
            '{family = "bernoulli_link", link = "mirror"}]')
        b = parse(tmp_path, text)
        assert b.instance.n_arms == 2
        assert b.instance.arm(2).mirrored

        for frag, msg in [
            ('arms = [{family = "warp_drive"}]', "family"),
            ('arms = [{family = "gaussian_scaled", noise = 1.0}]', "scale"),
            ('arms = []', "non-empty"),
            ('arms = [{family = "bernoulli_link", weird = 1}]', "unknown key"),
        ]:
            with pytest.raises(ConfigurationError, match=msg):
                parse(tmp_path, BASE.replace("bernoulli_mirrored = true", frag))

    def test_cluster_needs_a_space(self, tmp_path):
        text = BASE.replace("[space]\nkind = \"interval\"\n"
                            "lower = 0.01\nupper = 0.99\n\n", "")
        with pytest.raises(ConfigurationError, match="space"):
            parse(tmp_path, text)

    def test_per_cluster_space_override(self, tmp_path):
        text = BASE.replace(
            "theta_star = 0.3",
            'space = {kind = "interval", lower = 0.05, upper = 0.95}\n'
            "theta_star = 0.3")
        b = parse(tmp_path, text)
        assert b.instance.cluster(1).space.lower == (0.05,)

    def test_type_errors(self, tmp_path):
        for frag, msg in [
            ("horizon = 100", "horizon = true"),
            ("horizon = 100", 'horizon = "100"'),
            ("seed = 7", "seed = 7.5"),
            ('policies = ["vanilla_ucb"]', "policies = []"),
            ('policies = ["vanilla_ucb"]', "policies = [1]"),
        ]:
            with pytest.raises(ConfigurationError):
                parse(tmp_path, BASE.replace(frag, msg))
        with pytest.raises(ConfigurationError, match="checkpoints"):
            parse(tmp_path, BASE.replace("seed = 7", "seed = 7\ncheckpoints = 5"))
        with pytest.raises(ConfigurationError, match="audit"):
            parse(tmp_path, BASE.replace("seed = 7", 'seed = 7\naudit = "yes"'))

    def test_invalid_toml_and_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="invalid TOML"):
            parse(tmp_path, "schema = [unclosed\n")
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.toml")


class TestKappaResolution:
    def test_numeric_passthrough(self):
        assert resolve_kappa(load_bundled_config("fig2a")) == 2.0

    def test_practical_default(self):
        # mirrored Bernoulli: subgaussian 1/2 and unit kl ratios
        assert resolve_kappa(load_bundled_config("fig1a")) == 0.5

    def test_floor_from_config(self, tmp_path):
        b = parse(tmp_path, FLOOR_CONFIG)
        assert b.kappa_spec == "floor"
        assert resolve_kappa(b) == 12.0

    def test_floor_override_without_inputs(self, tmp_path):
        b = parse(tmp_path, BASE).with_overrides(kappa="floor")
        with pytest.raises(ConfigurationError, match=r"missing \['L_p', 'm'\]"):
            resolve_kappa(b)

    def test_nonpositive_override(self, tmp_path):
        b = parse(tmp_path, BASE).with_overrides(kappa=-1.0)
        with pytest.raises(ConfigurationError, match="positive"):
            resolve_kappa(b)


class TestOverrides:
    def test_horizon_override_resets_checkpoints(self, tmp_path):
        text = BASE.replace("seed = 7", "seed = 7\ncheckpoints = [1, 50, 100]")
        b = parse(tmp_path, text)
        assert b.checkpoints == (1, 50, 100)
        b2 = b.with_overrides(horizon=500)
        assert b2.horizon == 500 and b2.checkpoints == ()
        assert b2.seed == b.seed

    def test_field_overrides(self, tmp_path):
        b = parse(tmp_path, BASE).with_overrides(
            replications=9, seed=77, kappa=1.5, audit=True, out_dir="/tmp/x")
        assert (b.replications, b.seed, b.kappa_spec, b.audit) == (9, 77, 1.5, True)
        assert b.out_dir == Path("/tmp/x")


class TestFindConfig:
    def test_bundled_name(self):
        assert find_config("fig1a").name == "fig1a"

    def test_path(self, tmp_path):
        p = write_config(tmp_path, BASE, "custom")
        assert find_config(str(p)).name == "custom"

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError, match="no bundled config"):
            find_config("does_not_exist")

    def test_toml_suffix_forces_path_lookup(self):
        with pytest.raises(ConfigurationError, match="not found"):
            find_config("does_not_exist.toml")


MANIFEST_KEYS = {
    "schema", "config", "config_sha256", "policies", "horizon",
    "replications", "seed_base", "seeds", "kappa", "kappa_spec",
    "checkpoints", "audit", "recompute_every", "kernels", "versions",
}


class TestCliSimulate:
    def test_writes_outputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert "wrote" in capsys.readouterr().out
        for name in ("trace.csv", "aggregate.csv", "manifest.json"):
            assert (out / name).is_file()
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest) == MANIFEST_KEYS
        assert "threads" not in manifest
        assert manifest["config"] == "tiny"
        assert manifest["seeds"] == [5, 6, 7]
        assert manifest["kappa"] == 0.5  # practical default for mirrored pairs
        assert manifest["kappa_spec"] is None
        assert manifest["kernels"] in ("compiled", "pure")
        assert manifest["checkpoints"][-1] == 120

    def test_overrides_recorded(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        out = tmp_path / "out"
        rc = main(["simulate", "--config", str(cfg), "--out", str(out),
                   "--horizon", "200", "--reps", "2", "--seed", "42",
                   "--kappa", "0.7", "--audit"])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["horizon"] == 200
        assert manifest["replications"] == 2
        assert manifest["seed_base"] == 42 and manifest["seeds"] == [42, 43]
        assert manifest["kappa"] == 0.7 and manifest["kappa_spec"] == 0.7
        assert manifest["audit"] is True
        assert manifest["checkpoints"][-1] == 200

    def test_rerun_is_byte_identical_across_threads(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        outs = []
        for sub, threads in (("a", "1"), ("b", "3")):
            out = tmp_path / sub
            rc = main(["simulate", "--config", str(cfg), "--out", str(out),
                       "--threads", threads])
            assert rc == 0
            outs.append(out)
        for name in ("trace.csv", "aggregate.csv", "manifest.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_bad_config_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + "\nextra = 1\n", "broken")
        assert main(["simulate", "--config", str(cfg)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_floor_override_without_inputs_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        rc = main(["simulate", "--config", str(cfg),
                   "--out", str(tmp_path / "o"), "--kappa", "floor"])
        assert rc == 1
        assert "kappa_floor" in capsys.readouterr().err

    def test_bad_kappa_string_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        rc = main(["simulate", "--config", str(cfg),
                   "--out", str(tmp_path / "o"), "--kappa", "much"])
        assert rc == 1
        assert "--kappa" in capsys.readouterr().err

    def test_threads_env(self, tmp_path, monkeypatch, capsys):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        monkeypatch.setenv("DEPBANDITS_THREADS", "2")
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o1")]) == 0
        monkeypatch.setenv("DEPBANDITS_THREADS", "abc")
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o2")]) == 1
        assert "DEPBANDITS_THREADS" in capsys.readouterr().err
        # explicit flag beats the env var
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o3"), "--threads", "1"]) == 0

    def test_argparse_errors_exit_1(self, capsys):
        assert main([]) == 1
        assert main(["frobnicate"]) == 1
        assert main(["simulate"]) == 1
        capsys.readouterr()


class TestCliBounds:
    def test_bounds_on_bundled_config(self, tmp_path, capsys):
        out = tmp_path / "b"
        assert main(["bounds", "--config", "fig1a", "--out", str(out)]) == 0
        assert "log T" in capsys.readouterr().out
        payload = json.loads((out / "bounds.json").read_text())
        assert payload["config"] == "fig1a"
        assert payload["kappa"] == 0.5
        assert payload["partial"] is False
        assert 0.0 < payload["lower_bound_coefficient"] <= payload["upper_bound_coefficient"]
        assert len(payload["arms"]) == 6 and len(payload["clusters"]) == 3

    def test_single_cluster_has_zero_lower_bound(self, tmp_path):
        # BASE has a single cluster, so there is no suboptimal cluster term
        text = BASE.replace('policies = ["vanilla_ucb"]',
                            'policies = ["ucb_d"]\nkappa = 2.0')
        cfg = write_config(tmp_path, text, "lone")
        out = tmp_path / "b"
        assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "bounds.json").read_text())
        assert payload["lower_bound_coefficient"] == 0.0
        assert payload["clusters"][0]["optimal"] is True
        assert payload["clusters"][0]["lower_term"] is None


class TestCliCertify:
    def test_certify_ok(self, tmp_path, capsys):
        out = tmp_path / "c"
        assert main(["certify", "--config", "fig1a", "--out", str(out)]) == 0
        assert "certified OK" in capsys.readouterr().out
        payload = json.loads((out / "constants.json").read_text())
        assert payload["certified"] is True
        assert payload["config"] == "fig1a"

    def test_degenerate_mixing_fails_certification(self, tmp_path, capsys):
        cfg = write_config(tmp_path, DEGENERATE_MIXING, "degen")
        out = tmp_path / "c"
        assert main(["certify", "--config", str(cfg), "--out", str(out)]) == 3
        err = capsys.readouterr().err
        assert "certification FAILED" in err and "cluster 1" in err
        payload = json.loads((out / "constants.json").read_text())
        assert payload["certified"] is False


class TestCliPlot:
    def simulate(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM, "tiny")
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        return out / "aggregate.csv"

    def test_plot_renders_svg(self, tmp_path, capsys):
        csv = self.simulate(tmp_path)
        svg = tmp_path / "regret.svg"
        assert main(["plot", str(csv), str(svg), "--title", "Regret"]) == 0
        capsys.readouterr()
        data = svg.read_bytes()
        assert data.startswith(b"<?xml")
        for policy in (b"ucb_d", b"vanilla_ucb", b"uniform_random"):
            assert policy in data

    def test_empty_csv_exits_1(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["plot", str(empty), str(tmp_path / "x.svg")]) == 1
        capsys.readouterr()

    def test_missing_csv_exits_2(self, tmp_path, capsys):
        rc = main(["plot", str(tmp_path / "ghost.csv"), str(tmp_path / "x.svg")])
        assert rc == 2
        assert "runtime failure" in capsys.readouterr().err
