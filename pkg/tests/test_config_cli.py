import os

import numpy as np
import pytest

from repcon import cli
from repcon.config import echo_config, load_config, parse_config
from repcon.core import ConfigError
from repcon.topology import load_graph

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg_path(name):
    return os.path.join(CONFIG_DIR, name)


class TestParsing:
    def test_shipped_configs_parse(self):
        for name in ("linear_convergence.toml", "mixed_attack_arepc.toml",
                     "verify_chain.toml", "demo_small.toml", "large_benchmark.toml"):
            cfg = load_config(cfg_path(name))
            graph = cfg.build_graph()
            cfg.bind_attacks(graph)

    def test_missing_field_reports_path(self):
        with pytest.raises(ConfigError, match="experiment.dimension"):
            parse_config({"experiment": {"rounds": 5, "master_seed": 1},
                          "graph": {"path": "x"}, "protocol": {}})

    def test_bad_backend(self):
        data = {"experiment": {"dimension": 1, "rounds": 1, "master_seed": 0,
                               "backend": "carrier-pigeon"},
                "graph": {"path": "x"},
                "protocol": {"kind": "average", "alpha": 0.5}}
        with pytest.raises(ConfigError, match="experiment.backend"):
            parse_config(data)

    def test_reputation_validation_wrapped(self):
        data = {"experiment": {"dimension": 1, "rounds": 1, "master_seed": 0},
                "graph": {"kind": "ring_plus_chords", "n_honest": 3,
                          "n_byzantine": 0, "chords": 0},
                "protocol": {"kind": "arepc", "alpha": 0.5,
                             "reputation": {"eta": -1.0}}}
        with pytest.raises(ConfigError, match="protocol.reputation"):
            parse_config(data)

    def test_attack_binding_errors(self):
        cfg = load_config(cfg_path("mixed_attack_arepc.toml"))
        graph = cfg.build_graph()
        import dataclasses
        from repcon.config import AttackBinding
        bad = dataclasses.replace(cfg, attacks=(cfg.attacks[0],))  # 8, 9 unbound
        with pytest.raises(ConfigError, match="no attack spec"):
            bad.bind_attacks(graph)
        dup = dataclasses.replace(
            cfg, attacks=cfg.attacks + (AttackBinding(cfg.attacks[0].spec, (7,)),))
        with pytest.raises(ConfigError, match="bound twice"):
            dup.bind_attacks(graph)

    def test_custom_attack_rejected_in_files(self):
        data = {"experiment": {"dimension": 1, "rounds": 1, "master_seed": 0},
                "graph": {"path": "x"},
                "protocol": {"kind": "average", "alpha": 0.5},
                "attack": [{"kind": "custom", "bound": 1.0}]}
        with pytest.raises(ConfigError, match="API-only"):
            parse_config(data)


class TestEcho:
    def test_round_trip_identity(self, tmp_path):
        for name in ("linear_convergence.toml", "mixed_attack_arepc.toml",
                     "demo_small.toml"):
            cfg = load_config(cfg_path(name))
            echo = echo_config(cfg, derived={"delta_min": 1, "lambda2": 0.5})
            path = tmp_path / "echo.toml"
            path.write_text(echo)
            assert load_config(path) == cfg


class TestCli:
    def test_run_demo_outputs(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main(["run", cfg_path("demo_small.toml"), "--out-dir", str(out)])
        assert rc == 0
        metrics = (out / "metrics.csv").read_text().splitlines()
        assert metrics[0] == "round,rmse,dia,d_inf,d_2,disagreement"
        assert len(metrics) == 6  # header + five rounds
        assert (out / "reputations.csv").read_text().splitlines() == [
            "round,observer,neighbor,weight,neighbor_is_byzantine"]
        assert (out / "final_states.csv").exists()
        echoed = load_config(out / "config_echo.toml")
        assert echoed.rounds == 5
        stdout = capsys.readouterr().out
        assert "delta_min" in stdout and "lambda2" in stdout

    def test_run_determinism_byte_identical(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert cli.main(["run", cfg_path("demo_small.toml"),
                             "--out-dir", str(out)]) == 0
            outs.append({n: (out / n).read_bytes()
                         for n in ("metrics.csv", "reputations.csv", "final_states.csv")})
        assert outs[0] == outs[1]

    def test_seed_override_changes_outputs(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cli.main(["run", cfg_path("demo_small.toml"), "--out-dir", str(out1)])
        cli.main(["run", cfg_path("demo_small.toml"), "--out-dir", str(out2),
                  "--seed", "999"])
        assert (out1 / "metrics.csv").read_bytes() != (out2 / "metrics.csv").read_bytes()

    def test_invalid_config_exit_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[experiment]\nrounds = 5\n")
        assert cli.main(["run", str(bad)]) == 2

    def test_verify_exit_codes(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "tiny.toml"
        text = open(cfg_path("verify_chain.toml")).read()
        text = text.replace("rounds = 1000", "rounds = 20")
        text = text.replace('path = "chain_20h_4b.graph"',
                            f'path = "{cfg_path("chain_20h_4b.graph")}"')
        cfg.write_text(text)
        assert cli.main(["verify", str(cfg), "--pairs", "10"]) == 0
        out = capsys.readouterr().out
        for name in ("honest_loss_bound", "truncation_bound", "consensus_weights",
                     "loss_lipschitz", "weight_lipschitz"):
            assert name in out
        # any failing report flips the exit code to 1
        from repcon.verify import BoundReport
        monkeypatch.setattr(
            cli.V, "check_lipschitz",
            lambda *a, **k: (BoundReport("loss_lipschitz", 1, 1.0, 0.0, False),
                             BoundReport("weight_lipschitz", 1, 1.0, 0.0, False)))
        assert cli.main(["verify", str(cfg), "--pairs", "10"]) == 1

    def test_gen_topology(self, tmp_path):
        out = tmp_path / "g.graph"
        rc = cli.main(["gen-topology", "random_regular", "--n-honest", "13",
                       "--n-byzantine", "3", "--seed", "4", "--degree", "5",
                       "--out", str(out)])
        assert rc == 0
        g = load_graph(out)
        assert g.n == 16 and len(g.byzantine) == 3

    def test_sockets_backend_matches_engine_via_cli(self, tmp_path):
        base = open(cfg_path("mixed_attack_arepc.toml")).read()
        small = base.replace("rounds = 2000", "rounds = 25")
        cfg = tmp_path / "small.toml"
        # keep the graph path resolvable from the temp location
        small = small.replace('path = "mixed_7h_3b.graph"',
                              f'path = "{cfg_path("mixed_7h_3b.graph")}"')
        cfg.write_text(small)
        out_e, out_s = tmp_path / "eng", tmp_path / "soc"
        assert cli.main(["run", str(cfg), "--out-dir", str(out_e),
                         "--backend", "engine"]) == 0
        assert cli.main(["run", str(cfg), "--out-dir", str(out_s),
                         "--backend", "sockets"]) == 0
        for name in ("metrics.csv", "reputations.csv", "final_states.csv"):
            assert (out_e / name).read_bytes() == (out_s / name).read_bytes()


class TestFixtureFiles:
    def test_shipped_graphs_match_builders(self):
        from repcon import fixtures
        assert load_graph(cfg_path("chain_20h_4b.graph")) == fixtures.chain_20h_4b()
        assert load_graph(cfg_path("mixed_7h_3b.graph")) == fixtures.mixed_7h_3b()


class TestCsvExactness:
    def test_final_states_round_trip_exactly(self, tmp_path):
        from repcon import fixtures
        from repcon.engine import run
        from repcon.export import write_run_outputs
        p = fixtures.mixed_pieces("arepc", rounds=15)
        res = run(p["graph"], p["protocol"], p["attacks"], p["init"], p["dim"],
                  15, p["master_seed"])
        paths = write_run_outputs(res, tmp_path)
        lines = open(paths["final_states"]).read().splitlines()[1:]
        for line in lines:
            cells = line.split(",")
            node = int(cells[0])
            parsed = np.array([float(c) for c in cells[1:]])
            np.testing.assert_array_equal(parsed, res.final_states[node])
