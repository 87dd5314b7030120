"""CLI coverage: config parsing, each subcommand end to end, exit codes."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from volgraph.cli import dataclass_from_config, main, parse_kv_config
from volgraph.dataio import SyntheticConfig, load_transcripts
from volgraph.errors import ConfigError
from volgraph.graphbuild import TemporalEdge, load_graph_dir, save_graph_dir
from volgraph.pipeline import ModelConfig, load_checkpoint

TINY_MODEL_CONFIG = """\
# tiny run for test speed
d_hidden = 8
dialogue_layers = 1
dialogue_heads = 2   # must divide d_hidden
network_layers = 2
mlp_hidden = 8
d_s = 8
d_p = 2
d_u = 2
d_r = 2
d_q = 2
max_sentences = 16
max_utterances = 8
max_epochs = 2
seed = 0
"""

TINY_SYNTH_CONFIG = """\
n_companies = 10
n_quarters = 12
d_s = 8
"""


class TestConfigParsing:
    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# header\n\nlr = 0.001  # inline\n\nseed=3\n")
        assert parse_kv_config(p) == {"lr": "0.001", "seed": "3"}

    def test_bad_line_reports_lineno(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("lr = 0.1\nnot a kv line\n")
        with pytest.raises(ConfigError, match=":2:"):
            parse_kv_config(p)

    def test_value_may_contain_equals(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("note = a=b\n")
        assert parse_kv_config(p) == {"note": "a=b"}

    def test_model_config_coercion(self):
        cfg = dataclass_from_config(
            ModelConfig,
            {
                "lr": "0.01",
                "d_hidden": "16",
                "dialogue_heads": "2",
                "joint_heads": "true",
                "taus": "3,7",
                "d_ff": "none",
            },
        )
        assert cfg.lr == 0.01
        assert cfg.d_hidden == 16
        assert cfg.joint_heads is True
        assert cfg.taus == (3, 7)
        assert cfg.d_ff is None

    def test_d_ff_int(self):
        cfg = dataclass_from_config(ModelConfig, {"d_ff": "32"})
        assert cfg.d_ff == 32

    @pytest.mark.parametrize("raw,want", [("1", True), ("yes", True), ("off", False), ("0", False)])
    def test_bool_spellings(self, raw, want):
        cfg = dataclass_from_config(ModelConfig, {"joint_heads": raw})
        assert cfg.joint_heads is want

    def test_bad_bool_rejected(self):
        with pytest.raises(ConfigError):
            dataclass_from_config(ModelConfig, {"joint_heads": "maybe"})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            dataclass_from_config(ModelConfig, {"bogus": "1"})

    def test_bad_int_rejected(self):
        with pytest.raises(ConfigError):
            dataclass_from_config(ModelConfig, {"d_hidden": "eight"})

    def test_synthetic_config_keys(self):
        cfg = dataclass_from_config(
            SyntheticConfig, {"n_companies": "4", "n_quarters": "2", "d_s": "8"}
        )
        assert (cfg.n_companies, cfg.n_quarters, cfg.d_s) == (4, 2, 8)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Run the whole workflow once; individual tests inspect the artifacts."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    (root / "synth.cfg").write_text(TINY_SYNTH_CONFIG)
    assert main(["gen-synth", "--seed", "3", "--out", str(data), "--config", str(root / "synth.cfg")]) == 0

    graph_dir = root / "graph"
    assert (
        main(
            [
                "build-graph",
                "--quarter", "2014Q4",
                "--transcripts", str(data / "transcripts.jsonl"),
                "--relations", str(data / "relations.csv"),
                "--prices", str(data / "prices.csv"),
                "--out", str(graph_dir),
                "--report", str(root / "ingest.json"),
            ]
        )
        == 0
    )

    cfg_path = root / "model.cfg"
    cfg_path.write_text(TINY_MODEL_CONFIG)
    ckpt = root / "model.npz"
    assert (
        main(
            [
                "train",
                "--config", str(cfg_path),
                "--data", str(data),
                "--out", str(ckpt),
                "--history", str(root / "history.json"),
            ]
        )
        == 0
    )
    return {"root": root, "data": data, "graph": graph_dir, "ckpt": ckpt}


class TestGenSynth:
    def test_outputs_and_manifest(self, workdir):
        data = workdir["data"]
        for name in ("transcripts.jsonl", "prices.csv", "relations.csv", "gen.json"):
            assert (data / name).exists()
        manifest = json.loads((data / "gen.json").read_text())
        assert manifest["seed"] == 3
        assert manifest["config"]["n_companies"] == 10
        calls = load_transcripts(data / "transcripts.jsonl")
        assert len(calls) == 10 * 12


class TestBuildGraphAndAudit:
    def test_graph_dir_loads(self, workdir):
        graph = load_graph_dir(workdir["graph"])
        assert graph.n_nodes == 10
        assert str(graph.quarter) == "2014Q4"
        assert all(n.labels is not None for n in graph.nodes)

    def test_ingest_report_written(self, workdir):
        report = json.loads((workdir["root"] / "ingest.json").read_text())
        assert isinstance(report, dict)

    def test_audit_clean_graph(self, workdir, capsys):
        rc = main(["audit-leakage", "--graph", str(workdir["graph"])])
        assert rc == 0
        assert "0 violations" in capsys.readouterr().out

    def test_audit_flags_future_edge(self, workdir, tmp_path, capsys):
        graph = load_graph_dir(workdir["graph"])
        nodes = sorted(graph.nodes, key=lambda n: n.call_date)
        late, early = nodes[-1], nodes[0]
        assert late.call_date > early.call_date
        graph.edges.append(
            TemporalEdge(
                src=late.node_id,
                dst=early.node_id,
                temporal_weight=0.5,
                similarity=0.9,
                day_gap=(late.call_date - early.call_date).days,
            )
        )
        bad_dir = tmp_path / "bad_graph"
        save_graph_dir(graph, bad_dir)
        rc = main(["audit-leakage", "--graph", str(bad_dir)])
        assert rc == 1
        out = capsys.readouterr().out
        assert "1 violations" in out

    def test_audit_missing_dir_exits_2(self, tmp_path, capsys):
        rc = main(["audit-leakage", "--graph", str(tmp_path / "nope")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestTrainEval:
    def test_checkpoint_and_history(self, workdir):
        models, config = load_checkpoint(workdir["ckpt"])
        assert sorted(models) == [3, 7, 15]
        assert config.max_epochs == 2
        history = json.loads((workdir["root"] / "history.json").read_text())
        assert sorted(history) == ["tau15", "tau3", "tau7"]
        for h in history.values():
            assert 1 <= len(h["train_loss"]) <= 2
            assert len(h["val_mse"]) == len(h["train_loss"])

    def test_eval_report_schema(self, workdir):
        report_path = workdir["root"] / "eval.json"
        rc = main(
            [
                "eval",
                "--model", str(workdir["ckpt"]),
                "--data", str(workdir["data"]),
                "--report", str(report_path),
                "--split", "test",
            ]
        )
        assert rc == 0
        payload = json.loads(report_path.read_text())
        assert payload["format"] == "volgraph-report/1"
        assert payload["split"] == "test"
        for tau in (3, 7, 15):
            m, b = payload["model"][f"mse_{tau}"], payload["v_past"][f"mse_{tau}"]
            assert payload["model"][f"r2_{tau}"] == pytest.approx(1.0 - m / b, rel=1e-12)
            assert payload["v_past"][f"r2_{tau}"] == 0.0
            assert payload["model"]["n_samples"][str(tau)] == payload["v_past"]["n_samples"][str(tau)] > 0

    def test_bad_config_key_exits_2(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("bogus = 1\n")
        rc = main(["train", "--config", str(bad), "--data", str(workdir["data"]), "--out", str(tmp_path / "x.npz")])
        assert rc == 2
        assert "bogus" in capsys.readouterr().err


class TestPredict:
    def test_csv_matches_model(self, workdir, tmp_path):
        out = tmp_path / "preds.csv"
        rc = main(["predict", "--model", str(workdir["ckpt"]), "--graph", str(workdir["graph"]), "--out", str(out)])
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        graph = load_graph_dir(workdir["graph"])
        assert len(rows) == graph.n_nodes

        from volgraph.pipeline import prepare_quarter

        models, _ = load_checkpoint(workdir["ckpt"])
        prepared = prepare_quarter(graph)
        for row in rows:
            i = int(row["node_id"])
            assert row["company_id"] == graph.nodes[i].company_id
            for tau in (3, 7, 15):
                # repr round-trips floats exactly
                assert float(row[f"pred_{tau}"]) == models[tau].predict(prepared)[tau][i]

    def test_stdout_mode(self, workdir, capsys):
        rc = main(["predict", "--model", str(workdir["ckpt"]), "--graph", str(workdir["graph"])])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("node_id,company_id,call_id,call_date,pred_3")


class TestExportAttention:
    def test_rows_and_normalization(self, workdir, tmp_path):
        out = tmp_path / "attn.csv"
        rc = main(
            ["export-attention", "--model", str(workdir["ckpt"]), "--graph", str(workdir["graph"]), "--out", str(out)]
        )
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        graph = load_graph_dir(workdir["graph"])
        n_layers = 2  # from TINY_MODEL_CONFIG
        assert len(rows) == n_layers * len(graph.edges)
        sums: dict[tuple, float] = {}
        for row in rows:
            key = (int(row["layer"]), int(row["dst"]))
            sums[key] = sums.get(key, 0.0) + float(row["gamma"])
        assert all(abs(s - 1.0) < 1e-9 for s in sums.values())

    def test_explicit_tau(self, workdir, tmp_path):
        out = tmp_path / "attn7.csv"
        rc = main(
            [
                "export-attention",
                "--model", str(workdir["ckpt"]),
                "--graph", str(workdir["graph"]),
                "--out", str(out),
                "--tau", "7",
            ]
        )
        assert rc == 0
        assert out.exists()

    def test_unknown_tau_exits_2(self, workdir, tmp_path, capsys):
        rc = main(
            [
                "export-attention",
                "--model", str(workdir["ckpt"]),
                "--graph", str(workdir["graph"]),
                "--out", str(tmp_path / "x.csv"),
                "--tau", "5",
            ]
        )
        assert rc == 2
        assert "tau=5" in capsys.readouterr().err


class TestSplitTransductive:
    def test_masks_partition_nodes(self, workdir, tmp_path):
        out = tmp_path / "masks.json"
        rc = main(["split-transductive", "--graph", str(workdir["graph"]), "--out", str(out)])
        assert rc == 0
        masks = json.loads(out.read_text())
        graph = load_graph_dir(workdir["graph"])
        all_ids = sorted(masks["train"] + masks["val"] + masks["test"])
        assert all_ids == list(range(graph.n_nodes))
        assert len(masks["train"]) == graph.n_nodes * 7 // 10

    def test_stdout_mode(self, workdir, capsys):
        rc = main(["split-transductive", "--graph", str(workdir["graph"])])
        assert rc == 0
        masks = json.loads(capsys.readouterr().out)
        assert set(masks) == {"train", "val", "test"}


class TestJointTraining:
    def test_joint_checkpoint_round_trip(self, workdir, tmp_path):
        cfg = tmp_path / "joint.cfg"
        cfg.write_text(TINY_MODEL_CONFIG + "joint_heads = true\nmax_epochs = 1\n")
        ckpt = tmp_path / "joint.npz"
        rc = main(["train", "--config", str(cfg), "--data", str(workdir["data"]), "--out", str(ckpt)])
        assert rc == 0
        models, config = load_checkpoint(ckpt)
        assert config.joint_heads
        assert len({id(m) for m in models.values()}) == 1
