"""Command-line entry points.

Subcommands cover the whole workflow: synthesize a corpus, build and
audit quarter graphs, train, evaluate against the trailing-volatility
baseline, predict, export attention weights, and compute transductive
node masks. Config files are flat ``key = value`` text; keys mirror the
dataclass fields they configure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import (
    IngestReport,
    SyntheticConfig,
    build_quarter_datasets,
    gen_synthetic,
    load_prices,
    load_relations,
    load_transcripts,
    split_by_time,
    write_prices,
    write_relations,
    write_transcripts,
)
from .dataio.records import Quarter
from .errors import ConfigError, VolgraphError
from .graphbuild import audit_no_leakage, build_quarter_graph, load_graph_dir, save_graph_dir
from .gnn import attention_export_rows
from .pipeline import (
    ModelConfig,
    VolatilityModel,
    evaluate,
    load_checkpoint,
    prepare_quarter,
    save_checkpoint,
    train,
    transductive_split,
)

TRANSCRIPTS = "transcripts.jsonl"
PRICES = "prices.csv"
RELATIONS = "relations.csv"


def parse_kv_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(value: str, target_type, field_name: str):
    try:
        if target_type is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if target_type is int:
            return int(value)
        if target_type is float:
            return float(value)
        if target_type is tuple:
            return tuple(int(x) for x in value.split(",") if x.strip())
        return value
    except ValueError as e:
        raise ConfigError(f"bad value {value!r} for config key {field_name}") from e


def dataclass_from_config(cls, overrides: dict[str, str]):
    """Build a config dataclass from string key/values, type-checked per field."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in overrides.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r} for {cls.__name__}")
        f = fields[key]
        base = f.type
        if isinstance(base, str):
            # from __future__ annotations stores types as strings
            base = {"int": int, "float": float, "bool": bool, "str": str, "tuple": tuple}.get(
                base.split("|")[0].strip(), str
            )
        if key == "d_ff":
            kwargs[key] = None if value.lower() in ("", "none") else int(value)
            continue
        kwargs[key] = _coerce(value, base, key)
    return cls(**kwargs)


def _load_data_dir(data_dir, report: IngestReport | None = None):
    root = Path(data_dir)
    calls = load_transcripts(root / TRANSCRIPTS, report=report)
    prices = load_prices(root / PRICES)
    relations = load_relations(root / RELATIONS)
    return calls, prices, relations


def _prepare_splits(config: ModelConfig, data_dir, report: IngestReport | None = None):
    calls, prices, relations = _load_data_dir(data_dir, report=report)
    datasets = build_quarter_datasets(calls, prices, report=report)
    groups = split_by_time(datasets, val_start=config.val_start, test_start=config.test_start)
    prepared = []
    for group in groups:
        prepared.append(
            [
                prepare_quarter(
                    build_quarter_graph(ds.calls, relations, ds.quarter, labels=ds.labels), ds
                )
                for ds in group
            ]
        )
    return prepared  # [train, val, test]


# -- subcommand implementations ----------------------------------------------------


def cmd_gen_synth(args) -> int:
    overrides = parse_kv_config(args.config) if args.config else {}
    config = dataclass_from_config(SyntheticConfig, overrides)
    data = gen_synthetic(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_transcripts(data.transcripts, out / TRANSCRIPTS)
    write_prices(data.prices, out / PRICES)
    write_relations(data.relations, out / RELATIONS)
    manifest = {"seed": args.seed, "config": dataclasses.asdict(config)}
    manifest["config"]["call_slots"] = list(config.call_slots)
    (out / "gen.json").write_text(json.dumps(manifest, indent=2))
    print(
        f"wrote {len(data.transcripts)} calls, {len(data.prices)} price series, "
        f"{len(data.relations)} relations to {out}"
    )
    return 0


def cmd_build_graph(args) -> int:
    quarter = Quarter.parse(args.quarter)
    report = IngestReport()
    calls = load_transcripts(args.transcripts, report=report)
    relations = load_relations(args.relations)
    labels = None
    if args.prices:
        prices = load_prices(args.prices)
        datasets = build_quarter_datasets(calls, prices, report=report)
        labels = {}
        for ds in datasets:
            if ds.quarter == quarter:
                labels.update(ds.labels)
    in_quarter = [c for c in calls if quarter.contains(c.call_date)]
    graph = build_quarter_graph(in_quarter, relations, quarter, labels=labels)
    save_graph_dir(graph, args.out)
    if args.report:
        report.to_json(args.report)
    labeled = sum(1 for n in graph.nodes if n.labels)
    print(
        f"{quarter}: {graph.n_nodes} nodes ({labeled} labeled), "
        f"{len(graph.edges)} edges -> {args.out}"
    )
    return 0


def cmd_audit_leakage(args) -> int:
    graph = load_graph_dir(args.graph)
    report = audit_no_leakage(graph)
    if args.report:
        report.to_json(args.report)
    print(f"{len(report.violations)} violations in {args.graph}")
    for v in report.violations[:20]:
        print(f"  edge {v['src']}->{v['dst']}: {v['reason']}")
    return 0 if report.ok else 1


def cmd_train(args) -> int:
    config = dataclass_from_config(ModelConfig, parse_kv_config(args.config) if args.config else {})
    config.validate()
    report = IngestReport()
    train_q, val_q, _ = _prepare_splits(config, args.data, report=report)
    models: dict[int, VolatilityModel] = {}
    histories = {}
    if config.joint_heads:
        model = VolatilityModel(config)
        history = train(model, train_q, val_q, config)
        for tau in config.taus:
            models[tau] = model
        histories["joint"] = history.to_dict()
        print(
            f"joint model: stopped epoch {history.stopped_epoch}, "
            f"best val MSE {history.best_val_mse:.4f} at epoch {history.best_epoch}"
        )
    else:
        for tau in config.taus:
            model = VolatilityModel(config, (tau,))
            history = train(model, train_q, val_q, config)
            models[tau] = model
            histories[f"tau{tau}"] = history.to_dict()
            print(
                f"tau={tau}: stopped epoch {history.stopped_epoch}, "
                f"best val MSE {history.best_val_mse:.4f} at epoch {history.best_epoch}"
            )
    save_checkpoint(args.out, models, config)
    if args.history:
        Path(args.history).write_text(json.dumps(histories, indent=2))
    print(f"checkpoint -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    models, config = load_checkpoint(args.model)
    splits = _prepare_splits(config, args.data)
    chosen = {"train": splits[0], "val": splits[1], "test": splits[2]}[args.split]
    model_report, baseline_report = evaluate(models, chosen)
    payload = {
        "format": "volgraph-report/1",
        "split": args.split,
        "model": model_report.to_dict(),
        "v_past": baseline_report.to_dict(),
    }
    Path(args.report).write_text(json.dumps(payload, indent=2))
    line = " ".join(
        f"{k}={v:.4f}" for k, v in model_report.to_dict().items() if isinstance(v, float)
    )
    print(f"model   {line}")
    line = " ".join(
        f"{k}={v:.4f}" for k, v in baseline_report.to_dict().items() if isinstance(v, float)
    )
    print(f"v_past  {line}")
    print(f"report -> {args.report}")
    return 0


def cmd_predict(args) -> int:
    models, config = load_checkpoint(args.model)
    graph = load_graph_dir(args.graph)
    prepared = prepare_quarter(graph)
    preds = {}
    done = {}
    for tau, model in models.items():
        key = id(model)
        if key not in done:
            done[key] = model.predict(prepared)
        preds[tau] = done[key][tau]
    out = Path(args.out).open("w", newline="") if args.out else sys.stdout
    writer = csv.writer(out)
    writer.writerow(
        ["node_id", "company_id", "call_id", "call_date"]
        + [f"pred_{tau}" for tau in sorted(preds)]
    )
    for node in graph.nodes:
        writer.writerow(
            [node.node_id, node.company_id, node.call_id, node.call_date.isoformat()]
            + [repr(float(preds[tau][node.node_id])) for tau in sorted(preds)]
        )
    if args.out:
        out.close()
        print(f"predictions -> {args.out}")
    return 0


def cmd_export_attention(args) -> int:
    models, config = load_checkpoint(args.model)
    tau = args.tau if args.tau is not None else sorted(models)[0]
    if tau not in models:
        raise ConfigError(f"checkpoint has no model for tau={tau}")
    model = models[tau]
    graph = load_graph_dir(args.graph)
    prepared = prepare_quarter(graph)
    from .numcore import no_grad

    with no_grad():
        _, _, diag = model.forward(prepared)
    rows = attention_export_rows(prepared.arrays, diag)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "src", "dst", "gamma", "gamma_over_dtilde"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4])])
    print(f"{len(rows)} attention rows ({len(diag.gamma)} layers) -> {args.out}")
    return 0


def cmd_split_transductive(args) -> int:
    graph = load_graph_dir(args.graph)
    ratios = tuple(int(x) for x in args.ratios.split(","))
    masks = transductive_split(graph, ratios)
    payload = {name: np.flatnonzero(mask).tolist() for name, mask in masks.items()}
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"masks -> {args.out}")
    else:
        print(text)
    return 0


# -- parser wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volgraph",
        description="Volatility regression over temporal earnings-call graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="key=value config file (SyntheticConfig keys)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("build-graph", help="build one quarter's company graph")
    p.add_argument("--quarter", required=True, help="e.g. 2017Q1")
    p.add_argument("--transcripts", required=True)
    p.add_argument("--relations", required=True)
    p.add_argument("--prices", help="optional; enables labels")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="ingest report JSON path")
    p.set_defaults(fn=cmd_build_graph)

    p = sub.add_parser("audit-leakage", help="check a graph for temporal leakage")
    p.add_argument("--graph", required=True)
    p.add_argument("--report", help="audit report JSON path")
    p.set_defaults(fn=cmd_audit_leakage)

    p = sub.add_parser("train", help="train on a data directory")
    p.add_argument("--config", help="key=value config file (ModelConfig keys)")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--history", help="training history JSON path")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against the baseline")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("predict", help="predict over a saved graph directory")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", help="CSV path; stdout if omitted")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("export-attention", help="dump per-layer edge attention")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=int, help="which window's model to export (separate mode)")
    p.set_defaults(fn=cmd_export_attention)

    p = sub.add_parser("split-transductive", help="chronological node masks for one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--ratios", default="7,1,2")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_split_transductive)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except VolgraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
