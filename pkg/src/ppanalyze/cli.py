"""Command-line surface: analyze, evaluate, convert, stats, export-finetune.

Configuration precedence is flags > environment (PPA_*) > config file
(--config, JSON) > defaults, and the effective configuration is printed
to stderr at startup so runs are auditable.  Credentials come only from
the environment (PPA_API_KEY / OPENAI_API_KEY); with --replay every
command is fully offline and deterministic.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.parse
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import graph as graphmod
from . import rdfio
from .corpus import CorpusError, load_policy
from .eval.benchmark import ALL_TASKS, format_report_table, run_benchmark
from .eval.finetune import FinetuneError, FinetuneSpec, select_finetune_data, write_jsonl
from .eval.gold import GoldCorpusError, load_gold_corpus
from .extraction.backend import Backend, BackendConfig, ConfigError
from .extraction.pipeline import DocumentError, extract_document
from .extraction.prompts import TaskKind
from .policyconv import ConversionError, ConversionProfile, to_odrl, to_psdtou
from .taxonomy import Taxonomy, TaxonomyError, default_snapshot_path, load_taxonomy

ENV_PREFIX = "PPA_"

_DEFAULTS = {
    "model": "gpt-4o-mini",
    "mode": "live",
    "cache": None,
    "taxonomy": None,
    "threshold": 0.9,
    "out": "out",
    "jobs": 1,
    "seed": 0,
}


@dataclass
class RunConfig:
    model: str
    mode: str
    cache: Optional[str]
    taxonomy: Optional[str]
    threshold: float
    out: str
    jobs: int
    seed: int

    def backend_config(self) -> BackendConfig:
        return BackendConfig(
            model_name=self.model,
            cache_mode=self.mode,
            cache_path=Path(self.cache) if self.cache else None,
        )

    def taxonomy_path(self) -> Path:
        return Path(self.taxonomy) if self.taxonomy else default_snapshot_path()

    def out_dir(self) -> Path:
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path


def _coerce(name: str, value):
    if value is None:
        return None
    if name == "threshold":
        return float(value)
    if name in ("jobs", "seed"):
        return int(value)
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """flags > environment > config file > defaults."""
    values = dict(_DEFAULTS)
    config_path = getattr(args, "config", None) or os.environ.get(ENV_PREFIX + "CONFIG")
    if config_path:
        try:
            file_values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(f"error: cannot read config file {config_path}: {exc}")
        for key in values:
            if key in file_values:
                values[key] = _coerce(key, file_values[key])
    for key in values:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = _coerce(key, env)
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _coerce(key, flag)
    if getattr(args, "replay", False):
        values["mode"] = "replay"
    elif getattr(args, "record", False):
        values["mode"] = "record"
    config = RunConfig(**values)
    if not 0 < config.threshold <= 1:
        raise SystemExit(f"error: threshold must be in (0, 1], got {config.threshold}")
    print("config: " + json.dumps(vars(config), default=str), file=sys.stderr)
    return config


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--model", help="model name for backend queries")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--replay", action="store_true",
                      help="serve responses from the cache only (offline, deterministic)")
    mode.add_argument("--record", action="store_true",
                      help="query live and append responses to the cache")
    parser.add_argument("--cache", help="response cache file (JSONL)")
    parser.add_argument("--taxonomy", help="taxonomy snapshot (TSV or Turtle/N-Triples)")
    parser.add_argument("--threshold", type=float, help="relaxed-match threshold (default 0.9)")
    parser.add_argument("--out", help="output directory (default ./out)")
    parser.add_argument("--jobs", type=int, help="parallel segment workers")
    parser.add_argument("--seed", type=int, help="seed for all randomized steps")


def _load_taxonomy(config: RunConfig) -> Taxonomy:
    try:
        return load_taxonomy(config.taxonomy_path())
    except TaxonomyError as exc:
        raise SystemExit(f"error: {exc}")


def _write_run_log(out_dir: Path, records: list[dict]) -> None:
    with (out_dir / "run_log.jsonl").open("a", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    taxonomy = _load_taxonomy(config)
    try:
        backend = Backend(config.backend_config())
    except ConfigError as exc:
        raise SystemExit(f"error: {exc}")
    out_dir = config.out_dir()
    (out_dir / "audit").mkdir(exist_ok=True)
    (out_dir / "logs").mkdir(exist_ok=True)

    combined = rdfio.Graph()
    graphmod.bind_standard_prefixes(combined)
    failures = 0
    log_records: list[dict] = []

    for path in args.policies:
        service_id = Path(path).stem
        policy_uri = "urn:pp-analyze:policy#" + urllib.parse.quote(service_id, safe="")
        try:
            doc = load_policy(path, service_id)
            result = extract_document(doc, backend, taxonomy, jobs=config.jobs)
        except (CorpusError, DocumentError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            failures += 1
            continue

        prpr = graphmod.build_graph(result, service_id, policy_uri,
                                    taxonomy_version=taxonomy.version)
        (out_dir / f"{service_id}.ttl").write_bytes(graphmod.serialize(prpr, "turtle"))
        (out_dir / f"{service_id}.nt").write_bytes(graphmod.serialize(prpr, "ntriples"))
        combined.update(prpr.triples)

        audit_path = out_dir / "audit" / f"{service_id}.json"
        audit_path.write_text(
            json.dumps(result.to_audit_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        (out_dir / "logs" / f"{service_id}.build.json").write_text(
            json.dumps(prpr.build_log.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

        for seg in result.segments:
            for name, trace in sorted(seg.traces.items()):
                log_records.append({
                    "event": "backend_call" if not trace.skipped else "task_skipped",
                    "service_id": service_id,
                    "segment": seg.segment_index,
                    "task": name,
                    "digest": trace.digest,
                    "from_cache": trace.from_cache,
                    "repaired": trace.repaired,
                    "repair_stages": list(trace.repair_stages),
                    "error": trace.error,
                })
            for note in seg.notes:
                log_records.append({
                    "event": "note",
                    "service_id": service_id,
                    "segment": seg.segment_index,
                    "note": note,
                })
        for record in prpr.build_log.records:
            log_records.append({"event": "build_skip", "service_id": service_id, "note": record})

        print(f"{path}: {len(prpr)} triples, "
              f"{len(prpr.provenance)} practices -> {out_dir / (service_id + '.ttl')}")

    (out_dir / "corpus.ttl").write_bytes(rdfio.serialize(combined, "turtle"))
    _write_run_log(out_dir, log_records)
    print(f"combined corpus graph: {out_dir / 'corpus.ttl'} ({len(combined)} triples)")
    return 1 if failures else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    taxonomy = _load_taxonomy(config)
    try:
        corpus = load_gold_corpus(args.gold_dir)
    except GoldCorpusError as exc:
        raise SystemExit(f"usage error: {exc}")
    try:
        backend = Backend(config.backend_config())
    except ConfigError as exc:
        raise SystemExit(f"error: {exc}")
    tasks = None
    if args.tasks:
        tasks = [_task_by_name(name) for name in args.tasks]
    report = run_benchmark(corpus, backend, tasks=tasks, taxonomy=taxonomy,
                           threshold=config.threshold, denominator=args.denominator)
    table = format_report_table([report])
    out_dir = config.out_dir()
    (out_dir / "report.tsv").write_text(table, encoding="utf-8")
    (out_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(table, end="")
    print(f"report written to {out_dir / 'report.tsv'}", file=sys.stderr)
    return 0


def _task_by_name(name: str) -> TaskKind:
    normalized = name.strip().casefold().replace("_", "-")
    for task in ALL_TASKS:
        if task.value == normalized:
            return task
    raise SystemExit(
        f"error: unknown task {name!r}; choose from "
        + ", ".join(t.value for t in ALL_TASKS)
    )


def _read_graph_file(path: str) -> rdfio.Graph:
    p = Path(path)
    fmt = "ntriples" if p.suffix in (".nt", ".ntriples") else "turtle"
    try:
        return rdfio.parse(p.read_bytes(), fmt)
    except (OSError, rdfio.RdfError) as exc:
        raise SystemExit(f"error: cannot read graph {path}: {exc}")


def cmd_convert(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    try:
        profile = (ConversionProfile.load(args.profile) if args.profile
                   else ConversionProfile.default())
    except ConversionError as exc:
        raise SystemExit(f"error: {exc}")
    out_dir = config.out_dir()
    for path in args.graphs:
        g = _read_graph_file(path)
        stem = Path(path).stem
        odrl_graph, odrl_report = to_odrl(g, profile)
        dtou_graph, dtou_report = to_psdtou(g, profile)
        (out_dir / f"{stem}.odrl.ttl").write_bytes(rdfio.serialize(odrl_graph, "turtle"))
        (out_dir / f"{stem}.psdtou.ttl").write_bytes(rdfio.serialize(dtou_graph, "turtle"))
        report = {"odrl": odrl_report.to_dict(), "psdtou": dtou_report.to_dict()}
        (out_dir / f"{stem}.conversion.json").write_text(
            json.dumps(report, indent=2) + "\n", encoding="utf-8")
        print(f"{path}: {odrl_report.permissions} permissions, "
              f"{dtou_report.input_specs} input specs, "
              f"{dtou_report.sharing_entries} sharing entries")
        for note in odrl_report.to_dict()["unmapped_types"]:
            print(f"  unmapped practice type: {note}", file=sys.stderr)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    graphs = [_read_graph_file(path) for path in args.graphs]
    stats = graphmod.stats(graphs)
    print(stats.to_tsv(top_k=args.top), end="")
    out_dir = config.out_dir()
    (out_dir / "stats.tsv").write_text(stats.to_tsv(top_k=args.top), encoding="utf-8")
    (out_dir / "stats.json").write_text(
        json.dumps(stats.to_dict(top_k=args.top), indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_export_finetune(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    taxonomy = _load_taxonomy(config)
    try:
        corpus = load_gold_corpus(args.gold_dir)
    except GoldCorpusError as exc:
        raise SystemExit(f"usage error: {exc}")
    task = _task_by_name(args.task)
    try:
        spec = FinetuneSpec.parse(args.spec, seed=config.seed)
        train, validation = select_finetune_data(corpus, task, spec, taxonomy)
    except FinetuneError as exc:
        raise SystemExit(f"error: {exc}")
    out_dir = config.out_dir()
    train_path = out_dir / f"{task.value}-{spec.to_string()}-train.jsonl"
    val_path = out_dir / f"{task.value}-{spec.to_string()}-validation.jsonl"
    write_jsonl(train, train_path)
    write_jsonl(validation, val_path)
    print(f"{len(train)} training and {len(validation)} validation records "
          f"-> {train_path}, {val_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppanalyze",
        description="Convert privacy policies into practice graphs, formal "
                    "policies, and benchmark scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract policies into practice graphs")
    p.add_argument("policies", nargs="+", help="plain-text policy files")
    _add_common_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="score pipeline tasks against gold annotations")
    p.add_argument("gold_dir", help="directory of brat .txt/.ann pairs")
    p.add_argument("--tasks", nargs="+", help="subset of tasks to score")
    p.add_argument("--denominator", choices=["max", "gold", "mean"], default="max",
                   help="lcs-ratio denominator mode for relaxed matching")
    _add_common_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("convert", help="convert practice graphs to ODRL and psDToU")
    p.add_argument("graphs", nargs="+", help="practice graph files (.ttl/.nt)")
    p.add_argument("--profile", help="conversion profile JSON")
    _add_common_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="corpus statistics over practice graphs")
    p.add_argument("graphs", nargs="+", help="practice graph files (.ttl/.nt)")
    p.add_argument("--top", type=int, default=10, help="top-k class table size")
    _add_common_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-finetune", help="export fine-tuning datasets")
    p.add_argument("gold_dir", help="directory of brat .txt/.ann pairs")
    p.add_argument("--task", required=True, help="pipeline task to export")
    p.add_argument("--spec", required=True,
                   help="selection spec 'a-b-c-d' (e.g. 10-30-2-6)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_export_finetune)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
