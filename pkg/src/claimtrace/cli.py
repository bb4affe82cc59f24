"""Command-line entry points.

    claimtrace corpus build --papers DIR --config FILE --out corpus.json
    claimtrace corpus validate corpus.json
    claimtrace eval extraction --dataset data.jsonl --tau 0.9 --out report.json
    claimtrace eval reliance --original a.txt --edited b.txt
    claimtrace eval trust --corpus corpus.json --answers answers.jsonl
    claimtrace serve --corpus corpus.json [--demo]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import llm
from .corpus import load_corpus, load_papers_dir, save_corpus
from .embedding import HashEmbeddingProvider, RemoteEmbeddingProvider
from .errors import ClaimTraceError
from .evalharness import (
    EvalConfig,
    evaluate_extraction,
    load_eval_dataset,
    load_qa_pairs,
    reliance,
    trustworthiness_report,
    write_csv_rows,
    write_json_report,
)
from .extraction import ExtractionConfig, build_corpus
from .matching import PipelineConfig


def _make_providers(args):
    if getattr(args, "mock", False):
        from .demo import DemoProvider

        return DemoProvider(), HashEmbeddingProvider()
    provider = llm.GeminiProvider.from_env()
    embedder = RemoteEmbeddingProvider.from_env()
    return provider, embedder


def cmd_corpus_build(args) -> int:
    papers = load_papers_dir(args.papers)
    cfg = ExtractionConfig.from_file(args.config) if args.config else ExtractionConfig()
    provider, embedder = _make_providers(args)
    corpus = build_corpus(papers, cfg, provider, embedder)
    save_corpus(corpus, args.out)
    print(f"built corpus: {len(corpus.papers)} papers, {len(corpus.claims)} claims -> {args.out}")
    return 0


def cmd_corpus_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    print(f"OK: {len(corpus.papers)} papers, {len(corpus.claims)} claims")
    return 0


def cmd_eval_extraction(args) -> int:
    samples = load_eval_dataset(args.dataset)
    cfg = EvalConfig(match_threshold=args.tau)
    provider, embedder = _make_providers(args)
    result = evaluate_extraction(samples, cfg, provider, embedder)
    doc = result.to_dict()
    if args.out:
        write_json_report(doc, args.out)
    if args.csv:
        write_csv_rows(result.per_sample, args.csv)
    print(json.dumps({k: doc[k] for k in ("precision", "recall", "f1", "skipped")}, indent=2))
    return 0


def cmd_eval_reliance(args) -> int:
    original = Path(args.original).read_text(encoding="utf-8")
    edited = Path(args.edited).read_text(encoding="utf-8")
    score = reliance(original, edited)
    print(f"{score:.6f}")
    return 0


def cmd_eval_trust(args) -> int:
    corpus = load_corpus(args.corpus)
    pairs = load_qa_pairs(args.answers)
    provider, embedder = _make_providers(args)
    report = trustworthiness_report(corpus, pairs, provider, embedder, PipelineConfig())
    if args.out:
        write_json_report(report, args.out)
    if args.csv:
        write_csv_rows(report["rows"], args.csv)
    print(json.dumps(report["aggregate"], indent=2))
    return 0


def cmd_serve(args) -> int:
    import tempfile

    import uvicorn

    from .server import create_app

    log_root = args.log_dir or tempfile.mkdtemp(prefix="claimtrace-logs-")
    if args.demo:
        from .demo import build_demo_context

        ctx = build_demo_context(log_root)
        ctx.default_condition = args.default_condition
    else:
        from .server import ServerContext, load_question_bank, load_tasks

        provider, embedder = _make_providers(args)
        ctx = ServerContext(
            corpus=load_corpus(args.corpus),
            provider=provider,
            embedder=embedder,
            cfg=PipelineConfig.from_file(args.pipeline_config) if args.pipeline_config else PipelineConfig(),
            tasks=load_tasks(args.tasks),
            question_bank=load_question_bank(args.question_bank) if args.question_bank else [],
            log_root=Path(log_root),
            default_condition=args.default_condition,
        )
    app = create_app(ctx, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claimtrace")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="build or validate a claim corpus")
    corpus_sub = corpus.add_subparsers(dest="subcommand", required=True)
    build = corpus_sub.add_parser("build")
    build.add_argument("--papers", required=True, help="directory of pre-extracted paper .txt files")
    build.add_argument("--config", help="ExtractionConfig JSON file")
    build.add_argument("--out", required=True)
    build.add_argument("--mock", action="store_true", help="use the offline demo providers")
    build.set_defaults(func=cmd_corpus_build)
    validate = corpus_sub.add_parser("validate")
    validate.add_argument("corpus")
    validate.set_defaults(func=cmd_corpus_validate)

    ev = sub.add_parser("eval", help="offline evaluation")
    ev_sub = ev.add_subparsers(dest="subcommand", required=True)
    extraction = ev_sub.add_parser("extraction")
    extraction.add_argument("--dataset", required=True, help="JSONL of {id, text, reference_claims}")
    extraction.add_argument("--tau", type=float, default=0.9)
    extraction.add_argument("--out")
    extraction.add_argument("--csv")
    extraction.add_argument("--mock", action="store_true")
    extraction.set_defaults(func=cmd_eval_extraction)
    rel = ev_sub.add_parser("reliance")
    rel.add_argument("--original", required=True)
    rel.add_argument("--edited", required=True)
    rel.set_defaults(func=cmd_eval_reliance)
    trust = ev_sub.add_parser("trust")
    trust.add_argument("--corpus", required=True)
    trust.add_argument("--answers", required=True, help="JSONL of {id, question, answer?}")
    trust.add_argument("--out")
    trust.add_argument("--csv")
    trust.add_argument("--mock", action="store_true")
    trust.set_defaults(func=cmd_eval_trust)

    # flags override the CLAIMTRACE_* environment configuration
    env = os.environ.get
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--corpus", default=env("CLAIMTRACE_CORPUS"))
    serve.add_argument("--tasks", default=env("CLAIMTRACE_TASKS"))
    serve.add_argument("--question-bank", dest="question_bank",
                       default=env("CLAIMTRACE_QUESTION_BANK"))
    serve.add_argument("--pipeline-config", dest="pipeline_config",
                       default=env("CLAIMTRACE_PIPELINE_CONFIG"))
    serve.add_argument("--static-dir", dest="static_dir", default=env("CLAIMTRACE_STATIC_DIR"))
    serve.add_argument("--log-dir", dest="log_dir", default=env("CLAIMTRACE_LOG_DIR"))
    serve.add_argument("--default-condition", dest="default_condition",
                       default=env("CLAIMTRACE_DEFAULT_CONDITION", "provenance"),
                       choices=["provenance", "baseline"])
    serve.add_argument("--host", default=env("CLAIMTRACE_HOST", "127.0.0.1"))
    serve.add_argument("--port", type=int, default=int(env("CLAIMTRACE_PORT", "8000")))
    serve.add_argument("--demo", action="store_true", help="offline demo corpus and providers")
    serve.add_argument("--mock", action="store_true")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ClaimTraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
