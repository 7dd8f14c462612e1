"""Command-line interface.

Verbs: ingest, gen-corpus, tokenize, compare, detect, normalize, obfuscate,
llm-attack, evaluate, report, serve. Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .corpus import SOURCE_EXTENSIONS, ingest_corpus, load_submission
from .detector import DefenseConfig, compare, results_to_jsonl
from .errors import PlagshieldError
from .harness import (STAGES, ExperimentConfig, Harness, detect_ranked,
                      generate_corpus)
from .matcher import MatchParams
from .minilang.tokenizer import tokenize
from .smm import SmmParams
from .stream import export_token_stream, import_token_stream
from .tokens import EnrichedSequence, Program

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _load_input(path: str) -> Program | EnrichedSequence:
    """A submission directory, a single source file, or a token-stream file."""
    if os.path.isdir(path):
        name = os.path.basename(os.path.normpath(path))
        files = sorted(f for f in os.listdir(path)
                       if f.endswith(SOURCE_EXTENSIONS + (".tokens",)))
        if not files:
            raise PlagshieldError(f"no source files under {path!r}")
        return load_submission(name, [os.path.join(path, f) for f in files], path)
    if path.endswith(".tokens"):
        return EnrichedSequence(import_token_stream(path), ())
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return Program(name, ((os.path.basename(path), text),))


def _defense_from_args(args) -> DefenseConfig:
    smm_params = SmmParams(args.smm_max_gap, args.smm_min_neighbor)
    return DefenseConfig(tsn=args.tsn, smm=args.smm, smm_params=smm_params)


def _config_from_args(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig(
            corpus_dir=getattr(args, "corpus", "") or "corpus",
            output_dir=getattr(args, "out", "") or "out")
    if getattr(args, "corpus", None):
        config.corpus_dir = args.corpus
    if getattr(args, "out", None):
        config.output_dir = args.out
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        config.jobs = args.jobs
    if getattr(args, "min_match_len", None) is not None:
        config.min_match_len = args.min_match_len
    return config


def build_parser() -> _Parser:
    parser = _Parser(prog="plagshield",
                     description="token-based plagiarism detection with "
                                 "obfuscation defenses and a red-team harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, defenses=True):
        p.add_argument("--min-match-len", type=int, default=9,
                       help="minimum tile length (default 9)")
        if defenses:
            p.add_argument("--tsn", action="store_true", help="enable normalization")
            p.add_argument("--smm", action="store_true", help="enable match merging")
            p.add_argument("--smm-max-gap", type=int, default=6)
            p.add_argument("--smm-min-neighbor", type=int, default=2)

    p = sub.add_parser("ingest", help="scan a corpus directory into a manifest")
    p.add_argument("corpus")
    p.add_argument("--out", default="out")

    p = sub.add_parser("gen-corpus", help="write a seeded synthetic corpus")
    p.add_argument("corpus")
    p.add_argument("--programs", type=int, default=40)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--min-statements", type=int, default=60)
    p.add_argument("--max-statements", type=int, default=120)

    p = sub.add_parser("tokenize", help="emit a program's token stream")
    p.add_argument("path")
    p.add_argument("--out", help="write token-stream file instead of stdout")

    p = sub.add_parser("compare", help="compare two programs")
    p.add_argument("path_a")
    p.add_argument("path_b")
    common(p)

    p = sub.add_parser("detect", help="rank all pairs of a corpus by similarity")
    p.add_argument("corpus")
    p.add_argument("--out", default="out")
    p.add_argument("--variant", default="Both", choices=["Base", "TSN", "SMM", "Both"])
    p.add_argument("--top", type=int, default=20, help="rows to print")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--min-match-len", type=int)
    p.add_argument("--config")

    p = sub.add_parser("normalize", help="emit the normalized token stream")
    p.add_argument("path")
    p.add_argument("--dump-graph", action="store_true",
                   help="print the normalization graph instead")

    p = sub.add_parser("obfuscate", help="apply an obfuscation attack")
    p.add_argument("path")
    p.add_argument("--kind", required=True,
                   choices=["insertion_exhaustive", "insertion_threshold", "refactoring"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=25.0)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--intensity", type=int, default=25)
    p.add_argument("--ops", nargs="*", default=None, help="refactoring op whitelist")
    p.add_argument("--out", required=True, help="output directory")
    common(p)

    p = sub.add_parser("llm-attack", help="AI-based obfuscation or generation")
    p.add_argument("--mode", required=True, choices=["obfuscate", "generate"])
    p.add_argument("--prompts", required=True, help="JSONL prompt template file")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--path", help="program to obfuscate (mode=obfuscate)")
    p.add_argument("--assignment", help="assignment text (mode=generate)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="run an evaluation stage")
    p.add_argument("--stage", required=True, choices=list(STAGES) + ["all"])
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--min-match-len", type=int)

    p = sub.add_parser("report", help="re-emit reports from persisted stage data")
    p.add_argument("--out", required=True, help="experiment output directory")
    p.add_argument("--stage", required=True, choices=list(STAGES))

    p = sub.add_parser("serve", help="run the detection service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_ingest(args) -> int:
    manifest = ingest_corpus(args.corpus)
    os.makedirs(args.out, exist_ok=True)
    manifest.save(os.path.join(args.out, "manifest.json"))
    print(f"ingested {len(manifest.entries)} submissions "
          f"({len(manifest.excluded)} excluded)")
    for item in manifest.excluded:
        print(f"  excluded {item['program_id']}: {item['reason']}")
    return EXIT_OK


def _cmd_gen_corpus(args) -> int:
    config = ExperimentConfig(
        corpus_dir=args.corpus, output_dir="unused", seed=args.seed,
        generator_programs=args.programs,
        generator_min_statements=args.min_statements,
        generator_max_statements=args.max_statements)
    ids = generate_corpus(config)
    print(f"wrote {len(ids)} programs under {args.corpus}")
    return EXIT_OK


def _cmd_tokenize(args) -> int:
    item = _load_input(args.path)
    seq = tokenize(item).sequence if isinstance(item, Program) else item.sequence
    if args.out:
        export_token_stream(seq, args.out)
        print(f"wrote {seq.length} tokens to {args.out}")
    else:
        for tok in seq.tokens:
            print(f"{tok.type.name} {tok.line}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    result = compare(_load_input(args.path_a), _load_input(args.path_b),
                     MatchParams(args.min_match_len), _defense_from_args(args))
    sys.stdout.write(results_to_jsonl([result]))
    return EXIT_OK


def _cmd_detect(args) -> int:
    config = _config_from_args(args)
    config.corpus_dir = args.corpus
    results = detect_ranked(args.corpus, config, args.variant)
    os.makedirs(config.output_dir, exist_ok=True)
    out_path = os.path.join(config.output_dir, f"ranked_{args.variant}.jsonl")
    with open(out_path, "w", encoding="utf-8") as handle:
        handle.write(results_to_jsonl(results))
    print(f"{'pair':<28} similarity")
    for result in results[:args.top]:
        print(f"{result.id_a} ~ {result.id_b:<14} {result.similarity:8.2f}")
    print(f"full ranking: {out_path}")
    return EXIT_OK


def _cmd_normalize(args) -> int:
    from .tsn import build_tng, dump_graph, normalize, remove_dead_nodes
    item = _load_input(args.path)
    if not isinstance(item, Program):
        raise PlagshieldError("normalization needs MiniLang sources, not token streams")
    enriched = tokenize(item)
    if args.dump_graph:
        sys.stdout.write(dump_graph(remove_dead_nodes(build_tng(enriched))))
    else:
        for tok in normalize(enriched).tokens:
            print(f"{tok.type.name} {tok.line}")
    return EXIT_OK


def _cmd_obfuscate(args) -> int:
    from .attacks import (ObfuscationRecipe, insert_dead_exhaustive,
                          insert_dead_threshold, refactor_obfuscate)
    item = _load_input(args.path)
    if not isinstance(item, Program):
        raise PlagshieldError("attacks need MiniLang sources")
    if args.kind == "insertion_exhaustive":
        program, trace = insert_dead_exhaustive(item, args.seed)
    elif args.kind == "insertion_threshold":
        program, trace = insert_dead_threshold(
            item, _defense_from_args(args), args.threshold, args.seed,
            max_iters=args.max_iters, params=MatchParams(args.min_match_len))
    else:
        recipe = ObfuscationRecipe(
            "refactoring", seed=args.seed, intensity=args.intensity,
            op_whitelist=tuple(args.ops) if args.ops else
            ObfuscationRecipe("refactoring").op_whitelist)
        program, trace = refactor_obfuscate(item, recipe)
    os.makedirs(args.out, exist_ok=True)
    for path, text in program.files:
        with open(os.path.join(args.out, os.path.basename(path)), "w",
                  encoding="utf-8") as handle:
            handle.write(text)
    trace_path = os.path.join(args.out, f"{program.program_id}.trace.json")
    with open(trace_path, "w", encoding="utf-8") as handle:
        json.dump(trace.to_record(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"wrote {program.program_id} ({trace.outcome}, "
          f"{trace.inserted_statements} insertions, "
          f"size growth {trace.size_growth:.1f}%)")
    return EXIT_OK


def _cmd_llm_attack(args) -> int:
    from .llm import (EndpointConfig, generate_via_llm, load_prompt_file,
                      obfuscate_via_llm)
    endpoint = EndpointConfig.from_env(
        audit_path=os.path.join(args.out, "audit.jsonl"))
    os.makedirs(args.out, exist_ok=True)
    templates = [t for t in load_prompt_file(args.prompts) if t.mode == args.mode]
    if not templates:
        raise PlagshieldError(f"no {args.mode!r} templates in {args.prompts}")
    results = []
    if args.mode == "obfuscate":
        if not args.path:
            raise _UsageError("--path is required for mode=obfuscate")
        program = _load_input(args.path)
        for template in templates:
            results.append(obfuscate_via_llm(program, template, endpoint))
    else:
        if not args.assignment:
            raise _UsageError("--assignment is required for mode=generate")
        for template in templates:
            results.extend(generate_via_llm(args.assignment, template,
                                            endpoint, args.n))
    for result in results:
        if result.program is not None:
            for path, text in result.program.files:
                with open(os.path.join(args.out, os.path.basename(path)), "w",
                          encoding="utf-8") as handle:
                    handle.write(text)
        print(f"prompt {result.prompt_id}: {result.outcome} "
              f"(attempts {result.attempts})")
    with open(os.path.join(args.out, "jobs.json"), "w", encoding="utf-8") as handle:
        json.dump([r.to_record() for r in results], handle, indent=2, sort_keys=True)
        handle.write("\n")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    harness = Harness(config)
    llm_endpoint = None
    if args.stage in ("llm_obf", "llm_gen"):
        from .llm import EndpointConfig
        llm_endpoint = EndpointConfig.from_env()
    stages = [args.stage] if args.stage != "all" else \
        ["unrelated", "insertion", "refactoring", "threshold_cost"]
    for stage in stages:
        harness.run_stage(stage, llm_endpoint)
        print(f"stage {stage}: reports under "
              f"{os.path.join(config.output_dir, 'stages', stage)}")
    return EXIT_OK


def _cmd_report(args) -> int:
    stage_dir = os.path.join(args.out, "stages", args.stage)
    report_path = os.path.join(stage_dir, "report.json")
    if not os.path.exists(report_path):
        raise PlagshieldError(f"no persisted report under {stage_dir}; "
                              f"run `plagshield evaluate --stage {args.stage}` first")
    with open(report_path, "r", encoding="utf-8") as handle:
        record = json.load(handle)
    for row in record.get("reports", []):
        summary = row.get("summary") or {}
        deltas = row.get("deltas") or {}
        print(f"{row['variant']:>5} {row['pairs']:>4} "
              f"median={summary.get('median', float('nan')):7.2f} "
              f"mean={summary.get('mean', float('nan')):7.2f} "
              + (f"dMedian={deltas.get('delta_median'):7.2f}" if deltas else ""))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "gen-corpus": _cmd_gen_corpus,
    "tokenize": _cmd_tokenize,
    "compare": _cmd_compare,
    "detect": _cmd_detect,
    "normalize": _cmd_normalize,
    "obfuscate": _cmd_obfuscate,
    "llm-attack": _cmd_llm_attack,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.verb](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlagshieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        # argparse --help/--version exit through here with code 0
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
