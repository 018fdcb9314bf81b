"""Command-line entry point: generate -> split -> train -> tag -> eval -> analyze.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import random
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .augment import AugmentRequest, load_fixture, request_templates
from .bio import FORMATS, Corpus, TaggedSentence, read_corpus, tokenize, write_corpus
from .errors import AddrNerError
from .evaluate import (
    accuracy_delta,
    evaluate,
    mine_error_patterns,
    read_confusion_matrix,
    report_from_matrix,
)
from .gazetteer import Gazetteer, bundled_paths, load_gazetteer
from .generate import (
    DEFAULT_CORPUS_SIZE,
    PATTERNS,
    generate_mixed_corpus,
    generate_pattern,
    lowercase_duplicate,
    split_corpus,
)
from .tagger import TrainConfig, load_model, rule_baseline, save_model, tag, train

log = logging.getLogger("addrner")

ENV_STREETS = "ADDRNER_GAZETTEER_STREETS"
ENV_MUNICIPALITIES = "ADDRNER_GAZETTEER_MUNICIPALITIES"
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _gazetteer(args) -> Gazetteer:
    streets, munis = bundled_paths()
    streets = args.gazetteer_streets or os.environ.get(ENV_STREETS) or streets
    munis = args.gazetteer_municipalities or os.environ.get(ENV_MUNICIPALITIES) or munis
    args._inputs.update({str(streets): _fingerprint(streets), str(munis): _fingerprint(munis)})
    return load_gazetteer(streets, munis)


def _read(args, path) -> Corpus:
    args._inputs[str(path)] = _fingerprint(path)
    return read_corpus(path, args.format)


def _say(args, text: str) -> None:
    if not args.quiet and not args.json:
        print(text)


# --- subcommands ----------------------------------------------------------


def cmd_generate(args) -> dict:
    g = _gazetteer(args)
    if args.pattern == "all":
        corpus = generate_mixed_corpus(g, args.count or DEFAULT_CORPUS_SIZE, args.seed)
    else:
        try:
            pid = int(args.pattern)
        except ValueError:
            raise UsageError(f"--pattern must be 1-6 or 'all', got {args.pattern}") from None
        if pid == 7:
            raise UsageError("pattern 7 is the lowercase-dup subcommand")
        if pid not in PATTERNS:
            raise UsageError(f"--pattern must be 1-6 or 'all', got {args.pattern}")
        corpus = generate_pattern(pid, args.count or 1000, g, random.Random(args.seed), with_noise=args.noise)
    write_corpus(corpus, args.out, args.format)
    _say(args, f"wrote {len(corpus)} sentences to {args.out}")
    return {"sentences": len(corpus), "out": str(args.out), "pattern": args.pattern, "noise": args.noise}


def cmd_lowercase_dup(args) -> dict:
    corpus = lowercase_duplicate(_read(args, args.input))
    write_corpus(corpus, args.out, args.format)
    _say(args, f"wrote {len(corpus)} sentences to {args.out}")
    return {"sentences": len(corpus), "out": str(args.out)}


def cmd_split(args) -> dict:
    try:
        ratios = tuple(float(x) for x in args.ratios.split(","))
    except ValueError:
        raise UsageError(f"--ratios must be comma-separated numbers, got {args.ratios}") from None
    corpus = _read(args, args.input)
    parts = split_corpus(corpus, ratios, args.seed)
    prefix = args.out_prefix or str(Path(args.input).with_suffix(""))
    ext = ".conll" if (args.format or "") == "conll" else Path(args.input).suffix or ".jsonl"
    out = {}
    for name, part in zip(("train", "val", "test"), parts):
        path = f"{prefix}.{name}{ext}"
        write_corpus(part, path, args.format)
        out[name] = {"path": path, "sentences": len(part)}
        _say(args, f"{name}: {len(part)} sentences -> {path}")
    return out


def cmd_train(args) -> dict:
    g = _gazetteer(args)
    tr, va = _read(args, args.train), _read(args, args.val)
    model = train(tr, va, g, TrainConfig(epochs=args.epochs, seed=args.seed, early_stop_patience=args.patience))
    save_model(model, args.out_model)
    _say(args, f"best epoch {model.metadata['best_epoch']}, validation accuracy "
               f"{max(model.metadata['validation_accuracy']):.4f}; model -> {args.out_model}")
    return {"model": str(args.out_model), **model.metadata}


def _read_tag_input(args) -> list[tuple[str, ...]]:
    path = Path(args.input)
    if args.raw or path.suffix == ".txt":
        lines = path.read_text(encoding="utf-8").splitlines()
        args._inputs[str(path)] = _fingerprint(path)
        return [tuple(tokenize(l)) for l in lines if l.strip()]
    return [s.tokens for s in _read(args, path)]


def cmd_tag(args) -> dict:
    g = _gazetteer(args)
    if args.baseline:
        tagger = lambda toks: rule_baseline(toks, g)  # noqa: E731
    elif args.model:
        model = load_model(args.model)
        args._inputs[str(args.model)] = _fingerprint(args.model)
        tagger = lambda toks: tag(model, toks, g)  # noqa: E731
    else:
        raise UsageError("tag needs --model or --baseline")
    sents: list[TaggedSentence] = [tagger(toks) for toks in _read_tag_input(args)]
    pred = Corpus(tuple(sents), "pred")
    if args.out:
        write_corpus(pred, args.out, args.format)
    elif not args.json:
        for s in pred:
            print(" ".join(f"{tok}/{t.value}" for tok, t in zip(s.tokens, s.tags)))
    return {"sentences": len(pred), "out": str(args.out) if args.out else None}


def cmd_eval(args) -> dict:
    if args.cm:
        cm = read_confusion_matrix(args.cm)
        args._inputs[str(args.cm)] = _fingerprint(args.cm)
        report = report_from_matrix(cm)
        result = report.as_dict()
        if args.baseline_cm:
            base = read_confusion_matrix(args.baseline_cm)
            result["delta_pp"] = accuracy_delta(base, cm)
    else:
        if not args.gold:
            raise UsageError("eval needs --cm, or --gold with --pred / --model")
        gold = _read(args, args.gold)
        if args.pred:
            pred = _read(args, args.pred)
        elif args.model:
            g = _gazetteer(args)
            model = load_model(args.model)
            pred = Corpus(tuple(tag(model, s.tokens, g) for s in gold), "pred")
        else:
            raise UsageError("eval needs --pred or --model with --gold")
        report = evaluate(gold, pred)
        result = report.as_dict()
    text = report.to_text()
    if "delta_pp" in result:
        text += f"\n\naccuracy change vs baseline: {result['delta_pp']:+.2f} pp"
    _say(args, text)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    return result


def cmd_analyze(args) -> dict:
    gold, pred = _read(args, args.gold), _read(args, args.pred)
    rep = mine_error_patterns(gold, pred, top_k=args.top_k)
    _say(args, rep.to_text())
    if args.report:
        Path(args.report).write_text(rep.to_text() + "\n", encoding="utf-8")
    return rep.as_dict()


def cmd_gazetteer_check(args) -> dict:
    g = _gazetteer(args)
    counts = g.counts()
    _say(args, f"streets: {counts['street']}\nmunicipalities: {counts['municipality']}")
    return counts


def cmd_augment(args) -> dict:
    if args.fixture:
        result = load_fixture(args.fixture)
    elif args.live:
        req = AugmentRequest.from_env(args.description, args.num)
        result = request_templates(req)
    else:
        raise UsageError("augment needs --fixture, or --live for a real API call")
    if args.out:
        Path(args.out).write_text(json.dumps(result.as_dict(), ensure_ascii=False, indent=2), encoding="utf-8")
    _say(args, f"{len(result.parsed_templates)} templates parsed, {len(result.rejected)} rejected")
    for line, reason in result.rejected:
        _say(args, f"  rejected: {line!r}: {reason}")
    return {"parsed": len(result.parsed_templates), "rejected": len(result.rejected)}


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--gazetteer-streets")
    common.add_argument("--gazetteer-municipalities")
    common.add_argument("--json", action="store_true", help="print a JSON run manifest")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--format", choices=FORMATS, help="corpus format (default: by extension)")

    parser = _Parser(prog="addrner", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="render synthetic sentences")
    p.add_argument("--pattern", required=True, help="1-6, or 'all' for the full mix")
    p.add_argument("--count", type=int)
    p.add_argument("--noise", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("lowercase-dup", parents=[common], help="append a lowercased copy")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lowercase_dup)

    p = sub.add_parser("split", parents=[common], help="train/validation/test split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ratios", default="0.8,0.15,0.05")
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", parents=[common], help="train the perceptron tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", parents=[common], help="tag raw lines or a corpus")
    p.add_argument("--model")
    p.add_argument("--baseline", action="store_true", help="use the gazetteer rule tagger")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--raw", action="store_true", help="input is plain text, one sentence per line")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", parents=[common], help="confusion matrix and metrics")
    p.add_argument("--gold")
    p.add_argument("--pred")
    p.add_argument("--model")
    p.add_argument("--cm", help="confusion-matrix file (9 rows x 9 integers)")
    p.add_argument("--baseline-cm", help="second matrix; reports the accuracy change")
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", parents=[common], help="mine error patterns")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gazetteer-check", parents=[common], help="validate lists, print counts")
    p.set_defaults(func=cmd_gazetteer_check)

    p = sub.add_parser("augment", parents=[common], help="request templates from an LLM")
    p.add_argument("--description", default="ulica, číslo domu, obec, PSČ")
    p.add_argument("--num", type=int, default=20)
    p.add_argument("--fixture", help="recorded response JSON (offline)")
    p.add_argument("--live", action="store_true", help="call the configured endpoint")
    p.add_argument("--out")
    p.set_defaults(func=cmd_augment)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet or args.json else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args._inputs = {}
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"addrner: error: {exc}", file=sys.stderr)
        return 1
    except (AddrNerError, ValueError, OSError) as exc:
        print(f"addrner: {exc}", file=sys.stderr)
        return 2
    if args.json:
        manifest = {
            "command": args.command,
            "seed": args.seed,
            "version": __version__,
            "inputs": args._inputs,
            "result": result,
        }
        print(json.dumps(manifest, ensure_ascii=False, indent=2))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
