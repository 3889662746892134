"""Command line interface for the risk factor domain pipeline.

Subcommands mirror the pipeline stages: synth writes a synthetic corpus,
train fits a model and persists a bundle directory, classify labels
paragraphs with a bundle, evaluate scores predictions against gold,
agreement analyzes a three-annotator table, and project-lda exports a 2-d
discriminant scatter as CSV + SVG.

Every subcommand accepts --config (a JSON object); explicit flags override
config keys. Logs go to stderr, data to files or stdout. Exit codes:
0 success, 1 config/usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .bundle import load_bundle, save_bundle
from .classify import classify_batch
from .corpus import (
    Paragraph,
    _read_jsonl,
    default_synthetic_config,
    generate_synthetic_corpus,
    load_gold,
    load_lexicon,
    load_paragraphs,
    weak_label,
    write_gold,
    write_lexicon,
    write_paragraphs,
)
from .domains import CLASSIFIED_DOMAINS, Domain, domain_from_name
from .errors import ConfigError, DataError, RiskDomainsError
from .evaluation import (
    PredictionRecord,
    build_report,
    iaa_report,
    load_annotations,
)
from .networks import N_CLASSIFIED
from .pipeline import PipelineOptions, train_pipeline
from .plots import write_scatter_svg
from .textnorm import text_to_terms
from .vectorspace import lda_2d, project_all, vectorize_all

CORPUS_NAME = "corpus.jsonl"
GOLD_NAME = "gold.jsonl"
LEXICON_NAME = "lexicon.json"


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; our contract reserves
    # 2 for data errors, so reroute through ConfigError (exit 1).
    def error(self, message):
        raise ConfigError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return raw


class _Options:
    """Flag > config > default resolution with unknown-key detection."""

    def __init__(self, args: argparse.Namespace, allowed: set[str]):
        self._args = vars(args)
        self._config = _load_config(self._args.get("config"))
        unknown = set(self._config) - allowed
        if unknown:
            raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))

    def get(self, key: str, default=None):
        value = self._args.get(key)
        if value is None:
            value = self._config.get(key, default)
        return value

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return value


def _existing_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {p}")
    return p


def cmd_synth(opts: _Options) -> int:
    out = Path(opts.get("out", "."))
    seed = int(opts.get("seed", 0))
    config = default_synthetic_config(
        paragraphs_per_domain=int(opts.get("paragraphs_per_domain", 200)),
        multilabel_per_domain=int(opts.get("multilabel_per_domain", 30)),
        other_paragraphs=int(opts.get("other_paragraphs", 100)),
    )
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e}")
    paragraphs, gold, lexicon = generate_synthetic_corpus(config, seed)
    write_paragraphs(out / CORPUS_NAME, paragraphs)
    write_gold(out / GOLD_NAME, gold)
    write_lexicon(out / LEXICON_NAME, lexicon)
    _log(
        f"wrote {len(paragraphs)} paragraphs, gold labels, and the lexicon "
        f"to {out} (seed {seed})"
    )
    return 0


def cmd_train(opts: _Options) -> int:
    corpus_path = _existing_file(opts.require("corpus"), "corpus")
    lexicon_path = _existing_file(opts.require("lexicon"), "lexicon")
    out = opts.require("out")
    alpha = opts.get("alpha")
    epochs = opts.get("epochs")
    loss = opts.get("loss")
    options = PipelineOptions(
        kind=str(opts.get("kind", "mlp")),
        svd_k=int(opts.get("svd_k", 100)),
        alpha=None if alpha is None else float(alpha),
        use_mwes=bool(opts.get("use_mwes", True)),
        epochs=None if epochs is None else int(epochs),
        batch_size=int(opts.get("batch_size", 128)),
        loss=None if loss is None else str(loss),
        seed=int(opts.get("seed", 0)),
    )
    paragraphs = load_paragraphs(corpus_path)
    lexicon = load_lexicon(lexicon_path)
    trained = train_pipeline(paragraphs, lexicon, options)
    for epoch, value in enumerate(trained.loss_history, start=1):
        _log(f"epoch {epoch} loss {value:.6f}")
    # Record the corpus file name but not its directory so that identical
    # inputs produce byte-identical bundles regardless of working paths.
    training_info = {
        "corpus": corpus_path.name,
        "paragraphs": len(paragraphs),
        "weakly_labeled": len(trained.corpus.entries),
        "svd_k": options.svd_k,
        "alpha": options.effective_alpha(),
        "seed": options.seed,
    }
    if options.kind != "cosine":
        training_info.update(
            epochs=options.effective_epochs(),
            batch_size=options.batch_size,
            loss=options.effective_loss(),
            final_loss=trained.loss_history[-1] if trained.loss_history else None,
        )
    effective = lexicon if options.use_mwes else lexicon.without_keyphrases()
    path = save_bundle(out, trained.pipeline, effective, training_info)
    _log(f"wrote bundle to {path}")
    return 0


def cmd_classify(opts: _Options) -> int:
    bundle_dir = opts.require("bundle")
    corpus_path = _existing_file(opts.require("corpus"), "corpus")
    pipeline, _, _ = load_bundle(bundle_dir)
    paragraphs = load_paragraphs(corpus_path)
    if paragraphs:
        labels, scores = classify_batch(pipeline, [p.text for p in paragraphs])
    else:
        labels, scores = [], np.zeros((0, N_CLASSIFIED))
    lines = []
    for p, assigned, row in zip(paragraphs, labels, scores):
        lines.append(
            json.dumps(
                {
                    "id": p.id,
                    "labels": [d.value for d in assigned],
                    "scores": {
                        d.value: float(row[i])
                        for i, d in enumerate(CLASSIFIED_DOMAINS)
                    },
                }
            )
        )
    payload = "".join(line + "\n" for line in lines)
    out = opts.get("out")
    if out is None:
        sys.stdout.write(payload)
    else:
        Path(out).write_text(payload, encoding="utf-8")
        _log(f"wrote {len(lines)} predictions to {out}")
    return 0


def _load_predictions(path: Path) -> dict[str, list[Domain]]:
    predictions: dict[str, list[Domain]] = {}
    for lineno, obj in _read_jsonl(path):
        try:
            pid = str(obj["id"])
            raw = obj["labels"]
        except KeyError as e:
            raise DataError(f"{path}:{lineno}: missing field {e}")
        if pid in predictions:
            raise DataError(f"{path}:{lineno}: duplicate prediction id {pid!r}")
        predictions[pid] = [domain_from_name(n) for n in raw]
    return predictions


def cmd_evaluate(opts: _Options) -> int:
    predictions_path = _existing_file(opts.require("predictions"), "predictions")
    gold_path = _existing_file(opts.require("gold"), "gold")
    predictions = _load_predictions(predictions_path)
    gold = load_gold(gold_path)
    mismatched = sorted(set(predictions) ^ set(gold))
    if mismatched:
        shown = ", ".join(mismatched[:10])
        raise DataError(
            f"{len(mismatched)} ids do not align between predictions and gold; "
            f"first offenders: {shown}"
        )
    records = [
        PredictionRecord(
            id=pid, predicted=tuple(predictions[pid]), gold=tuple(gold[pid])
        )
        for pid in gold
    ]
    report = build_report(records)
    out = opts.get("out")
    if out is not None:
        json_path = Path(str(out) + ".json")
        json_path.write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        text_path = Path(str(out) + ".txt")
        text_path.write_text(report.to_text_table() + "\n", encoding="utf-8")
        _log(f"wrote {json_path} and {text_path}")
    print(report.to_text_table())
    return 0


def _agreement_table(report: dict) -> str:
    views = [
        ("Overall", report["overall"]),
        ("First Domain Only", report["first_domain_only"]),
    ]
    lines = [f"{'View':<18}  Fleiss kappa  Multi-kappa  Accuracy  Band"]
    for name, view in views:
        lines.append(
            f"{name:<18}  {view['fleiss_kappa']:12.3f}"
            f"  {view['multi_kappa']:11.3f}  {view['mean_accuracy']:8.3f}"
            f"  {view['fleiss_band']}"
        )
    counts = report["agreement_counts"]
    lines.append(
        f"paragraphs {counts['n_paragraphs']}, "
        f"total agreement {counts['total_agreement']}, "
        f"partial {counts['partial']}, "
        f"total disagreement {counts['total_disagreement']}"
    )
    return "\n".join(lines)


def cmd_agreement(opts: _Options) -> int:
    annotations_path = _existing_file(opts.require("annotations"), "annotations")
    gold_path = _existing_file(opts.require("gold"), "gold")
    annotations = load_annotations(annotations_path)
    gold = load_gold(gold_path)
    report = iaa_report(annotations, gold)
    out = opts.get("out")
    if out is not None:
        Path(out).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _log(f"wrote {out}")
    print(_agreement_table(report))
    return 0


def cmd_project_lda(opts: _Options) -> int:
    bundle_dir = opts.require("bundle")
    corpus_path = _existing_file(opts.require("corpus"), "corpus")
    out = str(opts.require("out"))
    pipeline, lexicon, _ = load_bundle(bundle_dir)
    paragraphs = load_paragraphs(corpus_path)

    gold_path = opts.get("gold")
    labeled: list[tuple[Paragraph, Domain]] = []
    if gold_path is not None:
        gold = load_gold(_existing_file(gold_path, "gold"))
        for p in paragraphs:
            # Other is always a sole label, so checking the first suffices.
            if p.id in gold and gold[p.id][0] is not Domain.OTHER:
                labeled.append((p, gold[p.id][0]))
    else:
        effective = lexicon if pipeline.use_mwes else lexicon.without_keyphrases()
        labeled = list(weak_label(paragraphs, effective).entries)
    if not labeled:
        raise DataError("no labeled paragraphs to project")

    phrases = (pipeline.phrases or []) if pipeline.use_mwes else []
    term_docs = [text_to_terms(p.text, phrases) for p, _ in labeled]
    matrix = vectorize_all(pipeline.tfidf, term_docs)
    vectors = project_all(pipeline.svd, matrix)
    domains = [d for _, d in labeled]
    coords = lda_2d(vectors, domains)

    csv_path = Path(out + ".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "domain", "x", "y"])
        for (p, d), (x, y) in zip(labeled, coords):
            writer.writerow([p.id, d.value, f"{x:.10g}", f"{y:.10g}"])
    svg_path = Path(out + ".svg")
    write_scatter_svg(
        svg_path,
        coords,
        domains,
        title="Risk factor domains, 2-d discriminant projection",
    )
    _log(f"wrote {csv_path} and {svg_path}")
    return 0


_ALLOWED_KEYS = {
    "synth": {
        "seed", "out",
        "paragraphs_per_domain", "multilabel_per_domain", "other_paragraphs",
    },
    "train": {
        "seed", "out", "corpus", "lexicon", "kind", "svd_k", "alpha",
        "epochs", "batch_size", "loss", "use_mwes",
    },
    "classify": {"seed", "out", "bundle", "corpus"},
    "evaluate": {"seed", "out", "predictions", "gold"},
    "agreement": {"seed", "out", "annotations", "gold"},
    "project-lda": {"seed", "out", "bundle", "corpus", "gold"},
}

_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "agreement": cmd_agreement,
    "project-lda": cmd_project_lda,
}


def build_parser() -> _Parser:
    parser = _Parser(
        prog="riskdomains",
        description="Risk factor domain extraction for psychiatric narrative text.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", help="output path (see subcommand help)")
        return p

    p = add("synth", "generate a synthetic corpus, gold labels, and lexicon")
    p.add_argument("--paragraphs-per-domain", type=int, dest="paragraphs_per_domain")
    p.add_argument("--multilabel-per-domain", type=int, dest="multilabel_per_domain")
    p.add_argument("--other-paragraphs", type=int, dest="other_paragraphs")

    p = add("train", "fit a pipeline and write a model bundle directory")
    p.add_argument("--corpus", help="paragraphs JSONL file")
    p.add_argument("--lexicon", help="keyword/keyphrase lexicon JSON file")
    p.add_argument("--kind", choices=["cosine", "mlp", "rbf"])
    p.add_argument("--svd-k", type=int, dest="svd_k")
    p.add_argument("--alpha", type=float, help="threshold multiplier")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--loss", choices=["cce", "bce", "mse"])
    p.add_argument("--mwes", dest="use_mwes", action="store_const", const=True)
    p.add_argument("--no-mwes", dest="use_mwes", action="store_const", const=False)

    p = add("classify", "label paragraphs with a trained bundle (JSONL out)")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--corpus", help="paragraphs JSONL file")

    p = add("evaluate", "score predictions against gold labels")
    p.add_argument("--predictions", help="predictions JSONL file")
    p.add_argument("--gold", help="gold labels JSONL file")

    p = add("agreement", "inter-annotator agreement report")
    p.add_argument("--annotations", help="annotations JSONL file (3 annotators)")
    p.add_argument("--gold", help="gold labels JSONL file")

    p = add("project-lda", "export 2-d discriminant coordinates (CSV + SVG)")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--corpus", help="paragraphs JSONL file")
    p.add_argument("--gold", help="optional gold labels; default is weak labels")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("no subcommand given; see --help")
        opts = _Options(args, _ALLOWED_KEYS[args.command])
        return _COMMANDS[args.command](opts)
    except RiskDomainsError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
