"""Batch entry points: augment, train, eval, gradcheck, export-sentences, import-parses, dump-reprs.

Settings come from built-in defaults, then a key-value config file (``--config``
or the ROBABSA_CONFIG environment variable), then command-line flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .augment import (AugmentConfig, IdentityParaphraser, MeanVectorEmbedder, SampleKind, StubParaphraser,
                      build_synthetic, dump_samples, export_sentences, import_parses, load_samples,
                      load_word_vectors)
from .corpus import CorpusError, load_conllu, load_corpus, load_label_inventory
from .lexicon import LexiconError, load_lexicons
from .model import AbsaModel, LabelIndex, ModelConfig, Vocab, apply_kv, parse_kv
from .probes import noisy_corpus
from .toydata import toy_dir
from .training import TrainConfig, TrainingError, check_requirements, save_training, train

log = logging.getLogger("robabsa")

ENV_CONFIG = "ROBABSA_CONFIG"
KIND_FILES = {SampleKind.SENTIMENT_MOD: "D_a", SampleKind.BACKGROUND_REWRITE: "D_n",
              SampleKind.ASPECT_ADDITION: "D_m"}
DERIVED = ("vocab_size", "n_label_ids")


class UsageError(Exception):
    """Bad input from the user: missing files, unknown keys, malformed data."""


@dataclass(frozen=True)
class RunConfig:
    corpus: str = ""              # instance records; empty = bundled toy split
    parses: str = ""
    dev_corpus: str = ""
    dev_parses: str = ""
    sentiment_lexicon: str = ""
    relation_lexicon: str = ""
    negations: str = ""
    vectors: str = ""
    labels: str = ""
    out: str = "run"
    synthetic: str = ""           # directory written by augment
    checkpoint: str = ""
    theta_a: float = 0.2
    theta_n: float = 0.25
    theta_m: float = 0.85
    J: int = 1
    per_target: int = 2
    paraphraser: str = "stub"
    seed: int = 0
    which: str = "r_f"
    parse_noise: float = 0.0
    load_vectors: bool = False
    op_seeds: int = 100
    model_seeds: int = 100
    regime_seeds: int = 0
    figures: bool = True


@dataclass
class Settings:
    run: RunConfig
    model: ModelConfig
    train: TrainConfig

    @property
    def out(self) -> Path:
        return Path(self.run.out)


def _fields(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


def _owner(key: str):
    for cls in (RunConfig, ModelConfig, TrainConfig):
        if key in _fields(cls) and key not in DERIVED:
            return cls
    return None


def resolve(file_values: dict, flag_values: dict) -> Settings:
    """Defaults < config file < flags; `seed` drives every random stream."""
    merged = {**file_values, **flag_values}
    buckets = {RunConfig: {}, ModelConfig: {}, TrainConfig: {}}
    for key, value in merged.items():
        cls = _owner(key)
        if cls is None:
            raise UsageError(f"unknown setting {key!r}")
        buckets[cls][key] = value
    try:
        run = apply_kv(RunConfig(), buckets[RunConfig])
        model = apply_kv(ModelConfig(), buckets[ModelConfig])
        tcfg = apply_kv(TrainConfig(), buckets[TrainConfig])
        tcfg = dataclasses.replace(tcfg, seed=run.seed)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return Settings(run, model, tcfg)


def read_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {p} not found")
    try:
        return parse_kv(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise UsageError(f"{p}: {exc}") from None


# --- inputs ------------------------------------------------------------------------------

def _path(value: str, default: Path, what: str) -> Path:
    p = Path(value) if value else default
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _corpus(s: Settings, split: str, dev: bool = False):
    r = s.run
    toy = toy_dir()
    records = _path(r.dev_corpus if dev else r.corpus, toy / f"{split}.jsonl", "corpus")
    parses = _path(r.dev_parses if dev else r.parses, toy / f"{split}.conllu", "parses")
    inventory = load_label_inventory(_path(r.labels, toy / "labels.txt", "label inventory"))
    corpus = load_corpus(records, parses, inventory)
    if r.parse_noise:
        corpus = noisy_corpus(corpus, r.parse_noise, r.seed + (7 if dev else 0), inventory)
    return corpus


def _lexicons(s: Settings):
    toy = toy_dir()
    r = s.run
    return load_lexicons(_path(r.sentiment_lexicon, toy / "sentiment.tsv", "sentiment lexicon"),
                         _path(r.relation_lexicon, toy / "relations.tsv", "relation lexicon"),
                         _path(r.negations, toy / "negations.txt", "negation list"))


def _vectors(s: Settings) -> dict:
    return load_word_vectors(_path(s.run.vectors, toy_dir() / "vectors.tsv", "word vectors"))


def _synthetic(s: Settings, required: bool):
    if not s.run.synthetic:
        if required:
            raise UsageError(f"regime {s.train.regime} needs --synthetic (a directory written by augment)")
        return []
    d = Path(s.run.synthetic)
    out = []
    for kind, stem in KIND_FILES.items():
        rec, con = d / f"{stem}.jsonl", d / f"{stem}.conllu"
        if not rec.exists():
            if required:
                raise UsageError(f"synthetic corpus file {rec} missing")
            continue
        out.extend(s for s in load_samples(rec, con) if not s.needs_reparse)
    return out


def _emit(rows):
    for k, v in rows:
        print(f"{k}\t{v}")


# --- subcommands --------------------------------------------------------------------------

def cmd_augment(s: Settings) -> int:
    corpus = _corpus(s, "train")
    lex = _lexicons(s)
    embedder = MeanVectorEmbedder(_vectors(s))
    paraphraser = {"stub": StubParaphraser(lex.relations), "identity": IdentityParaphraser(),
                   "none": None}.get(s.run.paraphraser, "?")
    if paraphraser == "?":
        raise UsageError(f"unknown paraphraser {s.run.paraphraser!r} (stub, identity, none)")
    cfg = AugmentConfig(s.run.theta_a, s.run.theta_n, s.run.theta_m, s.run.J, s.run.per_target)
    result = build_synthetic(corpus, lex, embedder, cfg, paraphraser)
    out = s.out
    out.mkdir(parents=True, exist_ok=True)
    for kind, stem in KIND_FILES.items():
        dump_samples(result.samples[kind], out / f"{stem}.jsonl", out / f"{stem}.conllu")
    pending = export_sentences(result.all())
    (out / "reparse.txt").write_text("".join(l + "\n" for l in pending), encoding="utf-8")
    summary = result.summary()
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    rows = [(f"{KIND_FILES[k]}_count", len(result.samples[k])) for k in KIND_FILES]
    rows += [("needs_reparse", len(pending)), ("paraphrase_failures", summary["paraphrase_failures"]),
             ("paraphrase_rejected", summary["paraphrase_rejected"])]
    (out / "summary.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in rows), encoding="utf-8")
    if s.run.figures:
        from .plots import confidence_histograms
        groups = {KIND_FILES[k]: [x.confidence for x in result.samples[k]] for k in KIND_FILES}
        confidence_histograms(groups, {"D_a": s.run.theta_a, "D_n": s.run.theta_n, "D_m": s.run.theta_m},
                              out / "confidence.png")
    _emit(rows)
    if not any(result.samples.values()):
        log.warning("augment produced no synthetic samples")
    return 0


def build_model(s: Settings, corpora, seed: int) -> AbsaModel:
    trees = [i.tree for c in corpora for i in c]
    model = AbsaModel(s.model, Vocab.build(trees), LabelIndex(load_label_inventory(
        _path(s.run.labels, toy_dir() / "labels.txt", "label inventory"))), seed=seed)
    if s.run.load_vectors:
        try:
            hits = model.load_word_vectors(_vectors(s))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        log.info("loaded %d pretrained word vectors", hits)
    return model


def cmd_train(s: Settings) -> int:
    cfg = s.train
    needs = cfg.adversarial or cfg.contrastive or cfg.include_synthetic
    synthetic = _synthetic(s, cfg.adversarial or cfg.contrastive) if needs else []
    try:
        check_requirements(cfg, synthetic)
    except TrainingError as exc:
        raise UsageError(str(exc)) from None
    raw = _corpus(s, "train")
    dev = _corpus(s, "dev", dev=True)
    model = build_model(s, [raw, dev, [x.as_instance() for x in synthetic]], s.run.seed)
    out = s.out
    out.mkdir(parents=True, exist_ok=True)
    result = train(cfg, model, raw, synthetic, dev, log_path=out / "train.log.jsonl", dump_dir=out)
    save_training(result, cfg, out / "checkpoint")
    rows = [("regime", cfg.regime), ("epochs", result.epochs_run), ("best_epoch", result.best_epoch),
            ("best_dev_accuracy", result.best_dev), ("skipped_anchors", result.skipped_anchors)]
    (out / "train_summary.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in rows), encoding="utf-8")
    if s.run.figures:
        from .plots import training_curves
        training_curves(result.history, out / "training.png")
    _emit(rows)
    return 0


def _load_checkpoint(s: Settings) -> AbsaModel:
    d = Path(s.run.checkpoint) if s.run.checkpoint else s.out / "checkpoint"
    if not (d / "manifest.tsv").exists():
        raise UsageError(f"no checkpoint in {d}")
    return AbsaModel.load(d)


def cmd_eval(s: Settings) -> int:
    from .evaluation import evaluate, write_report
    model = _load_checkpoint(s)
    corpus = _corpus(s, "test")
    report = evaluate(model, corpus)
    write_report(report, s.out)
    rows = [("overall", f"{report.accuracy:.6f}")]
    rows += [(f"tag:{t}", f"{report.tag_accuracy(t):.6f}") for t in sorted(report.tags)]
    if report.faithfulness is not None:
        rows.append(("faithfulness_deviation", f"{report.faithfulness:.6f}"))
    (s.out / "report.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in rows), encoding="utf-8")
    if s.run.figures:
        from .plots import subset_accuracy
        subset_accuracy(report, s.out / "accuracy.png")
    _emit(rows)
    return 0


def cmd_gradcheck(s: Settings) -> int:
    from .gradcheck import run_suite
    result = run_suite(s.run.op_seeds, s.run.model_seeds, s.run.regime_seeds)
    table = result.table()
    s.out.mkdir(parents=True, exist_ok=True)
    (s.out / "gradcheck.txt").write_text(table, encoding="utf-8")
    (s.out / "gradcheck.tsv").write_text(
        "check\tseeds\tmax_rel_error\ttolerance\tpassed\n" + "".join(
            f"{r.name}\t{r.seeds}\t{r.max_rel_error:.6e}\t{r.tolerance:g}\t{int(r.passed)}\n"
            for r in result.rows), encoding="utf-8")
    sys.stdout.write(table)
    return 0 if result.passed else 1


def cmd_export_sentences(s: Settings) -> int:
    samples = _synthetic_all(s)
    lines = export_sentences(samples)
    path = s.out / "reparse.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    _emit([("sentences", len(lines)), ("file", path)])
    return 0


def _synthetic_all(s: Settings):
    if not s.run.synthetic:
        raise UsageError("--synthetic is required")
    d = Path(s.run.synthetic)
    rec, con = d / "D_n.jsonl", d / "D_n.conllu"
    if not rec.exists():
        raise UsageError(f"{rec} not found")
    return load_samples(rec, con)


def cmd_import_parses(s: Settings) -> int:
    if not s.run.parses:
        raise UsageError("--parses (CoNLL-U for the exported sentences) is required")
    samples = _synthetic_all(s)
    trees = load_conllu(_path(s.run.parses, Path(), "parses"))
    updated = import_parses(samples, trees)
    d = Path(s.run.synthetic)
    dump_samples(updated, d / "D_n.jsonl", d / "D_n.conllu")
    _emit([("imported", len(trees))])
    return 0


def cmd_dump_reprs(s: Settings) -> int:
    from .evaluation import dump_representations
    model = _load_checkpoint(s)
    corpus = _corpus(s, "test")
    path = dump_representations(model, corpus, s.run.which, s.out / f"{s.run.which}.tsv")
    _emit([("rows", len(corpus)), ("file", path)])
    return 0


COMMANDS = {
    "augment": cmd_augment, "train": cmd_train, "eval": cmd_eval, "gradcheck": cmd_gradcheck,
    "export-sentences": cmd_export_sentences, "import-parses": cmd_import_parses,
    "dump-reprs": cmd_dump_reprs,
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robabsa", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help=f"key = value settings file (default: ${ENV_CONFIG})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    settable = {}
    for cls in (RunConfig, ModelConfig, TrainConfig):
        for n, f in _fields(cls).items():
            if n not in DERIVED:
                settable.setdefault(n, f)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=argparse.SUPPRESS)
        for key, f in settable.items():
            p.add_argument(_flag(key), dest=key, default=argparse.SUPPRESS, metavar=key.upper(),
                           help=f"default {f.default!r}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.pop("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.pop("command")
    config_path = args.pop("config", None) or os.environ.get(ENV_CONFIG)
    try:
        file_values = read_config_file(config_path) if config_path else {}
        settings = resolve(file_values, {k: v for k, v in args.items()})
        return COMMANDS[command](settings)
    except (UsageError, CorpusError, LexiconError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
