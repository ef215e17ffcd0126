"""Pipeline commands behind `main.py`: synth, split, train, predict, eval, compare.

Every command takes the parsed argparse namespace, resolves its settings
against the optional `--config` file, writes its artifacts atomically, leaves a
`config_snapshot.yaml` next to them and returns a process exit code.
"""

import argparse
import json
import operator
import re
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import Config
from src.cli.run_config import RunConfig
from src.core.corpus import EntryKind, PronunciationEntry, locales_of, read_corpus, write_corpus
from src.core.locale import parse_locale
from src.core.phonemes import PhonemeSeq
from src.metrics.evaluate import evaluate
from src.metrics.report import EvalRecord, read_report, sort_records, write_report
from src.model.checkpoint import load_checkpoint
from src.model.predictor import Predictor
from src.model.train import train
from src.splitter.frequency import FrequencyTable
from src.splitter.lemma import SuffixLemmatizer, corpus_lemmatizer, group_by_lemma, load_lemma_file
from src.splitter.split import Partition, partition_entries, sample_split, split_sentences, verify_split, write_manifest
from src.synthlang.generator import gen_lexicon, gen_sentences, mix_diacritized
from src.synthlang.oracle import Oracle
from src.synthlang.spec import LangSpec, inventory_overlap, load_spec, shipped_spec_paths
from src.utils.exceptions import FrontEndError, UsageError
from src.utils.io import atomic_write, read_lines
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2

SYNTH_MANIFEST = "synth_manifest.json"
UNMATCHED_METRIC = "unmatched_lines"
ALL = "*"


def _require(cfg: RunConfig, section: str, key: str, cli_value, flag: str):
    value = cfg.resolve(section, key, cli_value)
    if value is None or value == []:
        raise UsageError(f"{flag} is required (or set {section}.{key} in the config file)")
    return value


def _paths(values) -> List[Path]:
    if isinstance(values, (str, Path)):
        values = [values]
    return [Path(v) for v in values]


# -- synth -------------------------------------------------------------------


def locale_seed(seed: int, locale: str) -> int:
    """Per-locale generation seed; independent of spec order and job count."""
    sequence = np.random.SeedSequence([seed, zlib.crc32(locale.encode("utf-8"))])
    return int(sequence.generate_state(1)[0])


def _word_frequencies(spec: LangSpec, words: Sequence[str], sentences: Sequence[PronunciationEntry]) -> Dict[str, int]:
    counts: Counter = Counter()
    vocabulary = set(words)
    oracle = Oracle(spec) if spec.unsegmented else None
    for entry in sentences:
        tokens = oracle.segment(entry.text) if oracle else entry.text.split(" ")
        counts.update(w for w in tokens if w in vocabulary)
    return {word: counts[word] for word in words}


def _synth_locale(spec: LangSpec, spec_name: str, out: str, seed: int, words: Optional[int], sentences: Optional[int]) -> dict:
    """Generate and write one locale's lexicon, sentences and word frequencies."""
    locale = str(spec.locale_code)
    local_seed = locale_seed(seed, locale)
    n_words = words or spec.corpus.words
    n_sentences = sentences or spec.corpus.sentences
    if spec.unsegmented and n_words > len(spec.segmentation_words()):
        n_words = len(spec.segmentation_words())
        logger.info(f"{locale}: lexicon capped at the {n_words} dictionary words")

    lexicon = gen_lexicon(spec, n_words, local_seed)
    base = gen_sentences(spec, n_sentences, spec.corpus.words_per_sentence, local_seed, lexicon)
    corpus = mix_diacritized(spec, base) if spec.diacritics else base
    freqs = _word_frequencies(spec, [e.text for e in lexicon], base)

    out_dir = Path(out)
    header = f"locale={locale} spec={spec_name} seed={seed}"
    files = {
        "words": f"{locale}.words.tsv",
        "sentences": f"{locale}.sentences.tsv",
        "freq": f"{locale}.freq.tsv",
    }
    write_corpus(out_dir / files["words"], lexicon, header)
    write_corpus(out_dir / files["sentences"], corpus, header)
    with atomic_write(out_dir / files["freq"]) as f:
        for word in sorted(freqs):
            f.write(f"{word}\t{freqs[word]}\n")

    tags = Counter(a.tag.split("=")[0] for e in corpus for a in e.annotations)
    return {
        "locale": locale,
        "spec": spec_name,
        "seed": local_seed,
        "words": len(lexicon),
        "sentences": len(corpus),
        "annotations": dict(sorted(tags.items())),
        "files": files,
    }


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    spec_files = cfg.resolve("data", "specs", args.spec) or [str(p) for p in shipped_spec_paths()]
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    seed = cfg.resolve("run", "seed", args.seed, Config.DEFAULT_SEED)
    words = cfg.resolve("data", "words", args.words)
    sentences = cfg.resolve("data", "sentences", args.sentences)
    jobs = cfg.resolve("run", "jobs", args.jobs, 1)

    specs = [(load_spec(p), Path(p).name) for p in _paths(spec_files)]
    seen: Dict[str, str] = {}
    for spec, name in specs:
        locale = str(spec.locale_code)
        if locale in seen:
            raise UsageError(f"locale {locale} is defined by both {seen[locale]} and {name}")
        seen[locale] = name

    logger.info(f"Generating {len(specs)} synthetic locales into {out} with {jobs} job(s)")
    summaries = Parallel(n_jobs=jobs)(
        delayed(_synth_locale)(spec, name, str(out), seed, words, sentences) for spec, name in specs
    )
    summaries = sorted(summaries, key=lambda s: s["locale"])
    overlap = inventory_overlap([spec for spec, _ in specs])

    manifest = {
        "seed": seed,
        "locales": summaries,
        "inventory_overlap": {k: round(v, 6) for k, v in sorted(overlap.items())},
    }
    with atomic_write(out / SYNTH_MANIFEST) as f:
        f.write(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    cfg.resolve("data", "specs", [str(p) for p in _paths(spec_files)])
    cfg.snapshot(out)
    for summary in summaries:
        logger.info(f"{summary['locale']}: {summary['words']} words, {summary['sentences']} sentences")
    return EXIT_OK


# -- split -------------------------------------------------------------------


def parse_ratios(text) -> Tuple[float, float, float]:
    """`0.85,0.05,0.10` (or a list from a config file)."""
    if isinstance(text, (list, tuple)):
        values = list(text)
    else:
        values = [v for v in re.split(r"[,/\s]+", str(text).strip()) if v]
    try:
        return tuple(float(v) for v in values)
    except ValueError as e:
        raise UsageError(f"ratios must be numbers, got {text!r}") from e


def _load_frequencies(path: Optional[str]) -> FrequencyTable:
    if path is None or not Path(path).exists():
        logger.warning(f"Frequency file {path or '(none given)'} not found; every word counts as frequency 0")
        return FrequencyTable()
    return FrequencyTable.from_file(path)


def _pair_key(entry: PronunciationEntry):
    # Diacritized and undiacritized renderings share one pronunciation
    return str(entry.locale), entry.pron.tokens


def cmd_split(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    corpus_files = _paths(_require(cfg, "data", "corpus", args.corpus, "--corpus"))
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    seed = cfg.resolve("run", "seed", args.seed, Config.DEFAULT_SEED)
    ratios = parse_ratios(cfg.resolve("data", "ratios", args.ratios, list(Config.DEFAULT_SPLIT_RATIOS)))
    percentile = cfg.resolve("data", "percentile", args.percentile, Config.FREQUENCY_PERCENTILE)
    test_fraction = cfg.resolve("data", "sentence_test_fraction", args.sentence_test_fraction, 0.10)
    dev_fraction = cfg.resolve("data", "sentence_dev_fraction", args.sentence_dev_fraction, 0.05)
    freq_file = cfg.resolve("data", "freq", args.freq)
    lemma_file = cfg.resolve("data", "lemmas", args.lemmas)

    entries: List[PronunciationEntry] = []
    for path in corpus_files:
        entries.extend(read_corpus(path))
    freqs = _load_frequencies(freq_file)
    fallback = SuffixLemmatizer(lemma_map=load_lemma_file(lemma_file)) if lemma_file else None

    outputs: Dict[Path, List[PronunciationEntry]] = {}
    manifests = []
    violations: List[str] = []
    for locale in locales_of(entries):
        name = str(locale)
        words = [e for e in entries if e.locale == locale and e.kind == EntryKind.WORD]
        sentences = [e for e in entries if e.locale == locale and e.is_sentence]

        if words:
            groups = group_by_lemma(words, corpus_lemmatizer(words, fallback))
            manifest = sample_split(groups, freqs, ratios, seed, percentile)
            found = verify_split(manifest, groups)
            violations.extend(f"{name}: {v}" for v in found)
            parts = partition_entries(manifest, groups)
            for partition in Partition:
                outputs[out / f"{name}.words.{partition.value}.tsv"] = parts[partition]
            manifests.append((out / f"{name}.split_manifest.tsv", manifest))
            achieved = ", ".join(f"{r:.3f}" for r in manifest.achieved)
            logger.info(f"{name}: {len(groups)} lemma groups split with achieved ratios ({achieved}), cap {manifest.cap}")

        if sentences:
            split = split_sentences(sentences, test_fraction, seed, dev_fraction, group_key=_pair_key)
            for partition in Partition:
                outputs[out / f"{name}.sentences.{partition.value}.tsv"] = list(getattr(split, partition.value))
            logger.info(f"{name}: sentences split {len(split.train)}/{len(split.dev)}/{len(split.test)}")

    if violations:
        for violation in violations:
            logger.error(f"Split violation: {violation}")
        return EXIT_FAILURES

    for path, part in outputs.items():
        write_corpus(path, part)
    for path, manifest in manifests:
        write_manifest(path, manifest)
    cfg.snapshot(out)
    return EXIT_OK


# -- train -------------------------------------------------------------------

MODEL_KEYS = ("layers", "d_model", "heads", "ffn_dim", "dropout", "max_src_len", "max_tgt_len", "label_smoothing")
TRAIN_KEYS = (
    "max_steps", "warmup_steps", "tokens_per_batch", "checkpoint_every",
    "dev_eval_every", "log_every", "lr_factor", "prefetch",
)


def _read_all(paths: Sequence[Path]) -> List[PronunciationEntry]:
    entries: List[PronunciationEntry] = []
    for path in paths:
        entries.extend(read_corpus(path))
    return entries


def cmd_train(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    train_files = _paths(_require(cfg, "data", "train", args.train, "--train"))
    dev_files = _paths(cfg.resolve("data", "dev", args.dev) or [])
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    locale = cfg.resolve("run", "locale", args.locale)
    seed = cfg.resolve("run", "seed", args.seed, Config.DEFAULT_SEED)

    cfg.update("model", {key: getattr(args, key) for key in MODEL_KEYS})
    cfg.update("train", {key: getattr(args, key) for key in TRAIN_KEYS})
    cfg.resolve("model", "layers", None, Config.DEFAULT_LAYERS)
    cfg.resolve("model", "d_model", None, Config.DEFAULT_D_MODEL)
    cfg.resolve("model", "heads", None, Config.DEFAULT_HEADS)
    cfg.resolve("model", "seed", None, seed)
    cfg.resolve("train", "warmup_steps", None, Config.DEFAULT_WARMUP_STEPS)
    cfg.resolve("train", "tokens_per_batch", None, Config.DEFAULT_TOKENS_PER_BATCH)
    cfg.resolve("train", "seed", None, seed)

    corpus = _read_all(train_files)
    dev_corpus = _read_all(dev_files)
    if locale is not None:
        only = parse_locale(locale)
        corpus = [e for e in corpus if e.locale == only]
        dev_corpus = [e for e in dev_corpus if e.locale == only]
        if not corpus:
            raise UsageError(f"no training entries for locale {only}")
        logger.info(f"Monolingual run restricted to {only}")

    resume = None
    model_config = cfg.model_config()
    if args.resume:
        resume = load_checkpoint(args.resume)
        if resume.model_config != model_config:
            logger.warning("Using the model configuration stored in the resumed checkpoint")
        model_config = resume.model_config
        cfg.update("model", model_config.as_dict())
    train_config = cfg.train_config()

    out.mkdir(parents=True, exist_ok=True)
    cfg.snapshot(out)
    logger.info(
        f"Training on {len(corpus)} entries over {len(locales_of(corpus))} locale(s); "
        f"{len(dev_corpus)} dev entries"
    )
    result = train(model_config, train_config, corpus, dev_corpus, out, resume)
    best = "n/a" if result.best_dev_per is None else f"{result.best_dev_per:.4f}"
    logger.info(f"Best checkpoint at step {result.best_step} (dev PER {best}) in {out / 'checkpoints'}")
    return EXIT_OK


# -- predict -----------------------------------------------------------------


@dataclass(frozen=True)
class PredictionLine:
    locale: str
    kind: str
    text: str
    pron: str
    flags: Tuple[str, ...] = ()

    def format(self) -> str:
        return "\t".join((self.locale, self.kind, self.text, self.pron, ",".join(self.flags)))

    @classmethod
    def parse(cls, line: str, line_number: int) -> "PredictionLine":
        columns = line.split("\t")
        if len(columns) < 4:
            raise UsageError(f"prediction line {line_number}: expected locale, kind, text, pron[, flags]")
        flags = tuple(f for f in columns[4].split(",") if f) if len(columns) > 4 else ()
        return cls(columns[0], columns[1], columns[2], columns[3], flags)

    @property
    def hypothesis(self) -> PhonemeSeq:
        return PhonemeSeq.lenient(self.pron.split())


def _input_item(line: str) -> Tuple[str, str, str]:
    """(locale, kind, text) from `locale<TAB>text` or a corpus-format line."""
    columns = line.split("\t")
    if len(columns) >= 3 and columns[1] in (EntryKind.WORD.value, EntryKind.SENTENCE.value):
        return columns[0], columns[1], columns[2]
    if len(columns) == 2:
        kind = EntryKind.SENTENCE if " " in columns[1] else EntryKind.WORD
        return columns[0], kind.value, columns[1]
    return columns[0], EntryKind.WORD.value, "\t".join(columns[1:])


def _error_flag(message: str) -> str:
    return "error=" + re.sub(r"[\t,\n]+", " ", message)


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    checkpoint = _require(cfg, "run", "checkpoint", args.checkpoint, "--checkpoint")
    input_file = Path(_require(cfg, "data", "input", args.input, "--input"))
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    beam = cfg.resolve("decode", "beam", args.beam, 1)
    max_len = cfg.resolve("decode", "max_len", args.max_len)

    if not input_file.exists():
        raise FileNotFoundError(f"input file not found: {input_file}")
    predictor = Predictor.from_file(checkpoint, beam=beam, max_len=max_len)

    lines: List[PredictionLine] = []
    errors = 0
    for line_number, line in read_lines(input_file):
        if not line.strip() or line.startswith("#"):
            continue
        locale, kind, text = _input_item(line)
        try:
            prediction = predictor.predict(parse_locale(locale), text)
        except FrontEndError as e:
            errors += 1
            logger.warning(f"{input_file}:{line_number}: {e}")
            lines.append(PredictionLine(locale, kind, text, "", (_error_flag(str(e)),)))
            continue
        lines.append(PredictionLine(str(prediction.locale), kind, text, str(prediction.pron), tuple(prediction.flags)))

    with atomic_write(out) as f:
        for item in lines:
            f.write(item.format() + "\n")
    cfg.snapshot(out.parent)
    logger.info(f"Wrote {len(lines)} predictions to {out}" + (f" ({errors} error records)" if errors else ""))
    return EXIT_OK


# -- eval --------------------------------------------------------------------

_GATE = re.compile(r"^\s*([A-Za-z_]+)\s*(<=|>=|==|<|>)\s*([-+0-9.eE]+)\s*$")
_OPERATORS = {"<=": operator.le, ">=": operator.ge, "==": operator.eq, "<": operator.lt, ">": operator.gt}


@dataclass(frozen=True)
class Gate:
    metric: str
    op: str
    threshold: float

    @classmethod
    def parse(cls, text: str) -> "Gate":
        match = _GATE.match(text)
        if not match:
            raise UsageError(f"cannot parse assertion {text!r}; expected e.g. per<=0.02")
        return cls(match.group(1), match.group(2), float(match.group(3)))

    def failures(self, records: Sequence[EvalRecord]) -> List[EvalRecord]:
        matching = [r for r in records if r.name == self.metric]
        if not matching:
            raise UsageError(f"assertion {self} names a metric absent from the report")
        return [r for r in matching if not _OPERATORS[self.op](r.value, self.threshold)]

    def __str__(self) -> str:
        return f"{self.metric}{self.op}{self.threshold:g}"


def _keyed(items, key_of) -> Dict[tuple, object]:
    """Map (locale, text, occurrence) to each item; duplicates get increasing occurrence indices."""
    seen: Counter = Counter()
    keyed = {}
    for item in items:
        base = key_of(item)
        keyed[base + (seen[base],)] = item
        seen[base] += 1
    return keyed


def align_predictions(
    gold: Sequence[PronunciationEntry],
    predictions: Sequence[PredictionLine]
) -> Tuple[List[Tuple[PronunciationEntry, PhonemeSeq]], List[str]]:
    """Pair gold entries with predictions by (locale, text, occurrence); also list unmatched keys."""
    gold_keyed = _keyed(gold, lambda e: (str(e.locale), e.text))
    pred_keyed = _keyed(predictions, lambda p: (p.locale, p.text))
    scored = [(entry, pred_keyed[key].hypothesis) for key, entry in gold_keyed.items() if key in pred_keyed]
    unmatched = [f"gold {key[0]}\t{key[1]}" for key in gold_keyed if key not in pred_keyed]
    unmatched += [f"prediction {key[0]}\t{key[1]}" for key in pred_keyed if key not in gold_keyed]
    return scored, unmatched


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    gold_file = Path(_require(cfg, "data", "gold", args.gold, "--gold"))
    pred_file = Path(_require(cfg, "data", "predictions", args.predictions, "--predictions"))
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    test_set = cfg.resolve("eval", "test_set", args.test_set, gold_file.stem)
    gates = [Gate.parse(g) for g in cfg.resolve("eval", "asserts", args.asserts) or []]

    gold = read_corpus(gold_file)
    if not pred_file.exists():
        raise FileNotFoundError(f"predictions file not found: {pred_file}")
    predictions = [
        PredictionLine.parse(line, n)
        for n, line in read_lines(pred_file)
        if line.strip() and not line.startswith("#")
    ]
    scored, unmatched = align_predictions(gold, predictions)
    if unmatched:
        logger.warning(f"{len(unmatched)} unmatched lines excluded from scoring")
        for item in unmatched:
            logger.warning(f"Unmatched {item}")

    kinds = {entry.kind for entry, _ in scored}
    records: List[EvalRecord] = []
    for kind in sorted(kinds, key=lambda k: k.value):
        subset = [(e, h) for e, h in scored if e.kind == kind]
        name = test_set if len(kinds) == 1 else f"{test_set}/{'words' if kind == EntryKind.WORD else 'sentences'}"
        for report in evaluate(name, subset):
            records.extend(report.records())
    if unmatched:
        records.append(EvalRecord(
            locale=ALL, test_set=test_set, name=UNMATCHED_METRIC,
            value=float(len(unmatched)), evaluated=len(scored),
        ))
    records = sort_records(records)
    write_report(out, records)
    cfg.snapshot(out.parent)

    failed = False
    for gate in gates:
        for record in gate.failures(records):
            failed = True
            logger.error(f"Assertion {gate} failed for {record.locale} {record.test_set}: {record.value:.6f}")
    return EXIT_FAILURES if failed else EXIT_OK


# -- compare -----------------------------------------------------------------

KEY_COLUMNS = ["locale", "test_set", "name"]


def _report_frame(paths: Sequence[Path], label: str) -> pd.DataFrame:
    records = [r.model_dump() for path in paths for r in read_report(path)]
    frame = pd.DataFrame(records, columns=KEY_COLUMNS + ["value"])
    duplicated = frame.duplicated(subset=KEY_COLUMNS, keep="last")
    if duplicated.any():
        logger.warning(f"{label}: {int(duplicated.sum())} repeated metric keys; keeping the last value")
    return frame[~duplicated].rename(columns={"value": label})


def compare_reports(a_paths: Sequence[Path], b_paths: Sequence[Path], label_a: str = "a", label_b: str = "b") -> pd.DataFrame:
    """Outer join on (locale, test set, metric) with `delta = b - a` and a `missing` flag."""
    if label_a == label_b:
        raise UsageError("comparison labels must differ")
    a = _report_frame(a_paths, label_a)
    b = _report_frame(b_paths, label_b)
    table = a.merge(b, on=KEY_COLUMNS, how="outer", indicator=True)
    if not (table["_merge"] == "both").any():
        logger.warning("Reports share no (locale, test set, metric) keys; the table is partial")
    table["delta"] = table[label_b] - table[label_a]
    table["missing"] = table["_merge"].map({
        "both": "",
        "left_only": f"missing_in_{label_b}",
        "right_only": f"missing_in_{label_a}",
    }).astype(str)
    table = table.drop(columns="_merge").sort_values(KEY_COLUMNS).reset_index(drop=True)
    return table[KEY_COLUMNS + [label_a, label_b, "delta", "missing"]]


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    a_paths = _paths(_require(cfg, "data", "a", args.a, "--a"))
    b_paths = _paths(_require(cfg, "data", "b", args.b, "--b"))
    out = Path(_require(cfg, "run", "out", args.out, "--out"))
    label_a = cfg.resolve("run", "label_a", args.label_a, "a")
    label_b = cfg.resolve("run", "label_b", args.label_b, "b")

    for path in a_paths + b_paths:
        if not path.exists():
            raise FileNotFoundError(f"report not found: {path}")
    table = compare_reports(a_paths, b_paths, label_a, label_b)
    with atomic_write(out) as f:
        table.to_csv(f, sep="\t", index=False, float_format="%.6f", na_rep="")
    cfg.snapshot(out.parent)
    flagged = int((table["missing"] != "").sum())
    logger.info(f"Wrote {len(table)} comparison rows to {out}" + (f" ({flagged} flagged missing)" if flagged else ""))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "split": cmd_split,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "compare": cmd_compare,
}
