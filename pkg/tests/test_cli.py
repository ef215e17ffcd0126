import json

import pandas as pd
import pytest
import yaml

from config import Config
from main import main
from src.cli.commands import Gate, PredictionLine, align_predictions, compare_reports, locale_seed, parse_ratios
from src.cli.run_config import SNAPSHOT_NAME, RunConfig
from src.core.corpus import parse_line, read_corpus
from src.metrics.report import EvalRecord, read_report, write_report
from src.model.checkpoint import load_checkpoint
from src.utils.exceptions import ConfigError, UsageError

SPECS = [str(Config.SPECS_DIR / "alphabetic_regular.yaml"), str(Config.SPECS_DIR / "liaison.yaml")]
TINY_MODEL = [
    "--layers", "1", "--d-model", "16", "--heads", "2", "--ffn-dim", "32",
    "--max-src-len", "40", "--max-tgt-len", "40",
]
TINY_TRAIN = [
    "--max-steps", "4", "--warmup-steps", "2", "--tokens-per-batch", "256",
    "--checkpoint-every", "2", "--dev-eval-every", "2", "--prefetch", "0",
]


def synth(out, *extra):
    return main(["synth", "--spec", *SPECS, "--words", "120", "--sentences", "60", "--seed", "5", "--out", str(out), *extra])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert synth(out) == 0
    return out


@pytest.fixture(scope="module")
def split_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("split")
    corpus = [str(synth_dir / f"{loc}.{kind}.tsv") for loc in ("sy-re", "fr-xx") for kind in ("words", "sentences")]
    freqs = str(synth_dir / "fr-xx.freq.tsv")
    assert main(["split", "--corpus", *corpus, "--freq", freqs, "--seed", "1", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(split_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main([
        "train", "--train", str(split_dir / "sy-re.words.train.tsv"),
        "--dev", str(split_dir / "sy-re.words.dev.tsv"),
        "--seed", "2", "--out", str(out), *TINY_MODEL, *TINY_TRAIN,
    ])
    assert code == 0
    return out


class TestSynth:
    def test_outputs(self, synth_dir):
        for locale in ("sy-re", "fr-xx"):
            words = read_corpus(synth_dir / f"{locale}.words.tsv")
            assert len(words) == 120
            assert len(read_corpus(synth_dir / f"{locale}.sentences.tsv")) == 60
            assert (synth_dir / f"{locale}.freq.tsv").exists()
        manifest = json.loads((synth_dir / "synth_manifest.json").read_text(encoding="utf-8"))
        assert [s["locale"] for s in manifest["locales"]] == ["fr-xx", "sy-re"]
        assert manifest["locales"][1]["seed"] == locale_seed(5, "sy-re")
        assert set(manifest["inventory_overlap"]) == {"fr-xx", "sy-re"}
        assert (synth_dir / SNAPSHOT_NAME).exists()

    def test_rerun_is_byte_identical(self, synth_dir, tmp_path):
        assert synth(tmp_path) == 0
        for name in ("sy-re.words.tsv", "fr-xx.sentences.tsv", "fr-xx.freq.tsv", "synth_manifest.json"):
            assert (tmp_path / name).read_bytes() == (synth_dir / name).read_bytes()

    def test_locale_seeds_differ(self):
        assert locale_seed(5, "sy-re") != locale_seed(5, "fr-xx")
        assert locale_seed(5, "sy-re") == locale_seed(5, "sy-re")

    def test_missing_spec(self, tmp_path):
        assert main(["synth", "--spec", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)]) == 2

    def test_missing_out(self):
        assert main(["synth", "--spec", SPECS[0]]) == 2


class TestSplit:
    def test_word_partitions_are_lemma_disjoint(self, split_dir):
        parts = {p: read_corpus(split_dir / f"sy-re.words.{p}.tsv") for p in ("train", "dev", "test")}
        lemmas = {p: {e.lemma for e in entries} for p, entries in parts.items()}
        assert not lemmas["train"] & lemmas["test"]
        assert not lemmas["train"] & lemmas["dev"]
        assert not lemmas["dev"] & lemmas["test"]
        assert sum(len(v) for v in parts.values()) == 120
        assert len(parts["test"]) >= 12

    def test_sentence_partitions(self, split_dir):
        sizes = [len(read_corpus(split_dir / f"fr-xx.sentences.{p}.tsv")) for p in ("train", "dev", "test")]
        assert sizes == [51, 3, 6]

    def test_manifest_and_snapshot(self, split_dir):
        header = (split_dir / "sy-re.split_manifest.tsv").read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("# locale=sy-re seed=1")
        snapshot = RunConfig.load(split_dir / SNAPSHOT_NAME)
        assert snapshot.get("run", "seed") == 1

    def test_missing_frequency_file_is_not_fatal(self, synth_dir, tmp_path):
        code = main([
            "split", "--corpus", str(synth_dir / "sy-re.words.tsv"),
            "--freq", str(tmp_path / "absent.tsv"), "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        assert (tmp_path / "out" / "sy-re.words.test.tsv").exists()

    @pytest.mark.parametrize("ratios", ["0.5,0.2", "0.8,0.1,0.2", "a,b,c"])
    def test_bad_ratios(self, synth_dir, tmp_path, ratios):
        code = main(["split", "--corpus", str(synth_dir / "sy-re.words.tsv"), "--ratios", ratios, "--out", str(tmp_path)])
        assert code == 2

    def test_parse_ratios(self):
        assert parse_ratios("0.85,0.05,0.10") == (0.85, 0.05, 0.10)
        assert parse_ratios([0.8, 0.1, 0.1]) == (0.8, 0.1, 0.1)
        with pytest.raises(UsageError):
            parse_ratios("x")


class TestTrainAndPredict:
    def test_run_directory(self, run_dir):
        assert (run_dir / "checkpoints" / "best.ckpt").exists()
        assert (run_dir / "checkpoints" / "step_2.ckpt").exists()
        assert len((run_dir / "train_log.jsonl").read_text().splitlines()) == 2
        snapshot = RunConfig.load(run_dir / SNAPSHOT_NAME)
        checkpoint = load_checkpoint(run_dir / "checkpoints" / "best.ckpt")
        assert snapshot.model_config() == checkpoint.model_config
        assert snapshot.get("train", "max_steps") == 4

    def test_unknown_locale_filter(self, split_dir, tmp_path):
        code = main([
            "train", "--train", str(split_dir / "sy-re.words.train.tsv"), "--locale", "de-de",
            "--out", str(tmp_path), *TINY_MODEL, *TINY_TRAIN,
        ])
        assert code == 2

    def test_predict_with_error_records(self, run_dir, tmp_path):
        inputs = tmp_path / "inputs.tsv"
        inputs.write_text("sy-re\tpata\nde-de\thund\n# comment\nsy-re\tpa ta\n", encoding="utf-8")
        out = tmp_path / "predictions.tsv"
        code = main(["predict", "--checkpoint", str(run_dir / "checkpoints" / "best.ckpt"),
                     "--input", str(inputs), "--beam", "2", "--out", str(out)])
        assert code == 0
        lines = [PredictionLine.parse(line, n) for n, line in enumerate(out.read_text(encoding="utf-8").splitlines(), 1)]
        assert [(p.locale, p.kind, p.text) for p in lines] == [
            ("sy-re", "w", "pata"), ("de-de", "w", "hund"), ("sy-re", "s", "pa ta"),
        ]
        assert lines[1].pron == ""
        assert lines[1].flags[0].startswith("error=")

    def test_overlong_line_becomes_an_error_record(self, run_dir, tmp_path):
        inputs = tmp_path / "inputs.tsv"
        inputs.write_text("sy-re\tpata\nsy-re\t" + "pa" * 40 + "\nsy-re\ttapa\n", encoding="utf-8")
        out = tmp_path / "predictions.tsv"
        code = main(["predict", "--checkpoint", str(run_dir / "checkpoints" / "best.ckpt"),
                     "--input", str(inputs), "--out", str(out)])
        assert code == 0
        lines = [PredictionLine.parse(line, n) for n, line in enumerate(out.read_text(encoding="utf-8").splitlines(), 1)]
        assert [p.text for p in lines] == ["pata", "pa" * 40, "tapa"]
        assert lines[1].pron == "" and lines[1].flags[0].startswith("error=")
        assert not any(f.startswith("error=") for f in lines[0].flags + lines[2].flags)

    def test_max_len_beyond_the_model(self, run_dir, tmp_path):
        inputs = tmp_path / "inputs.tsv"
        inputs.write_text("sy-re\tpata\n", encoding="utf-8")
        code = main(["predict", "--checkpoint", str(run_dir / "checkpoints" / "best.ckpt"),
                     "--input", str(inputs), "--max-len", "500", "--out", str(tmp_path / "p.tsv")])
        assert code == 2

    def test_predict_empty_input(self, run_dir, tmp_path):
        inputs = tmp_path / "empty.tsv"
        inputs.write_text("", encoding="utf-8")
        out = tmp_path / "predictions.tsv"
        code = main(["predict", "--checkpoint", str(run_dir / "checkpoints" / "best.ckpt"),
                     "--input", str(inputs), "--out", str(out)])
        assert code == 0
        assert out.read_text(encoding="utf-8") == ""

    def test_predict_missing_checkpoint(self, tmp_path):
        inputs = tmp_path / "inputs.tsv"
        inputs.write_text("sy-re\tpata\n", encoding="utf-8")
        code = main(["predict", "--checkpoint", str(tmp_path / "absent.ckpt"),
                     "--input", str(inputs), "--out", str(tmp_path / "p.tsv")])
        assert code == 2


def oracle_predictions(gold_path, out_path, extra=()):
    lines = [PredictionLine(str(e.locale), e.kind.value, e.text, str(e.pron)) for e in read_corpus(gold_path)]
    lines.extend(extra)
    out_path.write_text("".join(p.format() + "\n" for p in lines), encoding="utf-8")
    return out_path


class TestEval:
    def test_oracle_scores_zero(self, split_dir, tmp_path):
        gold = split_dir / "fr-xx.sentences.test.tsv"
        predictions = oracle_predictions(gold, tmp_path / "pred.tsv")
        report = tmp_path / "report.jsonl"
        code = main(["eval", "--gold", str(gold), "--predictions", str(predictions),
                     "--out", str(report), "--assert", "per<=0", "--assert", "ser<=0"])
        assert code == 0
        records = read_report(report)
        assert {r.test_set for r in records} == {"fr-xx.sentences.test"}
        assert all(r.value == 0.0 for r in records if r.name in ("per", "ser", "wer"))

    def test_failed_gate(self, split_dir, tmp_path):
        gold = split_dir / "sy-re.words.test.tsv"
        predictions = oracle_predictions(gold, tmp_path / "pred.tsv")
        code = main(["eval", "--gold", str(gold), "--predictions", str(predictions),
                     "--out", str(tmp_path / "r.jsonl"), "--assert", "wer>0.5"])
        assert code == 1

    def test_gate_on_absent_metric(self, split_dir, tmp_path):
        gold = split_dir / "sy-re.words.test.tsv"
        predictions = oracle_predictions(gold, tmp_path / "pred.tsv")
        code = main(["eval", "--gold", str(gold), "--predictions", str(predictions),
                     "--out", str(tmp_path / "r.jsonl"), "--assert", "polyphone_accuracy>=0.9"])
        assert code == 2

    def test_unmatched_lines_are_reported(self, split_dir, tmp_path):
        gold = split_dir / "sy-re.words.test.tsv"
        stray = PredictionLine("sy-re", "w", "zzzz", "z z")
        predictions = oracle_predictions(gold, tmp_path / "pred.tsv", [stray])
        report = tmp_path / "r.jsonl"
        assert main(["eval", "--gold", str(gold), "--predictions", str(predictions),
                     "--test-set", "held", "--out", str(report)]) == 0
        unmatched = [r for r in read_report(report) if r.name == "unmatched_lines"]
        assert [(r.locale, r.test_set, r.value) for r in unmatched] == [("*", "held", 1.0)]

    def test_alignment_keeps_duplicate_texts_apart(self):
        gold = read_corpus_lines([
            "sy-re\tw\tpata\t\"p a t a",
            "sy-re\tw\tpata\t\"p a t a",
        ])
        predictions = [PredictionLine("sy-re", "w", "pata", "p a t a"), PredictionLine("sy-re", "w", "pata", "p a")]
        scored, unmatched = align_predictions(gold, predictions)
        assert [str(h) for _, h in scored] == ["p a t a", "p a"]
        assert unmatched == []

    def test_gate_parsing(self):
        gate = Gate.parse("per <= 0.02")
        assert (gate.metric, gate.op, gate.threshold) == ("per", "<=", 0.02)
        with pytest.raises(UsageError):
            Gate.parse("per is small")


def read_corpus_lines(lines):
    return [parse_line(line, n) for n, line in enumerate(lines, 1)]


def report(path, values):
    write_report(path, [
        EvalRecord(locale=locale, test_set="t", name=name, value=value, evaluated=10)
        for (locale, name), value in values.items()
    ])
    return path


class TestCompare:
    def test_report_against_itself(self, tmp_path):
        a = report(tmp_path / "a.jsonl", {("sy-re", "per"): 0.1, ("sy-re", "wer"): 0.3})
        table = compare_reports([a], [a], "base", "cand")
        assert list(table.columns) == ["locale", "test_set", "name", "base", "cand", "delta", "missing"]
        assert (table["delta"] == 0).all()
        assert (table["missing"] == "").all()

    def test_missing_metrics_are_flagged(self, tmp_path):
        a = report(tmp_path / "a.jsonl", {("sy-re", "per"): 0.1})
        b = report(tmp_path / "b.jsonl", {("sy-re", "per"): 0.05, ("fr-xx", "per"): 0.2})
        table = compare_reports([a], [b])
        by_locale = table.set_index("locale")
        assert by_locale.loc["sy-re", "delta"] == pytest.approx(-0.05)
        assert by_locale.loc["fr-xx", "missing"] == "missing_in_a"
        assert pd.isna(by_locale.loc["fr-xx", "delta"])

    def test_equal_labels(self, tmp_path):
        a = report(tmp_path / "a.jsonl", {("sy-re", "per"): 0.1})
        with pytest.raises(UsageError):
            compare_reports([a], [a], "x", "x")

    def test_command(self, tmp_path):
        a = report(tmp_path / "a.jsonl", {("sy-re", "per"): 0.1})
        b = report(tmp_path / "b.jsonl", {("sy-re", "per"): 0.25})
        out = tmp_path / "compare.tsv"
        assert main(["compare", "--a", str(a), "--b", str(b), "--out", str(out)]) == 0
        table = pd.read_csv(out, sep="\t", keep_default_na=False)
        assert table.loc[0, "delta"] == pytest.approx(0.15)
        assert main(["compare", "--a", str(a), "--b", str(tmp_path / "absent.jsonl"), "--out", str(out)]) == 2


class TestRunConfig:
    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"run": {"seed": 7}, "train": {"max_steps": 50}}), encoding="utf-8")
        cfg = RunConfig.load(path)
        assert cfg.resolve("run", "seed", None, 13) == 7
        assert cfg.resolve("run", "seed", 3, 13) == 3
        assert cfg.resolve("run", "jobs", None, 1) == 1
        assert cfg.train_config().max_steps == 50

    def test_snapshot_round_trip(self, tmp_path):
        cfg = RunConfig({"data": {"corpus": [tmp_path / "a.tsv"]}, "model": {"d_model": 32, "heads": 4}})
        loaded = RunConfig.load(cfg.snapshot(tmp_path))
        assert loaded.get("data", "corpus") == [str(tmp_path / "a.tsv")]
        assert loaded.model_config() == cfg.model_config()

    @pytest.mark.parametrize("sections", [{"extras": {}}, {"run": {"nested": {"a": 1}}}, {"run": [1, 2]}])
    def test_invalid_sections(self, sections):
        with pytest.raises(ConfigError):
            RunConfig(sections)

    def test_config_file_drives_a_command(self, tmp_path):
        path = tmp_path / "synth.yaml"
        path.write_text(yaml.safe_dump({
            "run": {"out": str(tmp_path / "out"), "seed": 9},
            "data": {"specs": [SPECS[0]], "words": 40, "sentences": 10},
        }), encoding="utf-8")
        assert main(["synth", "--config", str(path), "--sentences", "12"]) == 0
        assert len(read_corpus(tmp_path / "out" / "sy-re.sentences.tsv")) == 12
        snapshot = RunConfig.load(tmp_path / "out" / SNAPSHOT_NAME)
        assert (snapshot.get("run", "seed"), snapshot.get("data", "sentences")) == (9, 12)

    def test_missing_config_file(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_rerun_from_snapshot_is_byte_identical(run_dir, split_dir, tmp_path):
    gold = split_dir / "sy-re.words.test.tsv"
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["train", "--config", str(run_dir / SNAPSHOT_NAME), "--out", str(out)]) == 0
        assert main(["predict", "--checkpoint", str(out / "checkpoints" / "best.ckpt"),
                     "--input", str(gold), "--out", str(out / "pred.tsv")]) == 0
        assert main(["eval", "--gold", str(gold), "--predictions", str(out / "pred.tsv"),
                     "--out", str(out / "report.jsonl")]) == 0
        outputs.append(((out / "pred.tsv").read_bytes(), (out / "report.jsonl").read_bytes()))
    assert outputs[0] == outputs[1]


def test_monolingual_against_multilingual_table(split_dir, tmp_path):
    train_files = [str(split_dir / f"{loc}.words.train.tsv") for loc in ("sy-re", "fr-xx")]

    def run(name, *extra):
        out = tmp_path / name
        assert main(["train", "--train", *train_files, "--seed", "2", "--out", str(out),
                     *extra, *TINY_MODEL, *TINY_TRAIN]) == 0
        return out / "checkpoints" / "best.ckpt"

    def report_for(checkpoint, locale, name):
        gold = split_dir / f"{locale}.words.test.tsv"
        pred = tmp_path / f"{name}.{locale}.pred.tsv"
        out = tmp_path / f"{name}.{locale}.jsonl"
        assert main(["predict", "--checkpoint", str(checkpoint), "--input", str(gold), "--out", str(pred)]) == 0
        assert main(["eval", "--gold", str(gold), "--predictions", str(pred), "--test-set", "words",
                     "--out", str(out)]) == 0
        return str(out)

    mono = [report_for(run(f"mono-{loc}", "--locale", loc), loc, "mono") for loc in ("sy-re", "fr-xx")]
    multi_checkpoint = run("multi")
    multi = [report_for(multi_checkpoint, loc, "multi") for loc in ("sy-re", "fr-xx")]

    out = tmp_path / "compare.tsv"
    assert main(["compare", "--a", *mono, "--b", *multi, "--label-a", "mono", "--label-b", "multi",
                 "--out", str(out)]) == 0
    table = pd.read_csv(out, sep="\t", keep_default_na=False)
    assert set(zip(table["locale"], table["name"])) == {
        (loc, name) for loc in ("sy-re", "fr-xx") for name in ("per", "wer")
    }
    assert (table["test_set"] == "words").all()
    assert (table["missing"] == "").all()
    assert table[["mono", "multi", "delta"]].notna().all().all()
    assert list(table["delta"]) == pytest.approx(list(table["multi"] - table["mono"]), abs=2e-6)
