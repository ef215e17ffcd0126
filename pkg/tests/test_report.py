import json

import pytest
from pydantic import ValidationError

from conftest import sentence, word
from src.core.corpus import Annotation
from src.core.phonemes import parse_xsampa
from src.metrics.evaluate import evaluate, score
from src.metrics.report import EvalRecord, read_report, write_report
from src.utils.exceptions import CorpusFormatError


def annotated_sentences():
    return [
        sentence("en-xx", "read the book", "r i d <wb> D @ <wb> b U k", (Annotation(0, "hom"),)),
        sentence("fr-xx", "les amis", "l e z <wb> a m i", (Annotation(0, "plr"),)),
        sentence("cmn-xx", "长行", "tS a N <wb> x a N",
                 (Annotation(0, "span=0-3"), Annotation(1, "poly"), Annotation(1, "span=4-7"))),
    ]


def test_oracle_against_itself_is_perfect():
    scored = [(e, e.pron) for e in annotated_sentences()]
    records = [r for report in evaluate("sentences", scored) for r in report.records()]
    names = {r.name for r in records}
    assert {"per", "ser", "homograph_accuracy", "plr_per", "plr_wer", "plr_per_whole",
            "polyphone_accuracy", "polyphone_char_accuracy"} <= names
    for r in records:
        expected = 1.0 if r.name.endswith("accuracy") else 0.0
        assert r.value == expected, r


def test_word_sets_report_wer_not_ser():
    entries = [word("sy-re", "pata", '"p a t a'), word("sy-re", "ta", '"t a')]
    report = score("sy-re", "words", [(entries[0], entries[0].pron), (entries[1], parse_xsampa("t a"))])
    assert report.wer == 0.5
    assert report.ser is None
    assert report.per == pytest.approx(1 / 6)
    assert [r.name for r in report.records()] == ["per", "wer"]


def test_one_report_per_locale():
    scored = [(e, e.pron) for e in annotated_sentences()]
    reports = evaluate("sentences", scored)
    assert [r.locale for r in reports] == ["cmn-xx", "en-xx", "fr-xx"]


def test_diacritization_subsets():
    diac = sentence("arb", "kátab", '"k a t a b', (Annotation(0, "diac"),))
    undiac = sentence("arb", "katab", '"k a t a b', (Annotation(0, "undiac"),))
    scored = [(diac, diac.pron), (undiac, parse_xsampa("k a t a b"))]
    reports = {r.test_set: r for r in evaluate("sentences", scored)}
    assert set(reports) == {"sentences", "sentences/diacritized", "sentences/undiacritized"}
    assert reports["sentences/diacritized"].per == 0.0
    assert reports["sentences/undiacritized"].per == pytest.approx(1 / 5)


def test_record_rejects_non_finite_values():
    with pytest.raises(ValidationError):
        EvalRecord(locale="arb", test_set="t", name="per", value=float("nan"), evaluated=1)


def test_report_file_is_sorted_json_lines(tmp_path):
    records = [
        EvalRecord(locale="fr-xx", test_set="words", name="per", value=0.1, evaluated=3),
        EvalRecord(locale="arb", test_set="words", name="wer", value=0.5, evaluated=2, skipped=1),
        EvalRecord(locale="arb", test_set="words", name="per", value=0.2, evaluated=2),
    ]
    path = tmp_path / "report.jsonl"
    write_report(path, records)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert list(json.loads(lines[0])) == ["locale", "test_set", "name", "value", "evaluated", "skipped"]
    assert [r.key for r in read_report(path)] == [
        ("arb", "words", "per"), ("arb", "words", "wer"), ("fr-xx", "words", "per"),
    ]


def test_read_report_rejects_garbage(tmp_path):
    path = tmp_path / "report.jsonl"
    path.write_text('{"locale": "arb"}\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="line 1"):
        read_report(path)


def test_plr_scores_cover_affected_words_and_whole_sentences():
    gold = sentence("fr-xx", "les amis", "l E z <wb> a m i", (Annotation(0, "plr"),))
    report = score("fr-xx", "sentences", [(gold, parse_xsampa("l E <wb> a m i"))])
    metrics = report.task_metrics
    assert metrics["plr_per"].value == pytest.approx(1 / 3)
    assert metrics["plr_wer"].value == 1.0
    assert metrics["plr_per_whole"].value == pytest.approx(1 / 7)
    assert (metrics["plr_per_whole"].evaluated, metrics["plr_per_whole"].skipped) == (1, 0)
    records = {r.name: r.value for r in report.records()}
    assert records["plr_per_whole"] == metrics["plr_per_whole"].value
