"""Score predictions against gold corpus entries, per locale and test set."""

from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

from src.core.corpus import (
    TAG_DIACRITIZED,
    TAG_HOMOGRAPH,
    TAG_PLR,
    TAG_POLYPHONE,
    TAG_UNDIACRITIZED,
    PronunciationEntry,
)
from src.core.phonemes import PhonemeSeq
from src.metrics.rates import per, ser, wer
from src.metrics.report import EvalReport, TaskMetric
from src.metrics.tasks import (
    HomographCase,
    PlrCase,
    PolyphoneCase,
    homograph_accuracy,
    plr_eval,
    polyphone_accuracy,
)

Scored = Tuple[PronunciationEntry, PhonemeSeq]

DIACRITIZED_SUFFIX = "/diacritized"
UNDIACRITIZED_SUFFIX = "/undiacritized"


def _task_metrics(scored: Sequence[Scored]) -> Dict[str, TaskMetric]:
    metrics: Dict[str, TaskMetric] = {}

    homographs = [
        HomographCase(entry.pron, hyp, index)
        for entry, hyp in scored
        for index in entry.indices(TAG_HOMOGRAPH)
    ]
    if homographs:
        result = homograph_accuracy(homographs)
        metrics["homograph_accuracy"] = TaskMetric(
            value=result.accuracy, evaluated=result.evaluated, skipped=result.skipped
        )

    polyphones = [
        PolyphoneCase(entry.pron, hyp, entry.span_map(), entry.indices(TAG_POLYPHONE))
        for entry, hyp in scored
        if entry.span_map()
    ]
    if polyphones:
        result = polyphone_accuracy(polyphones)
        metrics["polyphone_char_accuracy"] = TaskMetric(
            value=result.accuracy_all_chars, evaluated=result.evaluated, skipped=result.skipped
        )
        metrics["polyphone_accuracy"] = TaskMetric(
            value=result.accuracy_polyphones, evaluated=result.evaluated, skipped=result.skipped
        )

    plr_cases = [
        PlrCase(entry.pron, hyp, entry.indices(TAG_PLR))
        for entry, hyp in scored
        if entry.has_tag(TAG_PLR)
    ]
    if plr_cases:
        result = plr_eval(plr_cases)
        metrics["plr_per"] = TaskMetric(
            value=result.per_affected, evaluated=result.evaluated, skipped=result.skipped
        )
        metrics["plr_wer"] = TaskMetric(
            value=result.wer_affected, evaluated=result.evaluated, skipped=result.skipped
        )
        metrics["plr_per_whole"] = TaskMetric(
            value=result.per_whole, evaluated=len(plr_cases), skipped=0
        )
    return metrics


def score(locale: str, test_set: str, scored: Sequence[Scored]) -> EvalReport:
    """PER plus WER (word sets) or SER (sentence sets) and any task metrics the gold annotations enable."""
    pairs = [(entry.pron, hyp) for entry, hyp in scored]
    sentences = any(entry.is_sentence for entry, _ in scored)
    return EvalReport(
        locale=locale,
        test_set=test_set,
        items=len(pairs),
        per=per(pairs),
        wer=None if sentences else wer(pairs),
        ser=ser(pairs) if sentences else None,
        task_metrics=_task_metrics(scored) if sentences else {},
    )


def evaluate(test_set: str, scored: Sequence[Scored]) -> List[EvalReport]:
    """One report per locale; mixed-diacritization sets also get a report per state."""
    by_locale: Dict[str, List[Scored]] = defaultdict(list)
    for entry, hyp in scored:
        by_locale[str(entry.locale)].append((entry, hyp))

    reports = []
    for locale in sorted(by_locale):
        items = by_locale[locale]
        reports.append(score(locale, test_set, items))
        for tag, suffix in ((TAG_DIACRITIZED, DIACRITIZED_SUFFIX), (TAG_UNDIACRITIZED, UNDIACRITIZED_SUFFIX)):
            subset = [(entry, hyp) for entry, hyp in items if entry.has_tag(tag)]
            if subset:
                reports.append(score(locale, test_set + suffix, subset))
    return reports
