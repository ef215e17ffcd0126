"""Task-specific accuracies: homographs, polyphone characters and post-lexical rules.

Each scorer reports how many cases it evaluated and how many it skipped;
skips are data, never errors, and evaluated + skipped equals the case count.
"""

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence, Tuple

from src.core.phonemes import PhonemeSeq
from src.metrics.alignment import edit_distance
from src.metrics.rates import edit_counts


class HomographCase(NamedTuple):
    ref: PhonemeSeq
    hyp: PhonemeSeq
    word_index: int


class PolyphoneCase(NamedTuple):
    ref: PhonemeSeq
    hyp: PhonemeSeq
    spans: Mapping[int, Tuple[int, int]]
    polyphones: Sequence[int]


class PlrCase(NamedTuple):
    ref: PhonemeSeq
    hyp: PhonemeSeq
    affected: Sequence[int]


@dataclass(frozen=True)
class TaskResult:
    accuracy: float
    evaluated: int
    skipped: int


@dataclass(frozen=True)
class PolyphoneResult:
    accuracy_all_chars: float
    accuracy_polyphones: float
    evaluated: int
    skipped: int
    chars_scored: int = 0
    polyphones_scored: int = 0


@dataclass(frozen=True)
class PlrResult:
    per_affected: float
    wer_affected: float
    per_whole: float
    evaluated: int
    skipped: int
    affected_words: int = 0


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def homograph_accuracy(cases: Sequence[HomographCase]) -> TaskResult:
    """Exact-match accuracy of the homograph's word span.

    A hypothesis whose word count differs from the reference cannot be
    isolated reliably and is skipped.
    """
    correct = evaluated = skipped = 0
    for ref, hyp, index in cases:
        ref_spans, hyp_spans = ref.words(), hyp.words()
        if len(ref_spans) != len(hyp_spans):
            skipped += 1
            continue
        evaluated += 1
        if ref_spans[index] == hyp_spans[index]:
            correct += 1
    return TaskResult(_ratio(correct, evaluated), evaluated, skipped)


def project_spans(
    ref: PhonemeSeq,
    hyp: PhonemeSeq,
    spans: Mapping[int, Tuple[int, int]]
) -> dict:
    """Hypothesis token span for each character, found by projecting reference spans through the alignment."""
    alignment = edit_distance(ref.tokens, hyp.tokens)
    proj = alignment.project(len(ref.tokens), len(hyp.tokens))
    return {char: (proj[start], proj[end]) for char, (start, end) in spans.items()}


def polyphone_accuracy(cases: Sequence[PolyphoneCase]) -> PolyphoneResult:
    """Character pronunciation accuracy over all characters and over polyphones only."""
    chars = chars_ok = polys = polys_ok = 0
    evaluated = skipped = 0
    for ref, hyp, spans, polyphones in cases:
        if hyp.degenerate:
            skipped += 1
            continue
        evaluated += 1
        projected = project_spans(ref, hyp, spans)
        poly_set = set(polyphones)
        for char in sorted(spans):
            start, end = spans[char]
            hyp_start, hyp_end = projected[char]
            ok = tuple(ref.tokens[start:end]) == tuple(hyp.tokens[hyp_start:hyp_end])
            chars += 1
            chars_ok += ok
            if char in poly_set:
                polys += 1
                polys_ok += ok
    return PolyphoneResult(
        accuracy_all_chars=_ratio(chars_ok, chars),
        accuracy_polyphones=_ratio(polys_ok, polys),
        evaluated=evaluated,
        skipped=skipped,
        chars_scored=chars,
        polyphones_scored=polys,
    )


def plr_eval(cases: Sequence[PlrCase]) -> PlrResult:
    """PER and WER restricted to words changed by post-lexical rules, plus whole-sentence PER.

    Span-count mismatches are skipped for the affected-word scores but still
    contribute to whole-sentence PER.
    """
    edits = length = wrong = words = 0
    evaluated = skipped = 0
    for ref, hyp, affected in cases:
        ref_spans, hyp_spans = ref.words(), hyp.words()
        if len(ref_spans) != len(hyp_spans):
            skipped += 1
            continue
        evaluated += 1
        for index in affected:
            distance = edit_distance(ref_spans[index], hyp_spans[index]).distance
            edits += distance
            length += len(ref_spans[index])
            wrong += distance > 0
            words += 1

    whole_edits, whole_length = edit_counts((ref, hyp) for ref, hyp, _ in cases)
    return PlrResult(
        per_affected=_ratio(edits, length),
        wer_affected=_ratio(wrong, words),
        per_whole=_ratio(whole_edits, whole_length),
        evaluated=evaluated,
        skipped=skipped,
        affected_words=words,
    )
