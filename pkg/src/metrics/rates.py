"""Corpus-level phone, word and sentence error rates."""

from typing import Iterable, Sequence, Tuple

from src.core.phonemes import PhonemeSeq
from src.metrics.alignment import edit_distance
from src.utils.exceptions import MetricError

Pair = Tuple[PhonemeSeq, PhonemeSeq]


def exact_match(ref: PhonemeSeq, hyp: PhonemeSeq) -> bool:
    return tuple(ref.tokens) == tuple(hyp.tokens)


def edit_counts(pairs: Iterable[Pair]) -> Tuple[int, int]:
    """(total edits, total reference tokens); word boundaries count as tokens."""
    edits = 0
    length = 0
    for ref, hyp in pairs:
        edits += edit_distance(ref.tokens, hyp.tokens).distance
        length += len(ref.tokens)
    return edits, length


def per(pairs: Sequence[Pair]) -> float:
    """Micro-averaged phone error rate: summed edits over summed reference length."""
    edits, length = edit_counts(pairs)
    if length == 0:
        raise MetricError("PER is undefined for a total reference length of 0")
    return edits / length


def _mismatch_rate(pairs: Sequence[Pair], name: str) -> float:
    if not pairs:
        raise MetricError(f"{name} is undefined for an empty test set")
    wrong = sum(1 for ref, hyp in pairs if not exact_match(ref, hyp))
    return wrong / len(pairs)


def wer(pairs: Sequence[Pair]) -> float:
    """Fraction of words whose pronunciation is not reproduced exactly."""
    return _mismatch_rate(pairs, "WER")


def ser(pairs: Sequence[Pair]) -> float:
    """Fraction of sentences with any token difference, boundaries included."""
    return _mismatch_rate(pairs, "SER")
