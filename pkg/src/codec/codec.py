"""Encode source text and target pronunciations into model id sequences.

Source: `[<locale-tag>] + characters`, each space replaced by `<wb>`.
Target: `[<bos>] + phoneme/boundary ids + [<eos>]`.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

from src.core.corpus import PronunciationEntry
from src.core.locale import Locale
from src.core.phonemes import PhonemeSeq
from src.core.vocab import BOS, EOS, PAD, UNK, Vocab, source_symbols
from src.utils.exceptions import EncodeError

_STRIPPED = {BOS, PAD}


@dataclass(frozen=True)
class EncodedPair:
    src: List[int]
    tgt: Optional[List[int]] = None

    @property
    def max_len(self) -> int:
        return max(len(self.src), len(self.tgt) if self.tgt else 0)


def encode_source(vocab: Vocab, locale: Locale, text: str) -> List[int]:
    """Locale tag id followed by one id per character; unseen characters map to UNK."""
    if not text:
        raise EncodeError("cannot encode empty text")
    if locale.tag not in vocab.source:
        raise EncodeError(f"locale {locale} is not in the source vocabulary")
    return [vocab.source.id(locale.tag)] + [vocab.source.get(symbol, UNK) for symbol in source_symbols(text)]


def encode_target(vocab: Vocab, pron: PhonemeSeq) -> List[int]:
    ids = [BOS]
    for token in pron.tokens:
        if token not in vocab.target:
            raise EncodeError(f"phoneme {token!r} is not in the target vocabulary")
        ids.append(vocab.target.id(token))
    ids.append(EOS)
    return ids


def encode_entry(vocab: Vocab, entry: PronunciationEntry) -> EncodedPair:
    return EncodedPair(
        src=encode_source(vocab, entry.locale, entry.text),
        tgt=encode_target(vocab, entry.pron),
    )


def decode_target(vocab: Vocab, ids: Sequence[int]) -> PhonemeSeq:
    """Map model output ids back to a phoneme sequence.

    Stops at the first EOS and drops BOS/PAD. Output that breaks the sequence
    invariants (or contains UNK / out-of-range ids) is returned flagged
    `degenerate`, never rejected.
    """
    tokens = []
    unknown = False
    for token_id in ids:
        token_id = int(token_id)
        if token_id == EOS:
            break
        if token_id in _STRIPPED:
            continue
        if token_id == UNK or not 0 <= token_id < vocab.target_size:
            unknown = True
            tokens.append(vocab.target.token(UNK))
            continue
        tokens.append(vocab.target.token(token_id))
    seq = PhonemeSeq.lenient(tokens)
    if unknown and not seq.degenerate:
        seq = PhonemeSeq(seq.tokens, degenerate=True)
    return seq


def word_spans(pron: PhonemeSeq) -> List[List[str]]:
    """Split at word boundaries; degenerate input may yield empty spans."""
    return pron.words()