"""Source (locale tags + characters) and target (phoneme) vocabularies."""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from src.core.corpus import PronunciationEntry
from src.core.phonemes import WORD_BOUNDARY
from src.utils.exceptions import VocabError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIAL_TOKENS: Tuple[str, ...] = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)


@dataclass(frozen=True)
class TokenTable:
    """Bijective token-string <-> id map; ids are list positions."""

    tokens: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.tokens[:len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise VocabError(f"token table must start with {SPECIAL_TOKENS}")
        index = {token: i for i, token in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise VocabError("token table contains duplicate tokens")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index[token]

    def get(self, token: str, default: int = UNK) -> int:
        return self._index.get(token, default)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]


@dataclass(frozen=True)
class Vocab:
    source: TokenTable
    target: TokenTable

    @classmethod
    def from_tokens(cls, source: Sequence[str], target: Sequence[str]) -> "Vocab":
        return cls(TokenTable(tuple(source)), TokenTable(tuple(target)))

    @property
    def source_size(self) -> int:
        return len(self.source)

    @property
    def target_size(self) -> int:
        return len(self.target)

    def locale_tags(self) -> List[str]:
        return [
            t for t in self.source.tokens
            if len(t) > 2 and t.startswith("<") and t.endswith(">")
            and t not in SPECIAL_TOKENS and t != WORD_BOUNDARY
        ]


def source_symbols(text: str) -> List[str]:
    """Character-level source symbols; spaces become the word-boundary token."""
    return [WORD_BOUNDARY if ch == " " else ch for ch in text]


def build_vocab(corpus: Iterable[PronunciationEntry]) -> Vocab:
    """Build both vocabularies: specials first, then sorted tags/characters/phonemes.

    The result depends only on the set of symbols in the corpus, never on entry order.
    """
    tags, chars, phonemes = set(), set(), set()
    count = 0
    for entry in corpus:
        count += 1
        tags.add(entry.locale.tag)
        chars.update(source_symbols(entry.text))
        for token in entry.pron.tokens:
            if token != WORD_BOUNDARY:
                phonemes.add(token)
    if count == 0:
        raise VocabError("cannot build a vocabulary from an empty corpus")

    # The source boundary token is listed with the tags, ahead of characters
    source_markers = sorted(tags)
    if WORD_BOUNDARY in chars:
        chars.discard(WORD_BOUNDARY)
        source_markers.append(WORD_BOUNDARY)
    source = SPECIAL_TOKENS + tuple(source_markers) + tuple(sorted(chars))
    target = SPECIAL_TOKENS + (WORD_BOUNDARY,) + tuple(sorted(phonemes))
    return Vocab.from_tokens(source, target)
