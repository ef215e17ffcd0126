"""X-SAMPA phoneme tokens and word-boundary delimited sequences.

Tokens are opaque strings: a symbol plus any fused stress marker (`"`
primary, `%` secondary) or diacritic. `"a` and `a` are different tokens.
"""

from dataclasses import dataclass
from typing import Iterable, List, Tuple

from src.utils.exceptions import PhonemeStructureError

WORD_BOUNDARY = "<wb>"
PRIMARY_STRESS = '"'
SECONDARY_STRESS = "%"


def is_valid_token(token: str) -> bool:
    return bool(token) and not any(ch.isspace() for ch in token)


def structure_problems(tokens: Tuple[str, ...]) -> List[str]:
    """List every invariant a token tuple breaks (empty when well formed)."""
    problems = []
    if not tokens:
        return ["empty phoneme sequence"]
    for i, token in enumerate(tokens):
        if not is_valid_token(token):
            problems.append(f"invalid token {token!r} at position {i}")
    if tokens[0] == WORD_BOUNDARY:
        problems.append("leading word boundary")
    if tokens[-1] == WORD_BOUNDARY:
        problems.append("trailing word boundary")
    for i in range(1, len(tokens)):
        if tokens[i] == WORD_BOUNDARY and tokens[i - 1] == WORD_BOUNDARY:
            problems.append(f"adjacent word boundaries at position {i}")
    return problems


@dataclass(frozen=True)
class PhonemeSeq:
    """Ordered phoneme tokens with `<wb>` markers between words.

    A sequence built from model output may break the structural invariants;
    it is then kept as-is with `degenerate=True` so it can still be scored.
    """

    tokens: Tuple[str, ...]
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.degenerate:
            problems = structure_problems(self.tokens)
            if problems:
                raise PhonemeStructureError("; ".join(problems))

    @classmethod
    def lenient(cls, tokens: Iterable[str]) -> "PhonemeSeq":
        """Build a sequence, flagging rather than rejecting broken structure."""
        tokens = tuple(tokens)
        return cls(tokens, degenerate=bool(structure_problems(tokens)))

    @classmethod
    def from_words(cls, words: Iterable[Iterable[str]]) -> "PhonemeSeq":
        tokens: List[str] = []
        for i, word in enumerate(words):
            if i:
                tokens.append(WORD_BOUNDARY)
            tokens.extend(word)
        return cls(tuple(tokens))

    def words(self) -> List[List[str]]:
        """Per-word token spans, split at every boundary (empty spans kept)."""
        spans: List[List[str]] = [[]]
        for token in self.tokens:
            if token == WORD_BOUNDARY:
                spans.append([])
            else:
                spans[-1].append(token)
        return spans

    @property
    def word_count(self) -> int:
        return self.tokens.count(WORD_BOUNDARY) + 1

    @property
    def phonemes(self) -> Tuple[str, ...]:
        return tuple(t for t in self.tokens if t != WORD_BOUNDARY)

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return " ".join(self.tokens)


def parse_xsampa(s: str) -> PhonemeSeq:
    """Parse a space-separated X-SAMPA string; tokens are kept verbatim."""
    tokens = tuple(s.split())
    if not tokens:
        raise PhonemeStructureError("empty phoneme sequence")
    return PhonemeSeq(tokens)
