"""Gold front-end for synthetic languages.

The oracle turns space-separated text into the reference pronunciation and
marks where context changed it: homograph words, words touched by liaison or
enchainement, and polyphonic characters with their per-character spans.
Unsegmented text is first split by forward longest match over the spec's
word list, so its word boundaries depend on the characters alone.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from src.core.corpus import (
    TAG_HOMOGRAPH,
    TAG_PLR,
    TAG_POLYPHONE,
    TAG_SPAN,
    Annotation,
    EntryKind,
    PronunciationEntry,
)
from src.core.phonemes import PRIMARY_STRESS, PhonemeSeq
from src.synthlang.spec import (
    CONSONANT_CLASS,
    VOWEL_CLASS,
    WORD_EDGE,
    G2PRule,
    LangSpec,
    split_pron,
    strip_stress,
)
from src.utils.exceptions import OracleError

Segment = Tuple[str, ...]


@dataclass(frozen=True)
class OracleResult:
    text: str
    words: Tuple[str, ...]
    pron: PhonemeSeq
    annotations: Tuple[Annotation, ...] = ()

    def entry(self, spec: LangSpec, kind: EntryKind, lemma: Optional[str] = None) -> PronunciationEntry:
        return PronunciationEntry(
            locale=spec.locale_code,
            kind=kind,
            text=self.text,
            pron=self.pron,
            lemma=lemma,
            annotations=self.annotations if kind == EntryKind.SENTENCE else (),
        )

    def indices(self, tag: str) -> List[int]:
        return sorted(a.index for a in self.annotations if a.tag == tag)


class Oracle:
    """Deterministic pronunciation rules of one spec, with a per-word cache."""

    def __init__(self, spec: LangSpec):
        self.spec = spec
        self.vowels = set(spec.vowels)
        self.vowel_phonemes = set(spec.vowel_phonemes)
        self.letters = set(spec.alphabet)
        self._cache: Dict[str, Tuple[Segment, ...]] = {}
        self._dictionary = set(spec.segmentation_words())
        self._longest = max((len(w) for w in self._dictionary), default=1)

    def _context_holds(self, word: str, pos: int, context: Optional[str], left: bool) -> bool:
        if context is None:
            return True
        if context == WORD_EDGE:
            return pos == 0 if left else pos == len(word)
        if context in (VOWEL_CLASS, CONSONANT_CLASS):
            neighbour_pos = pos - 1 if left else pos
            if not 0 <= neighbour_pos < len(word):
                return False
            is_vowel = word[neighbour_pos] in self.vowels
            return is_vowel if context == VOWEL_CLASS else not is_vowel
        return word[:pos].endswith(context) if left else word[pos:].startswith(context)

    def _rule_at(self, word: str, pos: int) -> G2PRule:
        best: Optional[G2PRule] = None
        for rule in self.spec.g2p_rules:
            end = pos + len(rule.match)
            if not word.startswith(rule.match, pos):
                continue
            if not self._context_holds(word, pos, rule.left, left=True):
                continue
            if not self._context_holds(word, end, rule.right, left=False):
                continue
            # Longest match wins; among equal lengths the earlier rule
            if best is None or len(rule.match) > len(best.match):
                best = rule
        if best is None:
            raise OracleError(f"{self.spec.locale}: no rule rewrites {word[pos]!r} at position {pos} of {word!r}")
        return best

    def segments(self, word: str) -> Tuple[Segment, ...]:
        """Leftmost-longest rewrite of one word into per-match phoneme segments (unstressed)."""
        if word not in self._cache:
            stray = sorted(set(word) - self.letters)
            if stray:
                raise OracleError(f"{self.spec.locale}: {word!r} uses characters outside the alphabet: {stray}")
            segments = []
            pos = 0
            while pos < len(word):
                rule = self._rule_at(word, pos)
                segments.append(rule.tokens)
                pos += len(rule.match)
            self._cache[word] = tuple(segments)
        return self._cache[word]

    def stress(self, tokens: Sequence[str]) -> List[str]:
        """Fuse the primary stress marker onto the first phoneme of the stressed syllable.

        The syllable starts at its nucleus, or at the single consonant right
        before it.
        """
        tokens = list(tokens)
        nuclei = [i for i, t in enumerate(tokens) if t in self.vowel_phonemes]
        if self.spec.stress == "none" or not nuclei:
            return tokens
        if self.spec.stress == "first":
            nucleus = nuclei[0]
        elif self.spec.stress == "last":
            nucleus = nuclei[-1]
        else:
            nucleus = nuclei[-2] if len(nuclei) >= 2 else nuclei[0]
        start = nucleus
        if nucleus > 0 and tokens[nucleus - 1] not in self.vowel_phonemes:
            start = nucleus - 1
        tokens[start] = PRIMARY_STRESS + tokens[start]
        return tokens

    def word_pron(self, word: str) -> List[str]:
        """Context-free pronunciation of a single word."""
        tokens = [t for segment in self.segments(word) for t in segment]
        return self.stress(tokens)

    def _is_consonant(self, token: str) -> bool:
        return strip_stress(token) not in self.vowel_phonemes and not token.startswith(PRIMARY_STRESS)

    def segment(self, surface: str) -> List[str]:
        """Forward longest match against the dictionary; unknown characters stand alone."""
        words = []
        pos = 0
        while pos < len(surface):
            longest = min(self._longest, len(surface) - pos)
            size = next((n for n in range(longest, 1, -1) if surface[pos:pos + n] in self._dictionary), 1)
            words.append(surface[pos:pos + size])
            pos += size
        return words

    def pronounce(self, text: str) -> OracleResult:
        """Unsegmented scripts ignore spaces in `text` and segment the characters themselves."""
        if self.spec.unsegmented:
            surface = text.replace(" ", "")
            if not surface:
                raise OracleError(f"{self.spec.locale}: text is empty")
            return self._pronounce_unsegmented(self.segment(surface))
        words = text.split(" ")
        if not text or any(not w for w in words):
            raise OracleError(f"{self.spec.locale}: text must be words separated by single spaces: {text!r}")

        spans = [self.word_pron(w) for w in words]
        annotations = []

        homographs = self.spec.homograph_map
        for k, word in enumerate(words):
            rule = homographs.get(word)
            if rule is None:
                continue
            neighbour = k + 1 if rule.side == "next" else k - 1
            triggered = 0 <= neighbour < len(words) and words[neighbour] in rule.triggers
            spans[k] = list(split_pron(rule.alt if triggered else rule.default))
            annotations.append(Annotation(k, TAG_HOMOGRAPH))

        affected = set()
        latent = self.spec.latent_map
        for k in range(len(words) - 1):
            next_is_vowel = words[k + 1][0] in self.vowels
            if not next_is_vowel:
                continue
            rule = latent.get(words[k][-1])
            if rule is not None:
                spans[k].append(rule.phoneme)
                affected.add(k)
            elif self.spec.enchainement and len(spans[k]) > 1 and self._is_consonant(spans[k][-1]):
                spans[k + 1].insert(0, spans[k].pop())
                affected.update((k, k + 1))
        annotations.extend(Annotation(k, TAG_PLR) for k in sorted(affected))

        for k, span in enumerate(spans):
            if not span:
                raise OracleError(f"{self.spec.locale}: {words[k]!r} has an empty pronunciation")
        return OracleResult(" ".join(words), tuple(words), PhonemeSeq.from_words(spans), tuple(sorted(annotations)))

    def _char_reading(self, surface: str, pos: int) -> Optional[Segment]:
        for reading in self.spec.polyphones.get(surface[pos], []):
            before = surface[pos - 1] if pos > 0 else None
            after = surface[pos + 1] if pos + 1 < len(surface) else None
            if (before is not None and before in reading.prev) or (after is not None and after in reading.next):
                return split_pron(reading.pron)
        return None

    def _pronounce_unsegmented(self, words: List[str]) -> OracleResult:
        surface = "".join(words)
        spans: List[List[str]] = []
        annotations = []
        pos = 0
        offset = 0
        for word in words:
            span: List[str] = []
            for segment in self.segments(word):
                if surface[pos] in self.spec.polyphones:
                    segment = self._char_reading(surface, pos) or segment
                    annotations.append(Annotation(pos, TAG_POLYPHONE))
                if not segment:
                    raise OracleError(f"{self.spec.locale}: {surface[pos]!r} has an empty pronunciation")
                start = offset + len(span)
                annotations.append(Annotation(pos, f"{TAG_SPAN}={start}-{start + len(segment)}"))
                span.extend(segment)
                pos += 1
            spans.append(span)
            offset += len(span) + 1
        return OracleResult(surface, tuple(words), PhonemeSeq.from_words(spans), tuple(sorted(annotations)))


def oracle_pronounce(spec: LangSpec, text: str) -> OracleResult:
    """Reference pronunciation and annotations of space-separated `text`."""
    return Oracle(spec).pronounce(text)
