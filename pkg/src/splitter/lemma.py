"""Lemma grouping for word-level splits."""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from src.core.corpus import EntryKind, PronunciationEntry
from src.utils.exceptions import CorpusFormatError
from src.utils.io import read_lines

DEFAULT_SUFFIXES: Tuple[str, ...] = ("s", "es", "ed", "ing", "er", "est")
MIN_STEM_LENGTH = 3


@dataclass(frozen=True)
class LemmaGroup:
    lemma: str
    members: Tuple[PronunciationEntry, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def words(self) -> List[str]:
        return [m.text for m in self.members]


class SuffixLemmatizer:
    """Heuristic lemmatizer: exact lemma map first, then longest-suffix stripping."""

    def __init__(
        self,
        suffixes: Sequence[str] = DEFAULT_SUFFIXES,
        lemma_map: Optional[Mapping[str, str]] = None,
        min_stem: int = MIN_STEM_LENGTH
    ):
        # Longest first; equal lengths keep their configured order
        self.suffixes = sorted(suffixes, key=len, reverse=True)
        self.lemma_map = dict(lemma_map or {})
        self.min_stem = min_stem

    def __call__(self, word: str) -> str:
        if word in self.lemma_map:
            return self.lemma_map[word]
        lowered = word.lower()
        if lowered in self.lemma_map:
            return self.lemma_map[lowered]
        for suffix in self.suffixes:
            if suffix and lowered.endswith(suffix) and len(lowered) - len(suffix) >= self.min_stem:
                return lowered[:-len(suffix)]
        return lowered


_default = SuffixLemmatizer()


def default_lemmatizer(word: str) -> str:
    return _default(word)


def load_lemma_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read `word<TAB>lemma` lines."""
    lemma_map = {}
    for line_number, line in read_lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        word, sep, lemma = line.partition("\t")
        if not sep or not word or not lemma:
            raise CorpusFormatError(f"{path}: expected word<TAB>lemma", line_number)
        lemma_map[word] = lemma.strip()
    return lemma_map


def group_by_lemma(
    entries: Iterable[PronunciationEntry],
    lemmatize: Callable[[str], str] = default_lemmatizer
) -> List[LemmaGroup]:
    """Partition word entries by `lemmatize(text)`; groups sorted by lemma."""
    buckets: Dict[str, List[PronunciationEntry]] = {}
    for entry in entries:
        if entry.kind != EntryKind.WORD:
            raise CorpusFormatError(f"only word entries can be grouped by lemma: {entry.text!r}")
        buckets.setdefault(lemmatize(entry.text), []).append(entry)
    return [LemmaGroup(lemma, tuple(buckets[lemma])) for lemma in sorted(buckets)]


def corpus_lemmatizer(entries: Iterable[PronunciationEntry], fallback: Optional[SuffixLemmatizer] = None) -> SuffixLemmatizer:
    """Lemmatizer preferring lemmas recorded in the corpus itself."""
    fallback = fallback or _default
    lemma_map = dict(fallback.lemma_map)
    for entry in entries:
        if entry.lemma is not None:
            lemma_map[entry.text] = entry.lemma
    return SuffixLemmatizer(fallback.suffixes, lemma_map, fallback.min_stem)
