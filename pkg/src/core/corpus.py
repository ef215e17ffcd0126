"""Pronunciation entries and the tab-separated corpus file format.

    locale<TAB>kind<TAB>text<TAB>pronunciation[<TAB>lemma[<TAB>annotations]]

`kind` is `w` (word) or `s` (sentence); annotations are comma-separated
`index:tag` pairs. Lines starting with `#` are comments.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from src.core.locale import Locale, parse_locale
from src.core.phonemes import WORD_BOUNDARY, PhonemeSeq, parse_xsampa
from src.utils.exceptions import CorpusFormatError, FrontEndError
from src.utils.io import atomic_write, read_lines
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# Annotation tags
TAG_HOMOGRAPH = "hom"
TAG_PLR = "plr"
TAG_POLYPHONE = "poly"
TAG_SPAN = "span"
TAG_DIACRITIZED = "diac"
TAG_UNDIACRITIZED = "undiac"


class EntryKind(str, Enum):
    WORD = "w"
    SENTENCE = "s"


@dataclass(frozen=True, order=True)
class Annotation:
    index: int
    tag: str

    def __str__(self) -> str:
        return f"{self.index}:{self.tag}"


def parse_annotations(field_text: str) -> Tuple[Annotation, ...]:
    annotations = []
    for item in field_text.split(","):
        item = item.strip()
        if not item:
            continue
        index, sep, tag = item.partition(":")
        if not sep or not tag or not index.isdigit():
            raise CorpusFormatError(f"malformed annotation {item!r}")
        annotations.append(Annotation(int(index), tag))
    return tuple(annotations)


@dataclass(frozen=True)
class PronunciationEntry:
    """One <text, pronunciation> pair at word or sentence granularity."""

    locale: Locale
    kind: EntryKind
    text: str
    pron: PhonemeSeq
    lemma: Optional[str] = None
    annotations: Tuple[Annotation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "annotations", tuple(self.annotations))
        if not self.text:
            raise CorpusFormatError("empty text")
        if self.kind == EntryKind.WORD:
            if " " in self.text:
                raise CorpusFormatError(f"word entry contains a space: {self.text!r}")
            if WORD_BOUNDARY in self.pron.tokens:
                raise CorpusFormatError(f"word entry has a word boundary: {self.text!r}")
        else:
            if self.lemma is not None:
                raise CorpusFormatError("lemma is only allowed on word entries")
            # Unsegmented scripts carry no spaces; their boundaries come from the oracle
            if " " in self.text:
                text_words = len(self.text.split(" "))
                if text_words != self.pron.word_count:
                    raise CorpusFormatError(
                        f"sentence has {text_words} words but {self.pron.word_count} "
                        f"pronunciation spans: {self.text!r}"
                    )

    @property
    def is_sentence(self) -> bool:
        return self.kind == EntryKind.SENTENCE

    def indices(self, tag: str) -> List[int]:
        """Indices annotated with exactly `tag`, sorted."""
        return sorted(a.index for a in self.annotations if a.tag == tag)

    def has_tag(self, tag: str) -> bool:
        return any(a.tag == tag for a in self.annotations)

    def span_map(self) -> Dict[int, Tuple[int, int]]:
        """Gold per-character target spans from `span=a-b` annotations."""
        spans = {}
        prefix = f"{TAG_SPAN}="
        for a in self.annotations:
            if a.tag.startswith(prefix):
                start, _, end = a.tag[len(prefix):].partition("-")
                spans[a.index] = (int(start), int(end))
        return spans


def parse_line(line: str, line_number: Optional[int] = None) -> PronunciationEntry:
    columns = line.split("\t")
    if len(columns) < 4 or len(columns) > 6:
        raise CorpusFormatError(f"expected 4-6 tab-separated columns, got {len(columns)}", line_number)
    try:
        locale = parse_locale(columns[0])
        kind = EntryKind(columns[1])
        pron = parse_xsampa(columns[3])
        lemma = columns[4] if len(columns) > 4 and columns[4] else None
        annotations = parse_annotations(columns[5]) if len(columns) > 5 else ()
        return PronunciationEntry(locale, kind, columns[2], pron, lemma, annotations)
    except CorpusFormatError as e:
        if e.line_number is None and line_number is not None:
            raise CorpusFormatError(str(e), line_number) from e
        raise
    except (FrontEndError, ValueError) as e:
        raise CorpusFormatError(str(e), line_number) from e


def format_line(entry: PronunciationEntry) -> str:
    columns = [str(entry.locale), entry.kind.value, entry.text, str(entry.pron)]
    if entry.lemma is not None or entry.annotations:
        columns.append(entry.lemma or "")
    if entry.annotations:
        columns.append(",".join(str(a) for a in entry.annotations))
    return "\t".join(columns)


def read_corpus(path: Union[str, Path], strict: bool = True) -> List[PronunciationEntry]:
    """Read a corpus file.

    With `strict=False`, malformed lines are logged and skipped instead of raising.
    """
    entries = []
    skipped = 0
    for line_number, line in read_lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            entries.append(parse_line(line, line_number))
        except CorpusFormatError as e:
            if strict:
                raise CorpusFormatError(f"{path}: {e}") from e
            skipped += 1
            logger.warning(f"Skipping malformed corpus line in {path}: {e}")
    logger.info(f"Loaded {len(entries)} entries from {path}" + (f" ({skipped} skipped)" if skipped else ""))
    return entries


def write_corpus(path: Union[str, Path], entries: Iterable[PronunciationEntry], header: Optional[str] = None) -> None:
    with atomic_write(path) as f:
        if header:
            for line in header.splitlines():
                f.write(f"# {line}\n")
        for entry in entries:
            f.write(format_line(entry) + "\n")


def locales_of(entries: Iterable[PronunciationEntry]) -> List[Locale]:
    return sorted({e.locale for e in entries}, key=str)
