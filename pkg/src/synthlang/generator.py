"""Seeded lexicon and sentence corpora for synthetic languages."""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.corpus import (
    TAG_DIACRITIZED,
    TAG_HOMOGRAPH,
    TAG_PLR,
    TAG_POLYPHONE,
    TAG_UNDIACRITIZED,
    Annotation,
    EntryKind,
    PronunciationEntry,
)
from src.synthlang.oracle import Oracle
from src.synthlang.spec import LangSpec
from src.utils.exceptions import GenerationError, OracleError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

HOMOGRAPH = "homograph"
LIAISON = "liaison"
POLYPHONE = "polyphone"
PHENOMENA = (HOMOGRAPH, LIAISON, POLYPHONE)

# Draws allowed per requested word before giving up
ATTEMPTS_PER_WORD = 50


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def sample_stem(spec: LangSpec, rng: np.random.Generator) -> str:
    g = spec.grammar
    low, high = g.syllables
    count = int(rng.integers(low, high + 1))
    return "".join(_pick(rng, g.onsets) + _pick(rng, g.nuclei) + _pick(rng, g.codas) for _ in range(count))


def fixed_words(spec: LangSpec) -> List[str]:
    """Words every lexicon carries: homographs, their triggers and polyphone contexts."""
    words = []
    for h in spec.homographs:
        words.append(h.word)
        words.extend(h.triggers)
    for char, readings in sorted(spec.polyphones.items()):
        words.append(char)
        for reading in readings:
            words.extend(p + char for p in reading.prev)
            words.extend(char + n for n in reading.next)
    return list(dict.fromkeys(words))


def gen_lexicon(spec: LangSpec, n: int, seed: int) -> List[PronunciationEntry]:
    """`n` distinct word entries; inflected forms share their stem as lemma.

    Unsegmented scripts draw from their closed word list instead, each word
    its own lemma, so `n` cannot exceed that list.
    """
    if n < 1:
        raise GenerationError("lexicon size must be >= 1")
    if spec.unsegmented and n > len(spec.segmentation_words()):
        raise GenerationError(
            f"{spec.locale}: asked for {n} words but the dictionary holds {len(spec.segmentation_words())}"
        )
    oracle = Oracle(spec)
    rng = np.random.default_rng(seed)
    entries: List[PronunciationEntry] = []
    seen = set()

    def add(word: str, lemma: str) -> bool:
        if word in seen or len(entries) >= n:
            return False
        try:
            result = oracle.pronounce(word)
        except OracleError as e:
            raise GenerationError(f"{spec.locale}: generated word {word!r} has no pronunciation: {e}") from e
        seen.add(word)
        entries.append(result.entry(spec, EntryKind.WORD, lemma))
        return True

    for word in fixed_words(spec):
        add(word, word)
    if spec.unsegmented:
        rest = [w for w in spec.segmentation_words() if w not in seen]
        for i in rng.permutation(len(rest)).tolist():
            add(rest[i], rest[i])
        logger.info(f"{spec.locale}: drew {len(entries)} lexicon words from the dictionary")
        return entries

    suffixes = spec.grammar.suffixes
    budget = ATTEMPTS_PER_WORD * n
    attempts = 0
    while len(entries) < n:
        attempts += 1
        if attempts > budget:
            raise GenerationError(
                f"{spec.locale}: produced only {len(entries)} of {n} distinct words "
                f"after {budget} draws; widen the word grammar"
            )
        stem = sample_stem(spec, rng)
        if stem in seen:
            continue
        forms = [stem]
        if suffixes and spec.grammar.max_inflections:
            k = int(rng.integers(0, min(len(suffixes), spec.grammar.max_inflections) + 1))
            chosen = rng.choice(len(suffixes), size=k, replace=False)
            forms.extend(stem + suffixes[i] for i in sorted(chosen.tolist()))
        # Skip a stem whose forms collide with existing words so lemma groups stay exact
        if any(form in seen for form in forms):
            continue
        for form in forms:
            add(form, stem)

    logger.info(f"{spec.locale}: generated {len(entries)} lexicon words")
    return entries


class _SentencePlanner:
    """Builds word sequences and forces phenomenon contexts into chosen sentences."""

    def __init__(self, spec: LangSpec, words: Sequence[str], rng: np.random.Generator):
        self.spec = spec
        self.words = list(words)
        self.rng = rng
        vowels = set(spec.vowels)
        latent = spec.latent_map
        self.latent_final = [w for w in self.words if w[-1] in latent]
        self.vowel_initial = [w for w in self.words if w[0] in vowels]
        self.polyphone_words = [w for w in self.words if any(ch in spec.polyphones for ch in w)]

    def supports(self, phenomenon: str) -> bool:
        if phenomenon == HOMOGRAPH:
            return bool(self.spec.homographs)
        if phenomenon == LIAISON:
            return bool(self.spec.liaison) and bool(self.latent_final) and bool(self.vowel_initial)
        if phenomenon == POLYPHONE:
            return bool(self.polyphone_words)
        raise GenerationError(f"unknown phenomenon {phenomenon!r}")

    def chunk(self, phenomenon: str, triggered: bool) -> List[str]:
        """A short word run that exhibits the phenomenon."""
        if phenomenon == HOMOGRAPH:
            rule = _pick(self.rng, self.spec.homographs)
            if not triggered:
                return [rule.word]
            trigger = _pick(self.rng, rule.triggers)
            return [rule.word, trigger] if rule.side == "next" else [trigger, rule.word]
        if phenomenon == LIAISON:
            return [_pick(self.rng, self.latent_final), _pick(self.rng, self.vowel_initial)]
        char = _pick(self.rng, sorted(self.spec.polyphones))
        readings = self.spec.polyphones[char]
        if triggered:
            reading = _pick(self.rng, readings)
            contexts = [p + char for p in reading.prev] + [char + n for n in reading.next]
            return [_pick(self.rng, contexts)]
        return [char]

    def sentence(self, length: int, chunks: List[List[str]]) -> List[str]:
        filler = max(0, length - sum(len(c) for c in chunks))
        units = [[_pick(self.rng, self.words)] for _ in range(filler)] + chunks
        if not units:
            units = [[_pick(self.rng, self.words)]]
        order = self.rng.permutation(len(units))
        return [w for i in order for w in units[i]]


def gen_sentences(
    spec: LangSpec,
    n: int,
    words_per_sentence: Tuple[int, int] = (3, 8),
    seed: int = 0,
    lexicon: Optional[Sequence[PronunciationEntry]] = None,
    incidence: Optional[Dict[str, float]] = None
) -> List[PronunciationEntry]:
    """`n` annotated sentence entries drawn from the lexicon.

    For each phenomenon with an incidence rate r, at least ceil(r * n)
    sentences carry it; half of the forced cases use the triggering context
    and half the plain one.
    """
    if n < 1:
        raise GenerationError("sentence count must be >= 1")
    low, high = words_per_sentence
    if not 1 <= low <= high:
        raise GenerationError(f"words per sentence must satisfy 1 <= min <= max, got {words_per_sentence}")
    rates = dict(spec.corpus.incidence if incidence is None else incidence)
    for name, rate in rates.items():
        if name not in PHENOMENA:
            raise GenerationError(f"unknown phenomenon {name!r}; expected one of {PHENOMENA}")
        if not 0.0 <= rate <= 1.0:
            raise GenerationError(f"incidence rate {name}={rate} outside [0, 1]")

    if lexicon is None:
        lexicon = gen_lexicon(spec, spec.corpus.words, seed)
    rng = np.random.default_rng([seed, 1])
    planner = _SentencePlanner(spec, [e.text for e in lexicon], rng)

    forced: List[List[List[str]]] = [[] for _ in range(n)]
    for name in PHENOMENA:
        rate = rates.get(name, 0.0)
        if rate <= 0:
            continue
        if not planner.supports(name):
            raise GenerationError(f"{spec.locale}: cannot reach {name} incidence {rate}; the spec or lexicon lacks it")
        needed = math.ceil(rate * n)
        chosen = rng.choice(n, size=needed, replace=False)
        for rank, index in enumerate(sorted(chosen.tolist())):
            forced[index].append(planner.chunk(name, triggered=rank % 2 == 0))

    oracle = Oracle(spec)
    entries = []
    for i in range(n):
        length = int(rng.integers(low, high + 1))
        words = planner.sentence(length, forced[i])
        result = oracle.pronounce(" ".join(words))
        entries.append(result.entry(spec, EntryKind.SENTENCE))

    counts = {name: sum(1 for e in entries if e.has_tag(tag)) for name, tag in (
        (HOMOGRAPH, TAG_HOMOGRAPH), (LIAISON, TAG_PLR), (POLYPHONE, TAG_POLYPHONE))}
    logger.info(f"{spec.locale}: generated {n} sentences; sentences with phenomena: {counts}")
    return entries


def remove_diacritics(spec: LangSpec, text: str) -> str:
    """Replace every removable marked grapheme with its base grapheme."""
    if not spec.diacritics:
        return text
    return "".join(spec.diacritics.get(ch, ch) for ch in text)


def mix_diacritized(spec: LangSpec, entries: Sequence[PronunciationEntry]) -> List[PronunciationEntry]:
    """Each sentence twice: as written and stripped of diacritics, sharing one pronunciation.

    Half of the resulting corpus is undiacritized; both halves carry the same
    content. Entries are tagged `diac` or `undiac` at index 0.
    """
    if not spec.diacritics:
        raise GenerationError(f"{spec.locale}: spec has no diacritics to remove")
    mixed = []
    for entry in entries:
        for text, tag in ((entry.text, TAG_DIACRITIZED), (remove_diacritics(spec, entry.text), TAG_UNDIACRITIZED)):
            mixed.append(PronunciationEntry(
                locale=entry.locale,
                kind=entry.kind,
                text=text,
                pron=entry.pron,
                lemma=entry.lemma,
                annotations=tuple(sorted(entry.annotations + (Annotation(0, tag),))),
            ))
    return mixed
