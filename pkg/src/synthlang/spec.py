"""Synthetic language specifications, loaded from YAML files.

A spec defines a toy orthography and its pronunciation rules: ordered
context-sensitive rewrite rules, a stress position, and the optional
sentence-level phenomena (homographs, liaison, enchainement, polyphonic
characters, removable diacritics). Segmented scripts generate words from a
syllable grammar; unsegmented scripts carry a closed dictionary instead.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import Config
from src.core.locale import Locale, parse_locale
from src.core.phonemes import PRIMARY_STRESS, SECONDARY_STRESS, is_valid_token
from src.utils.exceptions import ConfigError, LocaleError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# Context symbols usable in rule contexts besides literal graphemes
VOWEL_CLASS = "V"
CONSONANT_CLASS = "C"
WORD_EDGE = "#"


def split_pron(pron: str) -> Tuple[str, ...]:
    return tuple(pron.split())


def strip_stress(token: str) -> str:
    return token.lstrip(PRIMARY_STRESS + SECONDARY_STRESS)


class _SpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class G2PRule(_SpecModel):
    """Rewrite `match` as `output` when the neighbouring graphemes fit `left` / `right`.

    `output` is a space-separated phoneme string; empty means silent.
    """

    match: str = Field(min_length=1)
    output: str = ""
    left: Optional[str] = None
    right: Optional[str] = None

    @property
    def tokens(self) -> Tuple[str, ...]:
        return split_pron(self.output)


class HomographRule(_SpecModel):
    word: str = Field(min_length=1)
    default: str
    alt: str
    triggers: List[str] = Field(min_length=1)
    side: Literal["next", "prev"] = "prev"

    @model_validator(mode="after")
    def prons_differ(self):
        if split_pron(self.default) == split_pron(self.alt):
            raise ValueError(f"homograph {self.word!r}: default and alt pronunciations are identical")
        if not split_pron(self.default) or not split_pron(self.alt):
            raise ValueError(f"homograph {self.word!r}: pronunciations must be nonempty")
        return self


class LiaisonRule(_SpecModel):
    """A word-final grapheme, silent alone, sounded as `phoneme` before a vowel-initial word."""

    latent: str = Field(min_length=1)
    phoneme: str = Field(min_length=1)


class PolyphoneReading(_SpecModel):
    """Alternative reading of a character when a neighbouring character matches."""

    pron: str
    prev: List[str] = Field(default_factory=list)
    next: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def has_context(self):
        if not self.prev and not self.next:
            raise ValueError("a polyphone reading needs a prev or next context")
        return self


class WordGrammar(_SpecModel):
    """Syllable-concatenation word grammar: each syllable is onset + nucleus + coda."""

    onsets: List[str] = Field(default_factory=lambda: [""])
    nuclei: List[str] = Field(default_factory=list)
    codas: List[str] = Field(default_factory=lambda: [""])
    syllables: Tuple[int, int] = (1, 3)
    suffixes: List[str] = Field(default_factory=list)
    max_inflections: int = Field(default=2, ge=0)

    @model_validator(mode="after")
    def check_shape(self):
        low, high = self.syllables
        if not 1 <= low <= high:
            raise ValueError(f"syllable range must satisfy 1 <= min <= max, got {self.syllables}")
        if not self.nuclei:
            raise ValueError("word grammar needs nuclei")
        return self


class CorpusDefaults(_SpecModel):
    words: int = Field(default=1000, ge=1)
    sentences: int = Field(default=500, ge=1)
    words_per_sentence: Tuple[int, int] = (3, 8)
    incidence: Dict[str, float] = Field(default_factory=dict)

    @field_validator("incidence")
    @classmethod
    def rates_in_range(cls, v):
        for name, rate in v.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"incidence rate {name}={rate} outside [0, 1]")
        return v


class LangSpec(_SpecModel):
    locale: str
    description: str = ""
    alphabet: List[str] = Field(min_length=1)
    vowels: List[str] = Field(default_factory=list)
    vowel_phonemes: List[str] = Field(default_factory=list)
    stress: Literal["first", "last", "penultimate", "none"] = "none"
    g2p_rules: List[G2PRule] = Field(min_length=1)
    homographs: List[HomographRule] = Field(default_factory=list)
    liaison: List[LiaisonRule] = Field(default_factory=list)
    enchainement: bool = False
    polyphones: Dict[str, List[PolyphoneReading]] = Field(default_factory=dict)
    diacritics: Dict[str, str] = Field(default_factory=dict)
    unsegmented: bool = False
    # Closed word list of an unsegmented script; text is segmented against it
    dictionary: List[str] = Field(default_factory=list)
    grammar: Optional[WordGrammar] = None
    corpus: CorpusDefaults = Field(default_factory=CorpusDefaults)

    @field_validator("locale")
    @classmethod
    def locale_parses(cls, v):
        try:
            return str(parse_locale(v))
        except LocaleError as e:
            raise ValueError(str(e)) from e

    @model_validator(mode="after")
    def check_consistency(self):
        letters = set(self.alphabet)
        if len(letters) != len(self.alphabet):
            raise ValueError("alphabet contains duplicates")
        if any(len(g) != 1 or g.isspace() for g in self.alphabet):
            raise ValueError("alphabet entries must be single non-space characters")
        self._check_spelling(self.vowels, "vowels")
        g = self.grammar
        if g is not None:
            self._check_spelling(g.onsets + g.nuclei + g.codas + g.suffixes, "word grammar")
        self._check_spelling(self.dictionary, "dictionary")
        if any(not w for w in self.dictionary):
            raise ValueError("dictionary words must be nonempty")

        for rule in self.g2p_rules:
            self._check_spelling([rule.match], "rule match")
            for context in (rule.left, rule.right):
                if context not in (None, VOWEL_CLASS, CONSONANT_CLASS, WORD_EDGE):
                    self._check_spelling([context], "rule context")
            self._check_tokens(rule.tokens, f"rule {rule.match!r}")
            if self.unsegmented and len(rule.match) != 1:
                raise ValueError("unsegmented scripts need single-character rules")

        for h in self.homographs:
            self._check_spelling([h.word] + h.triggers, f"homograph {h.word!r}")
            self._check_tokens(split_pron(h.default) + split_pron(h.alt), f"homograph {h.word!r}")
        for rule in self.liaison:
            self._check_spelling([rule.latent], "liaison latent grapheme")
            self._check_tokens((rule.phoneme,), "liaison phoneme")
        for char, readings in self.polyphones.items():
            self._check_spelling([char], "polyphone")
            for reading in readings:
                self._check_spelling([char] + reading.prev + reading.next, f"polyphone {char!r}")
                self._check_tokens(split_pron(reading.pron), f"polyphone {char!r}")
        for marked, base in self.diacritics.items():
            self._check_spelling([marked, base], "diacritic")

        if self.unsegmented and not self.dictionary:
            raise ValueError("unsegmented scripts need a dictionary to segment text")
        if self.dictionary and not self.unsegmented:
            raise ValueError("a dictionary is only used by unsegmented scripts")
        if not self.unsegmented and g is None:
            raise ValueError("segmented scripts need a word grammar")
        if self.unsegmented and self.stress != "none":
            raise ValueError("unsegmented scripts carry no stress")
        if self.unsegmented and (self.homographs or self.liaison or self.enchainement):
            raise ValueError("unsegmented scripts use polyphones, not word-level phenomena")
        if self.polyphones and not self.unsegmented:
            raise ValueError("polyphonic characters are only supported for unsegmented scripts")
        if self.stress != "none" and not self.vowel_phonemes:
            raise ValueError("a stress rule needs vowel_phonemes to find syllable nuclei")
        if (self.liaison or self.enchainement) and not self.vowels:
            raise ValueError("liaison and enchainement need vowel graphemes")
        return self

    def _check_spelling(self, words: Iterable[str], what: str) -> None:
        letters = set(self.alphabet)
        for word in words:
            stray = sorted(set(word) - letters)
            if stray:
                raise ValueError(f"{what}: {word!r} uses characters outside the alphabet: {stray}")

    @staticmethod
    def _check_tokens(tokens: Sequence[str], what: str) -> None:
        for token in tokens:
            if not is_valid_token(token) or token.startswith("<"):
                raise ValueError(f"{what}: invalid phoneme token {token!r}")

    @property
    def locale_code(self) -> Locale:
        return parse_locale(self.locale)

    @property
    def homograph_map(self) -> Dict[str, HomographRule]:
        return {h.word: h for h in self.homographs}

    def segmentation_words(self) -> List[str]:
        """Dictionary words plus each polyphonic character alone and in its context words."""
        words = list(self.dictionary)
        for char, readings in sorted(self.polyphones.items()):
            words.append(char)
            for reading in readings:
                words.extend(p + char for p in reading.prev)
                words.extend(char + n for n in reading.next)
        return list(dict.fromkeys(words))

    @property
    def latent_map(self) -> Dict[str, LiaisonRule]:
        return {rule.latent: rule for rule in self.liaison}

    def phoneme_inventory(self) -> List[str]:
        """Every phoneme the spec can produce, stress markers removed, sorted."""
        tokens = set()
        for rule in self.g2p_rules:
            tokens.update(rule.tokens)
        for h in self.homographs:
            tokens.update(split_pron(h.default) + split_pron(h.alt))
        tokens.update(rule.phoneme for rule in self.liaison)
        for readings in self.polyphones.values():
            for reading in readings:
                tokens.update(split_pron(reading.pron))
        return sorted({strip_stress(t) for t in tokens if strip_stress(t)})


def load_spec(path: Union[str, Path]) -> LangSpec:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"language spec not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    try:
        spec = LangSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid language spec: {e}") from e
    logger.debug(f"Loaded language spec {spec.locale} from {path}")
    return spec


def shipped_spec_paths() -> List[Path]:
    return sorted(Path(Config.SPECS_DIR).glob("*.yaml"))


def load_specs(paths: Optional[Sequence[Union[str, Path]]] = None) -> List[LangSpec]:
    """Load the given spec files, or every shipped spec."""
    return [load_spec(p) for p in (paths if paths else shipped_spec_paths())]


def inventory_overlap(specs: Sequence[LangSpec]) -> Dict[str, float]:
    """Per locale, the fraction of its phoneme inventory found in some other locale's inventory."""
    inventories = {spec.locale: set(spec.phoneme_inventory()) for spec in specs}
    overlap = {}
    for locale, inventory in inventories.items():
        others = set()
        for other, tokens in inventories.items():
            if other != locale:
                others |= tokens
        overlap[locale] = len(inventory & others) / len(inventory) if inventory else 0.0
    return overlap
