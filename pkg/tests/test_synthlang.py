import math

import pytest
import yaml
from pydantic import ValidationError

from src.core.corpus import TAG_DIACRITIZED, TAG_HOMOGRAPH, TAG_PLR, TAG_POLYPHONE, TAG_UNDIACRITIZED, Annotation, EntryKind
from src.core.phonemes import parse_xsampa
from src.synthlang.generator import gen_lexicon, gen_sentences, mix_diacritized, remove_diacritics
from src.synthlang.oracle import oracle_pronounce
from src.synthlang.spec import LangSpec, inventory_overlap, load_spec
from src.utils.exceptions import ConfigError, GenerationError, OracleError

MINIMAL_SPEC = {
    "locale": "sy-zz",
    "alphabet": ["a", "t"],
    "vowels": ["a"],
    "vowel_phonemes": ["a"],
    "stress": "first",
    "g2p_rules": [{"match": "a", "output": "a"}, {"match": "t", "output": "t"}],
    "grammar": {"onsets": ["t"], "nuclei": ["a"]},
}


def with_changes(**changes):
    return {**MINIMAL_SPEC, **changes}


class TestOracle:
    def test_regular_word(self, shipped_specs):
        result = oracle_pronounce(shipped_specs["sy-re"], "pata")
        assert result.pron == parse_xsampa('"p a t a')
        assert result.annotations == ()

    def test_homograph_trigger(self, shipped_specs):
        spec = shipped_specs["en-xx"]
        triggered = oracle_pronounce(spec, "had read")
        assert triggered.pron == parse_xsampa('"h a d <wb> "r E d')
        assert triggered.annotations == (Annotation(1, TAG_HOMOGRAPH),)
        assert oracle_pronounce(spec, "read").pron == parse_xsampa('"r i: d')

    def test_homograph_trigger_on_the_right(self, shipped_specs):
        result = oracle_pronounce(shipped_specs["en-xx"], "bass drum")
        assert result.pron.words()[0] == ['"b', "eI", "s"]

    def test_liaison(self, shipped_specs):
        spec = shipped_specs["fr-xx"]
        assert oracle_pronounce(spec, "les").pron == parse_xsampa('"l E')
        result = oracle_pronounce(spec, "les amis")
        assert result.pron == parse_xsampa('"l E z <wb> a "m i')
        assert result.annotations == (Annotation(0, TAG_PLR),)

    def test_enchainement(self, shipped_specs):
        result = oracle_pronounce(shipped_specs["fr-xx"], "bal amis")
        assert result.pron == parse_xsampa('"b a <wb> l a "m i')
        assert result.indices(TAG_PLR) == [0, 1]

    def test_no_liaison_before_a_consonant(self, shipped_specs):
        result = oracle_pronounce(shipped_specs["fr-xx"], "les bal")
        assert result.pron == parse_xsampa('"l E <wb> "b a l')
        assert result.annotations == ()

    def test_polyphone_with_spans(self, shipped_specs):
        result = oracle_pronounce(shipped_specs["cmn-xx"], "银行 长")
        assert result.text == "银行长"
        assert result.pron == parse_xsampa("i n h a N <wb> tS a N")
        assert result.annotations == (
            Annotation(0, "span=0-2"),
            Annotation(1, TAG_POLYPHONE),
            Annotation(1, "span=2-5"),
            Annotation(2, TAG_POLYPHONE),
            Annotation(2, "span=6-9"),
        )

    def test_polyphone_next_context(self, shipped_specs):
        assert oracle_pronounce(shipped_specs["cmn-xx"], "长大").pron == parse_xsampa("Z a N d a")

    def test_unsegmented_text_is_segmented_by_longest_match(self, shipped_specs):
        spec = shipped_specs["cmn-xx"]
        result = oracle_pronounce(spec, "中国人心")
        assert result.words == ("中国人", "心")
        assert result.pron == parse_xsampa("tS u N k w o r e n <wb> s i n")
        assert oracle_pronounce(spec, "中 国人 心") == result

    def test_characters_outside_the_dictionary_stand_alone(self, shipped_specs):
        assert oracle_pronounce(shipped_specs["cmn-xx"], "音银").words == ("音", "银")

    @pytest.mark.parametrize("text", ["pa  ta", "", "pax", " pa"])
    def test_unpronounceable_text(self, shipped_specs, text):
        with pytest.raises(OracleError):
            oracle_pronounce(shipped_specs["sy-re"], text)


class TestSpec:
    def test_minimal_spec(self):
        spec = LangSpec.model_validate(MINIMAL_SPEC)
        assert spec.phoneme_inventory() == ["a", "t"]
        assert str(spec.locale_code) == "sy-zz"

    @pytest.mark.parametrize("changes", [
        {"alphabet": ["a", "a", "t"]},
        {"locale": "not a locale"},
        {"colour": "red"},
        {"g2p_rules": [{"match": "x", "output": "a"}]},
        {"stress": "first", "vowel_phonemes": []},
        {"homographs": [{"word": "ta", "default": "t a", "alt": "t a", "triggers": ["at"]}]},
        {"polyphones": {"a": [{"pron": "e", "next": ["t"]}]}},
        {"unsegmented": True},
        {"dictionary": ["ta"]},
        {"grammar": None},
    ])
    def test_inconsistent_specs(self, changes):
        with pytest.raises(ValidationError):
            LangSpec.model_validate(with_changes(**changes))

    def test_load_spec_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_spec(tmp_path / "absent.yaml")
        path = tmp_path / "broken.yaml"
        path.write_text("locale: [\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_spec(path)
        path.write_text("- a\n- b\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_spec(path)
        path.write_text(yaml.safe_dump(with_changes(alphabet=[])), encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid language spec"):
            load_spec(path)

    def test_shipped_specs_share_most_phonemes(self, shipped_specs):
        assert set(shipped_specs) == {"sy-re", "en-xx", "fr-xx", "cmn-xx", "arb"}
        overlap = inventory_overlap(list(shipped_specs.values()))
        assert all(value >= 0.6 for value in overlap.values()), overlap


class TestLexicon:
    def test_deterministic(self, shipped_specs):
        spec = shipped_specs["sy-re"]
        assert gen_lexicon(spec, 150, seed=4) == gen_lexicon(spec, 150, seed=4)
        assert gen_lexicon(spec, 150, seed=4) != gen_lexicon(spec, 150, seed=5)

    @pytest.mark.parametrize("locale, size", [("sy-re", 200), ("en-xx", 200), ("fr-xx", 200), ("cmn-xx", 65), ("arb", 200)])
    def test_distinct_words_with_lemmas(self, shipped_specs, locale, size):
        spec = shipped_specs[locale]
        lexicon = gen_lexicon(spec, size, seed=1)
        assert len(lexicon) == size
        assert len({e.text for e in lexicon}) == size
        for entry in lexicon:
            assert entry.kind == EntryKind.WORD
            assert entry.text.startswith(entry.lemma)
            assert entry.pron == oracle_pronounce(spec, entry.text).pron

    def test_homograph_words_are_always_present(self, shipped_specs):
        texts = {e.text for e in gen_lexicon(shipped_specs["en-xx"], 30, seed=0)}
        assert {"read", "had", "bass", "drum"} <= texts

    def test_invalid_size(self, shipped_specs):
        with pytest.raises(GenerationError):
            gen_lexicon(shipped_specs["sy-re"], 0, seed=0)


class TestSentences:
    @pytest.mark.parametrize("locale, phenomenon, tag", [
        ("en-xx", "homograph", TAG_HOMOGRAPH),
        ("fr-xx", "liaison", TAG_PLR),
        ("cmn-xx", "polyphone", TAG_POLYPHONE),
    ])
    def test_incidence_is_reached(self, shipped_specs, locale, phenomenon, tag):
        spec = shipped_specs[locale]
        lexicon = gen_lexicon(spec, 60 if spec.unsegmented else 300, seed=2)
        sentences = gen_sentences(spec, 40, (3, 8), seed=2, lexicon=lexicon, incidence={phenomenon: 0.3})
        assert len(sentences) == 40
        assert sum(1 for e in sentences if e.has_tag(tag)) >= math.ceil(0.3 * 40)
        for entry in sentences:
            assert entry.kind == EntryKind.SENTENCE
            assert entry.pron == oracle_pronounce(spec, entry.text).pron

    def test_sentence_lengths(self, shipped_specs):
        spec = shipped_specs["sy-re"]
        sentences = gen_sentences(spec, 50, (3, 8), seed=0, lexicon=gen_lexicon(spec, 100, seed=0))
        assert all(3 <= len(e.text.split(" ")) <= 8 for e in sentences)
        assert all(len(e.pron.words()) == len(e.text.split(" ")) for e in sentences)

    def test_deterministic(self, shipped_specs):
        spec = shipped_specs["fr-xx"]
        lexicon = gen_lexicon(spec, 200, seed=0)
        assert gen_sentences(spec, 20, seed=7, lexicon=lexicon) == gen_sentences(spec, 20, seed=7, lexicon=lexicon)

    def test_unsupported_phenomenon(self, shipped_specs):
        spec = shipped_specs["sy-re"]
        lexicon = gen_lexicon(spec, 50, seed=0)
        with pytest.raises(GenerationError, match="homograph"):
            gen_sentences(spec, 10, seed=0, lexicon=lexicon, incidence={"homograph": 0.1})
        with pytest.raises(GenerationError, match="unknown phenomenon"):
            gen_sentences(spec, 10, seed=0, lexicon=lexicon, incidence={"rhyme": 0.1})


class TestDiacritics:
    def test_remove_diacritics(self, shipped_specs):
        assert remove_diacritics(shipped_specs["arb"], "kátib lúnà") == "katib luna"

    def test_mixed_corpus_pairs_renderings(self, shipped_specs):
        spec = shipped_specs["arb"]
        base = gen_sentences(spec, 20, (3, 6), seed=3, lexicon=gen_lexicon(spec, 100, seed=3))
        mixed = mix_diacritized(spec, base)
        assert len(mixed) == 2 * len(base)
        for original, diac, undiac in zip(base, mixed[0::2], mixed[1::2]):
            assert diac.text == original.text
            assert undiac.text == remove_diacritics(spec, original.text)
            assert diac.pron == undiac.pron == original.pron
            assert diac.has_tag(TAG_DIACRITIZED) and undiac.has_tag(TAG_UNDIACRITIZED)
            assert not set(undiac.text) & set(spec.diacritics)

    def test_spec_without_diacritics(self, shipped_specs):
        with pytest.raises(GenerationError):
            mix_diacritized(shipped_specs["sy-re"], [])


def test_unsegmented_sentences_match_their_oracle(shipped_specs):
    spec = shipped_specs["cmn-xx"]
    sentences = gen_sentences(spec, 50, (2, 6), seed=1, lexicon=gen_lexicon(spec, 65, seed=1))
    for entry in sentences:
        gold = oracle_pronounce(spec, entry.text)
        assert " " not in entry.text
        assert (entry.pron, entry.annotations) == (gold.pron, gold.annotations)


def test_unsegmented_lexicon_is_bounded_by_the_dictionary(shipped_specs):
    spec = shipped_specs["cmn-xx"]
    assert len(spec.segmentation_words()) == 65
    with pytest.raises(GenerationError, match="dictionary"):
        gen_lexicon(spec, 66, seed=0)
