import hypothesis
import pytest
import torch

from src.core.corpus import EntryKind, PronunciationEntry
from src.core.locale import parse_locale
from src.core.phonemes import parse_xsampa
from src.model.config import ModelConfig, TrainConfig
from src.synthlang.spec import load_specs

torch.set_num_threads(1)
torch.use_deterministic_algorithms(True)

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow learning tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def word(locale: str, text: str, pron: str, lemma=None) -> PronunciationEntry:
    return PronunciationEntry(parse_locale(locale), EntryKind.WORD, text, parse_xsampa(pron), lemma)


def sentence(locale: str, text: str, pron: str, annotations=()) -> PronunciationEntry:
    return PronunciationEntry(parse_locale(locale), EntryKind.SENTENCE, text, parse_xsampa(pron), None, annotations)


@pytest.fixture
def tiny_corpus():
    return [
        word("en-us", "cat", '"k { t'),
        word("en-us", "cats", '"k { t s', lemma="cat"),
        word("fr-fr", "ami", 'a "m i'),
        sentence("en-us", "the cat", 'D @ <wb> "k { t'),
    ]


@pytest.fixture
def tiny_model_config():
    return ModelConfig.create(layers=1, d_model=16, heads=2, ffn_dim=32, dropout=0.0,
                              max_src_len=24, max_tgt_len=24, seed=3)


@pytest.fixture
def tiny_train_config():
    return TrainConfig.create(max_steps=6, warmup_steps=4, tokens_per_batch=64, checkpoint_every=3,
                              dev_eval_every=3, log_every=1, prefetch=0, seed=3)


@pytest.fixture(scope="session")
def shipped_specs():
    return {spec.locale: spec for spec in load_specs()}
