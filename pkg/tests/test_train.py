import json
import math

import pytest

from conftest import word
from src.core.locale import parse_locale
from src.model.checkpoint import load_checkpoint
from src.model.predictor import Predictor
from src.model.train import noam_lr, train
from src.utils.exceptions import ConfigError, EncodeError, TrainingError


class TestNoam:
    def test_peak_at_warmup(self):
        values = [noam_lr(s, 16, 4) for s in range(1, 10)]
        assert max(values) == values[3]
        assert values[3] == pytest.approx(16 ** -0.5 * 4 ** -0.5)

    def test_warmup_is_linear(self):
        assert noam_lr(2, 64, 100) == pytest.approx(2 * noam_lr(1, 64, 100))

    def test_step_zero_is_undefined(self):
        with pytest.raises(ValueError):
            noam_lr(0, 16, 4)


def test_initial_loss_is_near_uniform(tiny_model_config, tiny_train_config, tiny_corpus):
    result = train(tiny_model_config, tiny_train_config, tiny_corpus)
    vocab_size = result.checkpoint.vocab.target_size
    assert result.losses[0] == pytest.approx(math.log(vocab_size), abs=0.5)
    assert len(result.losses) == tiny_train_config.max_steps


def test_training_is_deterministic(tiny_model_config, tiny_train_config, tiny_corpus):
    first = train(tiny_model_config, tiny_train_config, tiny_corpus)
    second = train(tiny_model_config, tiny_train_config, tiny_corpus)
    assert first.losses == second.losses


def test_run_directory_layout(tmp_path, tiny_model_config, tiny_train_config, tiny_corpus):
    result = train(tiny_model_config, tiny_train_config, tiny_corpus, dev_corpus=tiny_corpus, run_dir=tmp_path)
    checkpoints = tmp_path / "checkpoints"
    assert sorted(p.name for p in checkpoints.iterdir()) == ["best.ckpt", "step_3.ckpt", "step_6.ckpt"]

    log = [json.loads(line) for line in (tmp_path / "train_log.jsonl").read_text().splitlines()]
    assert [r["step"] for r in log] == [3, 6]
    assert all(r["dev_per"] >= 0 for r in log)

    best = load_checkpoint(checkpoints / "best.ckpt")
    assert best.step == result.best_step
    assert best.meta["kind"] == "best"
    assert result.best_dev_per == min(r["dev_per"] for r in log)


def test_resume_continues_the_step_count(tmp_path, tiny_model_config, tiny_train_config, tiny_corpus):
    train(tiny_model_config, tiny_train_config, tiny_corpus, run_dir=tmp_path)
    midway = load_checkpoint(tmp_path / "checkpoints" / "step_3.ckpt")
    resumed = train(tiny_model_config, tiny_train_config, tiny_corpus, resume=midway)
    assert len(resumed.losses) == tiny_train_config.max_steps - 3
    assert resumed.checkpoint.step == tiny_train_config.max_steps


def test_empty_corpus(tiny_model_config, tiny_train_config):
    with pytest.raises(TrainingError):
        train(tiny_model_config, tiny_train_config, [])


def test_overlong_entries_are_rejected(tiny_model_config, tiny_train_config, tiny_corpus):
    long_word = word("en-us", "a" * 30, "a")
    with pytest.raises(TrainingError, match="exceed"):
        train(tiny_model_config, tiny_train_config, tiny_corpus + [long_word])


class TestPredictor:
    @pytest.fixture
    def predictor(self, tiny_model_config, tiny_train_config, tiny_corpus):
        return Predictor(train(tiny_model_config, tiny_train_config, tiny_corpus).checkpoint, beam=2)

    def test_known_locales(self, predictor):
        assert predictor.locales == ["en-us", "fr-fr"]

    def test_prediction_shape(self, predictor):
        prediction = predictor.predict(parse_locale("en-us"), "cat")
        assert prediction.text == "cat"
        assert str(prediction.locale) == "en-us"
        assert prediction.truncated == ("truncated" in prediction.flags)
        assert prediction.degenerate == ("degenerate" in prediction.flags)

    def test_unknown_locale(self, predictor):
        with pytest.raises(EncodeError, match="de-de"):
            predictor.predict(parse_locale("de-de"), "hund")

    def test_unseen_characters_still_decode(self, predictor):
        assert predictor.predict(parse_locale("fr-fr"), "zzz").text == "zzz"

    def test_invalid_beam(self, tiny_model_config, tiny_train_config, tiny_corpus):
        checkpoint = train(tiny_model_config, tiny_train_config, tiny_corpus).checkpoint
        with pytest.raises(ValueError):
            Predictor(checkpoint, beam=0)

    def test_overlong_text(self, predictor):
        with pytest.raises(EncodeError, match="at most 24"):
            predictor.predict(parse_locale("en-us"), "c" * 25)
        assert predictor.predict(parse_locale("en-us"), "c" * 24).text == "c" * 24

    def test_max_len_defaults_to_the_longest_target(self, predictor, tiny_model_config):
        assert predictor.max_len == tiny_model_config.max_tgt_len + 1

    def test_max_len_beyond_the_model(self, predictor):
        with pytest.raises(ConfigError):
            Predictor(predictor.checkpoint, max_len=500)
