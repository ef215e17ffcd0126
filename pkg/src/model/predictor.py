"""Inference facade over a trained checkpoint."""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from src.codec.codec import decode_target, encode_source
from src.core.locale import Locale
from src.core.phonemes import PhonemeSeq
from src.model.checkpoint import Checkpoint, load_checkpoint
from src.model.decode import beam_decode
from src.utils.exceptions import ConfigError, EncodeError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Prediction:
    locale: Locale
    text: str
    pron: PhonemeSeq
    truncated: bool = False
    score: float = 0.0

    @property
    def degenerate(self) -> bool:
        return self.pron.degenerate

    @property
    def flags(self) -> List[str]:
        flags = []
        if self.truncated:
            flags.append("truncated")
        if self.degenerate:
            flags.append("degenerate")
        return flags


class Predictor:
    """Decodes (locale, text) inputs with a fixed checkpoint and decode options.

    The wrapped model is read-only after construction.
    """

    def __init__(self, checkpoint: Checkpoint, beam: int = 1, max_len: Optional[int] = None):
        if beam < 1:
            raise ValueError(f"beam must be >= 1, got {beam}")
        self.checkpoint = checkpoint
        self.vocab = checkpoint.vocab
        self.model = checkpoint.build_model()
        self.beam = beam
        config = checkpoint.model_config
        # Generated tokens include EOS; a full-length training target needs max_tgt_len + 1
        self.max_len = max_len or config.max_tgt_len + 1
        if self.max_len > config.max_tgt_len + 2:
            raise ConfigError(f"max_len {self.max_len} exceeds the model limit of {config.max_tgt_len + 2} generated tokens")

    @classmethod
    def from_file(cls, path: Union[str, Path], beam: int = 1, max_len: Optional[int] = None) -> "Predictor":
        logger.info(f"Loading checkpoint from {path}")
        return cls(load_checkpoint(path), beam, max_len)

    @property
    def locales(self) -> List[str]:
        return [tag[1:-1] for tag in self.vocab.locale_tags()]

    def predict(self, locale: Locale, text: str) -> Prediction:
        """Raises EncodeError for a locale the checkpoint was not trained on or an overlong text."""
        src = encode_source(self.vocab, locale, text)
        limit = self.checkpoint.model_config.max_src_len
        if len(src) > limit + 1:
            raise EncodeError(f"text has {len(src) - 1} characters; the model accepts at most {limit}")
        result = beam_decode(self.model, src, self.beam, self.max_len)
        return Prediction(
            locale=locale,
            text=text,
            pron=decode_target(self.vocab, result.ids),
            truncated=result.truncated,
            score=result.score,
        )

    def predict_many(self, items: Iterable[Tuple[Locale, str]]) -> List[Prediction]:
        return [self.predict(locale, text) for locale, text in items]
