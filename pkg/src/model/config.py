"""Model and training hyperparameters."""

from typing import Any, Dict, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config import Config
from src.utils.exceptions import ConfigError

T = TypeVar("T", bound="HyperParams")


class HyperParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @classmethod
    def create(cls: Type[T], **values: Any) -> T:
        """Validate, reporting the offending field as a ConfigError."""
        values = {k: v for k, v in values.items() if v is not None}
        try:
            return cls(**values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or cls.__name__}: {err['msg']}"
                for err in e.errors()
            )
            raise ConfigError(f"invalid {cls.__name__}: {problems}") from e

    def as_dict(self) -> Dict[str, Any]:
        return self.model_dump()


class ModelConfig(HyperParams):
    layers: int = Field(default=Config.DEFAULT_LAYERS, gt=0)
    d_model: int = Field(default=Config.DEFAULT_D_MODEL, gt=0)
    heads: int = Field(default=Config.DEFAULT_HEADS, gt=0)
    ffn_dim: Optional[int] = Field(default=None, gt=0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    max_src_len: int = Field(default=128, gt=1)
    max_tgt_len: int = Field(default=128, gt=1)
    label_smoothing: float = Field(default=0.1, ge=0.0, lt=1.0)
    seed: int = Field(default=Config.DEFAULT_SEED, ge=0, lt=2 ** 64)

    @model_validator(mode="before")
    @classmethod
    def default_ffn_dim(cls, data):
        if isinstance(data, dict) and data.get("ffn_dim") is None:
            d_model = data.get("d_model", Config.DEFAULT_D_MODEL)
            if isinstance(d_model, int):
                data = {**data, "ffn_dim": 4 * d_model}
        return data

    @model_validator(mode="after")
    def check_dims(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by heads ({self.heads})")
        return self


class TrainConfig(HyperParams):
    max_steps: int = Field(default=2000, gt=0)
    warmup_steps: int = Field(default=Config.DEFAULT_WARMUP_STEPS, ge=1)
    tokens_per_batch: int = Field(default=Config.DEFAULT_TOKENS_PER_BATCH, gt=0)
    checkpoint_every: int = Field(default=500, ge=0)
    dev_eval_every: int = Field(default=250, ge=0)
    log_every: int = Field(default=50, gt=0)
    lr_factor: float = Field(default=1.0, gt=0.0)
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.998, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-9, gt=0.0)
    prefetch: int = Field(default=2, ge=0)
    seed: int = Field(default=Config.DEFAULT_SEED, ge=0, lt=2 ** 64)

    def check_fits(self, model: ModelConfig) -> None:
        longest = max(model.max_src_len, model.max_tgt_len)
        if self.tokens_per_batch < longest:
            raise ConfigError(
                f"tokens_per_batch ({self.tokens_per_batch}) must be at least "
                f"max(max_src_len, max_tgt_len) = {longest}"
            )
