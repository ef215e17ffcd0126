"""Versioned binary checkpoint container.

Layout (all integers little-endian u32):

    b"PRONCKPT" | version | header JSON (length-prefixed, sorted keys)
    | source vocab | target vocab          each: count, then length-prefixed UTF-8 tokens
    | RNG state (length-prefixed bytes)
    | parameter count, then per parameter in state_dict order:
          name (length-prefixed UTF-8) | ndim | dims... | float32 little-endian data
"""

import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Union

import numpy as np
import torch

from src.core.vocab import Vocab
from src.model.config import ModelConfig
from src.model.transformer import PronunciationTransformer
from src.utils.exceptions import CheckpointError
from src.utils.io import atomic_write
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"PRONCKPT"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    model_config: ModelConfig
    vocab: Vocab
    params: "OrderedDict[str, torch.Tensor]"
    step: int = 0
    rng_state: bytes = b""
    meta: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_model(
        cls,
        model: PronunciationTransformer,
        vocab: Vocab,
        step: int,
        meta: Optional[Dict[str, Any]] = None
    ) -> "Checkpoint":
        params = OrderedDict((name, t.detach().clone().cpu()) for name, t in model.state_dict().items())
        rng_state = torch.get_rng_state().numpy().tobytes()
        return cls(model.config, vocab, params, step, rng_state, dict(meta or {}))

    def build_model(self) -> PronunciationTransformer:
        """Fresh model in eval mode holding these parameters."""
        model = PronunciationTransformer(self.model_config, self.vocab.source_size, self.vocab.target_size)
        try:
            model.load_state_dict(self.params)
        except RuntimeError as e:
            raise CheckpointError(f"parameters do not fit the configured model: {e}") from e
        model.eval()
        return model

    def restore_rng(self) -> None:
        if self.rng_state:
            torch.set_rng_state(torch.from_numpy(np.frombuffer(self.rng_state, dtype=np.uint8).copy()))


def _write_u32(f: IO[bytes], value: int) -> None:
    f.write(_U32.pack(value))


def _write_blob(f: IO[bytes], data: bytes) -> None:
    _write_u32(f, len(data))
    f.write(data)


def _write_tokens(f: IO[bytes], tokens: List[str]) -> None:
    _write_u32(f, len(tokens))
    for token in tokens:
        _write_blob(f, token.encode("utf-8"))


def param_payload(params: "OrderedDict[str, torch.Tensor]") -> bytes:
    """Serialized parameter section; identical parameters give identical bytes."""
    chunks = [_U32.pack(len(params))]
    for name, tensor in params.items():
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)) + encoded)
        array = tensor.detach().cpu().numpy().astype("<f4", copy=False)
        chunks.append(_U32.pack(array.ndim) + b"".join(_U32.pack(d) for d in array.shape))
        chunks.append(np.ascontiguousarray(array).tobytes())
    return b"".join(chunks)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> None:
    header = {
        "model_config": checkpoint.model_config.as_dict(),
        "step": checkpoint.step,
        "meta": checkpoint.meta,
    }
    with atomic_write(path, "wb") as f:
        f.write(MAGIC)
        _write_u32(f, FORMAT_VERSION)
        _write_blob(f, json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        _write_tokens(f, list(checkpoint.vocab.source.tokens))
        _write_tokens(f, list(checkpoint.vocab.target.tokens))
        _write_blob(f, checkpoint.rng_state)
        f.write(param_payload(checkpoint.params))
    logger.info(f"Saved checkpoint at step {checkpoint.step} to {path}")


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def tokens(self) -> List[str]:
        return [self.blob().decode("utf-8") for _ in range(self.u32())]


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")

    header = json.loads(reader.blob().decode("utf-8"))
    vocab = Vocab.from_tokens(reader.tokens(), reader.tokens())
    rng_state = reader.blob()

    params: "OrderedDict[str, torch.Tensor]" = OrderedDict()
    for _ in range(reader.u32()):
        name = reader.blob().decode("utf-8")
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape)) if shape else 1
        array = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape)
        params[name] = torch.from_numpy(array.astype(np.float32))
    if reader.pos != len(reader.data):
        raise CheckpointError(f"{path}: {len(reader.data) - reader.pos} trailing bytes")

    return Checkpoint(
        model_config=ModelConfig.create(**header["model_config"]),
        vocab=vocab,
        params=params,
        step=int(header["step"]),
        rng_state=rng_state,
        meta=header.get("meta", {}),
    )
