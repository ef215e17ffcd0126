"""Character-to-phoneme transformer encoder-decoder (post-layer-norm)."""

import copy
import math
from typing import Tuple

import torch
import torch.nn as nn

from src.core.vocab import PAD
from src.model.config import ModelConfig

NEG_INF = -1e9


def clone(layer: nn.Module, n: int) -> nn.ModuleList:
    return nn.ModuleList([copy.deepcopy(layer) for _ in range(n)])


def subsequent_mask(size: int, device=None) -> torch.Tensor:
    """(1, size, size) boolean mask, True where position j <= i."""
    upper = torch.triu(torch.ones((1, size, size), device=device, dtype=torch.bool), diagonal=1)
    return ~upper


def padding_mask(ids: torch.Tensor) -> torch.Tensor:
    """(B, 1, L) boolean mask, True at non-PAD keys."""
    return (ids != PAD).unsqueeze(-2)


def target_mask(tgt: torch.Tensor) -> torch.Tensor:
    return padding_mask(tgt) & subsequent_mask(tgt.size(-1), device=tgt.device)


def attention(q, k, v, mask=None, dropout=None) -> Tuple[torch.Tensor, torch.Tensor]:
    d_k = q.size(-1)
    scores = torch.matmul(q, k.transpose(-2, -1)) / math.sqrt(d_k)
    if mask is not None:
        scores = scores.masked_fill(~mask, NEG_INF)
    weights = scores.softmax(dim=-1)
    if dropout is not None:
        weights = dropout(weights)
    return torch.matmul(weights, v), weights


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, heads: int, dropout: float = 0.1):
        super().__init__()
        self.d_k = d_model // heads
        self.heads = heads
        self.linears = clone(nn.Linear(d_model, d_model), 4)
        self.dropout = nn.Dropout(dropout)
        self.weights = None

    def forward(self, q, k, v, mask=None):
        if mask is not None:
            # Same mask for every head
            mask = mask.unsqueeze(1)
        batch = q.size(0)
        q, k, v = [
            lin(x).view(batch, -1, self.heads, self.d_k).transpose(1, 2)
            for lin, x in zip(self.linears, (q, k, v))
        ]
        x, self.weights = attention(q, k, v, mask, self.dropout)
        x = x.transpose(1, 2).contiguous().view(batch, -1, self.heads * self.d_k)
        return self.linears[-1](x)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, ffn_dim: int, dropout: float = 0.1):
        super().__init__()
        self.linear1 = nn.Linear(d_model, ffn_dim)
        self.linear2 = nn.Linear(ffn_dim, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.linear2(self.dropout(self.linear1(x).relu()))


class PostNormSublayer(nn.Module):
    """LayerNorm(x + Dropout(sublayer(x)))."""

    def __init__(self, d_model: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x, sublayer):
        return self.norm(x + self.dropout(sublayer(x)))


class Embedding(nn.Module):
    def __init__(self, vocab_size: int, d_model: int):
        super().__init__()
        self.lut = nn.Embedding(vocab_size, d_model)
        self.scale = math.sqrt(d_model)

    def forward(self, x):
        return self.lut(x) * self.scale


class PositionalEncoding(nn.Module):
    """Fixed sinusoidal encodings; not a learned parameter."""

    def __init__(self, d_model: int, dropout: float, max_len: int):
        super().__init__()
        self.dropout = nn.Dropout(dropout)
        positions = torch.arange(0, max_len, dtype=torch.float32).unsqueeze(1)
        div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float32) * -math.log(10000.0) / d_model)
        pe = torch.zeros(max_len, d_model)
        pe[:, 0::2] = torch.sin(positions * div_term)
        pe[:, 1::2] = torch.cos(positions * div_term[: d_model // 2])
        self.register_buffer("pe", pe.unsqueeze(0), persistent=False)

    def forward(self, x):
        length = x.size(1)
        if length > self.pe.size(1):
            raise ValueError(f"sequence length {length} exceeds positional table size {self.pe.size(1)}")
        return self.dropout(x + self.pe[:, :length])


class EncoderLayer(nn.Module):
    def __init__(self, d_model: int, heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, heads, dropout)
        self.ffn = FeedForward(d_model, ffn_dim, dropout)
        self.sublayers = clone(PostNormSublayer(d_model, dropout), 2)

    def forward(self, x, mask):
        x = self.sublayers[0](x, lambda y: self.self_attn(y, y, y, mask))
        return self.sublayers[1](x, self.ffn)


class DecoderLayer(nn.Module):
    def __init__(self, d_model: int, heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, heads, dropout)
        self.cross_attn = MultiHeadAttention(d_model, heads, dropout)
        self.ffn = FeedForward(d_model, ffn_dim, dropout)
        self.sublayers = clone(PostNormSublayer(d_model, dropout), 3)

    def forward(self, x, memory, src_mask, tgt_mask):
        x = self.sublayers[0](x, lambda y: self.self_attn(y, y, y, tgt_mask))
        x = self.sublayers[1](x, lambda y: self.cross_attn(y, memory, memory, src_mask))
        return self.sublayers[2](x, self.ffn)


class PronunciationTransformer(nn.Module):
    """Encoder over locale-tagged characters, decoder over phonemes.

    Source and target embeddings are separate tables.
    """

    def __init__(self, config: ModelConfig, src_vocab_size: int, tgt_vocab_size: int):
        super().__init__()
        self.config = config
        d, h, f, p = config.d_model, config.heads, config.ffn_dim, config.dropout
        max_len = max(config.max_src_len, config.max_tgt_len) + 2

        self.src_embed = nn.Sequential(Embedding(src_vocab_size, d), PositionalEncoding(d, p, max_len))
        self.tgt_embed = nn.Sequential(Embedding(tgt_vocab_size, d), PositionalEncoding(d, p, max_len))
        self.encoder_layers = nn.ModuleList([EncoderLayer(d, h, f, p) for _ in range(config.layers)])
        self.decoder_layers = nn.ModuleList([DecoderLayer(d, h, f, p) for _ in range(config.layers)])
        self.generator = nn.Linear(d, tgt_vocab_size)

        for param in self.parameters():
            if param.dim() > 1:
                nn.init.xavier_uniform_(param)
        # Output distribution starts close to uniform
        nn.init.normal_(self.generator.weight, std=config.d_model ** -1)
        nn.init.zeros_(self.generator.bias)

    def encode(self, src: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        src_mask = padding_mask(src)
        x = self.src_embed(src)
        for layer in self.encoder_layers:
            x = layer(x, src_mask)
        return x, src_mask

    def decode(self, tgt: torch.Tensor, memory: torch.Tensor, src_mask: torch.Tensor) -> torch.Tensor:
        """Logits (B, T, V) for every target prefix position."""
        tgt_mask = target_mask(tgt)
        x = self.tgt_embed(tgt)
        for layer in self.decoder_layers:
            x = layer(x, memory, src_mask, tgt_mask)
        return self.generator(x)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        memory, src_mask = self.encode(src)
        return self.decode(tgt_in, memory, src_mask)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
