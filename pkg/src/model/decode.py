"""Greedy and beam-search decoding.

Scores are summed log-probabilities of the generated tokens, EOS included;
`score` divides by the number of generated tokens. `max_len` bounds the
number of generated tokens, EOS included.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import torch

from src.core.vocab import BOS, EOS
from src.model.batching import pad_ids
from src.model.transformer import PronunciationTransformer


@dataclass(frozen=True)
class DecodeResult:
    ids: Tuple[int, ...]
    log_prob: float
    truncated: bool

    @property
    def generated(self) -> int:
        return len(self.ids) + (0 if self.truncated else 1)

    @property
    def score(self) -> float:
        """Length-normalized log-probability."""
        return self.log_prob / max(1, self.generated)

    def rank_key(self):
        return -self.score, self.ids


def _next_log_probs(model, ys: torch.Tensor, memory: torch.Tensor, src_mask: torch.Tensor) -> torch.Tensor:
    logits = model.decode(ys, memory, src_mask)[:, -1]
    return torch.log_softmax(logits.float(), dim=-1)


@torch.no_grad()
def greedy_decode(model: PronunciationTransformer, src: Sequence[int], max_len: int) -> DecodeResult:
    """Argmax decoding from BOS until EOS or `max_len` tokens; ties pick the lowest id."""
    model.eval()
    memory, src_mask = model.encode(torch.tensor([list(src)], dtype=torch.long))
    ys = torch.tensor([[BOS]], dtype=torch.long)
    tokens: List[int] = []
    log_prob = 0.0
    for _ in range(max_len):
        log_probs = _next_log_probs(model, ys, memory, src_mask)[0]
        token = int(torch.argmax(log_probs))
        log_prob += float(log_probs[token])
        if token == EOS:
            return DecodeResult(tuple(tokens), log_prob, truncated=False)
        tokens.append(token)
        ys = torch.cat([ys, torch.tensor([[token]], dtype=torch.long)], dim=1)
    return DecodeResult(tuple(tokens), log_prob, truncated=True)


@torch.no_grad()
def greedy_decode_batch(
    model: PronunciationTransformer,
    sources: Sequence[Sequence[int]],
    max_len: int
) -> List[DecodeResult]:
    """Greedy decoding of several sources at once; used for dev evaluation."""
    if not sources:
        return []
    model.eval()
    memory, src_mask = model.encode(pad_ids(sources))
    n = len(sources)
    ys = torch.full((n, 1), BOS, dtype=torch.long)
    tokens: List[List[int]] = [[] for _ in range(n)]
    log_probs_sum = [0.0] * n
    finished = [False] * n
    for _ in range(max_len):
        log_probs = _next_log_probs(model, ys, memory, src_mask)
        best = torch.argmax(log_probs, dim=-1)
        for row in range(n):
            if finished[row]:
                continue
            token = int(best[row])
            log_probs_sum[row] += float(log_probs[row, token])
            if token == EOS:
                finished[row] = True
            else:
                tokens[row].append(token)
        if all(finished):
            break
        # Finished rows keep decoding EOS; their outputs are already fixed
        best = best.masked_fill(torch.tensor(finished), EOS)
        ys = torch.cat([ys, best.unsqueeze(1)], dim=1)
    return [
        DecodeResult(tuple(tokens[row]), log_probs_sum[row], truncated=not finished[row])
        for row in range(n)
    ]


@torch.no_grad()
def beam_decode(model: PronunciationTransformer, src: Sequence[int], beam: int, max_len: int) -> DecodeResult:
    """Beam search under length-normalized log-probability.

    `beam=1` is exactly greedy decoding. For wider beams the greedy hypothesis
    is kept as a final candidate, so the result never scores below it. Equal
    scores resolve to the lexicographically lower id sequence.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    greedy = greedy_decode(model, src, max_len)
    if beam == 1:
        return greedy

    memory, src_mask = model.encode(torch.tensor([list(src)], dtype=torch.long))
    alive: List[Tuple[Tuple[int, ...], float]] = [((), 0.0)]
    candidates: List[DecodeResult] = [greedy]

    for _ in range(max_len):
        ys = torch.tensor([[BOS] + list(seq) for seq, _ in alive], dtype=torch.long)
        log_probs = _next_log_probs(model, ys, memory.expand(len(alive), -1, -1), src_mask.expand(len(alive), -1, -1))
        expanded = []
        for row, (seq, score) in enumerate(alive):
            top = torch.topk(log_probs[row], k=min(beam, log_probs.size(-1)))
            for lp, token in zip(top.values.tolist(), top.indices.tolist()):
                expanded.append((seq + (token,), score + lp))
        expanded.sort(key=lambda item: (-item[1], item[0]))

        alive = []
        for seq, score in expanded[:beam]:
            if seq[-1] == EOS:
                candidates.append(DecodeResult(seq[:-1], score, truncated=False))
            else:
                alive.append((seq, score))
        if not alive:
            break
    else:
        candidates.extend(DecodeResult(seq, score, truncated=True) for seq, score in alive)

    return min(candidates, key=DecodeResult.rank_key)
