"""Dynamic token batching, padding and bounded-queue prefetch."""

import queue
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import Sampler

from src.codec.codec import EncodedPair
from src.core.vocab import PAD
from src.utils.exceptions import BatchingError


@dataclass
class Batch:
    """Padded tensors for one training or decoding step.

    `tgt_in` is the target without its final token and `tgt_out` the target
    shifted left by one, so position t predicts token t+1.
    """

    src: torch.Tensor
    tgt_in: Optional[torch.Tensor] = None
    tgt_out: Optional[torch.Tensor] = None
    indices: Optional[List[int]] = None

    @property
    def size(self) -> int:
        return self.src.size(0)

    @property
    def ntokens(self) -> int:
        return int((self.tgt_out != PAD).sum()) if self.tgt_out is not None else 0


def pad_ids(seqs: Sequence[Sequence[int]]) -> torch.Tensor:
    longest = max(len(s) for s in seqs)
    out = torch.full((len(seqs), longest), PAD, dtype=torch.long)
    for row, seq in enumerate(seqs):
        out[row, :len(seq)] = torch.as_tensor(list(seq), dtype=torch.long)
    return out


def collate(pairs: Sequence[EncodedPair], indices: Optional[List[int]] = None) -> Batch:
    src = pad_ids([p.src for p in pairs])
    if any(p.tgt is None for p in pairs):
        return Batch(src=src, indices=indices)
    tgt = pad_ids([p.tgt for p in pairs])
    return Batch(src=src, tgt_in=tgt[:, :-1], tgt_out=tgt[:, 1:], indices=indices)


class TokenBatchSampler(Sampler):
    """Length-bucketed batches of pair indices under a padded-token budget.

    A batch costs `len(batch) * max(longest src, longest tgt)`. Pairs are
    shuffled with the seed, ordered by length (ties keep shuffled order),
    packed greedily, and the batch order is shuffled again.
    """

    def __init__(self, lengths: Sequence[int], tokens_per_batch: int, seed: int = 0):
        self.lengths = list(lengths)
        self.tokens_per_batch = tokens_per_batch
        self.seed = seed
        for i, length in enumerate(self.lengths):
            if length > tokens_per_batch:
                raise BatchingError(
                    f"pair {i} has length {length}, exceeding tokens_per_batch={tokens_per_batch}"
                )

    def batches(self, epoch: int = 0) -> List[List[int]]:
        rng = np.random.default_rng([self.seed, epoch])
        order = rng.permutation(len(self.lengths)).tolist()
        order.sort(key=lambda i: self.lengths[i])

        batches, current, longest = [], [], 0
        for idx in order:
            length = self.lengths[idx]
            widest = max(longest, length)
            if current and (len(current) + 1) * widest > self.tokens_per_batch:
                batches.append(current)
                current, widest = [], length
            current.append(idx)
            longest = widest
        if current:
            batches.append(current)
        return [batches[i] for i in rng.permutation(len(batches))]

    def __iter__(self) -> Iterator[List[int]]:
        return iter(self.batches())

    def __len__(self) -> int:
        return len(self.batches())


def make_batches(pairs: Sequence[EncodedPair], tokens_per_batch: int, seed: int, epoch: int = 0) -> List[Batch]:
    """One epoch of padded batches; every pair appears exactly once."""
    sampler = TokenBatchSampler([p.max_len for p in pairs], tokens_per_batch, seed)
    return [collate([pairs[i] for i in idx], idx) for idx in sampler.batches(epoch)]


def epochs(pairs: Sequence[EncodedPair], tokens_per_batch: int, seed: int) -> Iterator[Batch]:
    """Endless stream of batches, reshuffled each epoch."""
    sampler = TokenBatchSampler([p.max_len for p in pairs], tokens_per_batch, seed)
    epoch = 0
    while True:
        for idx in sampler.batches(epoch):
            yield collate([pairs[i] for i in idx], idx)
        epoch += 1


_DONE = object()


def prefetch(batches: Iterable[Batch], size: int = 2) -> Iterator[Batch]:
    """Prepare batches on a background thread, holding at most `size` ready.

    Order is preserved. Producer exceptions are re-raised in the consumer.
    A `size` of 0 iterates inline.
    """
    if size <= 0:
        yield from batches
        return

    buffer: queue.Queue = queue.Queue(maxsize=size)
    stop = threading.Event()

    def produce():
        try:
            for batch in batches:
                while not stop.is_set():
                    try:
                        buffer.put(batch, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if stop.is_set():
                    return
            buffer.put(_DONE)
        except BaseException as e:
            buffer.put(e)

    worker = threading.Thread(target=produce, daemon=True)
    worker.start()
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
