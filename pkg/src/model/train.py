"""Training loop: teacher forcing, noam schedule, dev PER model selection."""

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F
from pydantic import BaseModel
from tqdm import tqdm

from config import Config
from src.codec.codec import EncodedPair, decode_target, encode_entry, encode_source
from src.core.corpus import PronunciationEntry
from src.core.vocab import PAD, Vocab, build_vocab
from src.metrics.rates import per
from src.model.batching import Batch, epochs, prefetch
from src.model.checkpoint import Checkpoint, save_checkpoint
from src.model.config import ModelConfig, TrainConfig
from src.model.decode import greedy_decode_batch
from src.model.transformer import PronunciationTransformer, count_parameters
from src.utils.exceptions import TrainingError
from src.utils.io import atomic_write
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

DEV_DECODE_BATCH = 64


def noam_lr(step: int, d_model: int, warmup: int) -> float:
    """d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    return d_model ** (-0.5) * min(step ** (-0.5), step * warmup ** (-1.5))


def seed_everything(seed: int, deterministic: bool = Config.DETERMINISTIC) -> None:
    random.seed(seed)
    np.random.seed(seed % 2 ** 32)
    torch.manual_seed(seed)
    torch.set_num_threads(Config.NUM_THREADS)
    if deterministic:
        torch.use_deterministic_algorithms(True)


class TrainLogRecord(BaseModel):
    step: int
    lr: float
    train_loss: float
    dev_per: Optional[float] = None


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    log: List[TrainLogRecord] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    best_step: int = 0
    best_dev_per: Optional[float] = None


def sequence_loss(logits: torch.Tensor, batch: Batch, label_smoothing: float) -> torch.Tensor:
    """Label-smoothed cross-entropy per non-PAD target token."""
    return F.cross_entropy(
        logits.reshape(-1, logits.size(-1)),
        batch.tgt_out.reshape(-1),
        ignore_index=PAD,
        label_smoothing=label_smoothing,
        reduction="sum",
    ) / max(1, batch.ntokens)


def dev_per(
    model: PronunciationTransformer,
    vocab: Vocab,
    entries: Sequence[PronunciationEntry],
    pairs: Sequence[EncodedPair]
) -> float:
    """Greedy-decoded PER over a dev set."""
    max_len = model.config.max_tgt_len + 1
    scored = []
    for start in range(0, len(pairs), DEV_DECODE_BATCH):
        chunk = pairs[start:start + DEV_DECODE_BATCH]
        results = greedy_decode_batch(model, [p.src for p in chunk], max_len)
        for entry, result in zip(entries[start:start + DEV_DECODE_BATCH], results):
            scored.append((entry.pron, decode_target(vocab, result.ids)))
    return per(scored)


class Trainer:
    """Owns the model and optimizer for one training run."""

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        vocab: Vocab,
        run_dir: Optional[Union[str, Path]] = None,
        resume: Optional[Checkpoint] = None
    ):
        train_config.check_fits(model_config)
        self.model_config = model_config
        self.train_config = train_config
        self.vocab = vocab
        self.run_dir = Path(run_dir) if run_dir else None

        seed_everything(train_config.seed)
        self.model = PronunciationTransformer(model_config, vocab.source_size, vocab.target_size)
        self.start_step = 0
        if resume is not None:
            if resume.vocab != vocab:
                raise TrainingError("checkpoint vocabulary differs from the training vocabulary", resume.step)
            self.model.load_state_dict(resume.params)
            resume.restore_rng()
            self.start_step = resume.step
            logger.info(f"Resuming from step {resume.step}")

        self.optimizer = torch.optim.Adam(
            self.model.parameters(),
            lr=1.0,
            betas=(train_config.adam_beta1, train_config.adam_beta2),
            eps=train_config.adam_eps,
        )
        # LambdaLR counts from 0; the schedule is defined from step 1
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(
            self.optimizer,
            lr_lambda=lambda i: train_config.lr_factor * noam_lr(
                self.start_step + i + 1, model_config.d_model, train_config.warmup_steps
            ),
        )
        logger.info(f"Model has {count_parameters(self.model)} trainable parameters")

    def _batches(self, pairs: Sequence[EncodedPair]) -> Iterator[Batch]:
        stream = epochs(pairs, self.train_config.tokens_per_batch, self.train_config.seed)
        # Replay the data order up to the resume point
        for _ in range(self.start_step):
            next(stream)
        return prefetch(stream, self.train_config.prefetch)

    def _save(self, name: str, step: int, meta: dict) -> Checkpoint:
        checkpoint = Checkpoint.from_model(self.model, self.vocab, step, meta)
        if self.run_dir is not None:
            save_checkpoint(self.run_dir / "checkpoints" / name, checkpoint)
        return checkpoint

    def _write_log(self, log: List[TrainLogRecord]) -> None:
        if self.run_dir is None:
            return
        with atomic_write(self.run_dir / "train_log.jsonl") as f:
            for record in log:
                f.write(json.dumps(record.model_dump()) + "\n")

    def train(
        self,
        corpus: Sequence[PronunciationEntry],
        dev_corpus: Sequence[PronunciationEntry] = ()
    ) -> TrainResult:
        if not corpus:
            raise TrainingError("training corpus is empty", 0)
        cfg = self.train_config
        pairs = [encode_entry(self.vocab, e) for e in corpus]
        # Dev targets are scored as phoneme strings, so only sources are encoded
        dev_pairs = [EncodedPair(src=encode_source(self.vocab, e.locale, e.text)) for e in dev_corpus]
        # Sources carry the locale tag; targets carry BOS and EOS
        too_long = [
            e.text for e, p in zip(list(corpus) + list(dev_corpus), pairs + dev_pairs)
            if len(p.src) > self.model_config.max_src_len + 1
            or (p.tgt is not None and len(p.tgt) > self.model_config.max_tgt_len + 2)
        ]
        if too_long:
            raise TrainingError(
                f"{len(too_long)} entries exceed max_src_len/max_tgt_len, e.g. {too_long[0]!r}", self.start_step
            )

        log: List[TrainLogRecord] = []
        losses: List[float] = []
        window: List[float] = []
        best: Optional[Checkpoint] = None
        best_per: Optional[float] = None
        best_step = 0

        self.model.train()
        batches = self._batches(pairs)
        progress = tqdm(
            total=cfg.max_steps,
            initial=self.start_step,
            desc="train",
            disable=None,
            leave=False,
        )
        try:
            for step in range(self.start_step + 1, cfg.max_steps + 1):
                batch = next(batches)
                lr = self.optimizer.param_groups[0]["lr"]
                logits = self.model(batch.src, batch.tgt_in)
                loss = sequence_loss(logits, batch, self.model_config.label_smoothing)
                value = float(loss.detach())
                if not math.isfinite(value):
                    raise TrainingError(f"non-finite loss {value}", step)

                self.optimizer.zero_grad()
                loss.backward()
                self.optimizer.step()
                self.scheduler.step()
                losses.append(value)
                window.append(value)
                progress.update(1)
                if step % cfg.log_every == 0:
                    progress.set_postfix(loss=f"{value:.4f}", lr=f"{lr:.2e}")

                if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                    self._save(f"step_{step}.ckpt", step, {"kind": "scheduled"})

                evaluate_now = cfg.dev_eval_every and step % cfg.dev_eval_every == 0
                if dev_pairs and (evaluate_now or step == cfg.max_steps):
                    score = dev_per(self.model, self.vocab, dev_corpus, dev_pairs)
                    self.model.train()
                    record = TrainLogRecord(step=step, lr=lr, train_loss=float(np.mean(window)), dev_per=score)
                    log.append(record)
                    window = []
                    self._write_log(log)
                    logger.info(f"step {step}: loss={record.train_loss:.4f} lr={lr:.2e} dev PER={score:.4f}")
                    # Ties keep the earlier step
                    if best_per is None or score < best_per:
                        best_per, best_step = score, step
                        best = Checkpoint.from_model(self.model, self.vocab, step, {"kind": "best", "dev_per": score})
        finally:
            progress.close()
            batches.close()

        final_step = max(self.start_step, cfg.max_steps)
        if best is None:
            best = Checkpoint.from_model(self.model, self.vocab, final_step, {"kind": "final"})
            best_step = final_step
        if self.run_dir is not None:
            save_checkpoint(self.run_dir / "checkpoints" / "best.ckpt", best)
        self.model.eval()
        return TrainResult(best, log, losses, best_step, best_per)


def train(
    model_config: ModelConfig,
    train_config: TrainConfig,
    corpus: Sequence[PronunciationEntry],
    dev_corpus: Sequence[PronunciationEntry] = (),
    run_dir: Optional[Union[str, Path]] = None,
    resume: Optional[Checkpoint] = None
) -> TrainResult:
    """Train a model on `corpus`; the returned checkpoint has the best dev PER seen."""
    if not corpus:
        raise TrainingError("training corpus is empty", 0)
    vocab = resume.vocab if resume is not None else build_vocab(corpus)
    logger.info(f"Vocabulary: {vocab.source_size} source, {vocab.target_size} target symbols")
    trainer = Trainer(model_config, train_config, vocab, run_dir, resume)
    return trainer.train(corpus, dev_corpus)
