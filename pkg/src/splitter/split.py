"""Lemma-disjoint word splits with frequency-capped test sampling, and sentence splits."""

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.corpus import PronunciationEntry
from src.core.locale import Locale, parse_locale
from src.splitter.frequency import FrequencyTable, nearest_rank_percentile
from src.splitter.lemma import LemmaGroup
from src.utils.exceptions import CorpusFormatError, SplitError
from src.utils.io import atomic_write, read_lines
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

_QUOTA_EPSILON = 1e-9


class Partition(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


Ratios = Tuple[float, float, float]


@dataclass(frozen=True)
class SplitManifest:
    """Assignment of lemma groups to partitions.

    `assignment` is a sequence of (lemma, partition) pairs rather than a map so
    that a corrupted manifest (a lemma listed twice) stays representable.
    """

    locale: Locale
    assignment: Tuple[Tuple[str, Partition], ...]
    ratios: Ratios
    achieved: Ratios
    seed: int
    cap: int = 0
    drawn: Tuple[Tuple[str, Partition], ...] = field(default_factory=tuple)

    def partition_of(self, lemma: str) -> Optional[Partition]:
        for name, partition in self.assignment:
            if name == lemma:
                return partition
        return None

    def as_dict(self) -> Dict[str, Partition]:
        return dict(self.assignment)


@dataclass(frozen=True)
class SentenceSplit:
    train: Tuple[PronunciationEntry, ...]
    dev: Tuple[PronunciationEntry, ...]
    test: Tuple[PronunciationEntry, ...]
    seed: int


def check_ratios(ratios: Sequence[float]) -> Ratios:
    if len(ratios) != 3:
        raise SplitError(f"expected three ratios (train, dev, test), got {list(ratios)}")
    if any(r <= 0 for r in ratios):
        raise SplitError(f"ratios must be positive, got {list(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-6:
        raise SplitError(f"ratios must sum to 1, got {sum(ratios):.6f}")
    return float(ratios[0]), float(ratios[1]), float(ratios[2])


def sample_split(
    groups: Sequence[LemmaGroup],
    freqs: FrequencyTable,
    ratios: Sequence[float] = (0.85, 0.05, 0.10),
    seed: int = 0,
    percentile: float = 95.0
) -> SplitManifest:
    """Assign whole lemma groups to test, then dev, by drawing capped-frequency words.

    The cap is the nearest-rank percentile of the word-type frequencies. Each
    draw picks uniformly among eligible words whose group is still unassigned
    and moves that entire group; a partition stops at the first draw that
    reaches its quota, so overshoot is recorded rather than corrected.
    """
    ratios = check_ratios(ratios)
    if not groups:
        raise SplitError("cannot split an empty list of lemma groups")

    locale = groups[0].members[0].locale
    total = sum(g.size for g in groups)
    word_types = sorted({m.text for g in groups for m in g.members})
    cap = nearest_rank_percentile((freqs[w] for w in word_types), percentile)

    eligible = [
        (member.text, gi)
        for gi, group in enumerate(groups)
        for member in group.members
        if freqs[member.text] <= cap
    ]
    # Walking a random permutation and skipping assigned groups is a uniform
    # draw among the remaining eligible words at every step
    order = np.random.default_rng(seed).permutation(len(eligible))

    assignment: List[Optional[Partition]] = [None] * len(groups)
    counts = Counter()
    drawn = []
    cursor = 0
    for partition, ratio in ((Partition.TEST, ratios[2]), (Partition.DEV, ratios[1])):
        quota = ratio * total - _QUOTA_EPSILON
        while counts[partition] < quota:
            while cursor < len(order) and assignment[eligible[order[cursor]][1]] is not None:
                cursor += 1
            if cursor == len(order):
                raise SplitError(
                    f"{locale}: eligible pool exhausted while filling {partition.value}; "
                    f"achieved {counts[partition] / total:.4f} of requested {ratio:.4f} "
                    f"(relax the {percentile:g}th-percentile cap)"
                )
            word, gi = eligible[order[cursor]]
            cursor += 1
            assignment[gi] = partition
            counts[partition] += groups[gi].size
            drawn.append((word, partition))

    for gi, group in enumerate(groups):
        if assignment[gi] is None:
            assignment[gi] = Partition.TRAIN
            counts[Partition.TRAIN] += group.size

    achieved = tuple(counts[p] / total for p in (Partition.TRAIN, Partition.DEV, Partition.TEST))
    logger.info(
        f"{locale}: split {total} words into train/dev/test "
        f"{achieved[0]:.4f}/{achieved[1]:.4f}/{achieved[2]:.4f} (cap={cap})"
    )
    return SplitManifest(
        locale=locale,
        assignment=tuple((g.lemma, p) for g, p in zip(groups, assignment)),
        ratios=ratios,
        achieved=achieved,
        seed=seed,
        cap=cap,
        drawn=tuple(drawn),
    )


def split_sentences(
    entries: Sequence[PronunciationEntry],
    test_fraction: float,
    seed: int,
    dev_fraction: float = 0.0,
    group_key: Optional[Callable[[PronunciationEntry], Hashable]] = None
) -> SentenceSplit:
    """Uniform random sentence selection for test (1-10%) and optional dev.

    With `group_key`, entries sharing a key move together and the fractions
    count groups, so paired renderings of one sentence never straddle partitions.
    """
    if not 0.01 <= test_fraction <= 0.10:
        raise SplitError(f"sentence test fraction must be in [0.01, 0.10], got {test_fraction}")
    if not 0.0 <= dev_fraction <= 0.10:
        raise SplitError(f"sentence dev fraction must be in [0, 0.10], got {dev_fraction}")

    if group_key is None:
        unit_of = list(range(len(entries)))
    else:
        keys: Dict[Hashable, int] = {}
        unit_of = [keys.setdefault(group_key(entry), len(keys)) for entry in entries]
    n = len(set(unit_of))
    n_test = int(round(n * test_fraction))
    n_dev = int(round(n * dev_fraction))
    order = np.random.default_rng(seed).permutation(n)
    test_units = set(order[:n_test].tolist())
    dev_units = set(order[n_test:n_test + n_dev].tolist())

    train, dev, test = [], [], []
    for entry, unit in zip(entries, unit_of):
        if unit in test_units:
            test.append(entry)
        elif unit in dev_units:
            dev.append(entry)
        else:
            train.append(entry)
    return SentenceSplit(tuple(train), tuple(dev), tuple(test), seed)


def verify_split(manifest: SplitManifest, groups: Sequence[LemmaGroup]) -> List[str]:
    """Every violation of lemma-disjointness and coverage; empty when the split is sound."""
    violations = []
    by_lemma: Dict[str, List[Partition]] = defaultdict(list)
    for lemma, partition in manifest.assignment:
        by_lemma[lemma].append(partition)

    for lemma in sorted(by_lemma):
        partitions = by_lemma[lemma]
        if len(partitions) > 1:
            listed = ", ".join(p.value for p in partitions)
            violations.append(f"lemma {lemma!r} assigned {len(partitions)} times ({listed})")

    group_lemmas = {g.lemma for g in groups}
    for group in groups:
        if group.lemma not in by_lemma:
            violations.append(f"lemma {group.lemma!r} is not assigned")
    for lemma in sorted(set(by_lemma) - group_lemmas):
        violations.append(f"lemma {lemma!r} in manifest has no lemma group")

    # The same spelling must not land in two partitions through different lemmas;
    # lemmas listed more than once are already reported above
    word_partitions: Dict[str, set] = defaultdict(set)
    for group in groups:
        partitions = by_lemma.get(group.lemma, [])
        if len(partitions) != 1:
            continue
        for word in group.words:
            word_partitions[word].add(partitions[0])
    for word in sorted(word_partitions):
        if len(word_partitions[word]) > 1:
            listed = ", ".join(sorted(p.value for p in word_partitions[word]))
            violations.append(f"word {word!r} appears in several partitions ({listed})")
    return violations


def partition_entries(
    manifest: SplitManifest,
    groups: Sequence[LemmaGroup]
) -> Dict[Partition, List[PronunciationEntry]]:
    lookup = manifest.as_dict()
    parts: Dict[Partition, List[PronunciationEntry]] = {p: [] for p in Partition}
    for group in groups:
        parts[lookup[group.lemma]].extend(group.members)
    return parts


def _format_ratios(ratios: Sequence[float]) -> str:
    return ",".join(f"{r:.6g}" for r in ratios)


def write_manifest(path: Union[str, Path], manifest: SplitManifest) -> None:
    """Header line, then `lemma<TAB>partition` sorted by lemma."""
    with atomic_write(path) as f:
        f.write(
            f"# locale={manifest.locale} seed={manifest.seed} "
            f"ratios={_format_ratios(manifest.ratios)} "
            f"achieved={_format_ratios(manifest.achieved)} cap={manifest.cap}\n"
        )
        for lemma, partition in sorted(manifest.assignment, key=lambda item: item[0]):
            f.write(f"{lemma}\t{partition.value}\n")


def read_manifest(path: Union[str, Path]) -> SplitManifest:
    header: Dict[str, str] = {}
    assignment = []
    for line_number, line in read_lines(path):
        if not line.strip():
            continue
        if line.startswith("#"):
            for item in line.lstrip("#").split():
                key, _, value = item.partition("=")
                header[key] = value
            continue
        lemma, sep, partition = line.partition("\t")
        if not sep:
            raise CorpusFormatError(f"{path}: expected lemma<TAB>partition", line_number)
        try:
            assignment.append((lemma, Partition(partition.strip())))
        except ValueError as e:
            raise CorpusFormatError(f"{path}: unknown partition {partition!r}", line_number) from e

    missing = {"locale", "seed", "ratios"} - set(header)
    if missing:
        raise CorpusFormatError(f"{path}: manifest header lacks {sorted(missing)}")
    ratios = tuple(float(r) for r in header["ratios"].split(","))
    achieved = tuple(float(r) for r in header.get("achieved", header["ratios"]).split(","))
    return SplitManifest(
        locale=parse_locale(header["locale"]),
        assignment=tuple(assignment),
        ratios=ratios,
        achieved=achieved,
        seed=int(header["seed"]),
        cap=int(header.get("cap", 0)),
    )
