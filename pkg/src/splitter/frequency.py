"""Word frequency tables and the nearest-rank percentile cap."""

import math
from pathlib import Path
from typing import Dict, Iterable, Iterator, Mapping, Optional, Union

from src.utils.exceptions import CorpusFormatError
from src.utils.io import read_lines
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class FrequencyTable(Mapping[str, int]):
    """Word counts with total lookup: unknown words count 0."""

    def __init__(self, counts: Optional[Mapping[str, int]] = None):
        self._counts: Dict[str, int] = {}
        for word, count in (counts or {}).items():
            if count < 0:
                raise ValueError(f"negative frequency for {word!r}: {count}")
            self._counts[word] = int(count)

    def __getitem__(self, word: str) -> int:
        return self._counts.get(word, 0)

    def __iter__(self) -> Iterator[str]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "FrequencyTable":
        """Read `word<TAB>count` lines."""
        counts = {}
        for line_number, line in read_lines(path):
            if not line.strip() or line.startswith("#"):
                continue
            word, sep, count = line.partition("\t")
            if not sep or not count.strip().isdigit():
                raise CorpusFormatError(f"{path}: expected word<TAB>count", line_number)
            counts[word] = int(count)
        logger.info(f"Loaded {len(counts)} word frequencies from {path}")
        return cls(counts)


def nearest_rank_percentile(values: Iterable[int], percentile: float) -> int:
    """Smallest value v such that at least `percentile`% of values are <= v."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("percentile of an empty collection")
    if not 0 < percentile <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    rank = max(1, math.ceil(percentile / 100 * len(ordered)))
    return ordered[rank - 1]
