"""Evaluation reports and their line-delimited JSON form."""

import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from pydantic import BaseModel, Field, field_validator

from src.utils.exceptions import CorpusFormatError
from src.utils.io import atomic_write, read_lines
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class EvalRecord(BaseModel):
    """One (locale, test set, metric) measurement; field order is the serialized order."""

    locale: str
    test_set: str
    name: str
    value: float
    evaluated: int = Field(ge=0)
    skipped: int = Field(default=0, ge=0)

    @field_validator("value")
    @classmethod
    def value_must_be_finite(cls, v):
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("metric value must be finite")
        return v

    @property
    def key(self):
        return self.locale, self.test_set, self.name


class TaskMetric(BaseModel):
    """One task-level score (an accuracy or an error rate) with its case counts."""

    value: float = Field(ge=0.0)
    evaluated: int = Field(ge=0)
    skipped: int = Field(default=0, ge=0)


class EvalReport(BaseModel):
    """Metrics for one locale on one test set."""

    locale: str
    test_set: str
    items: int = Field(ge=0)
    per: Optional[float] = Field(default=None, ge=0.0)
    wer: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    ser: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    task_metrics: Dict[str, TaskMetric] = Field(default_factory=dict)

    def records(self) -> List[EvalRecord]:
        out = []
        for name in ("per", "wer", "ser"):
            value = getattr(self, name)
            if value is not None:
                out.append(EvalRecord(
                    locale=self.locale, test_set=self.test_set, name=name,
                    value=value, evaluated=self.items, skipped=0,
                ))
        for name in sorted(self.task_metrics):
            metric = self.task_metrics[name]
            out.append(EvalRecord(
                locale=self.locale, test_set=self.test_set, name=name,
                value=metric.value, evaluated=metric.evaluated, skipped=metric.skipped,
            ))
        return out


def sort_records(records: Iterable[EvalRecord]) -> List[EvalRecord]:
    return sorted(records, key=lambda r: r.key)


def write_report(path: Union[str, Path], records: Iterable[EvalRecord]) -> None:
    records = sort_records(records)
    with atomic_write(path) as f:
        for record in records:
            f.write(json.dumps(record.model_dump(), ensure_ascii=False) + "\n")
    logger.info(f"Wrote {len(records)} evaluation records to {path}")


def read_report(path: Union[str, Path]) -> List[EvalRecord]:
    records = []
    for line_number, line in read_lines(path):
        if not line.strip():
            continue
        try:
            records.append(EvalRecord.model_validate_json(line))
        except ValueError as e:
            raise CorpusFormatError(f"{path}: invalid evaluation record: {e}", line_number) from e
    return records
