"""Competing-risks data model, CSV round-tripping, and the Kaplan-Meier estimator."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


class Cause(enum.Enum):
    """Outcome of one unit: failure mode 1, mode 2, a tied failure, or censoring."""

    MODE1 = "1"
    MODE2 = "2"
    TIE = "tie"
    CENSORED = "censored"

    @classmethod
    def from_label(cls, label: str) -> "Cause":
        key = label.strip().lower()
        for cause in cls:
            if cause.value == key:
                return cause
        raise DataError(f"unknown cause label {label!r} (expected 1, 2, tie, or censored)")


@dataclass(frozen=True)
class Record:
    """One observed unit: lifetime (or censoring time) and its cause."""

    time: float
    cause: Cause

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time > 0.0):
            raise DataError(f"record time must be positive and finite, got {self.time!r}")

    @property
    def indicators(self):
        """(delta0, delta1, delta2); all zero means right censored."""
        return (
            int(self.cause is Cause.TIE),
            int(self.cause is Cause.MODE1),
            int(self.cause is Cause.MODE2),
        )


class Dataset:
    """Immutable collection of records with derived summary counts and arrays."""

    def __init__(self, records):
        records = tuple(records)
        if not records:
            raise DataError("dataset must contain at least one record")
        self.records = records
        self.times = np.array([r.time for r in records], dtype=float)
        self._codes = np.array([list(Cause).index(r.cause) for r in records], dtype=np.int8)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def m0(self) -> int:
        return int(np.count_nonzero(self._codes == 2))

    @property
    def m1(self) -> int:
        return int(np.count_nonzero(self._codes == 0))

    @property
    def m2(self) -> int:
        return int(np.count_nonzero(self._codes == 1))

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(self._codes == 3))

    @property
    def n_failures(self) -> int:
        return self.n - self.n_censored

    def times_for(self, cause: Cause) -> np.ndarray:
        return self.times[self._codes == list(Cause).index(cause)]

    @cached_property
    def sum_log_times_mode1(self) -> float:
        return float(np.log(self.times_for(Cause.MODE1)).sum())

    @cached_property
    def sum_log_times_mode2(self) -> float:
        return float(np.log(self.times_for(Cause.MODE2)).sum())

    @property
    def is_event(self) -> np.ndarray:
        return self._codes != 3

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        return isinstance(other, Dataset) and self.records == other.records

    def __repr__(self):
        return (
            f"Dataset(n={self.n}, m0={self.m0}, m1={self.m1}, "
            f"m2={self.m2}, censored={self.n_censored})"
        )


def parse_csv(source) -> Dataset:
    """Parse ``time,cause`` CSV text (string, bytes, or file-like) into a Dataset.

    Lines starting with ``#`` are comments. Cause labels are 1, 2, tie and
    censored (case-insensitive); a bare 0 is rejected to avoid the ambiguity
    between ties and censoring.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\r\n") for line in source]

    numbered = [
        (i, line) for i, line in enumerate(lines, start=1) if line.strip() and not line.lstrip().startswith("#")
    ]
    if not numbered:
        raise DataError("empty input: no header row found")

    header_no, header = numbered[0]
    header_fields = [f.strip().lower() for f in next(csv.reader([header]))]
    if header_fields != ["time", "cause"]:
        raise DataError(f"line {header_no}: expected header 'time,cause', got {header!r}")

    records = []
    for line_no, line in numbered[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != 2:
            raise DataError(f"line {line_no}: expected 2 fields, got {len(fields)}")
        raw_time, raw_cause = fields[0].strip(), fields[1].strip()
        try:
            time = float(raw_time)
        except ValueError:
            raise DataError(f"line {line_no}: cannot parse time {raw_time!r}") from None
        if not (math.isfinite(time) and time > 0.0):
            raise DataError(f"line {line_no}: time must be positive and finite, got {raw_time}")
        if raw_cause == "0":
            raise DataError(f"line {line_no}: cause '0' is ambiguous; use 'tie' or 'censored'")
        try:
            cause = Cause.from_label(raw_cause)
        except DataError as exc:
            raise DataError(f"line {line_no}: {exc}") from None
        records.append(Record(time, cause))

    if not records:
        raise DataError("empty dataset: no data rows")
    return Dataset(records)


def serialize(data: Dataset) -> str:
    """Write a Dataset back to the CSV schema accepted by :func:`parse_csv`."""
    out = io.StringIO()
    out.write("time,cause\n")
    for record in data:
        out.write(f"{record.time:.12g},{record.cause.value}\n")
    return out.getvalue()


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function that is 1 left of the first jump."""

    jump_times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.jump_times) != len(self.values):
            raise ValueError("jump_times and values must have equal length")
        times = np.asarray(self.jump_times, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if len(times) and (np.any(np.diff(times) <= 0.0) or times[0] <= 0.0):
            raise ValueError("jump times must be strictly increasing and positive")
        if len(vals) and (np.any(np.diff(vals) > 1e-15) or vals[0] > 1.0 or np.any(vals < 0.0)):
            raise ValueError("values must be non-increasing within [0, 1]")

    def __call__(self, t):
        times = np.asarray(self.jump_times, dtype=float)
        vals = np.concatenate(([1.0], np.asarray(self.values, dtype=float)))
        idx = np.searchsorted(times, np.asarray(t, dtype=float), side="right")
        result = vals[idx]
        return float(result) if np.isscalar(t) or np.asarray(t).ndim == 0 else result


def kaplan_meier(data: Dataset) -> StepFunction:
    """Product-limit survival estimate, ignoring the failure mode.

    Any non-censored record counts as a failure. When a failure and a
    censoring share a time, the failure is taken to happen first, so the
    censored unit still counts as at risk for that failure.
    """
    times = data.times
    events = data.is_event
    failure_times = np.unique(times[events])
    jump_times = []
    values = []
    surv = 1.0
    for t in failure_times:
        at_risk = int(np.count_nonzero(times >= t))
        d = int(np.count_nonzero(events & (times == t)))
        surv *= 1.0 - d / at_risk
        jump_times.append(float(t))
        values.append(surv)
    return StepFunction(tuple(jump_times), tuple(values))
