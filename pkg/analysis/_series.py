from __future__ import annotations
import logging
import math
from collections.abc import Iterable, Sequence
from datetime import date
from pathlib import Path

import anyio
import numpy as np
import pandas as pd
from dateutil.parser import isoparse
from pydantic import BaseModel, ConfigDict, computed_field, field_validator, model_validator

import _errors
import config
from _utils import Utilities
from analysis._config import frozen_array
import sys

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

log = logging.getLogger(__name__)


class Csv_Schema(BaseModel):
    date_column: str = config.DATE_COLUMN
    price_column: str = config.PRICE_COLUMN

    model_config = ConfigDict(frozen=True, str_strip_whitespace=True)


class Price_Series(BaseModel):
    id: str
    timestamps: np.ndarray
    "datetime64[D], strictly increasing"
    prices: np.ndarray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("timestamps", mode="before")
    def to_dates(cls, raw):
        return frozen_array(raw, dtype="datetime64[D]")

    @field_validator("prices", mode="before")
    def to_prices(cls, raw):
        return frozen_array(raw)

    @model_validator(mode="after")
    def check_invariants(self) -> Price_Series:
        if self.prices.size < 2:
            raise _errors.NotEnough(f"{self.id}: at least 2 prices required, got {self.prices.size}")
        if self.timestamps.size != self.prices.size:
            raise _errors.Invalid(f"{self.id}: {self.timestamps.size} timestamps for {self.prices.size} prices")
        bad = np.flatnonzero(~(self.prices > 0) | ~np.isfinite(self.prices))
        if bad.size:
            idx = int(bad[0])
            raise _errors.NotPositive(f"{self.id}: price {self.prices[idx]} at index {idx} must be finite and > 0")
        steps = np.diff(self.timestamps).astype(np.int64)
        if (steps <= 0).any():
            idx = int(np.flatnonzero(steps <= 0)[0]) + 1
            raise _errors.Invalid(f"{self.id}: timestamps not strictly increasing at index {idx}")
        return self

    def __len__(self) -> int:
        return int(self.prices.size)


class Return_Series(BaseModel):
    id: str
    returns: np.ndarray
    timestamps: np.ndarray | None = None
    "date of R_t, i.e. the later of the two prices"

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("returns", mode="before")
    def to_returns(cls, raw):
        return frozen_array(raw)

    @field_validator("timestamps", mode="before")
    def to_dates(cls, raw):
        return None if raw is None else frozen_array(raw, dtype="datetime64[D]")

    @model_validator(mode="after")
    def check_finite(self) -> Return_Series:
        bad = np.flatnonzero(~np.isfinite(self.returns))
        if bad.size:
            raise _errors.Invalid(f"{self.id}: non-finite return at index {int(bad[0])}")
        if self.timestamps is not None and self.timestamps.size != self.returns.size:
            raise _errors.Invalid(f"{self.id}: {self.timestamps.size} timestamps for {self.returns.size} returns")
        return self

    def __len__(self) -> int:
        return int(self.returns.size)


class Sample_Set(BaseModel):
    """Several return series pooled without merging their histories."""

    series: tuple[Return_Series, ...]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_ids(self) -> Sample_Set:
        if not self.series:
            raise _errors.NotEnough("a sample needs at least one series")
        seen: set[str] = set()
        for entry in self.series:
            if entry.id in seen:
                raise _errors.Duplicate(f"duplicate series id: {entry.id}")
            seen.add(entry.id)
        return self

    @computed_field
    @property
    def total_len(self) -> int:
        return sum(len(s) for s in self.series)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.series]

    @property
    def second_moment(self) -> float:
        "V, the pooled sample second moment of the returns"
        total = sum(float(np.dot(s.returns, s.returns)) for s in self.series)
        return total / self.total_len

    def get(self, ident: str) -> Return_Series:
        for entry in self.series:
            if entry.id == ident:
                return entry
        raise KeyError(ident)


def prices_to_returns(p: Price_Series) -> Return_Series:
    """R_t = S_t / S_{t-1} - 1."""
    if len(p) < 2:
        raise _errors.NotEnough(f"{p.id}: at least 2 prices required")
    if (p.prices <= 0).any():
        idx = int(np.flatnonzero(p.prices <= 0)[0])
        raise _errors.NotPositive(f"{p.id}: non-positive price at index {idx}")
    returns = p.prices[1:] / p.prices[:-1] - 1.0
    return Return_Series(id=p.id, returns=returns, timestamps=p.timestamps[1:])


def returns_to_prices(r: Return_Series, s0: float) -> np.ndarray:
    """Rebuild S_0..S_n from R_1..R_n and the starting price."""
    return s0 * np.concatenate(([1.0], np.cumprod(1.0 + r.returns)))


def _parse_price(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"non-finite price {raw!r}")
    return value


def load_csv(path: Path, schema: Csv_Schema | None = None, series_id: str | None = None) -> Price_Series:
    """Read one price file; rows are sorted by date, duplicate or missing values are rejected."""
    schema = schema or Csv_Schema()
    path = Path(path)
    if not path.is_file():
        raise _errors.Missing(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.ParserError as xcp:
        raise _errors.Unparseable(f"{path}: {xcp}")
    except pd.errors.EmptyDataError:
        raise _errors.Unparseable(f"{path}: empty file, header row required")

    for column in (schema.date_column, schema.price_column):
        if column not in frame.columns:
            raise _errors.Unparseable(f"{path}: missing column {column!r}, found {list(frame.columns)}")

    # file line of every row, header is line 1
    frame = frame.fillna("")
    frame.index = pd.RangeIndex(2, len(frame) + 2)
    blank = np.array([not "".join(row).strip() for row in frame.itertuples(index=False)], dtype=bool)
    frame = frame[~blank]

    dates: list[date] = []
    prices: list[float] = []
    first_seen: dict[date, int] = {}
    for line, raw_date, raw_price in zip(frame.index, frame[schema.date_column], frame[schema.price_column]):
        try:
            day = isoparse(raw_date.strip()).date()
        except (ValueError, OverflowError) as xcp:
            raise _errors.Unparseable(f"{path}:{line}: unparseable date {raw_date!r}: {xcp}")
        try:
            price = _parse_price(raw_price.strip())
        except ValueError as xcp:
            raise _errors.Unparseable(f"{path}:{line}: unparseable price {raw_price!r}: {xcp}")
        if price <= 0:
            raise _errors.NotPositive(f"{path}:{line}: price {raw_price!r} must be > 0")
        if day in first_seen:
            raise _errors.Duplicate(f"{path}:{line}: duplicate date {day} (first on line {first_seen[day]})")
        first_seen[day] = line
        dates.append(day)
        prices.append(price)

    order = np.argsort(np.array(dates, dtype="datetime64[D]"), kind="stable")
    log.debug(f"Loaded {len(prices)} rows from {path}")
    return Price_Series(
        id=series_id or path.stem,
        timestamps=np.array(dates, dtype="datetime64[D]")[order],
        prices=np.array(prices)[order],
    )


async def load_many(paths: Sequence[Path], schema: Csv_Schema | None = None, limiter: anyio.CapacityLimiter | None = None) -> list[Price_Series]:
    """Load several files concurrently; results keep the order of paths."""
    loaded: list[Price_Series | None] = [None] * len(paths)

    async def _load(idx: int, path: Path):
        loaded[idx] = await anyio.to_thread.run_sync(load_csv, path, schema, limiter=limiter)

    try:
        async with anyio.create_task_group() as tg:
            for idx, path in enumerate(paths):
                tg.start_soon(_load, idx, Path(path))
    except BaseExceptionGroup as group:
        raise Utilities.first_cause(group)
    return [entry for entry in loaded if entry is not None]


def pool(series: Iterable[Return_Series]) -> Sample_Set:
    return Sample_Set(series=tuple(series))


# ECFmatch
