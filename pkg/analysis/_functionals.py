from __future__ import annotations
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, field_validator, model_validator
from scipy.signal import lfilter

import _errors
from analysis._config import Choice, Functional_Pair, describe, frozen_array
from analysis._series import Sample_Set

log = logging.getLogger(__name__)


class Paired_Sample(BaseModel):
    """Aligned (h(G_{t-1}), F(R_t)) values, concatenated across series."""

    h_values: np.ndarray
    f_values: np.ndarray
    label: str = ""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("h_values", "f_values", mode="before")
    def to_array(cls, raw):
        return frozen_array(raw)

    @model_validator(mode="after")
    def check_lengths(self) -> Paired_Sample:
        if self.h_values.size != self.f_values.size:
            raise _errors.Invalid(f"{self.h_values.size} h values for {self.f_values.size} F values")
        return self

    @computed_field
    @property
    def count(self) -> int:
        return int(self.h_values.size)


def _indicator(returns: np.ndarray) -> np.ndarray:
    "1{R > 0}; zero returns map to 0"
    return (returns > 0).astype(np.float64)


def sign_history(signs: np.ndarray, depth: float, start: int) -> np.ndarray:
    """h_t = sum_{k=1..d} 2^-k s_{t-k} for t = start..len-1.

    Unbounded depth sums over everything since the series start.
    """
    n = signs.size
    if np.isinf(depth):
        # y_t = (s_t + y_{t-1}) / 2 = sum_{k>=0} 2^-(k+1) s_{t-k}, so h_t = y_{t-1}
        running = lfilter([0.5], [1.0, -0.5], signs)
        return running[start - 1 : n - 1]
    d = int(depth)
    weights = 0.5 ** np.arange(1, d + 1)
    return np.convolve(signs, weights)[start - 1 : n - 1]


def _series_pairs(pair: Functional_Pair, returns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    need = pair.min_history
    if returns.size <= need:
        empty = np.empty(0)
        return empty, empty
    match pair.kind:
        case Choice.choice1:
            return returns[:-1], returns[1:]
        case Choice.choice2:
            signs = _indicator(returns)
            return signs[:-1], signs[:-1] if pair.f_uses_lag else signs[1:]
        case Choice.choice3:
            signs = _indicator(returns)
            return sign_history(signs, pair.depth, need), signs[need:]  # type: ignore[arg-type]
        case Choice.mixed:
            signs = _indicator(returns)
            return sign_history(signs, pair.depth, need), returns[need:]  # type: ignore[arg-type]
    raise _errors.Invalid(f"unsupported functional pair {pair.kind}")


def evaluate(pair: Functional_Pair, sample: Sample_Set) -> Paired_Sample:
    """Evaluate (h, F) on every series; histories never cross series boundaries."""
    h_parts: list[np.ndarray] = []
    f_parts: list[np.ndarray] = []
    for entry in sample.series:
        h, f = _series_pairs(pair, entry.returns)
        if not h.size:
            log.debug(f"{entry.id}: {len(entry)} returns, {pair.min_history} history needed; no pairs")
            continue
        h_parts.append(h)
        f_parts.append(f)
    if not h_parts:
        raise _errors.NotEnough(f"{describe(pair)}: no series longer than {pair.min_history} returns")
    return Paired_Sample(h_values=np.concatenate(h_parts), f_values=np.concatenate(f_parts), label=describe(pair))


# ECFmatch
