from __future__ import annotations
import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.integrate import trapezoid

import _errors
import config
from analysis._config import Norm, Q_Grid, frozen_array
from analysis._functionals import Paired_Sample
from analysis._benchmark import replication_stream

log = logging.getLogger(__name__)

ROUND_OFF = 1e-12


class ECF_Curve(BaseModel):
    grid: Q_Grid
    values: np.ndarray
    label: str = ""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("values", mode="before")
    def to_array(cls, raw):
        return frozen_array(raw)

    @model_validator(mode="after")
    def check_values(self) -> ECF_Curve:
        if self.values.size != self.grid.n_points:
            raise _errors.Invalid(f"{self.label}: {self.values.size} values for {self.grid.n_points} grid points")
        if self.values.size and (self.values.min() < 0 or self.values.max() > 2 + ROUND_OFF):
            raise _errors.Invalid(f"{self.label}: values outside [0, 2]")
        if abs(self.values[0]) > ROUND_OFF:
            raise _errors.Invalid(f"{self.label}: value at q=0 is {self.values[0]}, expected 0")
        return self

    @property
    def q(self) -> np.ndarray:
        return self.grid.values


class Null_Band(BaseModel):
    observed: float
    draws: np.ndarray
    "norms of the shuffled samples"

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("draws", mode="before")
    def to_array(cls, raw):
        return frozen_array(raw)

    @property
    def p_value(self) -> float:
        exceed = int((self.draws >= self.observed).sum())
        return (exceed + 1) / (self.draws.size + 1)

    def quantile(self, level: float) -> float:
        return float(np.quantile(self.draws, level))

    @property
    def rank(self) -> float:
        "share of draws strictly below the observed norm"
        return float((self.draws < self.observed).mean())


def ecf_values(h: np.ndarray, f: np.ndarray, q: np.ndarray) -> np.ndarray:
    """|E cis(qh) E cis(qF) - E cis(q(h+F))| at every q, q may be negative.

    Identical (h, F) pairs are collapsed with counts first; sums run along the
    contiguous axis so numpy's pairwise summation fixes the order.
    """
    h = np.asarray(h, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if h.size == 0:
        raise _errors.NotEnough("ECF of an empty sample")
    if h.size != f.size:
        raise _errors.Invalid(f"{h.size} h values for {f.size} F values")

    unique, counts = np.unique(np.column_stack((h, f)), axis=0, return_counts=True)
    hu = unique[:, 0]
    fu = unique[:, 1]
    weights = counts.astype(np.float64)
    n = float(h.size)

    out = np.empty(q.size)
    block = max(1, config.ECF_CHUNK // hu.size)
    for start in range(0, q.size, block):
        qb = q[start : start + block, None]
        cis_h = np.exp(1j * (qb * hu))
        cis_f = np.exp(1j * (qb * fu))
        mean_h = (cis_h * weights).sum(axis=1) / n
        mean_f = (cis_f * weights).sum(axis=1) / n
        joint = (cis_h * cis_f * weights).sum(axis=1) / n
        out[start : start + block] = np.abs(mean_h * mean_f - joint)
    return out


def compute_ecf_curve(pairs: Paired_Sample, grid: Q_Grid, label: str | None = None) -> ECF_Curve:
    if pairs.count < 1:
        raise _errors.NotEnough("compute_ecf_curve needs at least one pair")
    values = ecf_values(pairs.h_values, pairs.f_values, grid.values)
    return ECF_Curve(grid=grid, values=values, label=pairs.label if label is None else label)


def sup_norm(curve: ECF_Curve) -> float:
    return float(curve.values.max())


def integral_norm(curve: ECF_Curve) -> float:
    "trapezoidal integral over [0, q_max]"
    return float(trapezoid(curve.values, curve.q))


def curve_norm(curve: ECF_Curve, norm: Norm) -> float:
    if norm is Norm.integral:
        return integral_norm(curve)
    return sup_norm(curve)


def mean_curve(curves: Sequence[ECF_Curve], label: str) -> ECF_Curve:
    if not curves:
        raise _errors.NotEnough("mean_curve needs at least one curve")
    grid = curves[0].grid
    for curve in curves[1:]:
        if curve.grid != grid:
            raise _errors.Invalid(f"{curve.label}: grid {curve.grid} differs from {grid}")
    return ECF_Curve(grid=grid, values=np.mean([c.values for c in curves], axis=0), label=label)


def permutation_null(
    pairs: Paired_Sample,
    grid: Q_Grid,
    n_shuffles: int = 200,
    seed: int = config.BASE_SEED,
    norm: Norm = Norm.sup,
) -> Null_Band:
    """Norms of curves with F shuffled against h, the independence reference for one sample."""
    observed = curve_norm(compute_ecf_curve(pairs, grid), norm)
    rng = replication_stream(seed, 0)
    draws = np.empty(n_shuffles)
    for idx in range(n_shuffles):
        shuffled = rng.permutation(pairs.f_values)
        draws[idx] = curve_norm(ECF_Curve(grid=grid, values=ecf_values(pairs.h_values, shuffled, grid.values)), norm)
    log.debug(f"Permutation null {pairs.label}: observed={observed:.6g} draws={n_shuffles}")
    return Null_Band(observed=observed, draws=draws)


def curve_frame(curves: Sequence[ECF_Curve]) -> pd.DataFrame:
    """Long format, columns q, value, label."""
    return pd.concat(
        [pd.DataFrame({"q": c.q, "value": c.values, "label": c.label}) for c in curves],
        ignore_index=True,
    )


# ECFmatch
