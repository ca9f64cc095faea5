from __future__ import annotations
import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.signal import lfilter

import _errors
from analysis._config import Arch_Variant, Benchmark_Kind, Benchmark_Spec, Noise_Rule, frozen_array
from analysis._series import Return_Series

log = logging.getLogger(__name__)

Noise_Source = Callable[[np.random.Generator, int], np.ndarray]
"draws n iid zero-mean, unit-variance innovations"


def standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


class Synthetic_Series(BaseModel):
    values: np.ndarray
    spec: Benchmark_Spec
    noise_second_moment: float
    "sample E eps^2 of the unit innovations drawn"

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("values", mode="before")
    def to_array(cls, raw):
        return frozen_array(raw)

    @model_validator(mode="after")
    def check_length(self) -> Synthetic_Series:
        if self.values.size != self.spec.length:
            raise _errors.Invalid(f"{self.spec.label}: {self.values.size} values, expected {self.spec.length}")
        return self


def replication_stream(base_seed: int, replication: int) -> np.random.Generator:
    """Counter-based stream for replication r, independent of every other (seed, r)."""
    sequence = np.random.SeedSequence(base_seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(sequence))


def noise_scale(spec: Benchmark_Spec) -> float:
    """Multiplier for the unit-noise series; the matched rule makes the stationary variance V."""
    if spec.noise_rule is Noise_Rule.unit:
        return 1.0
    variance = spec.variance or 0.0
    return math.sqrt((1.0 - spec.a * spec.a) * variance / spec.innovation_variance)


def _recursion(a: float, innovations: np.ndarray) -> np.ndarray:
    "x_t = a x_{t-1} + innovations_t from a zero state"
    return lfilter([1.0], [1.0, -a], innovations)


def generate(spec: Benchmark_Spec, noise: Noise_Source = standard_normal) -> Synthetic_Series:
    total = spec.length + spec.burn_in
    rng = replication_stream(spec.seed, spec.replication)
    eps = np.asarray(noise(rng, total), dtype=np.float64)
    if eps.shape != (total,):
        raise _errors.Invalid(f"noise source returned shape {eps.shape}, expected ({total},)")

    if spec.is_plain_ar1:
        # R_{-1} = 0, so R_0 = eps_0
        level = spec.b if spec.kind is Benchmark_Kind.arch and spec.b > 0 else 1.0
        values = _recursion(spec.a, level * eps)
    else:
        if spec.arch_variant is Arch_Variant.literal:
            sigma = spec.b + spec.c * eps * eps
        else:
            previous = np.concatenate(([0.0], eps[:-1]))
            sigma = spec.b + spec.c * previous * previous
        # R_0 = 0, R_{t+1} = a R_t + sigma_t eps_t
        values = np.concatenate(([0.0], _recursion(spec.a, sigma[:-1] * eps[:-1])))

    values = values[spec.burn_in :] * noise_scale(spec)
    return Synthetic_Series(values=values, spec=spec, noise_second_moment=float(np.mean(eps * eps)))


def to_return_series(s: Synthetic_Series) -> Return_Series:
    return Return_Series(id=s.spec.label, returns=s.values)


# ECFmatch
