from __future__ import annotations
import logging
import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import _errors
import config

log = logging.getLogger(__name__)


def frozen_array(raw: Any, dtype: type = np.float64) -> np.ndarray:
    """Copy raw into a one-dimensional read-only array."""
    arr = np.array(raw, dtype=dtype, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"expected a one-dimensional sequence, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


class Choice(StrEnum):
    choice1 = "choice1"
    choice2 = "choice2"
    choice3 = "choice3"
    mixed = "mixed"


class Norm(StrEnum):
    sup = "sup"
    integral = "integral"


class Benchmark_Kind(StrEnum):
    ar1 = "ar1"
    arch = "arch"


class Noise_Rule(StrEnum):
    unit = "unit"
    matched = "matched"


class Arch_Variant(StrEnum):
    literal = "literal"
    "sigma_t built from the same epsilon_t it multiplies"
    lagged = "lagged"
    "sigma_t built from epsilon_{t-1}"


class Match_Flag(StrEnum):
    converged = "converged"
    independent = "indistinguishable-from-independent"
    exceeds_bracket = "exceeds-bracket"
    non_monotone = "non-monotone"
    unconverged = "unconverged"


_LABELS: dict[Choice, str] = {
    Choice.choice1: "choice1:lag1-identity",
    Choice.choice2: "choice2:sign-lag1",
    Choice.choice3: "choice3:sign-exp",
    Choice.mixed: "mixed:sign-exp-identity",
}


class Functional_Pair(BaseModel):
    """A (h, F) choice; depth is the truncation d for the exponentially weighted sign history."""

    kind: Choice
    depth: float | None = None
    f_uses_lag: bool = False

    model_config = ConfigDict(frozen=True)

    @field_validator("depth", mode="before")
    def parse_depth(cls, raw: Any):
        if isinstance(raw, str) and raw.strip().lower() in {"inf", "infinity", "unbounded"}:
            return math.inf
        return raw

    @model_validator(mode="after")
    def check_depth(self) -> Functional_Pair:
        weighted = self.kind in (Choice.choice3, Choice.mixed)
        if weighted and self.depth is None:
            raise ValueError(f"{self.kind} requires a depth (positive integer or inf)")
        if not weighted and self.depth is not None:
            raise ValueError(f"{self.kind} takes no depth")
        if self.depth is not None and not math.isinf(self.depth):
            if self.depth < 1 or self.depth != int(self.depth):
                raise ValueError(f"depth must be a positive integer or inf, got {self.depth}")
        if self.f_uses_lag and self.kind is not Choice.choice2:
            raise ValueError("f_uses_lag only applies to choice2")
        return self

    @property
    def is_unbounded(self) -> bool:
        return self.depth is not None and math.isinf(self.depth)

    @property
    def min_history(self) -> int:
        if self.depth is None:
            return 1
        if self.is_unbounded:
            return config.UNBOUNDED_HISTORY
        return int(self.depth)

    @property
    def label(self) -> str:
        return describe(self)

    @property
    def default_q_max(self) -> float:
        if self.kind in (Choice.choice1, Choice.mixed):
            return config.Q_MAX_IDENTITY
        return config.Q_MAX_SIGN

    @property
    def noise_rule(self) -> Noise_Rule:
        "F on the raw return scale needs benchmarks on the data's scale"
        if self.kind in (Choice.choice1, Choice.mixed):
            return Noise_Rule.matched
        return Noise_Rule.unit


def describe(pair: Functional_Pair) -> str:
    label = _LABELS[pair.kind]
    if pair.depth is not None:
        label += f":d={'inf' if pair.is_unbounded else int(pair.depth)}"
    if pair.f_uses_lag:
        label += ":f-lag"
    return label


def parse_pair(text: str) -> Functional_Pair:
    """Parse `choice1`, `choice3:d=5`, `mixed:d=inf` or a full label back into a Functional_Pair."""
    parts = [p.strip().lower() for p in text.split(":") if p.strip()]
    if not parts:
        raise _errors.Unparseable(f"empty functional pair: {text!r}")
    try:
        kind = Choice(parts[0])
    except ValueError:
        raise _errors.Unparseable(f"unknown functional pair {parts[0]!r}; expected one of {[c.value for c in Choice]}")
    body = _LABELS[kind].split(":", 1)[1]
    depth: str | None = None
    f_uses_lag = False
    for part in parts[1:]:
        if part.startswith("d="):
            depth = part[2:]
        elif part == "f-lag":
            f_uses_lag = True
        elif part != body:
            raise _errors.Unparseable(f"{text!r}: unknown segment {part!r}; expected d=<n|inf>, f-lag or {body}")
    if depth is None and kind in (Choice.choice3, Choice.mixed):
        depth = "inf"
    return Functional_Pair(kind=kind, depth=depth, f_uses_lag=f_uses_lag)  # type: ignore[arg-type]


class Q_Grid(BaseModel):
    q_max: float = Field(gt=0)
    n_points: int = Field(default=config.GRID_POINTS, ge=2)

    model_config = ConfigDict(frozen=True)

    @property
    def values(self) -> np.ndarray:
        return frozen_array(np.linspace(0.0, self.q_max, self.n_points))

    @classmethod
    def for_pair(cls, pair: Functional_Pair, q_max: float | None = None, n_points: int | None = None) -> Q_Grid:
        return cls(q_max=q_max or pair.default_q_max, n_points=n_points or config.GRID_POINTS)


class Benchmark_Spec(BaseModel):
    kind: Benchmark_Kind = Benchmark_Kind.ar1
    a: float
    b: float = 0.0
    c: float = 0.0
    noise_rule: Noise_Rule = Noise_Rule.unit
    variance: float | None = None
    "V, the target second moment for the matched rule"
    length: int = Field(gt=0)
    seed: int = Field(ge=0, lt=2**64)
    replication: int = Field(default=0, ge=0)
    arch_variant: Arch_Variant = Arch_Variant.literal
    burn_in: int = Field(default=0, ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_coefficients(self) -> Benchmark_Spec:
        if not abs(self.a) < 1:
            raise ValueError(f"|a| must be < 1, got a={self.a}")
        if self.kind is Benchmark_Kind.arch:
            if self.b < 0 or self.c < 0:
                raise ValueError(f"ARCH requires b >= 0 and c >= 0, got b={self.b} c={self.c}")
            if self.b == 0 and self.c == 0 and self.a == 0:
                raise ValueError("ARCH with a = b = c = 0 generates a constant series")
        if self.noise_rule is Noise_Rule.matched and not (self.variance and self.variance > 0):
            raise ValueError(f"matched noise rule requires V > 0, got {self.variance}")
        return self

    @property
    def is_plain_ar1(self) -> bool:
        "c = 0 reduces ARCH to AR(1); b = c = 0 is the unscaled AR(1)"
        return self.kind is Benchmark_Kind.ar1 or self.c == 0

    @property
    def innovation_variance(self) -> float:
        return innovation_variance(self)

    @property
    def label(self) -> str:
        body = f"a={self.a:g}"
        if self.kind is Benchmark_Kind.arch:
            body += f",b={self.b:g},c={self.c:g},{self.arch_variant}"
        body += f",{self.noise_rule}"
        if self.noise_rule is Noise_Rule.matched:
            body += f",V={self.variance:.6g}"
        return f"{self.kind}({body},seed={self.seed},r={self.replication})"


def innovation_variance(spec: Benchmark_Spec) -> float:
    """Variance of the innovation driving the recursion, for unit-variance epsilon."""
    if spec.kind is Benchmark_Kind.ar1 or (spec.b == 0 and spec.c == 0):
        return 1.0
    b, c = spec.b, spec.c
    if spec.arch_variant is Arch_Variant.literal:
        # E(b e + c e^3)^2 with E e^4 = 3, E e^6 = 15
        return b * b + 6 * b * c + 15 * c * c
    return b * b + 2 * b * c + 3 * c * c


class Match_Config(BaseModel):
    pair: Functional_Pair
    grid: Q_Grid
    norm: Norm = Norm.sup
    a_max: float = Field(default=config.A_MAX, ge=0, lt=1)
    "upper end of the [0, a_max] search bracket"
    tolerance: float = Field(default=config.TOLERANCE, gt=0)
    replications: int = Field(default=config.REPLICATIONS, ge=1)
    base_seed: int = Field(default=config.BASE_SEED, ge=0, lt=2**64)
    benchmark_kind: Benchmark_Kind = Benchmark_Kind.ar1
    arch_b: float = Field(default=0.0, ge=0)
    arch_c: float = Field(default=0.0, ge=0)
    arch_variant: Arch_Variant = Arch_Variant.literal
    length: int | None = Field(default=None, gt=0)
    "benchmark length; the observed pooled length when unset"
    coarse_step: float = Field(default=config.COARSE_STEP, gt=0)
    null_z: float = Field(default=config.NULL_Z, ge=0)
    max_iterations: int = Field(default=config.MAX_ITERATIONS, ge=1)
    burn_in: int = Field(default=0, ge=0)
    workers: int = Field(default=config.WORKERS, ge=1)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def for_pair(cls, pair: Functional_Pair, q_max: float | None = None, n_points: int | None = None, **kwargs) -> Match_Config:
        return cls(pair=pair, grid=Q_Grid.for_pair(pair, q_max, n_points), **kwargs)


# ECFmatch
