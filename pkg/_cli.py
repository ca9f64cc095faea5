from __future__ import annotations
import argparse
import logging
import math
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
import typing
from pathlib import Path
from typing import Any, ClassVar

import anyio
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import _errors
import config
from _file import File_Utils
from _utils import Utilities
from analysis._config import (
    Arch_Variant,
    Benchmark_Kind,
    Functional_Pair,
    Match_Config,
    Noise_Rule,
    Norm,
    Q_Grid,
    parse_pair,
)
from analysis._series import Csv_Schema, Sample_Set, load_many, pool, prices_to_returns

log = logging.getLogger(__name__)

EFFECTIVE_CONFIG = "effective_config.toml"


class Run_Config(BaseModel):
    """Everything one run needs; a TOML file supplies it and flags of the same name override it."""

    inputs: list[Path] = []
    date_column: str = config.DATE_COLUMN
    price_column: str = config.PRICE_COLUMN
    output_dir: Path = Path("out")

    pairs: list[str] = ["choice1", "choice2", "choice3:d=inf"]
    q_max: float | None = Field(default=None, gt=0)
    "overrides every pair's default q range"
    n_points: int = Field(default=config.GRID_POINTS, ge=2)
    norm: Norm = Norm.sup

    a_max: float = Field(default=config.A_MAX, ge=0, lt=1)
    tolerance: float = Field(default=config.TOLERANCE, gt=0)
    replications: int = Field(default=config.REPLICATIONS, ge=1)
    base_seed: int = Field(default=config.BASE_SEED, ge=0, lt=2**64)
    coarse_step: float = Field(default=config.COARSE_STEP, gt=0)
    null_z: float = Field(default=config.NULL_Z, ge=0)
    max_iterations: int = Field(default=config.MAX_ITERATIONS, ge=1)
    null_shuffles: int = Field(default=0, ge=0)
    "permutation draws reported next to each match; 0 skips them"
    leave_one_out: bool = False
    "rematch every pair with each input series dropped in turn"

    a: float = 0.1
    "benchmark coefficient for curves and simulate"
    benchmark_kind: Benchmark_Kind = Benchmark_Kind.ar1
    arch_b: float = Field(default=0.0, ge=0)
    arch_c: float = Field(default=0.0, ge=0)
    arch_variant: Arch_Variant = Arch_Variant.literal
    noise_rule: Noise_Rule = Noise_Rule.unit
    variance: float | None = Field(default=None, gt=0)
    length: int | None = Field(default=None, gt=0)
    replication: int = Field(default=0, ge=0)
    burn_in: int = Field(default=0, ge=0)
    workers: int = Field(default=config.WORKERS, ge=1)

    model_config = ConfigDict(frozen=True, extra="forbid", use_attribute_docstrings=True)

    @field_validator("inputs")
    def check_inputs(cls, value: list[Path]) -> list[Path]:
        for path in value:
            if not path.is_file():
                raise _errors.Missing(f"{path}: input file not found")
        return value

    @field_validator("pairs")
    def check_pairs(cls, value: list[str]) -> list[str]:
        for text in value:
            parse_pair(text)
        return value

    @model_validator(mode="after")
    def check_coefficient(self) -> Run_Config:
        if not (math.isfinite(self.a) and abs(self.a) < 1):
            raise ValueError(f"|a| must be < 1, got a={self.a}")
        return self

    @property
    def functional_pairs(self) -> list[Functional_Pair]:
        return [parse_pair(text) for text in self.pairs]

    @property
    def csv_schema(self) -> Csv_Schema:
        return Csv_Schema(date_column=self.date_column, price_column=self.price_column)

    def match_config(self, pair: Functional_Pair) -> Match_Config:
        return Match_Config(
            pair=pair,
            grid=Q_Grid.for_pair(pair, self.q_max, self.n_points),
            norm=self.norm,
            a_max=self.a_max,
            tolerance=self.tolerance,
            replications=self.replications,
            base_seed=self.base_seed,
            benchmark_kind=self.benchmark_kind,
            arch_b=self.arch_b,
            arch_c=self.arch_c,
            arch_variant=self.arch_variant,
            length=self.length,
            coarse_step=self.coarse_step,
            null_z=self.null_z,
            max_iterations=self.max_iterations,
            burn_in=self.burn_in,
            workers=self.workers,
        )

    def effective(self) -> str:
        return tomli_w.dumps(self.model_dump(mode="json", exclude_none=True))

    @property
    def hash(self) -> str:
        return Utilities.config_hash(self.effective())


def read_toml(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise _errors.Missing(f"{path}: config file not found")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as xcp:
        raise _errors.Unparseable(f"{path}: {xcp}")


def load_run_config(path: Path | None, overrides: dict[str, Any] | None = None) -> Run_Config:
    raw = read_toml(path) | (overrides or {})
    cfg = Run_Config.model_validate(raw)
    log.debug(f"Run config {cfg.hash}: {raw}")
    return cfg


def _is_list(annotation: Any) -> bool:
    return typing.get_origin(annotation) in (list, tuple)


def add_config_flags(parser: argparse.ArgumentParser):
    """One --flag per Run_Config field; unset flags stay out of the namespace."""
    for name, field in Run_Config.model_fields.items():
        kwargs: dict[str, Any] = {"default": argparse.SUPPRESS, "dest": name}
        if _is_list(field.annotation):
            kwargs["nargs"] = "*"
        parser.add_argument(f"--{name}", help=field.description, **kwargs)


def overrides_from(namespace: argparse.Namespace) -> dict[str, Any]:
    return {name: value for name, value in vars(namespace).items() if name in Run_Config.model_fields}


class Run_Context:
    """Per-run state handed to a command."""

    def __init__(self, cfg: Run_Config):
        self.cfg = cfg
        self.files = File_Utils()
        self.config_hash = cfg.hash
        self.limiter = anyio.CapacityLimiter(cfg.workers)

    def header(self, label: str | None = None, extra: typing.Iterable[str] = ()) -> str:
        return self.files.provenance(self.config_hash, self.cfg.base_seed, label, extra)

    def out(self, name: str) -> Path:
        return self.cfg.output_dir / name

    async def write_effective(self) -> Path:
        return await self.files.write_text(self.out(EFFECTIVE_CONFIG), self.cfg.effective(), self.header("effective_config"))

    async def load_sample(self) -> Sample_Set:
        if not self.cfg.inputs:
            raise _errors.NotEnough("no input files configured; set inputs or pass --inputs")
        prices = await load_many(self.cfg.inputs, self.cfg.csv_schema, self.limiter)
        return pool(prices_to_returns(p) for p in prices)


class Command:
    name: ClassVar[str]
    description: ClassVar[str]

    def __init_subclass__(cls, name: str = "", description: str = "", **kwargs):
        super().__init_subclass__(**kwargs)
        if name:
            cls.name = name
            cls.description = description

    async def invoke(self, ctx: Run_Context) -> int:
        raise NotImplementedError


class Command_Group:
    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description
        self.commands: dict[str, type[Command]] = {}

    def register(self, cmd: type[Command]) -> type[Command]:
        if cmd.name in self.commands:
            raise _errors.Duplicate(f"command {cmd.name} registered twice")
        self.commands[cmd.name] = cmd
        return cmd

    def parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.name.lower(), description=self.description)
        parser.add_argument("--version", action="version", version=f"{config.NAME} {config.VERSION}")
        subs = parser.add_subparsers(dest="command", required=True)
        for name, cmd in self.commands.items():
            sub = subs.add_parser(name, help=cmd.description, description=cmd.description)
            sub.add_argument("--config", type=Path, default=config.DEFAULT_CONFIG, help="TOML run config")
            sub.add_argument("-debug", "--debug", action="store_true", help="debug logging")
            add_config_flags(sub)
        return parser


group_root = Command_Group(config.NAME, "Serial dependence via empirical characteristic functions")


# ECFmatch
