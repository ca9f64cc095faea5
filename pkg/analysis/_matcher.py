from __future__ import annotations
import logging
import math
from collections.abc import Callable, Iterable, Sequence
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
from typing import Literal

import anyio
import numpy as np
from pydantic import BaseModel, ConfigDict

import _errors
from _utils import Utilities
from analysis._benchmark import generate, to_return_series
from analysis._config import (
    Benchmark_Kind,
    Benchmark_Spec,
    Functional_Pair,
    Match_Config,
    Match_Flag,
    Q_Grid,
    frozen_array,
)
from analysis._ecf import ECF_Curve, compute_ecf_curve, curve_norm, mean_curve
from analysis._functionals import evaluate
from analysis._series import Sample_Set, pool
import sys

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

log = logging.getLogger(__name__)

Spec_Builder = Callable[[float, int], Benchmark_Spec]
"(probed value, replication index) -> benchmark spec"


class Norm_Stats(BaseModel):
    value: float
    mean: float
    std_error: float
    spread: float
    "sample standard deviation of the replication norms"
    curves: tuple[ECF_Curve, ...]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class Match_Step(BaseModel):
    a: float
    norm: float
    std_error: float
    phase: Literal["scan", "bisect"]

    model_config = ConfigDict(frozen=True)


class Match_Result(BaseModel):
    pair: Functional_Pair
    a_hat: float
    target_norm: float
    achieved_norm: float
    mc_std_error: float
    a_std_error: float
    "spread of a_hat over repeated samples: single-run norm spread over the local scan slope"
    flag: Match_Flag
    null_upper: float
    "norm above which the observed series is told apart from a = 0"
    iterations: tuple[Match_Step, ...]
    observed_curve: ECF_Curve
    benchmark_curve: ECF_Curve

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def usable(self) -> bool:
        return self.flag in (Match_Flag.converged, Match_Flag.independent)

    @property
    def label(self) -> str:
        return self.pair.label


class Pairs_Match(BaseModel):
    results: tuple[Match_Result, ...]
    a_tilde: float
    "supremum of |a_hat| over the usable pairs"
    best: str
    "label of the pair attaining a_tilde"

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class Verdict(StrEnum):
    stronger = "stronger"
    weaker = "weaker"
    indistinguishable = "indistinguishable"


class Strength_Verdict(BaseModel):
    a: float
    observed_norm: float
    benchmark_norm: float
    spread: float
    verdict: Verdict

    model_config = ConfigDict(frozen=True)


class Sign_Probe(BaseModel):
    a: float
    plus: float
    minus: float
    plus_error: float
    minus_error: float

    model_config = ConfigDict(frozen=True)

    @property
    def difference(self) -> float:
        return abs(self.plus - self.minus)

    @property
    def combined_error(self) -> float:
        return math.hypot(self.plus_error, self.minus_error)

    def within(self, errors: float = 3.0) -> bool:
        return self.difference <= errors * self.combined_error


class Arch_Point(BaseModel):
    a: float
    b: float
    c: float
    norm: float
    std_error: float
    noise_second_moment: float
    degenerate: bool = False

    model_config = ConfigDict(frozen=True)

    @property
    def c_relative(self) -> float:
        "c expressed as a multiple of E eps^2"
        return self.c / self.noise_second_moment if self.noise_second_moment else math.nan


class Arch_Scan(BaseModel):
    target_norm: float
    points: tuple[Arch_Point, ...]
    notes: tuple[str, ...] = ()

    model_config = ConfigDict(frozen=True)


def scan_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Evenly spaced points from lo to hi inclusive, spacing at most step."""
    if hi < lo:
        raise _errors.Invalid(f"empty bracket [{lo}, {hi}]")
    if hi == lo:
        return frozen_array([lo])
    count = max(1, math.ceil((hi - lo) / step - 1e-9))
    return frozen_array(np.linspace(lo, hi, count + 1))


class _Probe:
    """Monte Carlo norm of benchmark curves as a function of one scalar.

    Replication r always draws its innovations from (base_seed, r), so every
    probed value sees the same noise and results are cached per value.
    """

    def __init__(self, cfg: Match_Config, builder: Spec_Builder):
        self.cfg = cfg
        self.builder = builder
        self._cache: dict[float, Norm_Stats] = {}

    def _replicate(self, value: float, replication: int) -> ECF_Curve:
        spec = self.builder(value, replication)
        series = generate(spec)
        pairs = evaluate(self.cfg.pair, pool([to_return_series(series)]))
        return compute_ecf_curve(pairs, self.cfg.grid, label=spec.label)

    async def stats(self, value: float) -> Norm_Stats:
        value = float(value)
        if value in self._cache:
            return self._cache[value]
        count = self.cfg.replications
        curves: list[ECF_Curve | None] = [None] * count
        limiter = anyio.CapacityLimiter(self.cfg.workers)

        async def _one(replication: int):
            curves[replication] = await anyio.to_thread.run_sync(self._replicate, value, replication, limiter=limiter)

        try:
            async with anyio.create_task_group() as tg:
                for replication in range(count):
                    tg.start_soon(_one, replication)
        except BaseExceptionGroup as group:
            raise Utilities.first_cause(group)

        done = tuple(c for c in curves if c is not None)
        norms = np.array([curve_norm(c, self.cfg.norm) for c in done])
        spread = float(norms.std(ddof=1)) if count > 1 else 0.0
        result = Norm_Stats(
            value=value,
            mean=float(norms.mean()),
            std_error=spread / math.sqrt(count),
            spread=spread,
            curves=done,
        )
        self._cache[value] = result
        return result


def _benchmark_length(cfg: Match_Config, length: int | None) -> int:
    resolved = length or cfg.length
    if not resolved:
        raise _errors.Invalid("benchmark length unknown; set it in the match config")
    return resolved


def _ar_builder(cfg: Match_Config, data_V: float, length: int) -> Spec_Builder:
    rule = cfg.pair.noise_rule

    def build(a: float, replication: int) -> Benchmark_Spec:
        return Benchmark_Spec(
            kind=cfg.benchmark_kind,
            a=a,
            b=cfg.arch_b,
            c=cfg.arch_c,
            arch_variant=cfg.arch_variant,
            noise_rule=rule,
            variance=data_V,
            length=length,
            seed=cfg.base_seed,
            replication=replication,
            burn_in=cfg.burn_in,
        )

    return build


def _arch_builder(cfg: Match_Config, data_V: float, length: int, fixed: dict[str, float], free: str) -> Spec_Builder:
    def build(value: float, replication: int) -> Benchmark_Spec:
        coefficients = fixed | {free: value}
        return Benchmark_Spec(
            kind=Benchmark_Kind.arch,
            a=coefficients["a"],
            b=coefficients["b"],
            c=coefficients["c"],
            arch_variant=cfg.arch_variant,
            noise_rule=cfg.pair.noise_rule,
            variance=data_V,
            length=length,
            seed=cfg.base_seed,
            replication=replication,
            burn_in=cfg.burn_in,
        )

    return build


async def benchmark_stats(a: float, cfg: Match_Config, data_V: float, length: int | None = None) -> Norm_Stats:
    "the `replications` benchmark curves at coefficient a with their norm statistics"
    probe = _Probe(cfg, _ar_builder(cfg, data_V, _benchmark_length(cfg, length)))
    return await probe.stats(a)


async def benchmark_norm(a: float, cfg: Match_Config, data_V: float, length: int | None = None) -> tuple[float, float]:
    """Mean norm of `replications` benchmark curves at coefficient a, with its standard error."""
    stats = await benchmark_stats(a, cfg, data_V, length)
    return stats.mean, stats.std_error


class _Search(BaseModel):
    value: float
    flag: Match_Flag
    steps: tuple[Match_Step, ...]
    null_upper: float

    model_config = ConfigDict(frozen=True)


async def _solve(probe: _Probe, target: float, lo: float, hi: float, cfg: Match_Config, null_check: bool) -> _Search:
    """Coarse scan of [lo, hi] followed by bisection on the cell holding target."""
    steps: list[Match_Step] = []
    grid = scan_grid(lo, hi, cfg.coarse_step)
    scanned = []
    for value in grid:
        stats = await probe.stats(value)
        scanned.append(stats)
        steps.append(Match_Step(a=float(value), norm=stats.mean, std_error=stats.std_error, phase="scan"))
        log.debug(f"scan {value:.4f}: norm={stats.mean:.6g} se={stats.std_error:.3g}")

    means = np.array([s.mean for s in scanned])
    errors = np.array([s.std_error for s in scanned])
    null_upper = scanned[0].mean + cfg.null_z * scanned[0].spread

    if null_check and target <= null_upper:
        return _Search(value=float(grid[0]), flag=Match_Flag.independent, steps=tuple(steps), null_upper=null_upper)

    # only cells from the one holding the first crossing upwards decide the bracket
    above = np.flatnonzero(means >= target)
    start = max(int(above[0]) - 1, 0) if above.size else means.size - 1
    drops = np.flatnonzero(means[1:] < means[:-1] - 2 * np.hypot(errors[1:], errors[:-1]))
    if drops.size and drops[0] < start:
        log.debug(f"Dips below the target ignored at {', '.join(f'{grid[i]:.4f}' for i in drops[drops < start])}")
    drops = drops[drops >= start]
    if drops.size:
        best = int(np.argmin(np.abs(means - target)))
        log.warning(f"Non-monotone norms around {grid[drops[0]]:.4f}; best grid point {grid[best]:.4f}")
        return _Search(value=float(grid[best]), flag=Match_Flag.non_monotone, steps=tuple(steps), null_upper=null_upper)

    if target > means[-1]:
        return _Search(value=float(grid[-1]), flag=Match_Flag.exceeds_bracket, steps=tuple(steps), null_upper=null_upper)
    if target <= means[0]:
        return _Search(value=float(grid[0]), flag=Match_Flag.converged, steps=tuple(steps), null_upper=null_upper)

    cell = int(np.flatnonzero(means >= target)[0])
    left, right = float(grid[cell - 1]), float(grid[cell])
    for _ in range(cfg.max_iterations):
        mid = (left + right) / 2
        stats = await probe.stats(mid)
        steps.append(Match_Step(a=mid, norm=stats.mean, std_error=stats.std_error, phase="bisect"))
        gap = stats.mean - target
        log.debug(f"bisect {mid:.5f}: gap={gap:.3g} se={stats.std_error:.3g}")
        if abs(gap) <= max(cfg.tolerance, stats.std_error):
            return _Search(value=mid, flag=Match_Flag.converged, steps=tuple(steps), null_upper=null_upper)
        if gap < 0:
            left = mid
        else:
            right = mid
    return _Search(value=(left + right) / 2, flag=Match_Flag.unconverged, steps=tuple(steps), null_upper=null_upper)


def _scan_slope(steps: Sequence[Match_Step], value: float) -> float:
    scan = sorted((s.a, s.norm) for s in steps if s.phase == "scan")
    if len(scan) < 2:
        return math.nan
    grid = np.array([a for a, _ in scan])
    means = np.array([m for _, m in scan])
    cell = int(np.clip(np.searchsorted(grid, value, side="right") - 1, 0, grid.size - 2))
    return float((means[cell + 1] - means[cell]) / (grid[cell + 1] - grid[cell]))


def _a_std_error(stats: Norm_Stats, steps: Sequence[Match_Step], value: float) -> float:
    slope = _scan_slope(steps, value)
    if not slope > 0:
        return math.nan
    return math.hypot(stats.spread, stats.std_error) / slope


async def match_coefficient(observed: Sample_Set, cfg: Match_Config) -> Match_Result:
    """Find |a| whose AR(1) benchmark curve has the observed norm under cfg.pair."""
    pairs = evaluate(cfg.pair, observed)
    observed_curve = compute_ecf_curve(pairs, cfg.grid, label=f"observed:{cfg.pair.label}")
    target = curve_norm(observed_curve, cfg.norm)
    length = cfg.length or observed.total_len
    probe = _Probe(cfg, _ar_builder(cfg, observed.second_moment, length))

    search = await _solve(probe, target, 0.0, cfg.a_max, cfg, null_check=True)
    a_hat = 0.0 if search.flag is Match_Flag.independent else search.value
    stats = await probe.stats(a_hat)
    level = log.info if search.flag in (Match_Flag.converged, Match_Flag.independent) else log.warning
    level(f"Match {cfg.pair.label}: a_hat={a_hat:.4f} target={target:.6g} achieved={stats.mean:.6g} [{search.flag}]")
    return Match_Result(
        pair=cfg.pair,
        a_hat=a_hat,
        target_norm=target,
        achieved_norm=stats.mean,
        mc_std_error=stats.std_error,
        a_std_error=_a_std_error(stats, search.steps, a_hat),
        flag=search.flag,
        null_upper=search.null_upper,
        iterations=search.steps,
        observed_curve=observed_curve,
        benchmark_curve=mean_curve(stats.curves, label=f"benchmark:{cfg.pair.label}:a={a_hat:.4f}"),
    )


async def match_over_pairs(
    observed: Sample_Set,
    pairs: Iterable[Functional_Pair],
    cfg: Match_Config,
    q_max: float | None = None,
) -> Pairs_Match:
    """Match every pair; overall a is the largest usable |a_hat|.

    cfg supplies everything but the pair and grid, which follow each pair's defaults unless q_max is set.
    """
    selected = list(pairs)
    if not selected:
        raise _errors.NotEnough("no functional pairs selected")
    results: list[Match_Result] = []
    for pair in selected:
        pair_cfg = cfg.model_copy(update={"pair": pair, "grid": Q_Grid.for_pair(pair, q_max, cfg.grid.n_points)})
        results.append(await match_coefficient(observed, pair_cfg))

    usable = [r for r in results if r.usable]
    if not usable:
        raise _errors.Unconverged(f"no pair converged: {', '.join(f'{r.label}={r.flag}' for r in results)}")
    best = max(usable, key=lambda r: abs(r.a_hat))
    return Pairs_Match(results=tuple(results), a_tilde=abs(best.a_hat), best=best.label)


async def match_leave_one_out(observed: Sample_Set, cfg: Match_Config) -> dict[str, Match_Result]:
    """match_coefficient with each series dropped in turn; empty for a single series."""
    if len(observed.series) < 2:
        return {}
    results: dict[str, Match_Result] = {}
    for skip in observed.ids:
        rest = pool(s for s in observed.series if s.id != skip)
        try:
            results[skip] = await match_coefficient(rest, cfg)
        except _errors.Invalid as xcp:
            log.warning(f"leave-one-out match without {skip}: {xcp}")
    return results


async def compare_strength(observed: Sample_Set, cfg: Match_Config, a: float) -> Strength_Verdict:
    """Is the observed dependence stronger or weaker than AR(1) with coefficient a?"""
    pairs = evaluate(cfg.pair, observed)
    target = curve_norm(compute_ecf_curve(pairs, cfg.grid), cfg.norm)
    probe = _Probe(cfg, _ar_builder(cfg, observed.second_moment, cfg.length or observed.total_len))
    stats = await probe.stats(a)
    gap = target - stats.mean
    if abs(gap) <= 2 * stats.spread:
        verdict = Verdict.indistinguishable
    else:
        verdict = Verdict.stronger if gap > 0 else Verdict.weaker
    return Strength_Verdict(a=a, observed_norm=target, benchmark_norm=stats.mean, spread=stats.spread, verdict=verdict)


async def sign_probe(cfg: Match_Config, a: float, data_V: float, length: int | None = None) -> Sign_Probe:
    """Benchmark norms at +a and -a on the same replication streams."""
    probe = _Probe(cfg, _ar_builder(cfg, data_V, _benchmark_length(cfg, length)))
    plus = await probe.stats(abs(a))
    minus = await probe.stats(-abs(a))
    return Sign_Probe(a=abs(a), plus=plus.mean, minus=minus.mean, plus_error=plus.std_error, minus_error=minus.std_error)


async def arch_equivalence_scan(
    cfg: Match_Config,
    target_norm: float,
    fixed: tuple[Literal["a", "b", "c"], float],
    sweep: tuple[Literal["a", "b", "c"], Sequence[float]],
    solve: Literal["a", "b", "c"] = "c",
    bracket: tuple[float, float] = (0.0, 0.3),
    data_V: float = 1.0,
    length: int | None = None,
) -> Arch_Scan:
    """Points (a, b, c) of the ARCH benchmark whose mean norm equals target_norm.

    One coefficient is held at `fixed`, one is stepped through `sweep` and the
    third (`solve`) is found by scan and bisection inside `bracket`.
    """
    names = {fixed[0], sweep[0], solve}
    if names != {"a", "b", "c"}:
        raise _errors.Invalid(f"fixed, sweep and solve must name a, b and c once each, got {fixed[0]}, {sweep[0]}, {solve}")
    length = _benchmark_length(cfg, length)

    if target_norm <= 0:
        b = fixed[1] if fixed[0] == "b" else 1.0
        null = Arch_Point(a=0.0, b=b, c=0.0, norm=0.0, std_error=0.0, noise_second_moment=1.0, degenerate=True)
        return Arch_Scan(target_norm=target_norm, points=(null,), notes=("degenerate: zero target, null point (a=0, c=0)",))

    points: list[Arch_Point] = []
    notes: list[str] = []
    for swept in sweep[1]:
        held = {fixed[0]: fixed[1], sweep[0]: float(swept)}
        probe = _Probe(cfg, _arch_builder(cfg, data_V, length, held, solve))
        search = await _solve(probe, target_norm, bracket[0], bracket[1], cfg, null_check=False)
        if search.flag is not Match_Flag.converged:
            note = f"{sweep[0]}={swept:g}: no {solve} in [{bracket[0]:g}, {bracket[1]:g}] ({search.flag})"
            log.info(f"ARCH scan; {note}")
            notes.append(note)
            continue
        stats = await probe.stats(search.value)
        if abs(stats.mean - target_norm) > max(cfg.tolerance, stats.std_error):
            note = f"{sweep[0]}={swept:g}: bracket edge {search.value:g} misses target"
            notes.append(note)
            continue
        coefficients = held | {solve: search.value}
        noise_moment = float(np.mean([_curve_noise_moment(probe, search.value, r) for r in range(cfg.replications)]))
        points.append(
            Arch_Point(
                a=coefficients["a"],
                b=coefficients["b"],
                c=coefficients["c"],
                norm=stats.mean,
                std_error=stats.std_error,
                noise_second_moment=noise_moment,
            )
        )
    return Arch_Scan(target_norm=target_norm, points=tuple(points), notes=tuple(notes))


def _curve_noise_moment(probe: _Probe, value: float, replication: int) -> float:
    return generate(probe.builder(value, replication)).noise_second_moment


# ECFmatch
