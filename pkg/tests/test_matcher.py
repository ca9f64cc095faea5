import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import _errors
from analysis._benchmark import generate
from analysis._config import (
    Arch_Variant,
    Benchmark_Kind,
    Benchmark_Spec,
    Functional_Pair,
    Match_Config,
    Match_Flag,
    Noise_Rule,
    parse_pair,
)
from analysis._ecf import permutation_null
from analysis._functionals import evaluate
from analysis._matcher import (
    Norm_Stats,
    Verdict,
    _solve,
    arch_equivalence_scan,
    benchmark_norm,
    benchmark_stats,
    compare_strength,
    match_coefficient,
    match_leave_one_out,
    match_over_pairs,
    scan_grid,
    sign_probe,
)
from analysis._series import Return_Series, pool

CHOICE2 = parse_pair("choice2")


def _cfg(pair: Functional_Pair = CHOICE2, **kwargs) -> Match_Config:
    kwargs.setdefault("replications", 8)
    kwargs.setdefault("workers", 4)
    return Match_Config.for_pair(pair, **kwargs)


def test_scan_grid():
    grid = scan_grid(0.0, 0.3, 0.02)
    assert grid.size == 16
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(0.3)
    assert np.diff(grid).max() <= 0.02 + 1e-12
    assert scan_grid(0.1, 0.1, 0.02).tolist() == [0.1]
    with pytest.raises(_errors.Invalid):
        scan_grid(0.3, 0.1, 0.02)


@pytest.mark.anyio
async def test_benchmark_norm_grows_with_a():
    cfg = _cfg(length=20_000)
    low, low_se = await benchmark_norm(0.05, cfg, data_V=1.0)
    high, high_se = await benchmark_norm(0.2, cfg, data_V=1.0)
    assert high > low
    assert low_se > 0 and high_se > 0


@pytest.mark.anyio
async def test_benchmark_stats_keeps_every_replication():
    stats = await benchmark_stats(0.1, _cfg(length=5_000, replications=3), data_V=1.0)
    assert len(stats.curves) == 3
    assert stats.std_error == pytest.approx(stats.spread / np.sqrt(3))


@pytest.mark.anyio
async def test_replications_do_not_depend_on_workers():
    one, _ = await benchmark_norm(0.1, _cfg(length=5_000, workers=1), data_V=1.0)
    many, _ = await benchmark_norm(0.1, _cfg(length=5_000, workers=8), data_V=1.0)
    assert one == many


@pytest.mark.anyio
async def test_match_recovers_ar1_coefficient(ar1_sample):
    result = await match_coefficient(ar1_sample(0.15, 20_000), _cfg())
    assert result.flag is Match_Flag.converged
    assert abs(result.a_hat - 0.15) <= 0.05
    assert math.isfinite(result.a_std_error) and result.a_std_error > 0
    assert abs(result.achieved_norm - result.target_norm) <= max(0.002, result.mc_std_error)
    assert result.iterations[0].phase == "scan"
    assert result.benchmark_curve.grid == result.observed_curve.grid


@pytest.mark.anyio
async def test_balanced_signs_are_independent():
    # every (previous sign, current sign) combination occurs about equally often
    returns = np.tile([0.01, 0.02, -0.01, -0.02], 2_500)
    result = await match_coefficient(pool([Return_Series(id="balanced", returns=returns)]), _cfg())
    assert result.flag is Match_Flag.independent
    assert result.a_hat == 0.0
    assert result.target_norm <= result.null_upper


@pytest.mark.anyio
@pytest.mark.parametrize("seed", [5, 17, 99, 123])
async def test_noise_is_independent(ar1_sample, seed):
    result = await match_coefficient(ar1_sample(0.0, 20_000, seed=seed), _cfg(replications=16))
    assert result.flag is Match_Flag.independent
    assert result.a_hat == 0.0


@pytest.mark.anyio
async def test_match_is_deterministic(ar1_sample):
    sample = ar1_sample(0.15, 10_000)
    first = await match_coefficient(sample, _cfg(replications=4))
    second = await match_coefficient(sample, _cfg(replications=4))
    assert first.a_hat == second.a_hat
    assert first.achieved_norm == second.achieved_norm
    assert first.iterations == second.iterations
    assert_array_equal(first.benchmark_curve.values, second.benchmark_curve.values)


@pytest.mark.anyio
async def test_independent_benchmark_inside_permutation_band():
    n = 100_000
    cfg = _cfg(length=n, replications=16)
    mean, _ = await benchmark_norm(0.0, cfg, data_V=1.0)
    noise = generate(Benchmark_Spec(a=0.0, length=n, seed=77)).values
    paired = evaluate(CHOICE2, pool([Return_Series(id="noise", returns=noise)]))
    band = permutation_null(paired, cfg.grid, n_shuffles=200, seed=5)
    assert mean <= band.quantile(0.99)


class _Profile:
    """Stands in for the Monte Carlo norm estimate with a fixed profile."""

    def __init__(self, profile):
        self.profile = profile

    async def stats(self, value: float) -> Norm_Stats:
        return Norm_Stats(value=value, mean=self.profile(value), std_error=1e-4, spread=4e-4, curves=())


def _dip_then_rise(value: float) -> float:
    if value < 0.01:
        return 0.008
    return 0.0065 + 0.35 * (value - 0.02)


@pytest.mark.anyio
async def test_dip_below_the_target_is_not_a_failure():
    target = 0.035
    search = await _solve(_Profile(_dip_then_rise), target, 0.0, 0.3, _cfg(), null_check=False)
    assert search.flag is Match_Flag.converged
    assert abs(search.value - (0.02 + (target - 0.0065) / 0.35)) <= 0.006


@pytest.mark.anyio
async def test_drop_above_the_crossing_is_non_monotone():
    def profile(value: float) -> float:
        return _dip_then_rise(value) - (0.02 if value > 0.19 else 0.0)

    search = await _solve(_Profile(profile), 0.035, 0.0, 0.3, _cfg(), null_check=False)
    assert search.flag is Match_Flag.non_monotone
    assert all(step.phase == "scan" for step in search.steps)


@pytest.mark.anyio
async def test_leave_one_out_match():
    series = [
        Return_Series(id=f"s{i}", returns=generate(Benchmark_Spec(a=0.15, length=8_000, seed=40 + i)).values)
        for i in range(3)
    ]
    cfg = _cfg(replications=8)
    full = await match_coefficient(pool(series), cfg)
    dropped = await match_leave_one_out(pool(series), cfg)
    assert list(dropped) == ["s0", "s1", "s2"]
    for result in dropped.values():
        assert result.flag is Match_Flag.converged
        assert abs(result.a_hat - full.a_hat) <= 0.06
    assert await match_leave_one_out(pool(series[:1]), cfg) == {}


@pytest.mark.anyio
async def test_match_over_pairs_takes_the_largest(ar1_sample):
    sample = ar1_sample(0.15, 20_000)
    pairs = [CHOICE2, parse_pair("choice3:d=1")]
    matched = await match_over_pairs(sample, pairs, _cfg())
    assert [r.label for r in matched.results] == [p.label for p in pairs]
    usable = [abs(r.a_hat) for r in matched.results if r.usable]
    assert matched.a_tilde == max(usable)
    # d = 1 only halves h, so both pairs see the same dependence
    assert all(r.usable for r in matched.results)
    assert abs(matched.results[0].a_hat - matched.results[1].a_hat) <= 0.04


@pytest.mark.anyio
async def test_match_over_pairs_without_a_usable_pair(ar1_sample):
    sample = ar1_sample(0.3, 5_000)
    with pytest.raises(_errors.Unconverged, match="exceeds-bracket"):
        await match_over_pairs(sample, [CHOICE2], _cfg(a_max=0.05, replications=4))
    with pytest.raises(_errors.NotEnough):
        await match_over_pairs(sample, [], _cfg())


@pytest.mark.anyio
async def test_compare_strength(ar1_sample):
    sample = ar1_sample(0.15, 20_000)
    cfg = _cfg()
    assert (await compare_strength(sample, cfg, 0.0)).verdict is Verdict.stronger
    weaker = await compare_strength(sample, cfg, 0.3)
    assert weaker.verdict is Verdict.weaker
    assert weaker.benchmark_norm > weaker.observed_norm


@pytest.mark.anyio
@pytest.mark.parametrize("a", [0.1, 0.15])
async def test_sign_does_not_matter_for_indicators(a):
    signs = await sign_probe(_cfg(length=20_000, replications=16), a, data_V=1.0)
    assert signs.within(3.0)
    assert signs.plus > 0 and signs.minus > 0


@pytest.mark.anyio
async def test_arch_scan_zero_target_is_the_null_point():
    cfg = _cfg(parse_pair("choice1"), length=1_000)
    scan = await arch_equivalence_scan(cfg, 0.0, fixed=("b", 1.0), sweep=("a", [0.02]), solve="c")
    assert len(scan.points) == 1
    point = scan.points[0]
    assert point.degenerate and point.a == 0.0 and point.c == 0.0


@pytest.mark.anyio
async def test_arch_scan_rejects_repeated_coefficients():
    with pytest.raises(_errors.Invalid):
        await arch_equivalence_scan(_cfg(length=100), 0.1, fixed=("b", 1.0), sweep=("b", [0.5]), solve="c")


@pytest.mark.anyio
async def test_arch_scan_recovers_a_known_point():
    pair = parse_pair("choice1")
    bracket = (0.1, 0.3)
    a0 = float(scan_grid(*bracket, 0.02)[5])
    cfg = _cfg(pair, n_points=64, replications=4, length=20_000, benchmark_kind=Benchmark_Kind.arch, arch_b=1.0)
    target, _ = await benchmark_norm(a0, cfg, data_V=1e-4)

    scan = await arch_equivalence_scan(
        cfg, target, fixed=("b", 1.0), sweep=("c", [0.0]), solve="a", bracket=bracket, data_V=1e-4
    )
    assert not scan.notes
    (point,) = scan.points
    assert point.c == 0.0 and point.b == 1.0
    assert abs(point.a - a0) <= 0.02
    assert point.noise_second_moment == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
@pytest.mark.anyio
@pytest.mark.parametrize("text", ["choice1", "choice2", "choice3:d=inf"])
@pytest.mark.parametrize("a", [0.05, 0.10, 0.15, 0.20])
async def test_full_size_match_recovers_a(ar1_sample, text, a):
    pair = parse_pair(text)
    n_points = 128 if pair.noise_rule is Noise_Rule.matched else None
    sample = ar1_sample(a, 70_000, seed=31, scale=0.01)
    result = await match_coefficient(sample, _cfg(pair, n_points=n_points, replications=16))
    assert result.flag is Match_Flag.converged
    assert abs(result.a_hat - a) <= 3 * result.a_std_error


@pytest.mark.slow
@pytest.mark.anyio
@pytest.mark.parametrize("a", [0.1, 0.15])
async def test_full_size_sign_indifference_for_indicators(a):
    signs = await sign_probe(_cfg(length=70_000, replications=32), a, data_V=1.0)
    assert signs.within(3.0)


@pytest.mark.slow
@pytest.mark.anyio
@pytest.mark.parametrize("a", [0.1, 0.15])
async def test_identity_pair_sees_negative_coefficients_as_stronger(a):
    # Gaussian AR(1): sup of e(q) is rho/(1+rho) * exp(-ln(1+rho)/rho) for lag-1 correlation rho
    cfg = _cfg(parse_pair("choice1"), n_points=128, length=70_000, replications=32)
    signs = await sign_probe(cfg, a, data_V=1e-4)
    assert signs.minus > signs.plus
    assert signs.plus == pytest.approx(a / (1 + a) * np.exp(-np.log1p(a) / a), abs=0.0025)
    assert signs.minus == pytest.approx(a / (1 - a) * np.exp(np.log1p(-a) / a), abs=0.0025)


@pytest.mark.slow
@pytest.mark.anyio
@pytest.mark.parametrize("a", [0.1, 0.15])
async def test_exponential_history_sees_positive_coefficients_as_stronger(a):
    signs = await sign_probe(_cfg(parse_pair("choice3:d=inf"), length=70_000, replications=32), a, data_V=1.0)
    assert signs.plus > signs.minus
    assert signs.difference <= 0.15 * signs.plus


@pytest.mark.slow
@pytest.mark.anyio
async def test_lagged_arch_reaches_ar1_strength():
    n = 70_000
    choice1 = parse_pair("choice1")
    target, _ = await benchmark_norm(0.1, _cfg(choice1, n_points=128, length=n, replications=16), data_V=1e-4)
    arch_cfg = _cfg(
        choice1,
        n_points=128,
        length=n,
        replications=16,
        benchmark_kind=Benchmark_Kind.arch,
        arch_b=1.0,
        arch_variant=Arch_Variant.lagged,
    )
    scan = await arch_equivalence_scan(arch_cfg, target, fixed=("b", 1.0), sweep=("a", [0.02]), solve="c", data_V=1e-4)
    assert not scan.notes
    (point,) = scan.points
    assert point.a == 0.02 and point.b == 1.0
    assert abs(point.norm - target) <= max(arch_cfg.tolerance, point.std_error)
    assert abs(point.c_relative - 0.08) <= 0.03


# ECFmatch
