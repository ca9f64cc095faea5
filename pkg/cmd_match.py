import logging

import anyio
import numpy as np

import _errors
from _cli import Command, Run_Context, group_root
from _utils import Utilities
from analysis._config import Match_Flag
from analysis._ecf import Null_Band, curve_frame, permutation_null
from analysis._functionals import evaluate
from analysis._matcher import Match_Result, Pairs_Match, match_leave_one_out, match_over_pairs
from analysis._series import Sample_Set

log = logging.getLogger(__name__)


def format_result(result: Match_Result, null: Null_Band | None = None, loo: dict[str, Match_Result] | None = None) -> str:
    lines = [
        f"pair: {result.label}",
        f"a_hat: {result.a_hat:.5f}",
        f"a_std_error: {result.a_std_error:.3g}",
        f"flag: {result.flag}",
        f"target_norm: {result.target_norm:.6g}",
        f"achieved_norm: {result.achieved_norm:.6g}",
        f"mc_std_error: {result.mc_std_error:.3g}",
        f"null_upper: {result.null_upper:.6g}",
    ]
    if null is not None:
        lines.append(f"permutation_p: {null.p_value:.4g} ({null.draws.size} shuffles)")
    if loo:
        a_hats = np.array([r.a_hat for r in loo.values()])
        lines.append(f"leave_one_out: min={a_hats.min():.5f} max={a_hats.max():.5f} sd={a_hats.std(ddof=0):.3g}")
        lines.extend(f"  without {ident}: a_hat={r.a_hat:.5f} [{r.flag}]" for ident, r in loo.items())
    lines.append("iterations:")
    lines.extend(f"  {s.phase:<6} a={s.a:.5f} norm={s.norm:.6g} se={s.std_error:.3g}" for s in result.iterations)
    return "\n".join(lines) + "\n"


def format_summary(matched: Pairs_Match) -> str:
    lines = [f"a_tilde: {matched.a_tilde:.5f} ({matched.best})"]
    lines.extend(f"  {r.label}: a_hat={r.a_hat:.5f} [{r.flag}]" for r in matched.results)
    return "\n".join(lines) + "\n"


@group_root.register
class CMD_Match(Command, name="match", description="Match observed e(q) norms to AR(1) benchmarks"):
    async def _null(self, ctx: Run_Context, result: Match_Result, sample: Sample_Set) -> Null_Band | None:
        if not ctx.cfg.null_shuffles:
            return None
        cfg = ctx.cfg.match_config(result.pair)
        paired = evaluate(result.pair, sample)
        return await anyio.to_thread.run_sync(
            permutation_null, paired, cfg.grid, ctx.cfg.null_shuffles, ctx.cfg.base_seed, cfg.norm, limiter=ctx.limiter
        )

    async def _dropped(self, ctx: Run_Context, result: Match_Result, sample: Sample_Set) -> dict[str, Match_Result]:
        if not ctx.cfg.leave_one_out:
            return {}
        if len(sample.series) < 2:
            log.warning("leave_one_out needs at least two input series")
        return await match_leave_one_out(sample, ctx.cfg.match_config(result.pair))

    async def invoke(self, ctx: Run_Context) -> int:
        sample = await ctx.load_sample()
        pairs = ctx.cfg.functional_pairs
        if not pairs:
            raise _errors.NotEnough("no functional pairs selected")
        matched = await match_over_pairs(sample, pairs, ctx.cfg.match_config(pairs[0]), ctx.cfg.q_max)

        for result in matched.results:
            name = Utilities.safe_label(result.label)
            null = await self._null(ctx, result, sample)
            loo = await self._dropped(ctx, result, sample)
            header = ctx.header(result.label)
            await ctx.files.write_text(ctx.out(f"match_{name}.txt"), format_result(result, null, loo), header)
            frame = curve_frame([result.observed_curve, result.benchmark_curve])
            await ctx.files.write_frame(ctx.out(f"curves_{name}.csv"), frame, header)
            if result.flag not in (Match_Flag.converged, Match_Flag.independent):
                log.warning(f"{result.label}: {result.flag}")

        summary = format_summary(matched)
        await ctx.files.write_text(ctx.out("match_summary.txt"), summary, ctx.header("summary"))
        print(summary, end="")
        return 0


# ECFmatch
