import logging

import anyio

import _errors
from _cli import Command, Run_Context, group_root
from _utils import Utilities
from analysis._config import Functional_Pair
from analysis._ecf import ECF_Curve, compute_ecf_curve, curve_frame, mean_curve
from analysis._functionals import evaluate
from analysis._matcher import benchmark_stats
from analysis._series import Sample_Set
import sys

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

log = logging.getLogger(__name__)


async def pair_curves(ctx: Run_Context, pair: Functional_Pair, sample: Sample_Set | None) -> list[ECF_Curve]:
    """Observed curve (when there is data) and the mean benchmark curve at ctx.cfg.a."""
    cfg = ctx.cfg.match_config(pair)
    curves: list[ECF_Curve] = []
    if sample is not None:
        pairs = evaluate(pair, sample)
        curves.append(compute_ecf_curve(pairs, cfg.grid, label=f"observed:{pair.label}"))
    variance = sample.second_moment if sample is not None else ctx.cfg.variance or 1.0
    length = cfg.length or (sample.total_len if sample is not None else None)
    if length is None:
        raise _errors.Invalid("benchmark length unknown; set length or supply inputs")
    stats = await benchmark_stats(ctx.cfg.a, cfg, variance, length)
    curves.append(mean_curve(stats.curves, label=f"benchmark:{pair.label}:a={ctx.cfg.a:g}"))
    return curves


@group_root.register
class CMD_Curves(Command, name="curves", description="Export observed and benchmark e(q) curves as CSV"):
    async def invoke(self, ctx: Run_Context) -> int:
        pairs = ctx.cfg.functional_pairs
        if not pairs:
            log.warning("No functional pairs selected; nothing written")
            return 0
        sample = await ctx.load_sample() if ctx.cfg.inputs else None

        async def _one(pair: Functional_Pair):
            curves = await pair_curves(ctx, pair, sample)
            path = ctx.out(f"curves_{Utilities.safe_label(pair.label)}.csv")
            await ctx.files.write_frame(path, curve_frame(curves), ctx.header(pair.label))

        try:
            async with anyio.create_task_group() as tg:
                for pair in pairs:
                    tg.start_soon(_one, pair)
        except BaseExceptionGroup as group:
            raise Utilities.first_cause(group)
        print(f"{len(pairs)} curve file(s) in {ctx.cfg.output_dir}")
        return 0


# ECFmatch
