import logging

import numpy as np

from _cli import Command, Run_Context, group_root
from analysis._baseline import Baseline_Report, fit_ar1_ls, leave_one_out

log = logging.getLogger(__name__)


def format_report(report: Baseline_Report, loo: dict[str, Baseline_Report]) -> str:
    lines = [
        f"beta_hat: {report.beta_hat:.6g}",
        f"std_error: {report.std_error:.6g}",
        f"t_stat: {report.t_stat:.4g}",
        f"pearson_r: {report.pearson_r:.6g}",
        f"pearson_p: {report.pearson_p:.4g}",
        f"n: {report.n}",
    ]
    if loo:
        betas = np.array([r.beta_hat for r in loo.values()])
        lines.append(f"leave_one_out: min={betas.min():.6g} max={betas.max():.6g} sd={betas.std(ddof=0):.3g}")
        lines.extend(f"  without {ident}: {r.beta_hat:.6g} (n={r.n})" for ident, r in loo.items())
    return "\n".join(lines) + "\n"


@group_root.register
class CMD_Baseline(Command, name="baseline", description="Least squares and Pearson lag-1 dependence"):
    async def invoke(self, ctx: Run_Context) -> int:
        sample = await ctx.load_sample()
        report = fit_ar1_ls(sample)
        text = format_report(report, leave_one_out(sample))
        await ctx.files.write_text(ctx.out("baseline.txt"), text, ctx.header("baseline"))
        print(text, end="")
        return 0


# ECFmatch
