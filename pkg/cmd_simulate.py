import logging

import numpy as np
import pandas as pd

import _errors
from _cli import Command, Run_Context, group_root
from _utils import Utilities
from analysis._benchmark import generate
from analysis._config import Benchmark_Spec

log = logging.getLogger(__name__)


def spec_from(ctx: Run_Context) -> Benchmark_Spec:
    cfg = ctx.cfg
    if cfg.length is None:
        raise _errors.Invalid("simulate needs a length")
    return Benchmark_Spec(
        kind=cfg.benchmark_kind,
        a=cfg.a,
        b=cfg.arch_b,
        c=cfg.arch_c,
        arch_variant=cfg.arch_variant,
        noise_rule=cfg.noise_rule,
        variance=cfg.variance,
        length=cfg.length,
        seed=cfg.base_seed,
        replication=cfg.replication,
        burn_in=cfg.burn_in,
    )


@group_root.register
class CMD_Simulate(Command, name="simulate", description="Write a synthetic AR(1) or ARCH benchmark series"):
    async def invoke(self, ctx: Run_Context) -> int:
        spec = spec_from(ctx)
        series = generate(spec)
        frame = pd.DataFrame({"t": np.arange(len(series.values)), "value": series.values})
        extra = [f"spec={spec.label}", f"noise_second_moment={series.noise_second_moment:.10g}"]
        path = ctx.out(f"simulate_{Utilities.safe_label(spec.label)}.csv")
        await ctx.files.write_frame(path, frame, ctx.header(spec.label, extra))
        print(f"{spec.label}: {spec.length} values -> {path}")
        return 0


# ECFmatch
