import logging

import numpy as np
import pandas as pd

from _cli import Command, Run_Context, group_root
from _utils import Utilities

log = logging.getLogger(__name__)


@group_root.register
class CMD_Ingest(Command, name="ingest", description="Convert price CSVs to return series"):
    async def invoke(self, ctx: Run_Context) -> int:
        sample = await ctx.load_sample()
        rows = []
        for series in sample.series:
            dates = series.timestamps.astype(str) if series.timestamps is not None else [""] * len(series)
            frame = pd.DataFrame({"t": np.arange(1, len(series) + 1), "date": dates, "return": series.returns})
            await ctx.files.write_frame(ctx.out(f"returns_{Utilities.safe_label(series.id)}.csv"), frame, ctx.header(series.id))
            rows.append(
                {
                    "id": series.id,
                    "n": len(series),
                    "mean": float(series.returns.mean()),
                    "second_moment": float(np.dot(series.returns, series.returns) / len(series)),
                }
            )
        summary = pd.DataFrame(rows)
        await ctx.files.write_frame(ctx.out("summary.csv"), summary, ctx.header("summary"))
        print(summary.to_string(index=False))
        print(f"pooled: n={sample.total_len} V={sample.second_moment:.6g}")
        log.info(f"Ingested {len(sample.series)} series, {sample.total_len} returns")
        return 0


# ECFmatch
