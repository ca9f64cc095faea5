import argparse
import logging
import os
import sys
from collections.abc import Sequence
from datetime import datetime

import anyio
from pydantic import ValidationError

import _errors
import cmd_baseline  # noqa: F401
import cmd_curves  # noqa: F401
import cmd_ingest  # noqa: F401
import cmd_match  # noqa: F401
import cmd_simulate  # noqa: F401
from _cli import Run_Context, group_root, load_run_config, overrides_from
from _utils import Utilities

log = logging.getLogger("system")

EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (_errors.Unconverged, 2),
    (_errors.Missing, 3),
    (OSError, 3),
    (_errors.Invalid, 1),
    (ValidationError, 1),
)


def exit_code(xcp: BaseException) -> int | None:
    for kind, code in EXIT_CODES:
        if isinstance(xcp, kind):
            return code
    return None


async def run(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, overrides_from(args))
    ctx = Run_Context(cfg)
    log.info(f"{args.command}: config_hash={ctx.config_hash} output_dir={cfg.output_dir}")
    await ctx.write_effective()
    command = group_root.commands[args.command]()
    return await command.invoke(ctx)


def main(argv: Sequence[str] | None = None) -> int:
    args = group_root.parser().parse_args(argv)
    start_time = datetime.now()
    log.info(f"Running {os.getpid()}: {args.command}")
    try:
        code = anyio.run(run, args, backend="asyncio", backend_options={"use_uvloop": True})
    except Exception as xcp:
        cause = Utilities.first_cause(xcp)
        code = exit_code(cause)
        if code is None:
            log.exception(f"{args.command} crashed")
            raise
        log.warning(f"{args.command} failed [{code}]: {type(cause).__name__}: {cause}")
        print(f"error: {cause}", file=sys.stderr)
    rd = Utilities.create_rdelta(start_time, datetime.now())
    log.info(f"{args.command} done [{code}] in {Utilities.format_rdelta(rd)}")
    return code


if __name__ == "__main__":
    sys.exit(main())

# ECFmatch
