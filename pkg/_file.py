import logging
from collections.abc import Iterable
from pathlib import Path

import aiofiles
import anyio
import pandas as pd

import config

log = logging.getLogger(__name__)


class File_Utils:
    """Output writing for commands; one instance per run so its locks stay on one event loop."""

    def __init__(self):
        self._locks: dict[Path, anyio.Lock] = {}

    def _lock(self, path: Path) -> anyio.Lock:
        key = path.resolve()
        if key not in self._locks:
            self._locks[key] = anyio.Lock()
        return self._locks[key]

    @staticmethod
    def provenance(config_hash: str, seed: int | None = None, label: str | None = None, extra: Iterable[str] = ()) -> str:
        lines = [f"# ecfmatch {config.VERSION}", f"# config_hash={config_hash}"]
        if seed is not None:
            lines.append(f"# seed={seed}")
        if label:
            lines.append(f"# label={label}")
        lines.extend(f"# {line}" for line in extra)
        return "\n".join(lines) + "\n"

    async def write_text(self, path: Path, text: str, header: str = "") -> Path:
        path = Path(path)
        async with self._lock(path):
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                async with aiofiles.open(path, "w", encoding=config.STR_ENCODE) as f:
                    await f.write(header + text)
            except OSError:
                log.exception(f"write failed: {path}")
                raise
        log.info(f"Wrote {path}")
        return path

    async def write_frame(self, path: Path, frame: pd.DataFrame, header: str = "") -> Path:
        return await self.write_text(path, frame.to_csv(index=False, lineterminator="\n"), header)

    @staticmethod
    def read_header(path: Path) -> dict[str, str]:
        """key=value pairs from the leading comment lines of an output file."""
        found: dict[str, str] = {}
        with open(path, encoding=config.STR_ENCODE) as f:
            for line in f:
                if not line.startswith("#"):
                    break
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    found[key.strip()] = value.strip()
        return found


# ECFmatch
