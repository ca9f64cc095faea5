import logging
import logging.config
import os
import sys
from pathlib import Path

import dotenv
import psutil

NAME: str = "ECFmatch"
VERSION: str = "1.1"

GRID_POINTS: int = 512
Q_MAX_IDENTITY: float = 180.0
"q range for functionals on the raw return scale (choice1, mixed)"
Q_MAX_SIGN: float = 50.0
"q range for sign-indicator functionals (choice2, choice3)"
UNBOUNDED_HISTORY: int = 20
"history points required before an unbounded choice3 sum is used; tail weight < 2**-20"

A_MAX: float = 0.3
COARSE_STEP: float = 0.02
TOLERANCE: float = 0.002
REPLICATIONS: int = 16
NULL_Z: float = 2.576
MAX_ITERATIONS: int = 30
BASE_SEED: int = 1984

ECF_CHUNK: int = 2**21
"complex cells evaluated per block of q values"

DATE_COLUMN: str = "date"
PRICE_COLUMN: str = "close"


# user config end


dotenv.load_dotenv()


def env_req(var: str, force_reload: bool = False) -> str:
    if force_reload:
        dotenv.load_dotenv()
    env = os.getenv(var)
    if not env:
        raise ValueError(f"{var} must be set")
    return env.strip()


def env_opt(var: str) -> str | None:
    env = os.getenv(var)
    if not env:
        return None
    return env.strip()


def _workers() -> int:
    if raw := env_opt("ECFMATCH_WORKERS"):
        return max(1, int(raw))
    return psutil.cpu_count(logical=True) or 1


WORKERS: int = _workers()
"threads used for Monte Carlo replications"

DIR_LOG = Path(env_opt("ECFMATCH_DIR_LOG") or "logs")
DEFAULT_CONFIG: Path | None = Path(raw) if (raw := env_opt("ECFMATCH_CONFIG")) else None
STR_ENCODE = "utf-8"

DIR_LOG.mkdir(parents=True, exist_ok=True)

is_debug = "-debug" in sys.argv or "--debug" in sys.argv
root_lvl = logging.DEBUG if is_debug else logging.INFO

logging.config.dictConfig(
    {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": "%(asctime)s | %(levelname).1s %(name)-25s - %(message)s",
            },
        },
        "handlers": {
            "file": {
                "class": "logging.FileHandler",
                "filename": str(DIR_LOG / "System.log"),
                "mode": "a",
                "formatter": "standard",
                "encoding": STR_ENCODE,
            },
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "standard",
                "level": logging.WARNING,
            },
        },
        "root": {
            "level": root_lvl,
            "handlers": ["file", "console"],
        },
        "loggers": {
            "system": {
                "level": root_lvl,
                "handlers": ["file"],
                "propagate": False,
            },
        },
    }
)
log = logging.getLogger("system")
IS_DEBUG = log.getEffectiveLevel() < 20
log.debug(f"Log Level={logging.getLevelName(root_lvl)} {WORKERS=} | sys.argv={str(sys.argv).strip('[]')}")


# ECFmatch
