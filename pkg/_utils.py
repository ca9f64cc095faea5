import hashlib
import logging
import re
from datetime import datetime
from typing import overload

from dateutil.relativedelta import relativedelta
import sys

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

log = logging.getLogger(__name__)


class Utilities:
    "Collection of various functions that do little things"

    @staticmethod
    def config_hash(text: str, length: int = 12) -> str:
        return hashlib.sha256(text.encode()).hexdigest()[:length]

    @staticmethod
    def safe_label(label: str) -> str:
        """Turns a provenance label such as `choice3:sign-exp:d=inf` into a file name fragment"""
        return re.sub(r"[^\w.-]+", "_", label.replace("=", "-")).strip("_")

    @staticmethod
    def first_cause(xcp: BaseException) -> BaseException:
        """Unwraps (possibly nested) exception groups raised by task groups down to the first real error"""
        while isinstance(xcp, BaseExceptionGroup) and xcp.exceptions:
            xcp = xcp.exceptions[0]
        return xcp

    @staticmethod
    def format_rdelta(delta: relativedelta) -> str:
        parts = []
        if delta.days:
            parts.append(f"{delta.days}d")
        if delta.hours:
            parts.append(f"{delta.hours}h")
        if delta.minutes:
            parts.append(f"{delta.minutes}m")
        if delta.seconds:
            parts.append(f"{delta.seconds}s")
        return " ".join(parts) or "<1s"

    @overload
    @staticmethod
    def create_rdelta(start: datetime, end: datetime) -> relativedelta: ...

    @overload
    @staticmethod
    def create_rdelta(total_seconds: float | int, /) -> relativedelta: ...

    @staticmethod
    def create_rdelta(start: datetime | float | int, end: datetime | None = None) -> relativedelta:
        if isinstance(start, (float, int)):
            return relativedelta(seconds=int(start))
        elif isinstance(start, datetime) and isinstance(end, datetime):
            return relativedelta(end, start)
        raise ValueError(f"Unsupported types: {start=}:{type(start)} | {end=}:{type(end)}")


# ECFmatch
