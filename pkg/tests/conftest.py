import os
import tempfile

os.environ.setdefault("ECFMATCH_DIR_LOG", tempfile.mkdtemp(prefix="ecfmatch-logs-"))

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import pytest  # noqa: E402

from analysis._benchmark import generate  # noqa: E402
from analysis._config import Benchmark_Spec  # noqa: E402
from analysis._series import Return_Series, Sample_Set, pool  # noqa: E402


@pytest.fixture
def anyio_backend():
    return "asyncio"


@pytest.fixture
def ar1_sample():
    """Factory for a one-series sample of Gaussian AR(1) returns."""

    def make(a: float, n: int, seed: int = 20240607, scale: float = 1.0, ident: str = "ar1") -> Sample_Set:
        series = generate(Benchmark_Spec(a=a, length=n, seed=seed))
        return pool([Return_Series(id=ident, returns=series.values * scale)])

    return make


@pytest.fixture
def write_prices():
    """Writes returns as a date,close CSV starting at 100."""

    def write(path, returns: np.ndarray, start: str = "1990-01-01"):
        prices = 100.0 * np.concatenate(([1.0], np.cumprod(1.0 + np.asarray(returns))))
        dates = pd.date_range(start, periods=prices.size, freq="D").strftime("%Y-%m-%d")
        pd.DataFrame({"date": dates, "close": prices}).to_csv(path, index=False)
        return path

    return write


# ECFmatch
