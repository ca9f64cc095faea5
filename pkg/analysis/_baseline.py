from __future__ import annotations
import logging
import math
import warnings

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

import _errors
from analysis._series import Sample_Set, pool

log = logging.getLogger(__name__)


class Baseline_Report(BaseModel):
    beta_hat: float
    "no-intercept least squares coefficient of R_t on R_{t-1}"
    pearson_r: float = Field(ge=-1, le=1)
    pearson_p: float
    std_error: float
    t_stat: float
    n: int = Field(ge=2)

    model_config = ConfigDict(frozen=True)


def lag_pairs(sample: Sample_Set) -> tuple[np.ndarray, np.ndarray]:
    """(R_{t-1}, R_t) for every series, never pairing across series."""
    lags = [s.returns[:-1] for s in sample.series if len(s) >= 2]
    leads = [s.returns[1:] for s in sample.series if len(s) >= 2]
    if not lags:
        return np.empty(0), np.empty(0)
    return np.concatenate(lags), np.concatenate(leads)


def fit_ar1_ls(sample: Sample_Set) -> Baseline_Report:
    x, y = lag_pairs(sample)
    n = x.size
    if n < 2:
        raise _errors.NotEnough(f"baseline needs at least 2 lag pairs, got {n}")
    denominator = float(np.dot(x, x))
    if denominator == 0:
        raise _errors.Invalid("all lagged returns are zero; least squares undefined")

    beta = float(np.dot(x, y)) / denominator
    residual = y - beta * x
    std_error = math.sqrt(float(np.dot(residual, residual)) / (n - 1) / denominator)
    t_stat = beta / std_error if std_error > 0 else math.copysign(math.inf, beta) if beta else 0.0

    if np.ptp(x) == 0 or np.ptp(y) == 0:
        log.warning("constant lag or lead series; Pearson correlation reported as 0")
        r, p = 0.0, 1.0
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", stats.ConstantInputWarning)
            result = stats.pearsonr(x, y)
        r = float(np.clip(result.statistic, -1.0, 1.0))
        p = float(result.pvalue)

    log.debug(f"Baseline: beta={beta:.6g} se={std_error:.3g} r={r:.6g} n={n}")
    return Baseline_Report(beta_hat=beta, pearson_r=r, pearson_p=p, std_error=std_error, t_stat=t_stat, n=n)


def leave_one_out(sample: Sample_Set) -> dict[str, Baseline_Report]:
    """beta_hat with each series dropped in turn; empty for a single series."""
    if len(sample.series) < 2:
        return {}
    reports: dict[str, Baseline_Report] = {}
    for skip in sample.ids:
        rest = pool(s for s in sample.series if s.id != skip)
        try:
            reports[skip] = fit_ar1_ls(rest)
        except _errors.Invalid as xcp:
            log.warning(f"leave-one-out without {skip}: {xcp}")
    return reports


# ECFmatch
