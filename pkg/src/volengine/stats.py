"""Returns, descriptive statistics, diagnostics and historical volatility.

Moments follow the population convention: central moments
``m_k = sum((x - mean)**k) / n``, skewness ``m3 / m2**1.5`` and raw
(non-excess) kurtosis ``m4 / m2**2``. The standard deviation reported next to
them is the sample one (``N - 1`` denominator).

Degenerate zero-variance inputs never produce NaN: they either return the
documented conventional result (statistic 0, p-value 1) or raise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from datetime import date
from typing import NamedTuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats as sps

from .errors import (
    InvalidSpec,
    SingularRegression,
    TooFewObservations,
    WindowTooLarge,
    ZeroVariance,
)
from .ingest import PriceSeries

DEFAULT_ADF_LAGS = 1
DEFAULT_ARCH_LAGS = 5
DEFAULT_LJUNG_BOX_LAGS = 10
DEFAULT_HISTVOL_WINDOW = 30


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Dated log returns; each return carries the date of the later price."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.ndim != 1 or dates.shape != values.shape:
            raise InvalidSpec("dates and values must be 1-d arrays of equal length")
        if len(values) < 1:
            raise TooFewObservations("a return series needs at least one observation")
        if np.any(np.diff(dates).astype(int) <= 0):
            raise InvalidSpec("return dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidSpec("returns must be finite")
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, start: date = date(2000, 1, 1)) -> "ReturnSeries":
        """Wrap bare values, dating them on consecutive days from ``start``."""
        values = np.asarray(values, dtype=float)
        return cls(np.datetime64(start, "D") + np.arange(len(values)), values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReturnSeries):
            return NotImplemented
        return np.array_equal(self.dates, other.dates) and np.array_equal(self.values, other.values)


ReturnsLike = Union[ReturnSeries, np.ndarray, list]


def as_array(returns: ReturnsLike) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    arr = np.asarray(returns, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise InvalidSpec("returns must be a finite 1-d sequence")
    return arr


def _dates(returns: ReturnsLike) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.dates
    return np.datetime64("2000-01-01", "D") + np.arange(len(as_array(returns)))


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    median: float
    st_deviation: float
    skewness: float
    kurtosis: float
    min: float
    max: float
    jarque_bera: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df_or_lags: int
    reject_at_5pct: bool

    __test__ = False  # not a pytest class

    @classmethod
    def from_p(cls, statistic: float, p_value: float, df_or_lags: int) -> "TestResult":
        p = float(min(max(p_value, 0.0), 1.0))
        return cls(float(statistic), p, int(df_or_lags), p < 0.05)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class VolSeries:
    dates: np.ndarray
    sigma: np.ndarray
    window: int

    def __len__(self) -> int:
        return len(self.sigma)


class MomentPoint(NamedTuple):
    date: date
    mean: float
    st_deviation: float


def log_returns(series: PriceSeries) -> ReturnSeries:
    """``r_t = ln(p_t / p_{t-1})`` dated at ``t``."""
    p = series.prices
    return ReturnSeries(series.dates[1:], np.log(p[1:] / p[:-1]))


def _moments(x: np.ndarray) -> tuple[float, float]:
    if np.ptp(x) == 0.0:
        # Constant data: report the normal reference shape so JB = 0.
        return 0.0, 3.0
    dev = x - x.mean()
    # skewness and kurtosis are scale free; rescaling avoids under/overflow
    dev = dev / np.max(np.abs(dev))
    m2 = float(np.mean(dev**2))
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return m3 / m2**1.5, m4 / m2**2


def jarque_bera_statistic(n: int, skewness: float, kurtosis: float) -> float:
    """``n/6 * (S**2 + (K - 3)**2 / 4)`` for raw kurtosis ``K``."""
    return n / 6.0 * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)


def describe(returns: ReturnsLike) -> SummaryStats:
    x = as_array(returns)
    n = len(x)
    if n < 2:
        raise TooFewObservations(f"describe needs n >= 2, got {n}")
    skew, kurt = _moments(x)
    return SummaryStats(
        n=n,
        mean=float(x.mean()),
        median=float(np.median(x)),
        st_deviation=float(x.std(ddof=1)),
        skewness=skew,
        kurtosis=kurt,
        min=float(x.min()),
        max=float(x.max()),
        jarque_bera=jarque_bera_statistic(n, skew, kurt),
    )


def jarque_bera(returns: ReturnsLike) -> TestResult:
    x = as_array(returns)
    if len(x) < 4:
        raise TooFewObservations(f"Jarque-Bera needs n >= 4, got {len(x)}")
    skew, kurt = _moments(x)
    jb = jarque_bera_statistic(len(x), skew, kurt)
    return TestResult.from_p(jb, sps.chi2.sf(jb, 2), 2)


def t_test_zero_mean(returns: ReturnsLike) -> TestResult:
    """Two-sided one-sample t-test of a zero mean.

    All-zero input is reported as statistic 0 with p-value 1; a constant
    non-zero series has no finite t statistic and raises :class:`ZeroVariance`.
    """
    x = as_array(returns)
    n = len(x)
    if n < 2:
        raise TooFewObservations(f"t-test needs n >= 2, got {n}")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TestResult.from_p(0.0, 1.0, n - 1)
        raise ZeroVariance("constant non-zero returns: t statistic is unbounded")
    t = mean / (sd / math.sqrt(n))
    return TestResult.from_p(t, 2.0 * sps.t.sf(abs(t), n - 1), n - 1)


def _ols(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Least squares returning coefficients, residuals and ``(X'X)^-1``."""
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularRegression("regressor matrix is rank deficient")
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    return beta, y - X @ beta, xtx_inv


# Dickey-Fuller t statistic, constant and no trend: quantiles of the null
# distribution by sample size (Fuller 1976; Hamilton 1994, Table B.6).
_DF_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])
_DF_SIZES = np.array([25, 50, 100, 250, 500, np.inf])
_DF_QUANTILES = np.array([
    [-3.75, -3.33, -3.00, -2.63, -0.37, 0.00, 0.34, 0.72],
    [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
    [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
    [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
    [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
    [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
])


def df_quantiles(nobs: int) -> np.ndarray:
    """Dickey-Fuller quantiles at ``nobs``, linear in ``1/nobs`` between rows.

    Sample sizes below the smallest tabulated row use that row.
    """
    inv = 1.0 / _DF_SIZES[::-1]
    target = 1.0 / max(nobs, 1)
    table = _DF_QUANTILES[::-1]
    return np.array([np.interp(target, inv, table[:, j]) for j in range(len(_DF_PROBS))])


def df_pvalue(statistic: float, nobs: int) -> float:
    """Left-tail p-value by interpolation in probit space.

    Beyond the tabulated 1% and 99% points the end segments are extended
    linearly, which keeps the value strictly inside (0, 1).
    """
    q = df_quantiles(nobs)
    z = sps.norm.ppf(_DF_PROBS)
    if statistic <= q[0]:
        slope = (z[1] - z[0]) / (q[1] - q[0])
        zs = z[0] + slope * (statistic - q[0])
    elif statistic >= q[-1]:
        slope = (z[-1] - z[-2]) / (q[-1] - q[-2])
        zs = z[-1] + slope * (statistic - q[-1])
    else:
        zs = np.interp(statistic, q, z)
    return float(sps.norm.cdf(zs))


def adf_test(returns: ReturnsLike, lags: int = DEFAULT_ADF_LAGS) -> TestResult:
    """Augmented Dickey-Fuller test with a constant and ``lags`` lagged differences.

    Regresses ``dx_t`` on ``1, x_{t-1}, dx_{t-1}, ..., dx_{t-lags}``; the
    statistic is the t-ratio on ``x_{t-1}`` and the p-value comes from the
    embedded constant-only Dickey-Fuller table.
    """
    x = as_array(returns)
    n = len(x)
    if lags < 0:
        raise InvalidSpec("lags must be >= 0")
    if n < lags + 10:
        raise TooFewObservations(f"ADF with {lags} lags needs n >= {lags + 10}, got {n}")
    dx = np.diff(x)
    y = dx[lags:]
    cols = [np.ones_like(y), x[lags:-1]]
    cols += [dx[lags - i:-i] for i in range(1, lags + 1)]
    X = np.column_stack(cols)
    beta, resid, xtx_inv = _ols(y, X)
    dof = len(y) - X.shape[1]
    if dof <= 0:
        raise TooFewObservations("no residual degrees of freedom")
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 * xtx_inv[1, 1])
    if se == 0.0:
        raise SingularRegression("perfect fit: zero residual variance")
    stat = beta[1] / se
    return TestResult.from_p(stat, df_pvalue(stat, len(y)), lags)


def arch_lm_test(returns: ReturnsLike, q: int = DEFAULT_ARCH_LAGS) -> TestResult:
    """Engle's LM test: ``n * R**2`` from regressing ``r_t**2`` on ``q`` of its lags."""
    x = as_array(returns)
    n = len(x)
    if q < 1:
        raise InvalidSpec("q must be >= 1")
    if n < q + 10:
        raise TooFewObservations(f"ARCH-LM with q={q} needs n >= {q + 10}, got {n}")
    e2 = x**2
    y = e2[q:]
    X = np.column_stack([np.ones(n - q)] + [e2[q - i:n - i] for i in range(1, q + 1)])
    _, resid, _ = _ols(y, X)
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        raise SingularRegression("squared returns are constant")
    r2 = 1.0 - float(resid @ resid) / tss
    stat = len(y) * r2
    return TestResult.from_p(stat, sps.chi2.sf(stat, q), q)


def ljung_box_squared(returns: ReturnsLike, lags: int = DEFAULT_LJUNG_BOX_LAGS) -> TestResult:
    """Ljung-Box portmanteau Q on squared returns."""
    x = as_array(returns)
    n = len(x)
    if lags < 1:
        raise InvalidSpec("lags must be >= 1")
    if n <= lags:
        raise TooFewObservations(f"Ljung-Box with {lags} lags needs n > {lags}, got {n}")
    e2 = x**2
    dev = e2 - e2.mean()
    denom = float(dev @ dev)
    if denom == 0.0:
        raise ZeroVariance("squared returns are constant")
    k = np.arange(1, lags + 1)
    rho = np.array([dev[j:] @ dev[:-j] for j in k]) / denom
    q_stat = n * (n + 2) * float(np.sum(rho**2 / (n - k)))
    return TestResult.from_p(q_stat, sps.chi2.sf(q_stat, lags), lags)


def _windows(x: np.ndarray, window: int) -> np.ndarray:
    if window < 2:
        raise InvalidSpec(f"window must be >= 2, got {window}")
    if len(x) < window:
        raise WindowTooLarge(f"window {window} exceeds series length {len(x)}")
    return sliding_window_view(x, window)


def rolling_moments(returns: ReturnsLike, window: int) -> list[MomentPoint]:
    """Trailing-window mean and sample standard deviation.

    One point per date from the ``window``-th observation onward; the window
    includes the stamped date.
    """
    x = as_array(returns)
    w = _windows(x, window)
    dates = _dates(returns)[window - 1:]
    means = w.mean(axis=1)
    sds = w.std(axis=1, ddof=1)
    return [MomentPoint(d.item(), float(m), float(s)) for d, m, s in zip(dates, means, sds)]


def historical_volatility(returns: ReturnsLike, window: int = DEFAULT_HISTVOL_WINDOW) -> VolSeries:
    x = as_array(returns)
    w = _windows(x, window)
    return VolSeries(_dates(returns)[window - 1:], w.std(axis=1, ddof=1), window)


def scale_volatility(daily_sigma: float, horizon_days: float) -> float:
    """Square-root-of-time scaling of a daily volatility."""
    if daily_sigma < 0 or horizon_days < 1:
        raise InvalidSpec("need daily_sigma >= 0 and horizon_days >= 1")
    return daily_sigma * math.sqrt(horizon_days)
