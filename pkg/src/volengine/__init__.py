"""Volatility analytics: return diagnostics, GARCH-family and two-regime
Markov-switching GARCH estimation and forecasting, model selection, and
Black-Scholes implied volatility smiles and surfaces."""

__version__ = "0.1.0"

from .errors import DataError, NumericalError, VolEngineError
from .estimator import FitOptions, FitResult, fit
from .forecast import VolForecastPath, forecast_fixed, forecast_mobile
from .garch_core import (
    GarchModel,
    ParamVector,
    conditional_variance_path,
    log_likelihood,
    make_model,
    persistence,
    simulate,
    unconditional_variance,
)
from .ingest import (
    OptionChain,
    OptionQuote,
    PriceSeries,
    generate_fixture,
    load_option_chain,
    load_price_series,
    slice_window,
)
from .msgarch import MsFitResult, MsModel, fit_ms, ms_forecast, ms_log_likelihood, stationary_distribution
from .options_iv import IvResult, PricingInputs, bs_price, implied_vol, norm_cdf, parity_counterpart
from .selection import CriteriaPair, GridReport, grid_search, information_criteria, likelihood_ratio_test
from .stats import (
    ReturnSeries,
    SummaryStats,
    TestResult,
    adf_test,
    arch_lm_test,
    describe,
    historical_volatility,
    jarque_bera,
    ljung_box_squared,
    log_returns,
    rolling_moments,
    scale_volatility,
    t_test_zero_mean,
)
from .surface import SmileCurve, VolSurface, build_temporal_surface, compute_smiles, spread_report
