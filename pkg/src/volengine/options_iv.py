"""Black-Scholes prices, put-call parity and implied-volatility inversion.

European options on a non-dividend-paying underlying; ``tau`` is a year
fraction (calendar days / 365) and ``rate`` is continuously compounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

from .errors import InvalidSpec

Kind = Literal["call", "put"]
SIGMA_MIN = 1e-4
SIGMA_MAX = 10.0
PRICE_TOL = 1e-9  # relative to spot
SIGMA_TOL = 1e-8
MAX_ITER = 200
SIGMA_RESOLUTION = 1e-7  # finest sigma the price must resolve for an ok result
_ULPS = 4.0
DAYS_PER_YEAR = 365.0

OK = "ok"
BELOW_INTRINSIC = "below_intrinsic"
ABOVE_UPPER_BOUND = "above_upper_bound"
NO_CONVERGENCE = "no_convergence"
STATUSES = (OK, BELOW_INTRINSIC, ABOVE_UPPER_BOUND, NO_CONVERGENCE)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PricingInputs:
    spot: float
    strike: float
    tau: float
    rate: float = 0.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (self.spot > 0 and self.strike > 0):
            raise InvalidSpec("spot and strike must be positive")
        if not (self.tau >= 0 and self.sigma >= 0):
            raise InvalidSpec("tau and sigma must be non-negative")
        if not all(math.isfinite(v) for v in (self.spot, self.strike, self.tau, self.rate, self.sigma)):
            raise InvalidSpec("pricing inputs must be finite")

    @property
    def discounted_strike(self) -> float:
        return self.strike * math.exp(-self.rate * self.tau)

    def with_sigma(self, sigma: float) -> "PricingInputs":
        return replace(self, sigma=sigma)


@dataclass(frozen=True)
class IvResult:
    status: str
    sigma: float | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OK


def year_fraction(days: float) -> float:
    return days / DAYS_PER_YEAR


def norm_cdf(x: float) -> float:
    """Standard normal distribution function, accurate in both tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _check_kind(kind: str) -> None:
    if kind not in ("call", "put"):
        raise InvalidSpec(f"kind must be 'call' or 'put', got {kind!r}")


def _out_of_the_money(S: float, disc_k: float, tau: float, sigma: float, kind: str) -> float:
    """Closed form for the side whose value is pure time value (no cancellation)."""
    vol = sigma * math.sqrt(tau)
    d1 = (math.log(S / disc_k) + 0.5 * vol * vol) / vol
    d2 = d1 - vol
    if kind == "call":
        return max(S * norm_cdf(d1) - disc_k * norm_cdf(d2), 0.0)
    return max(disc_k * norm_cdf(-d2) - S * norm_cdf(-d1), 0.0)


def bs_price(inputs: PricingInputs, kind: Kind = "call") -> float:
    """Black-Scholes price of a European call or put.

    The out-of-the-money side is evaluated in closed form and the
    in-the-money side from it by put-call parity, which keeps small time
    values accurate. ``tau == 0`` gives the intrinsic value and
    ``sigma == 0`` the discounted intrinsic value.
    """
    _check_kind(kind)
    S, K, tau = inputs.spot, inputs.strike, inputs.tau
    sign = 1.0 if kind == "call" else -1.0
    if tau == 0.0:
        return max(sign * (S - K), 0.0)
    disc_k = inputs.discounted_strike
    if inputs.sigma == 0.0:
        return max(sign * (S - disc_k), 0.0)
    call_otm = S <= disc_k
    if (kind == "call") == call_otm:
        return _out_of_the_money(S, disc_k, tau, inputs.sigma, kind)
    other = "put" if kind == "call" else "call"
    return max(_out_of_the_money(S, disc_k, tau, inputs.sigma, other) + sign * (S - disc_k), 0.0)


def vega(inputs: PricingInputs) -> float:
    """``dC/dsigma = S * phi(d1) * sqrt(tau)``, the same for calls and puts."""
    S, K, tau, r, sigma = inputs.spot, inputs.strike, inputs.tau, inputs.rate, inputs.sigma
    if tau == 0.0 or sigma == 0.0:
        return 0.0
    vol = sigma * math.sqrt(tau)
    d1 = (math.log(S / K) + (r + 0.5 * sigma * sigma) * tau) / vol
    return S * _INV_SQRT_2PI * math.exp(-0.5 * d1 * d1) * math.sqrt(tau)


def parity_counterpart(price: float, inputs: PricingInputs, kind: Kind) -> float:
    """Price of the opposite kind from ``C - P = S - K exp(-r tau)``."""
    _check_kind(kind)
    forward_gap = inputs.spot - inputs.discounted_strike
    return price - forward_gap if kind == "call" else price + forward_gap


def price_bounds(inputs: PricingInputs, kind: Kind) -> tuple[float, float]:
    """No-arbitrage ``(lower, upper)``: discounted intrinsic and S (call) or K exp(-r tau) (put)."""
    _check_kind(kind)
    S, disc_k = inputs.spot, inputs.discounted_strike
    if kind == "call":
        return max(S - disc_k, 0.0), S
    return max(disc_k - S, 0.0), disc_k


def implied_vol(market_price: float, inputs: PricingInputs, kind: Kind = "call") -> IvResult:
    """Invert :func:`bs_price` for sigma on ``[SIGMA_MIN, SIGMA_MAX]``.

    Bracketed secant (Illinois variant) with a bisection fallback whenever
    the secant step fails to halve the bracket. Stops when the bracket is
    narrower than ``SIGMA_TOL``, or when the price error is within
    ``PRICE_TOL * spot`` and the implied sigma error ``|f| / vega`` is within
    ``SIGMA_TOL``. A root reported as ``ok`` is always bracketed by a strict
    sign change of the pricing error within ``SIGMA_TOL``, and a
    ``SIGMA_RESOLUTION`` change of sigma moves the price by more than a few
    ulps there. Prices that carry no such information about sigma in double
    precision (time value lost below the rounding of the intrinsic part, or
    underflowed) are reported as ``no_convergence``, never as a sigma.
    ``inputs.sigma`` is ignored.
    """
    _check_kind(kind)
    if not (inputs.tau > 0):
        raise InvalidSpec("implied volatility needs tau > 0")
    if not (market_price >= 0 and math.isfinite(market_price)):
        raise InvalidSpec("market price must be finite and non-negative")
    lower, upper = price_bounds(inputs, kind)
    if market_price < lower:
        return IvResult(BELOW_INTRINSIC)
    if market_price >= upper:
        return IvResult(ABOVE_UPPER_BOUND)

    def f(sigma: float) -> float:
        return bs_price(inputs.with_sigma(sigma), kind) - market_price

    lo, hi = SIGMA_MIN, SIGMA_MAX
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0.0 < f_hi):
        # no strict sign change: the price does not pin down a sigma in the bracket
        return IvResult(NO_CONVERGENCE)

    def resolved(x: float, it: int, bracketed: bool = False) -> IvResult:
        # accept only a root bracketed by a strict sign change within SIGMA_TOL,
        # at which the price still resolves sigma to SIGMA_RESOLUTION
        if not bracketed and not f(max(x - SIGMA_TOL, SIGMA_MIN)) < 0.0 < f(min(x + SIGMA_TOL, SIGMA_MAX)):
            return IvResult(NO_CONVERGENCE, None, it)
        if vega(inputs.with_sigma(x)) * SIGMA_RESOLUTION <= _ULPS * math.ulp(market_price):
            return IvResult(NO_CONVERGENCE, None, it)
        return IvResult(OK, x, it)

    price_tol = PRICE_TOL * inputs.spot
    side = 0
    for it in range(1, MAX_ITER + 1):
        width = hi - lo
        x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0.0:
            return resolved(x, it)
        if fx < 0.0:
            lo, f_lo = x, fx
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = x, fx
            if side == 1:
                f_lo *= 0.5
            side = 1
        if hi - lo > 0.5 * width:
            # the secant step stalled; bisect
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                return resolved(mid, it)
            if fm < 0.0:
                lo, f_lo = mid, fm
            else:
                hi, f_hi = mid, fm
            side = 0
        if hi - lo <= SIGMA_TOL:
            return resolved(0.5 * (lo + hi), it, bracketed=True)
        if abs(fx) <= price_tol:
            v = vega(inputs.with_sigma(x))
            if v > 0.0 and abs(fx) <= SIGMA_TOL * v:
                return resolved(x, it)
    return IvResult(NO_CONVERGENCE, None, MAX_ITER)
