"""Implied-volatility smiles, liquidity reports and the temporal surface.

Every quote that fails to invert stays visible with its status; nothing is
silently dropped. Surface cells with no successful inversion are explicit
``None`` values.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import InsufficientDates, InvalidSpec, MissingSpot, NoQuotesForDate
from .ingest import OptionChain, OptionQuote
from .options_iv import NO_CONVERGENCE, IvResult, PricingInputs, implied_vol, year_fraction

SIDES = ("bid", "ask", "mid")
KINDS = ("call", "put")
DEFAULT_BUCKETS = 38
DEFAULT_MATURITY_DAYS = 180
DEFAULT_MATURITY_TOLERANCE = 45
DEFAULT_STRIKE_ROUND = 1000.0
PARTITIONS = ("count", "calendar")


class SmilePoint(NamedTuple):
    strike: float
    iv: float | None
    status: str


@dataclass(frozen=True)
class SmileCurve:
    quote_date: date
    expiry_date: date
    kind: str
    side: str
    points: tuple[SmilePoint, ...]

    def __post_init__(self) -> None:
        strikes = [p.strike for p in self.points]
        if any(b <= a for a, b in zip(strikes, strikes[1:])):
            raise InvalidSpec("smile strikes must be strictly increasing")

    def ok_points(self) -> list[SmilePoint]:
        return [p for p in self.points if p.iv is not None]


class SpreadRow(NamedTuple):
    expiry: date
    kind: str
    strike: float
    spread: float
    open_interest: int


@dataclass(frozen=True)
class VolSurface:
    """Mean implied volatility per (time bucket, rounded strike).

    ``time_buckets`` holds ``(start, end)`` quote-date labels; ``cells`` maps
    ``(bucket_index, strike)`` to the mean iv or ``None`` for every pair of
    the grid.
    """

    time_buckets: tuple[tuple[date, date], ...]
    strike_buckets: tuple[float, ...]
    cells: Mapping[tuple[int, float], float | None]
    counts: Mapping[tuple[int, float], int]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.time_buckets), len(self.strike_buckets)

    def grid(self) -> np.ndarray:
        """Cells as a ``(buckets, strikes)`` array with NaN where missing."""
        out = np.full(self.shape, np.nan)
        for (b, k), v in self.cells.items():
            if v is not None:
                out[b, self.strike_buckets.index(k)] = v
        return out

    def present(self) -> dict[tuple[int, float], float]:
        return {key: v for key, v in self.cells.items() if v is not None}

    def rows(self) -> list[tuple[date, date, float, float | None]]:
        return [(start, end, k, self.cells[(b, k)])
                for b, (start, end) in enumerate(self.time_buckets) for k in self.strike_buckets]


def _invert(price: float, quote: OptionQuote, spot: float, rate: float) -> IvResult:
    days = quote.days_to_expiry
    if days <= 0:
        return IvResult(NO_CONVERGENCE)
    return implied_vol(price, PricingInputs(spot, quote.strike, year_fraction(days), rate), quote.kind)


def _side_price(quote: OptionQuote, side: str) -> float:
    if side == "bid":
        return quote.bid
    if side == "ask":
        return quote.ask
    return 0.5 * (quote.bid + quote.ask)


def _quotes_for(chain: OptionChain, quote_date: date) -> list[OptionQuote]:
    quotes = chain.on(quote_date)
    if not quotes:
        raise NoQuotesForDate(f"no quotes on {quote_date}")
    return quotes


def compute_smiles(chain: OptionChain, quote_date: date, spot: float, rate: float = 0.0,
                   min_open_interest: int = 0, sides: Iterable[str] = SIDES) -> list[SmileCurve]:
    """Bid, ask and mid smiles per expiry and kind on ``quote_date``.

    The mid curve inverts ``(bid + ask) / 2``. Quotes with open interest
    below ``min_open_interest`` are excluded.
    """
    if not spot > 0:
        raise InvalidSpec("spot must be positive")
    sides = tuple(sides)
    if any(s not in SIDES for s in sides):
        raise InvalidSpec(f"sides must be drawn from {SIDES}")
    groups: dict[tuple[date, str], list[OptionQuote]] = defaultdict(list)
    for q in _quotes_for(chain, quote_date):
        if q.open_interest >= min_open_interest:
            groups[(q.expiry_date, q.kind)].append(q)
    curves = []
    for expiry, kind in sorted(groups, key=lambda g: (g[0], KINDS.index(g[1]))):
        quotes = sorted(groups[(expiry, kind)], key=lambda q: q.strike)
        for side in sides:
            points = []
            for q in quotes:
                res = _invert(_side_price(q, side), q, spot, rate)
                points.append(SmilePoint(q.strike, res.sigma if res.ok else None, res.status))
            curves.append(SmileCurve(quote_date, expiry, kind, side, tuple(points)))
    return curves


def spread_report(chain: OptionChain, quote_date: date) -> list[SpreadRow]:
    """One row per quote on ``quote_date``: ``ask - bid`` and open interest."""
    quotes = _quotes_for(chain, quote_date)
    rows = [SpreadRow(q.expiry_date, q.kind, q.strike, q.ask - q.bid, q.open_interest) for q in quotes]
    return sorted(rows, key=lambda r: (r.expiry, KINDS.index(r.kind), r.strike))


def round_strike(strike: float, step: float = DEFAULT_STRIKE_ROUND) -> float:
    """Nearest multiple of ``step``, halves rounded up."""
    return math.floor(strike / step + 0.5) * step


def partition_dates(dates: list[date], buckets: int, mode: str = "count") -> list[list[date]]:
    """Split sorted quote dates into ``buckets`` contiguous groups.

    ``count``: equal numbers of dates, the remainder going one each to the
    earliest buckets. ``calendar``: equal calendar spans between the first
    and last date (buckets may then be empty).
    """
    if mode not in PARTITIONS:
        raise InvalidSpec(f"partition must be one of {PARTITIONS}")
    if buckets < 1:
        raise InvalidSpec("buckets must be >= 1")
    if len(dates) < buckets:
        raise InsufficientDates(f"{len(dates)} quote dates cannot fill {buckets} buckets")
    if mode == "count":
        return [list(chunk) for chunk in np.array_split(np.array(dates, dtype=object), buckets)]
    first = dates[0]
    span = (dates[-1] - first).days + 1
    groups: list[list[date]] = [[] for _ in range(buckets)]
    for d in dates:
        groups[min((d - first).days * buckets // span, buckets - 1)].append(d)
    return groups


def _bucket_labels(groups: list[list[date]], dates: list[date], mode: str) -> list[tuple[date, date]]:
    if mode == "count":
        return [(g[0], g[-1]) for g in groups]
    first = dates[0]
    span = (dates[-1] - first).days + 1
    n = len(groups)
    edges = [first + timedelta(days=-(-i * span // n)) for i in range(n + 1)]
    return [(edges[i], edges[i + 1] - timedelta(days=1)) for i in range(n)]


def build_temporal_surface(chain: OptionChain, spots: Mapping[date, float] | None = None,
                           rate: float = 0.0, maturity_days: int = DEFAULT_MATURITY_DAYS,
                           maturity_tolerance_days: int = DEFAULT_MATURITY_TOLERANCE,
                           buckets: int = DEFAULT_BUCKETS, strike_round: float = DEFAULT_STRIKE_ROUND,
                           min_open_interest: int = 0, partition: str = "count") -> VolSurface:
    """Average implied volatility over time buckets and rounded strikes.

    Quotes within ``maturity_tolerance_days`` of ``maturity_days`` to expiry
    and with enough open interest contribute their bid and ask inversions,
    calls and puts alike; each cell is the mean of the successful ones.
    ``spots`` defaults to the chain's underlying prices.
    """
    if strike_round <= 0:
        raise InvalidSpec("strike_round must be positive")
    spots = chain.underlying if spots is None else spots
    dates = chain.quote_dates()
    groups = partition_dates(dates, buckets, partition)
    labels = _bucket_labels(groups, dates, partition)
    bucket_of = {d: b for b, g in enumerate(groups) for d in g}

    values: dict[tuple[int, float], list[float]] = defaultdict(list)
    strikes: set[float] = set()
    for q in chain:
        if abs(q.days_to_expiry - maturity_days) > maturity_tolerance_days:
            continue
        if q.open_interest < min_open_interest:
            continue
        if spots is None or q.quote_date not in spots:
            raise MissingSpot(f"no spot price for {q.quote_date}")
        key = (bucket_of[q.quote_date], round_strike(q.strike, strike_round))
        strikes.add(key[1])
        for side in ("bid", "ask"):
            res = _invert(_side_price(q, side), q, spots[q.quote_date], rate)
            if res.ok:
                values[key].append(res.sigma)
    strike_buckets = tuple(sorted(strikes))
    # fsum is exactly rounded, so cell means do not depend on quote order
    cells = {(b, k): (math.fsum(values[(b, k)]) / len(values[(b, k)]) if values.get((b, k)) else None)
             for b in range(buckets) for k in strike_buckets}
    return VolSurface(tuple(labels), strike_buckets, cells, {key: len(v) for key, v in values.items()})
