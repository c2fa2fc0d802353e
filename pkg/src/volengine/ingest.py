"""Loading, validation and windowing of price series and option-chain files.

File formats
------------
``prices.csv``
    header ``date,price``; ISO dates (``YYYY-MM-DD``); decimal prices with a
    ``.`` separator and no thousands separators.
``options.csv``
    header ``quote_date,expiry_date,type,strike,bid,ask,open_interest``; same
    date/decimal rules; ``type`` is ``call`` or ``put`` (any case).

Every loader failure is raised as a :class:`~volengine.errors.DataError`
subclass whose message starts with ``line N:``; arbitrary bytes never escape
as another exception type.
"""
from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from datetime import date
from typing import BinaryIO, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import (
    CrossedQuote,
    DuplicateDate,
    DuplicateQuote,
    EmptyWindow,
    ExpiryBeforeQuote,
    InvalidSpec,
    MalformedRow,
    NegativeOpenInterest,
    NonPositivePrice,
    NumericalError,
    TooFewObservations,
)

Source = Union[bytes, bytearray, BinaryIO, str, os.PathLike]

PRICE_HEADER = ("date", "price")
OPTION_HEADER = ("quote_date", "expiry_date", "type", "strike", "bid", "ask", "open_interest")
OPTION_KINDS = ("call", "put")

_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$", re.ASCII)
_INTEGER = re.compile(r"^[+-]?\d+$", re.ASCII)
_ISO_DAY = re.compile(r"^\d{4}-\d{2}-\d{2}$", re.ASCII)


def _to_day_array(days: Sequence[date] | np.ndarray) -> np.ndarray:
    return np.asarray(days, dtype="datetime64[D]")


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Validated, strictly date-ordered positive prices (USD)."""

    dates: np.ndarray
    prices: np.ndarray

    def __post_init__(self) -> None:
        dates = _to_day_array(self.dates)
        prices = np.asarray(self.prices, dtype=float)
        if dates.ndim != 1 or dates.shape != prices.shape:
            raise InvalidSpec("dates and prices must be 1-d arrays of equal length")
        if len(prices) < 2:
            raise TooFewObservations(f"a price series needs at least 2 points, got {len(prices)}")
        if np.any(np.diff(dates).astype(int) <= 0):
            raise DuplicateDate("dates must be strictly increasing")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise NonPositivePrice("every price must be finite and > 0")
        dates.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return len(self.prices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return np.array_equal(self.dates, other.dates) and np.array_equal(self.prices, other.prices)

    @property
    def start(self) -> date:
        return self.dates[0].item()

    @property
    def end(self) -> date:
        return self.dates[-1].item()

    def as_dict(self) -> dict[date, float]:
        return {d.item(): float(p) for d, p in zip(self.dates, self.prices)}


@dataclass(frozen=True)
class OptionQuote:
    quote_date: date
    expiry_date: date
    kind: str
    strike: float
    bid: float
    ask: float
    open_interest: int

    def __post_init__(self) -> None:
        if self.kind not in OPTION_KINDS:
            raise MalformedRow(f"option type must be call or put, got {self.kind!r}")
        if not self.strike > 0:
            raise MalformedRow(f"strike must be > 0, got {self.strike}")
        if not self.bid >= 0:
            raise MalformedRow(f"bid must be >= 0, got {self.bid}")
        if self.bid > self.ask:
            raise CrossedQuote(f"bid {self.bid} exceeds ask {self.ask}")
        if self.open_interest < 0:
            raise NegativeOpenInterest(f"open interest {self.open_interest} is negative")
        if self.expiry_date < self.quote_date:
            raise ExpiryBeforeQuote(f"expiry {self.expiry_date} precedes quote date {self.quote_date}")

    @property
    def key(self) -> tuple[date, date, str, float]:
        return (self.quote_date, self.expiry_date, self.kind, self.strike)

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)

    @property
    def days_to_expiry(self) -> int:
        return (self.expiry_date - self.quote_date).days


@dataclass(frozen=True)
class OptionChain:
    """Option quotes for any number of quote dates, plus optional spot prices."""

    quotes: tuple[OptionQuote, ...]
    underlying: Mapping[date, float] | None = field(default=None, compare=True)

    def __post_init__(self) -> None:
        object.__setattr__(self, "quotes", tuple(self.quotes))
        seen: set[tuple] = set()
        for q in self.quotes:
            if q.key in seen:
                raise DuplicateQuote(f"duplicate quote key {q.key}")
            seen.add(q.key)
        if self.underlying is not None:
            object.__setattr__(self, "underlying", dict(self.underlying))

    def __len__(self) -> int:
        return len(self.quotes)

    def __iter__(self) -> Iterator[OptionQuote]:
        return iter(self.quotes)

    def quote_dates(self) -> list[date]:
        return sorted({q.quote_date for q in self.quotes})

    def on(self, quote_date: date) -> list[OptionQuote]:
        return [q for q in self.quotes if q.quote_date == quote_date]


# --------------------------------------------------------------------------- #
# CSV parsing
# --------------------------------------------------------------------------- #

def _read_text(source: Source) -> str:
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
        if isinstance(raw, str):
            return raw
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedRow(f"line 1: input is not UTF-8 text ({exc.reason})") from None


def _rows(source: Source, header: tuple[str, ...]) -> Iterator[tuple[int, list[str]]]:
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        first = next(reader, None)
        if first is None or tuple(c.strip().lower() for c in first) != header:
            raise MalformedRow(f"line 1: expected header {','.join(header)!r}, got {first!r}")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, [c.strip() for c in row]
    except csv.Error as exc:
        raise MalformedRow(f"line {reader.line_num}: {exc}") from None


def _parse_day(text: str, lineno: int, name: str) -> date:
    if not _ISO_DAY.match(text):
        raise MalformedRow(f"line {lineno}: {name} {text!r} is not YYYY-MM-DD")
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise MalformedRow(f"line {lineno}: {name} {text!r} is not a valid date") from None


def _parse_decimal(text: str, lineno: int, name: str) -> float:
    if not _DECIMAL.match(text):
        raise MalformedRow(f"line {lineno}: {name} {text!r} is not a decimal number")
    value = float(text)
    if not np.isfinite(value):
        raise MalformedRow(f"line {lineno}: {name} {text!r} is out of range")
    return value


def load_price_series(source: Source) -> PriceSeries:
    """Parse ``date,price`` CSV content into a :class:`PriceSeries`.

    Rows are sorted by date after parsing. Duplicate dates raise
    :class:`DuplicateDate` and non-positive prices :class:`NonPositivePrice`,
    each naming the CSV line.
    """
    records: list[tuple[date, float, int]] = []
    for lineno, (day_text, price_text) in _rows(source, PRICE_HEADER):
        day = _parse_day(day_text, lineno, "date")
        price = _parse_decimal(price_text, lineno, "price")
        if price <= 0:
            raise NonPositivePrice(f"line {lineno}: price {price_text} is not > 0")
        records.append((day, price, lineno))
    records.sort(key=lambda r: (r[0], r[2]))
    for prev, cur in zip(records, records[1:]):
        if prev[0] == cur[0]:
            raise DuplicateDate(f"line {cur[2]}: date {cur[0]} already seen on line {prev[2]}")
    if len(records) < 2:
        raise TooFewObservations(f"line {len(records) + 1}: a price series needs at least 2 rows")
    return PriceSeries(_to_day_array([r[0] for r in records]), np.array([r[1] for r in records]))


def load_option_chain(source: Source, underlying: Mapping[date, float] | None = None) -> OptionChain:
    """Parse an ``options.csv`` file into a validated :class:`OptionChain`."""
    quotes: list[OptionQuote] = []
    seen: dict[tuple, int] = {}
    for lineno, row in _rows(source, OPTION_HEADER):
        qd_text, exp_text, kind_text, strike_text, bid_text, ask_text, oi_text = row
        quote_date = _parse_day(qd_text, lineno, "quote_date")
        expiry = _parse_day(exp_text, lineno, "expiry_date")
        kind = kind_text.lower()
        if kind not in OPTION_KINDS:
            raise MalformedRow(f"line {lineno}: type {kind_text!r} is not call or put")
        strike = _parse_decimal(strike_text, lineno, "strike")
        bid = _parse_decimal(bid_text, lineno, "bid")
        ask = _parse_decimal(ask_text, lineno, "ask")
        if not _INTEGER.match(oi_text):
            raise MalformedRow(f"line {lineno}: open_interest {oi_text!r} is not an integer")
        open_interest = int(oi_text)
        try:
            quote = OptionQuote(quote_date, expiry, kind, strike, bid, ask, open_interest)
        except (MalformedRow, CrossedQuote, NegativeOpenInterest, ExpiryBeforeQuote) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        if quote.key in seen:
            raise DuplicateQuote(f"line {lineno}: quote {quote.key} already seen on line {seen[quote.key]}")
        seen[quote.key] = lineno
        quotes.append(quote)
    return OptionChain(tuple(quotes), underlying)


def _fmt(value: float) -> str:
    # repr() is the shortest string that parses back to the same double.
    return repr(float(value))


def dump_price_series(series: PriceSeries) -> bytes:
    lines = [",".join(PRICE_HEADER)]
    lines += [f"{d.item().isoformat()},{_fmt(p)}" for d, p in zip(series.dates, series.prices)]
    return ("\n".join(lines) + "\n").encode()


def dump_option_chain(chain: OptionChain) -> bytes:
    lines = [",".join(OPTION_HEADER)]
    for q in chain.quotes:
        lines.append(
            f"{q.quote_date.isoformat()},{q.expiry_date.isoformat()},{q.kind},"
            f"{_fmt(q.strike)},{_fmt(q.bid)},{_fmt(q.ask)},{q.open_interest}"
        )
    return ("\n".join(lines) + "\n").encode()


def slice_window(series: PriceSeries, start: date, end: date) -> PriceSeries:
    """Keep observations with ``start <= date <= end``.

    Prices are sliced before returns are formed, so a window of ``m`` prices
    yields ``m - 1`` returns, each stamped with the later price's date.
    """
    if start > end:
        raise EmptyWindow(f"window start {start} is after end {end}")
    lo, hi = np.datetime64(start, "D"), np.datetime64(end, "D")
    mask = (series.dates >= lo) & (series.dates <= hi)
    if mask.sum() < 2:
        raise EmptyWindow(f"window {start}..{end} keeps {int(mask.sum())} prices; need at least 2")
    if mask.all():
        return series
    return PriceSeries(series.dates[mask], series.prices[mask])


def generate_fixture(model, n: int, seed: int, start_price: float = 100.0,
                     start_date: date = date(2013, 4, 28)) -> PriceSeries:
    """Synthetic daily prices driven by a simulated GARCH-family return path.

    ``n`` prices on consecutive calendar days beginning at ``start_date``; the
    first price is ``start_price`` and the remaining ``n - 1`` follow
    ``start_price * exp(cumsum(returns))``.
    """
    from .garch_core import simulate

    if n < 2:
        raise InvalidSpec(f"fixture length must be >= 2, got {n}")
    if not (np.isfinite(start_price) and start_price > 0):
        raise InvalidSpec(f"start_price must be > 0, got {start_price}")
    try:
        returns = simulate(model, n - 1, seed)
    except (NumericalError, ValueError) as exc:
        raise InvalidSpec(f"cannot simulate fixture: {exc}") from None
    log_path = np.concatenate(([0.0], np.cumsum(returns.values)))
    prices = start_price * np.exp(log_path)
    dates = np.datetime64(start_date, "D") + np.arange(n)
    return PriceSeries(dates, prices)


def daily_dates(start: date, n: int) -> np.ndarray:
    return np.datetime64(start, "D") + np.arange(n)


__all__ = [
    "PriceSeries", "OptionQuote", "OptionChain", "load_price_series", "load_option_chain",
    "dump_price_series", "dump_option_chain", "slice_window", "generate_fixture", "daily_dates",
]
