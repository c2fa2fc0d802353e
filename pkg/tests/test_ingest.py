from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volengine.errors import (
    CrossedQuote,
    DataError,
    DuplicateDate,
    DuplicateQuote,
    EmptyWindow,
    ExpiryBeforeQuote,
    InvalidSpec,
    MalformedRow,
    NegativeOpenInterest,
    NonPositivePrice,
)
from volengine.garch_core import make_model
from volengine.ingest import (
    OptionChain,
    OptionQuote,
    PriceSeries,
    dump_option_chain,
    dump_price_series,
    generate_fixture,
    load_option_chain,
    load_price_series,
    slice_window,
)
from volengine.stats import log_returns

OPTION_HEADER = b"quote_date,expiry_date,type,strike,bid,ask,open_interest\n"


def test_three_rows_parse():
    s = load_price_series(b"date,price\n2019-01-01,100\n2019-01-02,110\n2019-01-03,99\n")
    assert len(s) == 3
    assert s.prices.tolist() == [100.0, 110.0, 99.0]


def test_rows_sorted_on_load():
    s = load_price_series(b"date,price\n2019-01-03,99\n2019-01-01,100\n2019-01-02,110\n")
    assert s.prices.tolist() == [100.0, 110.0, 99.0]


def test_duplicate_date_names_line():
    with pytest.raises(DuplicateDate, match="line 3"):
        load_price_series(b"date,price\n2019-01-01,100\n2019-01-02,110\n2019-01-02,99\n")


@pytest.mark.parametrize("price", ["0", "-5", "0.0"])
def test_non_positive_price(price):
    with pytest.raises(NonPositivePrice):
        load_price_series(f"date,price\n2019-01-01,100\n2019-01-02,{price}\n".encode())


@pytest.mark.parametrize("body", [
    b"date,value\n2019-01-01,1\n2019-01-02,2\n",
    b"date,price\n2019-01-01,1,7\n2019-01-02,2\n",
    b"date,price\n2019/01/01,1\n2019-01-02,2\n",
    b"date,price\n2019-01-01,1e\n2019-01-02,2\n",
    b"date,price\n2019-01-01,1,000\n",
    b"date,price\n2019-02-30,1\n2019-03-01,2\n",
    b"\xff\xfe\x00",
    b"",
])
def test_malformed_inputs(body):
    with pytest.raises(MalformedRow):
        load_price_series(body)


def test_single_row_is_too_short():
    with pytest.raises(DataError):
        load_price_series(b"date,price\n2019-01-01,1\n")


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200))
def test_loaders_total_on_arbitrary_bytes(data):
    for loader in (load_price_series, load_option_chain):
        try:
            loader(data)
        except DataError:
            pass


def test_option_row_parses_kind_case_insensitively():
    chain = load_option_chain(OPTION_HEADER + b"2019-07-31,2019-12-27,CALL,10000,900.5,950,12\n")
    assert len(chain) == 1
    q = chain.quotes[0]
    assert (q.kind, q.strike, q.bid, q.ask, q.open_interest) == ("call", 10000.0, 900.5, 950.0, 12)
    assert q.days_to_expiry == 149


@pytest.mark.parametrize("row,error", [
    (b"2019-07-31,2019-12-27,call,10000,5,4,1\n", CrossedQuote),
    (b"2019-07-31,2019-12-27,put,10000,4,5,-1\n", NegativeOpenInterest),
    (b"2019-06-01,2019-01-01,call,10000,4,5,1\n", ExpiryBeforeQuote),
    (b"2019-07-31,2019-12-27,straddle,10000,4,5,1\n", MalformedRow),
    (b"2019-07-31,2019-12-27,call,0,4,5,1\n", MalformedRow),
])
def test_option_validation(row, error):
    with pytest.raises(error):
        load_option_chain(OPTION_HEADER + row)


def test_duplicate_quote_key():
    row = b"2019-07-31,2019-12-27,call,10000,4,5,1\n"
    with pytest.raises(DuplicateQuote):
        load_option_chain(OPTION_HEADER + row + row)


def test_fixture_two_prices_starts_at_start_price(table_model):
    s = generate_fixture(table_model, 2, seed=3, start_price=250.0)
    assert len(s) == 2 and s.prices[0] == 250.0


def test_fixture_byte_identical(table_model):
    a = dump_price_series(generate_fixture(table_model, 300, seed=9))
    b = dump_price_series(generate_fixture(table_model, 300, seed=9))
    assert a == b


def test_fixture_iid_variance():
    model = make_model("sgarch", 1e-4, [0.0], [0.0])
    r = log_returns(generate_fixture(model, 10_000, seed=1)).values
    assert abs(r.var(ddof=1) / 1e-4 - 1) < 0.05


def test_fixture_rejects_bad_model(table_model):
    with pytest.raises(InvalidSpec):
        generate_fixture(table_model, 1, seed=1)
    with pytest.raises(InvalidSpec):
        generate_fixture(make_model("sgarch", 1e-4, [0.6], [0.6]), 10, seed=1)


def _series(values, start=date(2019, 1, 1)):
    return PriceSeries(np.datetime64(start, "D") + np.arange(len(values)), np.asarray(values, float))


def test_slice_full_range_is_identity():
    s = _series([1.0, 2.0, 3.0, 4.0])
    assert slice_window(s, s.start, s.end) == s


def test_slice_inclusive_and_errors():
    s = _series(np.arange(1.0, 11.0))
    w = slice_window(s, date(2019, 1, 3), date(2019, 1, 5))
    assert w.prices.tolist() == [3.0, 4.0, 5.0]
    with pytest.raises(EmptyWindow):
        slice_window(s, date(2019, 1, 5), date(2019, 1, 3))
    with pytest.raises(EmptyWindow):
        slice_window(s, date(2019, 1, 10), date(2019, 2, 1))


def test_window_return_counts():
    # daily prices from 2013: returns are dated at the later price, prices sliced first
    s = _series(np.linspace(100, 200, 2500), start=date(2013, 4, 28))
    assert len(log_returns(slice_window(s, date(2018, 1, 1), date(2019, 7, 31)))) == 576
    assert len(log_returns(slice_window(s, date(2019, 1, 1), date(2019, 7, 31)))) == 211


days = st.lists(st.integers(0, 5000), min_size=2, max_size=40, unique=True)


@settings(max_examples=100, deadline=None)
@given(days, st.data())
def test_price_round_trip(offsets, data):
    prices = data.draw(st.lists(st.floats(1e-6, 1e9, allow_nan=False), min_size=len(offsets),
                                max_size=len(offsets)))
    dates = np.sort(np.datetime64("2000-01-01", "D") + np.array(offsets))
    s = PriceSeries(dates, prices)
    assert load_price_series(dump_price_series(s)) == s
    assert slice_window(s, s.start, s.end) == s


quotes = st.builds(
    lambda qd, gap, kind, strike, bid, spread, oi: OptionQuote(
        date(2019, 1, 1).fromordinal(date(2019, 1, 1).toordinal() + qd),
        date(2019, 1, 1).fromordinal(date(2019, 1, 1).toordinal() + qd + gap),
        kind, strike, bid, bid + spread, oi),
    st.integers(0, 30), st.integers(0, 400), st.sampled_from(["call", "put"]),
    st.floats(1.0, 1e5), st.floats(0.0, 1e4), st.floats(0.0, 1e3), st.integers(0, 10_000))


@settings(max_examples=100, deadline=None)
@given(st.lists(quotes, max_size=30, unique_by=lambda q: q.key))
def test_chain_round_trip(qs):
    chain = OptionChain(tuple(qs))
    back = load_option_chain(dump_option_chain(chain))
    assert sorted(back.quotes, key=lambda q: q.key) == sorted(chain.quotes, key=lambda q: q.key)
