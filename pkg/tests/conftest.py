import sys

import numpy as np
import pytest

from volengine.garch_core import make_model

# Published one-regime estimates used throughout as a realistic parameter set.
OMEGA, ALPHA, BETA = 1e-4, 0.0833, 0.8644


@pytest.fixture
def table_model():
    return make_model("sgarch", OMEGA, [ALPHA], [BETA])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def flat_chain(sigma=0.7, n_dates=40, spot0=10_000.0, strikes=(6000, 8000, 9500, 10_000, 10_500, 12_000, 15_000),
               expiry_days=(30, 150, 180, 210), rate=0.0, spread=0.0, seed=0):
    """Synthetic chain priced at a flat volatility, with a spot path and spots map."""
    from datetime import date, timedelta

    from volengine.ingest import OptionChain, OptionQuote
    from volengine.options_iv import PricingInputs, bs_price, year_fraction

    rng = np.random.default_rng(seed)
    start = date(2019, 1, 1)
    quotes, spots = [], {}
    spot = spot0
    for i in range(n_dates):
        day = start + timedelta(days=i)
        spot *= float(np.exp(0.02 * rng.standard_normal()))
        spots[day] = spot
        for days in expiry_days:
            expiry = day + timedelta(days=days)
            for kind in ("call", "put"):
                for k in strikes:
                    x = PricingInputs(spot, float(k), year_fraction(days), rate, sigma)
                    price = bs_price(x, kind)
                    quotes.append(OptionQuote(day, expiry, kind, float(k), price * (1 - spread),
                                              price * (1 + spread), int(rng.integers(0, 500))))
    return OptionChain(tuple(quotes), spots)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS):
            terminalreporter.write_line(line)
