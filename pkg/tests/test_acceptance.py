"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line; the lines are printed as they are
produced (visible with ``-s``) and again in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from volengine.estimator import FitOptions, fit
from volengine.forecast import forecast_fixed
from volengine.garch_core import make_model, persistence, simulate, unconditional_variance
from volengine.ingest import OptionChain, OptionQuote
from volengine.msgarch import MsModel, fit_ms, ms_log_likelihood, simulate_ms, stationary_distribution
from volengine.options_iv import OK, BELOW_INTRINSIC, PricingInputs, bs_price, implied_vol, year_fraction
from volengine.selection import grid_search, information_criteria
from volengine.stats import (
    adf_test,
    arch_lm_test,
    jarque_bera_statistic,
    ljung_box_squared,
    scale_volatility,
    t_test_zero_mean,
)
from volengine.surface import build_temporal_surface, compute_smiles

from conftest import ALPHA, BETA, OMEGA, flat_chain
from test_msgarch import LOW, HIGH, enumerate_ll, random_model

RESULTS: list[str] = []


def record(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def table_model():
    return make_model("sgarch", OMEGA, (ALPHA,), (BETA,))


def test_01_criteria_per_observation():
    c = information_criteria(1061.39, 3, 578, "per_observation")
    ok = abs(c.aic + 3.6622) <= 1e-4 and abs(c.bic + 3.6396) <= 1e-4
    record(1, "criteria arithmetic per observation", ok, f"aic={c.aic:.6f} bic={c.bic:.6f}")


def test_02_criteria_raw():
    c = information_criteria(1146.9371, 8, 578, "raw")
    ok = abs(c.aic + 2277.8742) <= 1e-3 and abs(c.bic + 2242.9976) <= 1e-3
    record(2, "criteria arithmetic raw", ok, f"aic={c.aic:.4f} bic={c.bic:.4f}")


def test_03_stationary_distribution():
    pi = stationary_distribution(np.array([[0.7721, 0.2279], [0.5804, 0.4196]]))
    ok = abs(pi[0] - 0.7181) <= 5e-4 and abs(pi[1] - 0.2819) <= 5e-4
    record(3, "stationary distribution", ok, f"pi=({pi[0]:.5f}, {pi[1]:.5f})")


def test_04_scaling():
    month, year = scale_volatility(0.0533, 30), scale_volatility(0.0533, 365)
    ok = abs(month - 0.2919) <= 1e-3 and abs(year - 1.018) <= 2e-3
    record(4, "square-root-of-time scaling", ok, f"30d={month:.5f} 365d={year:.5f}")


def test_05_persistence():
    model = table_model()
    p, u = persistence(model), unconditional_variance(model)
    ok = p == 0.0833 + 0.8644 and abs(p - 0.9477) <= 1e-12 and abs(u - 1.912e-3) <= 1e-6
    record(5, "persistence and unconditional variance", ok, f"P={p!r} var={u:.6e}")


def test_06_jarque_bera():
    jb = jarque_bera_statistic(578, -0.3330, 5.6018)
    ok = abs(jb / 176.21 - 1) <= 0.03
    record(6, "Jarque-Bera", ok, f"JB={jb:.4f} ({100 * (jb / 176.21 - 1):+.2f}% of 176.21)")


def test_07_simulate_and_recover():
    model = table_model()
    start = time.perf_counter()
    hits = []
    for seed in range(1, 21):
        res = fit("sgarch", 1, 1, simulate(model, 5000, seed), FitOptions(compute_se=False))
        hits.append(abs(persistence(res.model) - 0.9477) <= 0.05)
    elapsed = time.perf_counter() - start
    ok = sum(hits) >= 18 and elapsed <= 60
    record(7, "simulate and recover", ok, f"{sum(hits)}/20 within 0.05, {elapsed:.1f}s")


def test_08_selection_consistency():
    model = table_model()
    start = time.perf_counter()
    picks = 0
    for seed in range(1, 51):
        report = grid_search(["sgarch"], simulate(model, 2000, seed), max_order=3, criterion="bic",
                             options=FitOptions(compute_se=False))
        picks += (report.best.p, report.best.q) == (1, 1)
    elapsed = time.perf_counter() - start
    ok = picks >= 30 and elapsed <= 600
    record(8, "selection consistency", ok, f"BIC picked (1,1) in {picks}/50, {elapsed:.0f}s")


def test_09_ms_enumeration_oracle():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(25):
        model = random_model(rng)
        r = 0.02 * rng.standard_normal(8)
        exact = enumerate_ll(model, r)
        worst = max(worst, abs(ms_log_likelihood(model, r)[0] / exact - 1))
    record(9, "MS path-enumeration oracle", worst <= 1e-9, f"worst relative error {worst:.2e}")


def test_10_ms_nesting():
    switching = MsModel((LOW, HIGH), np.array([[0.98, 0.02], [0.04, 0.96]]))
    gaps = []
    for seed in range(1, 11):
        r = simulate(table_model(), 1000, seed) if seed % 2 else simulate_ms(switching, 1000, seed)[0]
        ms = fit_ms(r, FitOptions(compute_se=False))
        one = fit("sgarch", 1, 1, r, FitOptions(compute_se=False))
        gaps.append(ms.log_likelihood - one.log_likelihood)
    ok = min(gaps) >= -1e-6
    record(10, "MS nesting", ok, f"min LL(ms) - LL(sgarch) = {min(gaps):.3e} over 10 datasets")


def insensitive(x, kind, price):
    """True when moving sigma by 1e-7 changes the double price by at most 4 ulps."""
    moved = (bs_price(x.with_sigma(x.sigma + d), kind) for d in (-1e-7, 1e-7))
    return max(abs(m - price) for m in moved) <= 4 * math.ulp(price)


def test_11_bsm_round_trip():
    spot, rate = 100.0, 0.02
    start = time.perf_counter()
    worst, worst_parity, failures, points, flat = 0.0, 0.0, {}, 0, 0
    for sigma in np.linspace(0.05, 3.0, 12):
        for m in np.geomspace(0.2, 5.0, 9):
            for tau in np.geomspace(1 / 365, 2.0, 7):
                x = PricingInputs(spot, spot / m, float(tau), rate, float(sigma))
                call, put = bs_price(x, "call"), bs_price(x, "put")
                worst_parity = max(worst_parity, abs(call - put - (spot - x.discounted_strike)))
                for kind, price in (("call", call), ("put", put)):
                    points += 1
                    res = implied_vol(price, x, kind)
                    if res.status != OK:
                        failures[res.status] = failures.get(res.status, 0) + 1
                        flat += insensitive(x, kind, price)
                    else:
                        worst = max(worst, abs(res.sigma - sigma))
    elapsed = time.perf_counter() - start
    ok = not failures and worst <= 1e-7 and worst_parity <= 1e-10 * spot and elapsed <= 5 and points >= 500
    record(11, "BSM round trip", ok,
           f"{points} points, non-ok {failures or 0} ({flat} priced identically to within 4 ulps "
           f"at sigma +/- 1e-7), worst ok error {worst:.2e}, "
           f"parity {worst_parity:.2e}, {elapsed:.2f}s")


def test_12_flat_surface():
    chain = flat_chain(sigma=0.7, n_dates=40)
    d0 = chain.quote_dates()[0]
    expiry = next(q.expiry_date for q in chain.on(d0))
    cheap = OptionQuote(d0, expiry, "call", 1000.0, 1.0, 2.0, 100)  # far below intrinsic
    chain = OptionChain(chain.quotes + (cheap,), chain.underlying)
    surface = build_temporal_surface(chain)
    cells = list(surface.present().values())
    smile_points = [p for d in chain.quote_dates()
                    for c in compute_smiles(chain, d, chain.underlying[d]) for p in c.points]
    ok_points = [p for p in smile_points if p.iv is not None]
    flagged = [p for p in smile_points if p.strike == 1000.0]
    worst = max(abs(v - 0.7) for v in cells + [p.iv for p in ok_points])
    ok = (worst <= 1e-6 and len(ok_points) == len(smile_points) - 3 and len(flagged) == 3
          and all(p.status == BELOW_INTRINSIC and p.iv is None for p in flagged))
    record(12, "flat surface recovery", ok,
           f"{len(cells)} cells, {len(ok_points)} smile points, worst {worst:.2e}, "
           f"{len(flagged)} below_intrinsic points kept")


def test_13_forecast_convergence():
    model = table_model()
    r = simulate(model, 1000, 13)
    path = forecast_fixed(model, r, 365)
    gap = np.abs(path.sigma2 - path.long_run)
    h = np.arange(1, 366)
    slope = np.polyfit(h, np.log(gap), 1)[0]
    ok = abs(slope - math.log(0.9477)) <= 1e-3 and gap[-1] < gap[0]
    record(13, "forecast convergence", ok, f"slope {slope:.6f} vs ln(0.9477) = {math.log(0.9477):.6f}")


def test_14_test_calibration():
    n, sims, rng = 500, 1000, np.random.default_rng(14)
    rejects = {"adf": 0, "arch_lm": 0, "ljung_box": 0, "t_test": 0}
    for _ in range(sims):
        z = rng.standard_normal(n)
        rejects["adf"] += adf_test(np.cumsum(rng.standard_normal(n))).reject_at_5pct
        rejects["arch_lm"] += arch_lm_test(z).reject_at_5pct
        rejects["ljung_box"] += ljung_box_squared(z).reject_at_5pct
        rejects["t_test"] += t_test_zero_mean(z).reject_at_5pct
    sizes = {k: v / sims for k, v in rejects.items()}
    power = sum(arch_lm_test(simulate(table_model(), 2000, s)).reject_at_5pct for s in range(1, 201)) / 200
    ok = all(0.035 <= s <= 0.065 for s in sizes.values()) and power > 0.95
    detail = ", ".join(f"{k} size {v:.3f}" for k, v in sizes.items())
    record(14, "test calibration", ok, f"{detail}, ARCH-LM power {power:.3f}")
