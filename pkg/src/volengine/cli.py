"""Command-line interface: ``volengine <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure. Every failure prints one ``error: ...`` line to stderr.
CSV floats carry 6 significant digits; JSON floats full precision, under a
top-level ``schema_version``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import date
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .errors import DataError, InvalidSpec, NumericalError, VolEngineError
from .estimator import FitOptions, fit
from .forecast import ANNUALIZATION_DAYS, forecast_fixed, forecast_mobile
from .garch_core import FAMILIES, MAX_ORDER, make_model
from .ingest import dump_price_series, generate_fixture, load_option_chain, load_price_series, slice_window
from .msgarch import fit_ms, ms_forecast
from .options_iv import PricingInputs, implied_vol, year_fraction
from .selection import CONVENTIONS, CRITERIA, grid_search, information_criteria
from .stats import (
    DEFAULT_ADF_LAGS,
    DEFAULT_ARCH_LAGS,
    DEFAULT_HISTVOL_WINDOW,
    DEFAULT_LJUNG_BOX_LAGS,
    adf_test,
    arch_lm_test,
    describe,
    historical_volatility,
    jarque_bera,
    ljung_box_squared,
    log_returns,
    scale_volatility,
    t_test_zero_mean,
)
from .surface import (
    DEFAULT_BUCKETS,
    DEFAULT_MATURITY_DAYS,
    DEFAULT_MATURITY_TOLERANCE,
    DEFAULT_STRIKE_ROUND,
    PARTITIONS,
    build_temporal_surface,
    compute_smiles,
    spread_report,
)

SCHEMA_VERSION = 1
MS_FAMILY = "msgarch"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------- #
# Output helpers
# --------------------------------------------------------------------------- #

def _num(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".6g") if math.isfinite(value) else ""
    return str(value)


def _clean(obj: Any) -> Any:
    """Make a value JSON-safe: non-finite floats become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _clean(obj.item())
    if isinstance(obj, date):
        return obj.isoformat()
    return obj


def _write_json(path: Path, payload: dict) -> None:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(_clean(body), indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _day(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid date {text!r}, expected YYYY-MM-DD") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None


def _order(text: str) -> int:
    value = int(text)
    if not 1 <= value <= MAX_ORDER:
        raise argparse.ArgumentTypeError(f"order must be in 1..{MAX_ORDER}")
    return value


# --------------------------------------------------------------------------- #
# Shared loading
# --------------------------------------------------------------------------- #

def _returns(args):
    series = load_price_series(args.input)
    start = args.start or series.start
    end = args.end or series.end
    return log_returns(slice_window(series, start, end))


def _options(args) -> FitOptions:
    return FitOptions(n_starts=args.starts)


def _criteria(ll: float, k: int, n: int) -> dict:
    return {c: information_criteria(ll, k, n, c).to_dict() for c in CONVENTIONS}


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #

def cmd_stats(args) -> None:
    r = _returns(args)
    tests = {
        "jarque_bera": jarque_bera(r),
        "t_test_zero_mean": t_test_zero_mean(r),
        "adf": adf_test(r, args.adf_lags),
        "arch_lm": arch_lm_test(r, args.arch_lags),
        "ljung_box_squared": ljung_box_squared(r, args.lb_lags),
    }
    _write_json(args.output or Path("stats-report.json"), {
        "window": {"start": r.dates[0].item(), "end": r.dates[-1].item()},
        "summary": describe(r).to_dict(),
        "tests": {name: t.to_dict() for name, t in tests.items()},
    })


def cmd_histvol(args) -> None:
    vol = historical_volatility(_returns(args), args.window)
    header = ["date", "sigma"] + (["sigma_annual"] if args.annualize else [])
    rows = []
    for d, s in zip(vol.dates, vol.sigma):
        row = [d.item().isoformat(), float(s)]
        if args.annualize:
            row.append(scale_volatility(float(s), ANNUALIZATION_DAYS))
        rows.append(row)
    _write_csv(args.output or Path("histvol.csv"), header, rows)


def cmd_fit(args) -> None:
    r = _returns(args)
    if args.family == MS_FAMILY:
        res = fit_ms(r, _options(args))
        _write_json(args.output or Path("msfit-report.json"), {
            "family": MS_FAMILY, **res.to_dict(),
            "criteria": _criteria(res.log_likelihood, res.k, res.n),
        })
        return
    res = fit(args.family, args.p, args.q, r, _options(args))
    _write_json(args.output or Path("fit-report.json"), {
        **res.to_dict(), "criteria": _criteria(res.log_likelihood, res.k, res.n),
    })


def cmd_select(args) -> None:
    r = _returns(args)
    families = args.family or ["sgarch"]
    report = grid_search(families, r, args.max_order, args.criterion, args.convention,
                         _options(args), workers=args.workers)
    out = args.output or Path("grid-report.csv")
    rows = []
    for row in report.rows:
        fitted = row.fit
        rows.append([row.family, row.p, row.q, row.converged,
                     fitted.log_likelihood if fitted else None, fitted.k if fitted else None,
                     row.criteria.aic if fitted else None, row.criteria.bic if fitted else None])
    _write_csv(out, ["family", "p", "q", "converged", "ll", "k", "aic", "bic"], rows)
    _write_json(out.with_suffix(".json"), report.to_dict())


def cmd_forecast(args) -> None:
    r = _returns(args)
    if args.family == MS_FAMILY:
        if args.scheme != "fixed":
            raise InvalidSpec("the two-regime model supports the fixed scheme only")
        path = ms_forecast(fit_ms(r, _options(args)), args.horizon)
    elif args.scheme == "fixed":
        path = forecast_fixed(fit(args.family, args.p, args.q, r, _options(args)), r,
                              args.horizon, seed=args.seed)
    else:
        path = forecast_mobile(args.family, args.p, args.q, r, args.horizon,
                               refit_every=args.refit_every, seed=args.seed, options=_options(args))
    header = ["h", "sigma2", "sigma"] + (["sigma_annual"] if args.annualize else [])
    rows = []
    for h, s2, s in path.rows():
        row = [h, s2, s]
        if args.annualize:
            row.append(scale_volatility(s, ANNUALIZATION_DAYS))
        rows.append(row)
    _write_csv(args.output or Path("forecast.csv"), header, rows)


def cmd_iv(args) -> None:
    if (args.tau is None) == (args.days is None):
        raise UsageError("iv: give exactly one of --tau or --days")
    tau = args.tau if args.tau is not None else year_fraction(args.days)
    res = implied_vol(args.price, PricingInputs(args.spot, args.strike, tau, args.rate), args.kind)
    payload = {"schema_version": SCHEMA_VERSION, "status": res.status, "sigma": res.sigma,
               "iterations": res.iterations}
    text = json.dumps(_clean(payload)) + "\n"
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _spots(args) -> dict[date, float] | None:
    if args.prices is None:
        return None
    series = load_price_series(args.prices)
    return {d.item(): float(p) for d, p in zip(series.dates, series.prices)}


def cmd_smiles(args) -> None:
    chain = load_option_chain(args.options)
    spots = _spots(args)
    spot = args.spot
    if spot is None:
        if spots is None or args.date not in spots:
            raise InvalidSpec(f"no spot for {args.date}: pass --spot or a --prices file covering it")
        spot = spots[args.date]
    curves = compute_smiles(chain, args.date, spot, args.rate, args.min_open_interest)
    rows = [[c.expiry_date.isoformat(), c.kind, c.side, p.strike, p.iv, p.status]
            for c in curves for p in c.points]
    _write_csv(args.output or Path("smiles.csv"), ["expiry", "kind", "side", "strike", "iv", "status"], rows)


def cmd_spreads(args) -> None:
    chain = load_option_chain(args.options)
    rows = [[r.expiry.isoformat(), r.kind, r.strike, r.spread, r.open_interest]
            for r in spread_report(chain, args.date)]
    _write_csv(args.output or Path("spreads.csv"), ["expiry", "kind", "strike", "spread", "open_interest"], rows)


def cmd_surface(args) -> None:
    chain = load_option_chain(args.options)
    surf = build_temporal_surface(
        chain, _spots(args), args.rate, args.maturity_days, args.maturity_tolerance, args.buckets,
        args.strike_round, args.min_open_interest, args.partition)
    rows = [[start.isoformat(), end.isoformat(), k, iv] for start, end, k, iv in surf.rows()]
    _write_csv(args.output or Path("surface.csv"), ["bucket_start", "bucket_end", "strike", "iv"], rows)


def cmd_simulate(args) -> None:
    model = make_model(args.family, args.omega, args.alpha, args.beta, args.gamma or (),
                       args.delta)
    series = generate_fixture(model, args.n, args.seed, args.start_price, args.start_date)
    (args.output or Path("prices.csv")).write_bytes(dump_price_series(series))


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #

def _add_window(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, type=Path, help="prices.csv (date,price)")
    p.add_argument("--from", dest="start", type=_day, help="first price date kept (inclusive)")
    p.add_argument("--to", dest="end", type=_day, help="last price date kept (inclusive)")


def _add_model(p: argparse.ArgumentParser, allow_ms: bool) -> None:
    choices = FAMILIES + ((MS_FAMILY,) if allow_ms else ())
    p.add_argument("--family", default="sgarch", choices=choices)
    p.add_argument("--p", type=_order, default=1, help="variance (beta) lags")
    p.add_argument("--q", type=_order, default=1, help="shock (alpha) lags")


def _add_fit_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--starts", type=int, default=FitOptions().n_starts, help="optimizer starts")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", type=Path, help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="volengine", description="Volatility analytics: statistics, GARCH, implied volatility.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="descriptive statistics and diagnostic tests")
    _add_window(p)
    p.add_argument("--adf-lags", type=int, default=DEFAULT_ADF_LAGS)
    p.add_argument("--arch-lags", type=int, default=DEFAULT_ARCH_LAGS)
    p.add_argument("--lb-lags", type=int, default=DEFAULT_LJUNG_BOX_LAGS)
    _add_output(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("histvol", help="rolling historical volatility")
    _add_window(p)
    p.add_argument("--window", type=int, default=DEFAULT_HISTVOL_WINDOW)
    p.add_argument("--annualize", action="store_true")
    _add_output(p)
    p.set_defaults(func=cmd_histvol)

    p = sub.add_parser("fit", help="fit one model")
    _add_window(p)
    _add_model(p, allow_ms=True)
    _add_fit_options(p)
    _add_output(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="grid search over families and orders")
    _add_window(p)
    p.add_argument("--family", action="append", choices=FAMILIES, help="repeatable; default sgarch")
    p.add_argument("--max-order", type=_order, default=MAX_ORDER)
    p.add_argument("--criterion", choices=CRITERIA, default="bic")
    p.add_argument("--convention", choices=CONVENTIONS, default="per_observation")
    p.add_argument("--workers", type=int, default=1)
    _add_fit_options(p)
    _add_output(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("forecast", help="conditional-variance forecast")
    _add_window(p)
    _add_model(p, allow_ms=True)
    p.add_argument("--horizon", type=int, default=365)
    p.add_argument("--scheme", choices=("fixed", "mobile"), default="fixed")
    p.add_argument("--refit-every", type=int, default=21)
    p.add_argument("--annualize", action="store_true")
    p.add_argument("--seed", type=int, default=42, help="seeds simulation forecasts and pseudo-returns")
    _add_fit_options(p)
    _add_output(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("iv", help="invert one option price")
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--price", type=float, required=True)
    p.add_argument("--tau", type=float, help="year fraction")
    p.add_argument("--days", type=float, help="calendar days to expiry")
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--kind", choices=("call", "put"), default="call")
    _add_output(p)
    p.set_defaults(func=cmd_iv)

    for name, func, helptext in (("smiles", cmd_smiles, "implied-volatility smiles for one date"),
                                 ("spreads", cmd_spreads, "bid-ask spreads and open interest")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--options", required=True, type=Path, help="options.csv")
        p.add_argument("--date", required=True, type=_day)
        if name == "smiles":
            p.add_argument("--spot", type=float)
            p.add_argument("--prices", type=Path, help="prices.csv supplying the spot")
            p.add_argument("--rate", type=float, default=0.0)
            p.add_argument("--min-open-interest", type=int, default=0)
        _add_output(p)
        p.set_defaults(func=func)

    p = sub.add_parser("surface", help="time-bucket by strike implied-volatility surface")
    p.add_argument("--options", required=True, type=Path)
    p.add_argument("--prices", type=Path, help="prices.csv supplying spots per quote date")
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--maturity-days", type=int, default=DEFAULT_MATURITY_DAYS)
    p.add_argument("--maturity-tolerance", type=int, default=DEFAULT_MATURITY_TOLERANCE)
    p.add_argument("--buckets", type=int, default=DEFAULT_BUCKETS)
    p.add_argument("--strike-round", type=float, default=DEFAULT_STRIKE_ROUND)
    p.add_argument("--min-open-interest", type=int, default=0)
    p.add_argument("--partition", choices=PARTITIONS, default="count")
    _add_output(p)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("simulate", help="write a synthetic prices.csv")
    p.add_argument("--family", default="sgarch", choices=FAMILIES)
    p.add_argument("--omega", type=float, default=1e-4)
    p.add_argument("--alpha", type=_floats, default=[0.0833])
    p.add_argument("--beta", type=_floats, default=[0.8644])
    p.add_argument("--gamma", type=_floats)
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--start-price", type=float, default=100.0)
    p.add_argument("--start-date", type=_day, default=date(2013, 4, 28))
    _add_output(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VolEngineError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return EXIT_OK


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
