"""Information criteria, order/family grid search and the likelihood-ratio test.

``k`` counts every free parameter, omega included. Criteria come in two
scalings: ``raw`` (``-2 LL + penalty``) and ``per_observation`` (raw / n).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Literal

from scipy import stats as sps

from .errors import InvalidSpec, NegativeLR, VolEngineError
from .estimator import FitOptions, FitResult, fit
from .garch_core import FAMILIES, MAX_ORDER
from .stats import ReturnsLike, TestResult, as_array

Convention = Literal["raw", "per_observation"]
CONVENTIONS = ("raw", "per_observation")
CRITERIA = ("aic", "bic")
LR_CLAMP = 1e-8


@dataclass(frozen=True)
class CriteriaPair:
    aic: float
    bic: float
    convention: str

    def to_dict(self) -> dict:
        return {"aic": self.aic, "bic": self.bic, "convention": self.convention}


def information_criteria(log_likelihood: float, k: int, n: int,
                         convention: Convention = "per_observation") -> CriteriaPair:
    """AIC ``-2 LL + 2k`` and BIC ``-2 LL + ln(n) k``, optionally divided by ``n``."""
    if n < 2 or k < 0:
        raise InvalidSpec("need n >= 2 and k >= 0")
    if convention not in CONVENTIONS:
        raise InvalidSpec(f"unknown convention {convention!r}")
    aic = -2.0 * log_likelihood + 2.0 * k
    bic = -2.0 * log_likelihood + math.log(n) * k
    if convention == "per_observation":
        aic, bic = aic / n, bic / n
    return CriteriaPair(aic, bic, convention)


@dataclass(frozen=True)
class GridRow:
    family: str
    p: int
    q: int
    fit: FitResult | None
    criteria: CriteriaPair | None
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.fit is not None and self.fit.converged

    def to_dict(self) -> dict:
        out = {"family": self.family, "p": self.p, "q": self.q, "converged": self.converged}
        if self.fit is not None:
            out.update(ll=self.fit.log_likelihood, k=self.fit.k,
                       params=self.fit.params.to_dict(), **self.criteria.to_dict())
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class GridReport:
    rows: tuple[GridRow, ...]
    best_by_aic: GridRow | None
    best_by_bic: GridRow | None
    criterion: str
    convention: str

    @property
    def best(self) -> GridRow | None:
        return self.best_by_aic if self.criterion == "aic" else self.best_by_bic

    def to_dict(self) -> dict:
        def key(row):
            return None if row is None else {"family": row.family, "p": row.p, "q": row.q}
        return {
            "criterion": self.criterion,
            "convention": self.convention,
            "best": key(self.best),
            "best_by_aic": key(self.best_by_aic),
            "best_by_bic": key(self.best_by_bic),
            "rows": [row.to_dict() for row in self.rows],
        }


def _winner(rows: Iterable[GridRow], criterion: str, families: tuple[str, ...]) -> GridRow | None:
    """Minimum criterion; ties go to lower p+q, then lower q, then family order."""
    candidates = [r for r in rows if r.converged]
    if not candidates:
        return None
    return min(candidates, key=lambda r: (getattr(r.criteria, criterion), r.p + r.q, r.q,
                                          families.index(r.family)))


def grid_search(families: Iterable[str], returns: ReturnsLike, max_order: int = MAX_ORDER,
                criterion: str = "bic", convention: Convention = "per_observation",
                options: FitOptions | None = None, workers: int = 1) -> GridReport:
    """Fit every ``(family, p, q)`` with ``1 <= p, q <= max_order``.

    A cell whose fit raises is kept with ``converged=False`` and no fit; like
    non-converged fits it is never a winner. ``workers > 1`` evaluates cells
    on a thread pool; results are merged in (family, p, q) order, so the
    report is the same as a sequential run.
    """
    fams = tuple(dict.fromkeys(families))
    unknown = [f for f in fams if f not in FAMILIES]
    if unknown or not fams:
        raise InvalidSpec(f"unknown or empty family list: {unknown or fams}")
    if not 1 <= max_order <= MAX_ORDER:
        raise InvalidSpec(f"max_order must be in 1..{MAX_ORDER}")
    if criterion not in CRITERIA:
        raise InvalidSpec(f"criterion must be one of {CRITERIA}")
    r = as_array(returns)
    cells = [(f, p, q) for f in sorted(fams, key=FAMILIES.index)
             for p in range(1, max_order + 1) for q in range(1, max_order + 1)]

    def run(cell) -> GridRow:
        fam, p, q = cell
        try:
            res = fit(fam, p, q, r, options)
        except VolEngineError as exc:
            return GridRow(fam, p, q, None, None, f"{type(exc).__name__}: {exc}")
        return GridRow(fam, p, q, res, information_criteria(res.log_likelihood, res.k, res.n, convention))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(run, cells))
    else:
        rows = tuple(run(c) for c in cells)
    order = tuple(sorted(fams, key=FAMILIES.index))
    return GridReport(rows, _winner(rows, "aic", order), _winner(rows, "bic", order), criterion, convention)


def likelihood_ratio_test(ll_extended: float, ll_standard: float, df: int) -> TestResult:
    """``LR = 2 (ll_extended - ll_standard)`` against chi-square(df)."""
    if df < 1:
        raise InvalidSpec("df must be >= 1")
    lr = 2.0 * (ll_extended - ll_standard)
    if lr < 0.0:
        if lr < -LR_CLAMP:
            raise NegativeLR(f"LR statistic {lr:.6g} < 0: the extended model fits worse")
        lr = 0.0
    return TestResult.from_p(lr, float(sps.chi2.sf(lr, df)), df)

