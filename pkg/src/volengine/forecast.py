"""Multi-step conditional-variance forecasts, fixed and mobile window.

Horizons are counted in observation steps; calendar gaps play no role.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import ExplosiveModel, InvalidSpec
from .estimator import FitOptions, FitResult, fit
from .garch_core import GarchModel, persistence, unconditional_variance, variance_array
from .stats import ReturnsLike, as_array

DEFAULT_REFIT_EVERY = 21
DEFAULT_PATHS = 10_000
ANNUALIZATION_DAYS = 365


@dataclass(frozen=True, eq=False)
class VolForecastPath:
    horizon: int
    sigma2: np.ndarray
    long_run: float | None

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma2)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(h + 1, float(v), math.sqrt(v)) for h, v in enumerate(self.sigma2)]


def _model_of(fit_or_model: FitResult | GarchModel) -> GarchModel:
    return fit_or_model.model if isinstance(fit_or_model, FitResult) else fit_or_model


def _closed_form(model: GarchModel, r: np.ndarray, s2: np.ndarray, next_var: float, horizon: int) -> np.ndarray:
    # Future steps use E[r2] = s2 and E[1(r<0)] = 1/2, exact by linearity.
    pv = model.params
    gamma = pv.gamma or (0.0,) * model.q
    L = max(model.p, model.q)
    r2 = list(r[len(r) - L:] ** 2) + [next_var]
    neg = list((r[len(r) - L:] < 0).astype(float)) + [0.5]
    var = list(s2[len(s2) - L:]) + [next_var]
    for _ in range(1, horizon):
        t = len(var)
        v = pv.omega
        v += sum((pv.alpha[i - 1] + gamma[i - 1] * neg[t - i]) * r2[t - i] for i in range(1, model.q + 1))
        v += sum(pv.beta[j - 1] * var[t - j] for j in range(1, model.p + 1))
        r2.append(v)
        neg.append(0.5)
        var.append(v)
    return np.array(var[L:])


@njit(cache=True)
def _simulated(code, r_tail, v_tail, omega, alpha, gamma, beta, delta, z):
    n_paths, horizon = z.shape
    q = alpha.shape[0]
    p = beta.shape[0]
    L = r_tail.shape[0]
    e_abs = math.sqrt(2.0 / math.pi)
    half = delta / 2.0
    mean = np.zeros(horizon)
    rr = np.empty(L + horizon)
    vv = np.empty(L + horizon)
    for k in range(n_paths):
        rr[:L] = r_tail
        vv[:L] = v_tail
        for h in range(horizon):
            t = L + h
            s = omega
            if code == 1:
                for i in range(1, q + 1):
                    zz = rr[t - i] / math.sqrt(vv[t - i])
                    s += alpha[i - 1] * zz + gamma[i - 1] * (abs(zz) - e_abs)
                for j in range(1, p + 1):
                    s += beta[j - 1] * math.log(vv[t - j])
                v = math.exp(s)
            else:
                for i in range(1, q + 1):
                    x = rr[t - i]
                    s += alpha[i - 1] * (abs(x) - gamma[i - 1] * x) ** delta
                for j in range(1, p + 1):
                    s += beta[j - 1] * vv[t - j] ** half
                v = s ** (1.0 / half)
            vv[t] = v
            rr[t] = math.sqrt(v) * z[k, h]
            mean[h] += v
    return mean / n_paths


def forecast_fixed(fit_result: FitResult | GarchModel, returns: ReturnsLike, horizon: int,
                   seed: int = 42, n_paths: int = DEFAULT_PATHS) -> VolForecastPath:
    """Forecast ``horizon`` steps ahead without re-estimating.

    sgarch, igarch and gjr use the exact recursion with future squared
    returns replaced by their conditional expectation; egarch and aparch
    average ``n_paths`` simulated paths drawn from a generator seeded with
    ``seed``. Step 1 is always the filtered variance extended one step.
    """
    model = _model_of(fit_result)
    if horizon < 1:
        raise InvalidSpec("horizon must be >= 1")
    if model.family != "igarch" and persistence(model) > 1.0:
        raise ExplosiveModel(f"persistence {persistence(model):.6g} > 1")
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    if len(r) < max(model.p, model.q):
        raise InvalidSpec("need at least max(p, q) returns to forecast")
    init = float(np.mean(r**2))
    s2_ext = variance_array(model, np.append(r, 0.0), init)
    s2, next_var = s2_ext[:-1], float(s2_ext[-1])
    if model.family in ("sgarch", "igarch", "gjr"):
        path = _closed_form(model, r, s2, next_var, horizon)
    else:
        code, omega, alpha, gamma, beta, delta = model.arrays()
        z = np.random.default_rng(seed).standard_normal((n_paths, horizon))
        L = max(model.p, model.q)
        path = _simulated(code, r[len(r) - L:].copy(), s2[len(s2) - L:].copy(),
                          omega, alpha, gamma, beta, delta, z)
        path[0] = next_var
    if not np.all(np.isfinite(path) & (path > 0)):
        raise ExplosiveModel("forecast variance left the positive finite range")
    return VolForecastPath(horizon, path, unconditional_variance(model))


Fitter = Callable[[str, int, int, np.ndarray], FitResult]


def forecast_mobile(family: str, p: int, q: int, returns: ReturnsLike, horizon: int,
                    refit_every: int = DEFAULT_REFIT_EVERY, seed: int = 42,
                    options: FitOptions | None = None, fitter: Fitter | None = None,
                    n_paths: int = DEFAULT_PATHS) -> VolForecastPath:
    """Forecast in blocks of ``refit_every`` steps, refitting on pseudo-data.

    After each block the window drops its oldest ``m`` returns and appends
    ``m`` pseudo-returns ``+/- sigma_h`` (random signs from a generator seeded
    by ``seed``), so each pseudo-return has zero mean and the forecast
    variance; the model is then re-estimated on the moved window.
    """
    if horizon < 1 or refit_every < 1:
        raise InvalidSpec("horizon and refit_every must be >= 1")
    if fitter is None:
        def fitter(fam, pp, qq, data):
            return fit(fam, pp, qq, data, options)
    window = np.array(as_array(returns), dtype=float)
    signs = np.random.default_rng([seed, 1])
    current = fitter(family, p, q, window)
    out: list[float] = []
    block = 0
    while True:
        m = min(refit_every, horizon - len(out))
        fc = forecast_fixed(current, window, m, seed=seed + block, n_paths=n_paths)
        out.extend(fc.sigma2)
        if len(out) >= horizon:
            break
        pseudo = np.sqrt(fc.sigma2) * signs.choice((-1.0, 1.0), size=m)
        window = np.concatenate((window[m:], pseudo))
        current = fitter(family, p, q, window)
        block += 1
    return VolForecastPath(horizon, np.array(out), unconditional_variance(_model_of(current)))
