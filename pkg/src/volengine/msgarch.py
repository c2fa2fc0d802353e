"""Two-regime Markov-switching GARCH with parallel regime recursions.

Each regime carries its own sgarch(1,1) variance recursion driven by the
realized returns, so ``s2_{k,t}`` depends on the return history only and not
on the unobserved regime path. The regime process is a two-state Markov
chain with ``T[i, j] = Pr(s_{t+1} = j | s_t = i)``; the filter starts from
the chain's stationary distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    DegenerateSeries,
    InvalidTransition,
    NonPositiveVariance,
    ReducibleChain,
    TooFewObservations,
)
from .estimator import (
    FitOptions,
    _check_returns,
    fit,
    inverse_softmax_with_slack,
    multistart,
    softmax_with_slack,
)
from .forecast import VolForecastPath
from .garch_core import BURN_IN, GarchModel, ParamVector, default_init
from .stats import ReturnsLike, _dates, as_array

MIN_MS_OBSERVATIONS = 100
N_PARAMS = 8
_PROB_TOL = 1e-12
_TRIAL_FLOOR = 1e-12


def _regime_model(pv: ParamVector) -> GarchModel:
    return GarchModel("sgarch", 1, 1, pv)


@dataclass(frozen=True, eq=False)
class MsModel:
    """Two sgarch(1,1) regimes and a 2x2 row-stochastic transition matrix."""

    regimes: tuple[ParamVector, ParamVector]
    transition: np.ndarray

    def __post_init__(self) -> None:
        if len(self.regimes) != 2:
            raise InvalidTransition("exactly two regimes are supported")
        regimes = tuple(_regime_model(pv).params for pv in self.regimes)  # validates
        T = np.array(self.transition, dtype=float)
        if T.shape != (2, 2) or not np.all(np.isfinite(T)):
            raise InvalidTransition("transition must be a finite 2x2 matrix")
        if np.any(T < 0.0) or np.any(T > 1.0):
            raise InvalidTransition("transition entries must lie in [0, 1]")
        if np.any(np.abs(T.sum(axis=1) - 1.0) > _PROB_TOL):
            raise InvalidTransition("transition rows must sum to 1")
        T.setflags(write=False)
        object.__setattr__(self, "regimes", regimes)
        object.__setattr__(self, "transition", T)

    def swapped(self) -> "MsModel":
        """The same model with regime labels exchanged."""
        return MsModel((self.regimes[1], self.regimes[0]), self.transition[::-1, ::-1])

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        omega = np.array([pv.omega for pv in self.regimes])
        alpha = np.array([pv.alpha[0] for pv in self.regimes])
        beta = np.array([pv.beta[0] for pv in self.regimes])
        return omega, alpha, beta

    def to_dict(self) -> dict:
        return {
            "regimes": [pv.to_dict() for pv in self.regimes],
            "transition": self.transition.tolist(),
        }


@dataclass(frozen=True, eq=False)
class MsFitResult:
    model: MsModel
    log_likelihood: float
    n: int
    k: int
    stable_probabilities: np.ndarray
    filtered_probabilities: np.ndarray
    next_variances: np.ndarray
    dates: np.ndarray
    converged: bool = True
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "log_likelihood": self.log_likelihood,
            "n": self.n,
            "k": self.k,
            "converged": self.converged,
            "iterations": self.iterations,
            "stable_probabilities": self.stable_probabilities.tolist(),
            "filtered_probabilities": [
                {"date": str(d), "p1": float(a), "p2": float(b)}
                for d, (a, b) in zip(self.dates, self.filtered_probabilities)
            ],
        }


def stationary_distribution(transition) -> np.ndarray:
    """``pi`` with ``pi T = pi``: ``pi_1 = T[1,0] / (T[0,1] + T[1,0])``."""
    T = np.asarray(transition, dtype=float)
    leave1, leave2 = T[0, 1], T[1, 0]
    if leave1 + leave2 == 0.0:
        raise ReducibleChain("both off-diagonal transition probabilities are zero")
    pi1 = leave2 / (leave1 + leave2)
    return np.array([pi1, 1.0 - pi1])


@njit(cache=True, nogil=True)
def _ms_filter(r, omega, alpha, beta, T, start, init, floor):
    """Parallel regime variances, Hamilton filter, log-likelihood.

    Returns (loglik, filtered[n, 2], variances[n + 1, 2]); the last variance
    row is the one-step-ahead value after the sample.
    """
    n = r.shape[0]
    var = np.empty((n + 1, 2))
    filt = np.empty((n, 2))
    for k in range(2):
        var[0, k] = omega[k] + (alpha[k] + beta[k]) * init
        for t in range(1, n + 1):
            var[t, k] = omega[k] + alpha[k] * r[t - 1] * r[t - 1] + beta[k] * var[t - 1, k]
        for t in range(n + 1):
            if var[t, k] < floor:
                var[t, k] = floor
    pred0 = start[0]
    pred1 = start[1]
    total = 0.0
    logf = np.empty(2)
    for t in range(n):
        for k in range(2):
            v = var[t, k]
            if not (v > 0.0) or not math.isfinite(v):
                return -math.inf, filt, var
            logf[k] = -0.5 * (1.8378770664093453 + math.log(v) + r[t] * r[t] / v)
        m = max(logf[0], logf[1])
        w0 = pred0 * math.exp(logf[0] - m)
        w1 = pred1 * math.exp(logf[1] - m)
        mix = w0 + w1
        if not (mix > 0.0):
            return -math.inf, filt, var
        total += m + math.log(mix)
        prev0 = w0 / mix
        prev1 = w1 / mix
        filt[t, 0] = prev0
        filt[t, 1] = prev1
        pred0 = prev0 * T[0, 0] + prev1 * T[1, 0]
        pred1 = prev0 * T[0, 1] + prev1 * T[1, 1]
    return total, filt, var


def _filter(model: MsModel, r: np.ndarray, start=None, floor: float = 0.0):
    start = stationary_distribution(model.transition) if start is None else np.asarray(start, float)
    omega, alpha, beta = model.arrays()
    return _ms_filter(r, omega, alpha, beta, np.ascontiguousarray(model.transition), start,
                      default_init(r), floor)


def ms_log_likelihood(model: MsModel, returns: ReturnsLike, start=None) -> tuple[float, np.ndarray]:
    """Log-likelihood and filtered regime probabilities ``Pr(s_t | r_1..r_t)``.

    ``start`` overrides the stationary initial distribution, which is needed
    when the chain is reducible.
    """
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    ll, filt, var = _filter(model, r, start)
    if not np.all(var > 0.0) or not math.isfinite(ll):
        raise NonPositiveVariance("a regime variance is not positive and finite")
    return float(ll), filt


def evaluate_ms(model: MsModel, returns: ReturnsLike, start=None) -> MsFitResult:
    """Wrap a given model and data as a result, without estimating anything."""
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    ll, filt, var = _filter(model, r, start)
    if not np.all(var > 0.0) or not math.isfinite(ll):
        raise NonPositiveVariance("a regime variance is not positive and finite")
    try:
        stable = stationary_distribution(model.transition)
    except ReducibleChain:
        stable = np.asarray(start, float)
    return MsFitResult(model, float(ll), len(r), N_PARAMS, stable, filt, var[-1].copy(), _dates(returns))


# --------------------------------------------------------------------------- #
# Estimation
# --------------------------------------------------------------------------- #

def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))


def _logit(p: float, eps: float = 1e-9) -> float:
    p = min(max(p, eps), 1.0 - eps)
    return math.log(p / (1.0 - p))


def _unpack(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    omega = np.exp(np.minimum(u[[0, 3]], 700.0))
    w1 = softmax_with_slack(u[1:3])
    w2 = softmax_with_slack(u[4:6])
    p11, p22 = _logistic(u[6]), _logistic(u[7])
    T = np.array([[p11, 1.0 - p11], [1.0 - p22, p22]])
    return omega, np.array([w1[0], w2[0]]), np.array([w1[1], w2[1]]), T


def _pack(regimes, p11: float, p22: float) -> np.ndarray:
    u = []
    for omega, alpha, beta in regimes:
        u += [math.log(omega), *inverse_softmax_with_slack(np.array([alpha, beta]))]
    return np.array(u + [_logit(p11), _logit(p22)])


def _model_from(u: np.ndarray) -> MsModel:
    omega, alpha, beta, T = _unpack(u)
    regimes = tuple(ParamVector(omega[k], (alpha[k],), (beta[k],)) for k in range(2))
    return MsModel(regimes, T)


def _split_starts(r: np.ndarray, window: int = 20) -> list[np.ndarray]:
    """Starts at the lower and upper quartiles of rolling variance.

    Each regime gets moderate persistence so that neither recursion starts
    near the unit-root boundary, where the one-regime fit often sits when
    the data switch between volatility levels.
    """
    local = np.convolve(r**2, np.ones(window) / window, mode="valid")
    low, high = np.percentile(local, [25, 75])
    if not 0.0 < low < high:
        return []
    starts = []
    for alpha, beta in ((0.05, 0.6), (0.05, 0.85)):
        keep = 1.0 - alpha - beta
        starts.append(_pack([(keep * low, alpha, beta), (keep * high, alpha, beta)], 0.95, 0.95))
    return starts


def fit_ms(returns: ReturnsLike, options: FitOptions | None = None) -> MsFitResult:
    """Maximum-likelihood fit of the two-regime model.

    Starts: a low/high-volatility split of the fitted one-regime sgarch(1,1)
    (omega halved and doubled, staying probabilities 0.9), its deterministic
    perturbations, both regimes equal to the one-regime fit (which nests the
    one-regime likelihood), and two starts placed at the quartiles of rolling
    variance. Regime 1 is then labelled as the one with the
    larger stationary probability.
    """
    options = options or FitOptions()
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    if len(r) < MIN_MS_OBSERVATIONS:
        raise TooFewObservations(f"need at least {MIN_MS_OBSERVATIONS} returns, got {len(r)}")
    init = _check_returns(r, MIN_MS_OBSERVATIONS)
    base = fit("sgarch", 1, 1, r, FitOptions(
        n_starts=options.n_starts, max_evals=options.max_evals, tol=options.tol,
        perturbation=options.perturbation, nest=False, compute_se=False)).params
    w, a, b = base.omega, base.alpha[0], base.beta[0]
    x0 = _pack([(0.5 * w, a, b), (2.0 * w, a, b)], 0.9, 0.9)
    nested = _pack([(w, a, b), (w, a, b)], 0.9, 0.9)

    def negloglik(u: np.ndarray) -> float:
        omega, alpha, beta, T = _unpack(u)
        if T[0, 1] + T[1, 0] == 0.0:
            return math.inf
        start = np.array([T[1, 0], T[0, 1]]) / (T[0, 1] + T[1, 0])
        ll, _, _ = _ms_filter(r, omega, alpha, beta, T, start, init, _TRIAL_FLOOR)
        return -ll

    extra = [np.asarray(e, float) for e in options.extra_starts] + [nested] + _split_starts(r)
    _, runs = multistart(negloglik, x0, options, extra)

    best_ll, best_run, best_model = -math.inf, None, None
    for run in runs:
        try:
            model = _model_from(run.x)
            ll, _ = ms_log_likelihood(model, r)
        except (ArithmeticError, ValueError):
            continue
        if ll > best_ll:
            best_ll, best_run, best_model = ll, run, model
    if best_model is None:
        raise DegenerateSeries("no start produced a finite likelihood")
    stable = stationary_distribution(best_model.transition)
    if stable[1] > stable[0]:
        best_model = best_model.swapped()
    result = evaluate_ms(best_model, returns)
    return MsFitResult(result.model, result.log_likelihood, result.n, N_PARAMS,
                       result.stable_probabilities, result.filtered_probabilities,
                       result.next_variances, result.dates, best_run.converged, best_run.iterations)


# --------------------------------------------------------------------------- #
# Forecasting and simulation
# --------------------------------------------------------------------------- #

def ms_forecast(fit_result: MsFitResult, horizon: int) -> VolForecastPath:
    """Mixture forecast ``sum_k Pr(s_{n+h} = k) * s2_{k, n+h}``.

    Regime probabilities are ``filtered_n @ T**h``; each regime variance
    follows ``s2 <- omega + (alpha + beta) * s2`` beyond the first step.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    model = fit_result.model
    omega, alpha, beta = model.arrays()
    T = model.transition
    prob = np.asarray(fit_result.filtered_probabilities[-1], float)
    var = np.asarray(fit_result.next_variances, float).copy()
    out = np.empty(horizon)
    for h in range(horizon):
        if h > 0:
            var = omega + (alpha + beta) * var
        prob = prob @ T
        out[h] = float(prob @ var)
    pers = alpha + beta
    try:
        pi = stationary_distribution(T)
        long_run = float(pi @ (omega / (1.0 - pers))) if np.all(pers < 1.0) else None
    except ReducibleChain:
        long_run = None
    return VolForecastPath(horizon, out, long_run)


def simulate_ms(model: MsModel, n: int, seed: int, burn_in: int = BURN_IN) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``n`` returns and their regime labels (0 or 1) after a burn-in.

    Both regime variances start at the stationary mixture level when it
    exists (otherwise at ``omega / (1 - beta)``) and are driven by the
    realized returns.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    omega, alpha, beta = model.arrays()
    pi = stationary_distribution(model.transition)
    pers = alpha + beta
    if np.all(pers < 1.0):
        level = float(pi @ (omega / (1.0 - pers)))
    else:
        level = float(np.max(omega / (1.0 - beta)))
    total = n + burn_in
    z = rng.standard_normal(total)
    u = rng.random(total)
    var = np.full(2, level)
    state = 0 if u[0] < pi[0] else 1
    r = np.empty(total)
    states = np.empty(total, dtype=int)
    for t in range(total):
        if t > 0:
            state = 0 if u[t] < model.transition[state, 0] else 1
        r[t] = math.sqrt(var[state]) * z[t]
        states[t] = state
        var = omega + alpha * r[t] ** 2 + beta * var
    return r[burn_in:], states[burn_in:]
