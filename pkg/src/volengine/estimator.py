"""Maximum-likelihood estimation of one-regime GARCH-family models.

Constrained parameters are mapped to an unconstrained vector ``u``:

* positive scalars (omega, aparch delta) through ``exp``;
* shock and variance loadings through a softmax with a fixed zero-logit
  slack component, so that every loading is >= 0 and their persistence
  contribution stays strictly below one (igarch drops the slack and takes the
  last beta as the remainder, giving persistence one);
* gjr asymmetry as ``gamma_i = 2 a_i tanh(v_i)`` around the average loading
  ``a_i = alpha_i + gamma_i / 2``, which keeps ``alpha_i >= 0`` and
  ``alpha_i + gamma_i >= 0``;
* aparch asymmetry as ``gamma_i = tanh(v_i)``;
* egarch coefficients unchanged.

Each start runs a Nelder-Mead simplex search followed by a BFGS polish; the
best log-likelihood over all starts is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy import stats as sps

from .errors import DegenerateSeries, SingularHessian, TooFewObservations
from .garch_core import (
    GarchModel,
    ParamVector,
    _gaussian_loglik,
    _variance_kernel,
    _KERNEL,
    aparch_kappa,
    default_init,
    log_likelihood,
    persistence,
    unconditional_variance,
)
from .stats import ReturnsLike, as_array

MIN_OBSERVATIONS = 50
TRIAL_FLOOR = 1e-12
_PENALTY = 1e10


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 5
    max_evals: int = 2000
    tol: float = 1e-8
    perturbation: float = 0.5
    nest: bool = True
    compute_se: bool = True
    extra_starts: tuple = ()


@dataclass(frozen=True)
class FitResult:
    model: GarchModel
    log_likelihood: float
    n: int
    k: int
    std_errors: dict[str, float] | None
    p_values: dict[str, float] | None
    converged: bool
    iterations: int

    @property
    def params(self) -> ParamVector:
        return self.model.params

    def persistence(self) -> float:
        return persistence(self.model)

    def unconditional_variance(self) -> float | None:
        return unconditional_variance(self.model)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "log_likelihood": self.log_likelihood,
            "n": self.n,
            "k": self.k,
            "std_errors": self.std_errors,
            "p_values": self.p_values,
            "converged": self.converged,
            "iterations": self.iterations,
            "persistence": self.persistence(),
            "unconditional_variance": self.unconditional_variance(),
        }


# --------------------------------------------------------------------------- #
# Transforms
# --------------------------------------------------------------------------- #

def softmax_with_slack(u: np.ndarray) -> np.ndarray:
    """Weights ``exp(u_i) / (1 + sum exp(u))``; their sum is < 1."""
    m = max(0.0, float(np.max(u))) if len(u) else 0.0
    e = np.exp(u - m)
    return e / (math.exp(-m) + e.sum())


def inverse_softmax_with_slack(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    slack = 1.0 - w.sum()
    if slack <= 0 or np.any(w <= 0):
        w = np.clip(w, 1e-10, None)
        w = w * min(1.0, (1.0 - 1e-6) / w.sum())
        slack = 1.0 - w.sum()
    return np.log(w / slack)


def _atanh(x: float, bound: float = 1.0 - 1e-12) -> float:
    return math.atanh(min(max(x, -bound), bound))


class Transform:
    """Map between unconstrained vectors and a family's parameters."""

    def __init__(self, family: str, p: int, q: int):
        self.family, self.p, self.q = family, p, q
        self.code = _KERNEL[family]

    @property
    def dim(self) -> int:
        p, q = self.p, self.q
        return {"sgarch": 1 + q + p, "igarch": q + p, "gjr": 1 + 2 * q + p,
                "egarch": 1 + 2 * q + p, "aparch": 2 + 2 * q + p}[self.family]

    def unpack(self, u: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, float]:
        """Return ``(omega, alpha, gamma, beta, delta)`` arrays for the kernels."""
        p, q, fam = self.p, self.q, self.family
        if fam == "egarch":
            return float(u[0]), u[1:1 + q], u[1 + q:1 + 2 * q], u[1 + 2 * q:], 2.0
        omega = math.exp(min(u[0], 700.0))
        if fam == "sgarch":
            w = softmax_with_slack(u[1:])
            return omega, w[:q], np.zeros(q), w[q:], 2.0
        if fam == "igarch":
            w = softmax_with_slack(u[1:])
            alpha = w[:q]
            head = w[q:q + p - 1]
            last = max(1.0 - alpha.sum() - head.sum(), 0.0)
            return omega, alpha, np.zeros(q), np.concatenate((head, [last])), 2.0
        if fam == "gjr":
            w = softmax_with_slack(u[1:1 + q + p])
            avg, beta = w[:q], w[q:]
            t = np.tanh(u[1 + q + p:])
            return omega, avg * (1.0 - t), 2.0 * avg * t, beta, 2.0
        # aparch
        delta = math.exp(min(u[-1], 5.0))
        gamma = np.tanh(u[1 + q + p:1 + 2 * q + p])
        w = softmax_with_slack(u[1:1 + q + p])
        kappa = np.array([aparch_kappa(g, delta) for g in gamma])
        return omega, w[:q] / kappa, gamma, w[q:], delta

    def pack(self, omega: float, alpha, gamma, beta, delta: float | None = None) -> np.ndarray:
        p, q, fam = self.p, self.q, self.family
        alpha, beta = np.asarray(alpha, float), np.asarray(beta, float)
        gamma = np.zeros(q) if gamma is None or len(gamma) == 0 else np.asarray(gamma, float)
        if fam == "egarch":
            return np.concatenate(([omega], alpha, gamma, beta))
        lw = [math.log(max(omega, 1e-300))]
        if fam == "sgarch":
            return np.concatenate((lw, inverse_softmax_with_slack(np.concatenate((alpha, beta)))))
        if fam == "igarch":
            # softmax over (alpha, beta_1..beta_{p-1}, slack) with slack playing beta_p
            w = np.concatenate((alpha, beta[:-1]))
            last = max(beta[-1], 1e-10)
            return np.concatenate((lw, np.log(np.clip(w, 1e-10, None) / last)))
        if fam == "gjr":
            avg = alpha + 0.5 * gamma
            v = [_atanh(g / (2 * a)) if a > 0 else 0.0 for a, g in zip(avg, gamma)]
            return np.concatenate((lw, inverse_softmax_with_slack(np.concatenate((avg, beta))), v))
        kappa = np.array([aparch_kappa(g, delta) for g in gamma])
        w = np.concatenate((alpha * kappa, beta))
        v = [_atanh(g) for g in gamma]
        return np.concatenate((lw, inverse_softmax_with_slack(w), v, [math.log(delta)]))

    def model(self, u: np.ndarray) -> GarchModel:
        omega, alpha, gamma, beta, delta = self.unpack(np.asarray(u, float))
        fam = self.family
        pv = ParamVector(
            omega, tuple(alpha), tuple(beta),
            tuple(gamma) if fam in ("gjr", "egarch", "aparch") else (),
            delta if fam == "aparch" else None,
        )
        return GarchModel(fam, self.p, self.q, pv)

    def from_model(self, model: GarchModel) -> np.ndarray:
        pv = model.params
        return self.pack(pv.omega, pv.alpha, pv.gamma, pv.beta, pv.delta)

    def initial(self, sample_variance: float) -> np.ndarray:
        """Moment-based warm start: omega = 0.05 var, alpha = 0.05, beta = 0.9/p, gamma = 0, delta = 2."""
        p, q = self.p, self.q
        alpha = np.full(q, 0.05)
        beta = np.full(p, 0.9 / p)
        total = alpha.sum() + beta.sum()
        if self.family == "igarch":
            alpha, beta = alpha / total, beta / total
        elif total > 0.98:
            alpha, beta = alpha * 0.98 / total, beta * 0.98 / total
        if self.family == "egarch":
            omega = (1.0 - beta.sum()) * math.log(sample_variance)
        else:
            omega = 0.05 * sample_variance
        return self.pack(omega, alpha, np.zeros(q), beta, 2.0 if self.family == "aparch" else None)


# --------------------------------------------------------------------------- #
# Optimizer
# --------------------------------------------------------------------------- #

class _BudgetExhausted(Exception):
    pass


@dataclass
class _Tracker:
    fun: Callable[[np.ndarray], float]
    budget: int
    evals: int = 0
    best_f: float = math.inf
    best_x: np.ndarray | None = None

    def __call__(self, x: np.ndarray) -> float:
        if self.evals >= self.budget:
            raise _BudgetExhausted
        self.evals += 1
        f = self.fun(x)
        if not math.isfinite(f):
            f = _PENALTY
        if f < self.best_f:
            self.best_f, self.best_x = f, np.array(x, copy=True)
        return f


@dataclass(frozen=True)
class OptimRun:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    evals: int


def minimize_start(fun: Callable[[np.ndarray], float], x0: np.ndarray,
                   max_evals: int = 2000, tol: float = 1e-8) -> OptimRun:
    """Simplex search then quasi-Newton polish, within an evaluation budget.

    Converged means the polish stopped on its own (a full iteration improved
    the objective by less than ``tol``, the gradient vanished, or no descent
    step could be found) before the budget ran out.
    """
    tracker = _Tracker(fun, max_evals)
    iterations = 0
    converged = False
    try:
        nm = optimize.minimize(
            tracker, x0, method="Nelder-Mead",
            options={"maxfev": int(0.6 * max_evals), "xatol": 1e-7, "fatol": tol, "adaptive": len(x0) > 4},
        )
        iterations += int(nm.nit)
        history = [tracker.best_f]

        def stop_when_flat(intermediate_result):
            history.append(float(intermediate_result.fun))
            if history[-2] - history[-1] < tol:
                raise StopIteration

        polish = optimize.minimize(tracker, tracker.best_x, method="BFGS", callback=stop_when_flat,
                                   options={"gtol": 1e-6, "maxiter": max_evals})
        iterations += int(polish.nit)
        # status 2 is a failed line search: no further descent was found
        converged = polish.status in (0, 2, 99) and tracker.best_f < _PENALTY
    except _BudgetExhausted:
        converged = False
    return OptimRun(tracker.best_x, tracker.best_f, converged, iterations, tracker.evals)


def multistart(fun: Callable[[np.ndarray], float], x0: np.ndarray, options: FitOptions,
               extra: Sequence[np.ndarray] = ()) -> tuple[OptimRun, list[OptimRun]]:
    """Run deterministic starts around ``x0`` plus any ``extra`` starting points.

    Start 1 is ``x0`` itself; start ``s >= 2`` adds ``N(0, perturbation**2)``
    noise drawn from a generator seeded with ``s``.
    """
    starts = []
    for s in range(1, options.n_starts + 1):
        if s == 1:
            starts.append(np.array(x0, float))
        else:
            rng = np.random.default_rng(s)
            starts.append(x0 + options.perturbation * rng.standard_normal(len(x0)))
    starts.extend(np.asarray(e, float) for e in extra)
    runs = [minimize_start(fun, s, options.max_evals, options.tol) for s in starts]
    best = min(runs, key=lambda r: r.fun)
    return best, runs


# --------------------------------------------------------------------------- #
# Fitting
# --------------------------------------------------------------------------- #

def _check_returns(r: np.ndarray, minimum: int) -> float:
    if len(r) < minimum:
        raise TooFewObservations(f"need at least {minimum} returns, got {len(r)}")
    var = default_init(r)
    if not var > 0 or np.ptp(r) == 0.0:
        raise DegenerateSeries("returns have zero variance")
    return var


def _objective(tr: Transform, r: np.ndarray, init: float) -> Callable[[np.ndarray], float]:
    code = tr.code

    def negloglik(u: np.ndarray) -> float:
        omega, alpha, gamma, beta, delta = tr.unpack(u)
        s2 = _variance_kernel(code, r, omega, alpha, gamma, beta, delta, init, TRIAL_FLOOR)
        return -_gaussian_loglik(r, s2)

    return negloglik


def _nested_start(tr: Transform, r: np.ndarray, options: FitOptions) -> list[np.ndarray]:
    """gjr and aparch nest sgarch; start one run at the fitted sgarch optimum."""
    if not options.nest or tr.family not in ("gjr", "aparch"):
        return []
    base = fit("sgarch", tr.p, tr.q, r, FitOptions(
        n_starts=options.n_starts, max_evals=options.max_evals, tol=options.tol,
        perturbation=options.perturbation, nest=False, compute_se=False))
    pv = base.params
    return [tr.pack(pv.omega, pv.alpha, np.zeros(tr.q), pv.beta, 2.0 if tr.family == "aparch" else None)]


def fit(family: str, p: int, q: int, returns: ReturnsLike, options: FitOptions | None = None) -> FitResult:
    """Fit a one-regime model by Gaussian maximum likelihood.

    The returned parameters always satisfy the family constraints; when no
    start converged the best parameters found are still returned with
    ``converged=False``.
    """
    options = options or FitOptions()
    GarchModel(family, p, q, _placeholder_params(family, p, q), False)  # validates tag and orders
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    init = _check_returns(r, MIN_OBSERVATIONS)
    tr = Transform(family, p, q)
    fun = _objective(tr, r, init)
    extra = [tr.from_model(m) if isinstance(m, GarchModel) else np.asarray(m, float)
             for m in options.extra_starts]
    extra += _nested_start(tr, r, options)
    _, runs = multistart(fun, tr.initial(init), options, extra)

    best_ll, best_run, best_model = -math.inf, None, None
    for run in runs:
        model = tr.model(run.x)
        try:
            ll = log_likelihood(model, r)
        except ArithmeticError:
            continue
        if ll > best_ll:
            best_ll, best_run, best_model = ll, run, model
    if best_model is None:
        raise DegenerateSeries("no start produced a finite likelihood")

    result = FitResult(best_model, best_ll, len(r), best_model.k, None, None,
                       best_run.converged, best_run.iterations)
    if options.compute_se:
        try:
            se, pv = standard_errors(result, r)
            result = FitResult(best_model, best_ll, len(r), best_model.k, se, pv,
                               best_run.converged, best_run.iterations)
        except SingularHessian:
            pass
    return result


def _placeholder_params(family: str, p: int, q: int) -> ParamVector:
    gamma = (0.0,) * q if family in ("gjr", "egarch", "aparch") else ()
    beta = (0.0,) * (p - 1) + (1.0 if family == "igarch" else 0.0,)
    return ParamVector(0.0, (0.0,) * q, beta, gamma, 2.0 if family == "aparch" else None)


def numerical_hessian(f: Callable[[np.ndarray], float], theta: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian with per-coordinate step ``rel_step * |theta_i|``."""
    theta = np.asarray(theta, float)
    k = len(theta)
    h = rel_step * np.maximum(np.abs(theta), 1e-8)
    f0 = f(theta)
    H = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def standard_errors(fit_result: FitResult, returns: ReturnsLike) -> tuple[dict[str, float], dict[str, float]]:
    """Standard errors from the inverse negative Hessian, with two-sided normal p-values."""
    r = np.ascontiguousarray(as_array(returns), dtype=float)
    model = fit_result.model
    init = default_init(r)
    code = _KERNEL[model.family]

    def ll(theta: np.ndarray) -> float:
        m = model.with_free_values(theta, validate=False)
        _, omega, alpha, gamma, beta, delta = m.arrays()
        s2 = _variance_kernel(code, r, omega, alpha, gamma, beta, delta, init, 0.0)
        return float(_gaussian_loglik(r, s2))

    theta = model.free_values()
    H = numerical_hessian(ll, theta)
    if not np.all(np.isfinite(H)):
        raise SingularHessian("likelihood is not finite around the optimum")
    info = -H
    try:
        eig = np.linalg.eigvalsh(info)
    except np.linalg.LinAlgError:
        raise SingularHessian("Hessian eigen-decomposition failed") from None
    if eig.min() <= 0:
        raise SingularHessian("negative Hessian is not positive definite")
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    pvals = 2.0 * sps.norm.sf(np.abs(theta / se))
    names = model.param_names()
    return dict(zip(names, map(float, se))), dict(zip(names, map(float, pvals)))
