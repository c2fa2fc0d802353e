"""One-regime GARCH-family models: recursions, likelihood, moments, simulation.

Families
--------
``sgarch``  ``s2_t = w + sum a_i r2_{t-i} + sum b_j s2_{t-j}``
``igarch``  as ``sgarch`` with ``sum a + sum b = 1``; the last beta is implied
``gjr``     adds ``g_i * 1[r_{t-i} < 0] * r2_{t-i}`` to each shock term
``egarch``  ``ln s2_t = w + sum (a_i z_{t-i} + g_i (|z_{t-i}| - E|z|)) + sum b_j ln s2_{t-j}``
``aparch``  ``s^d_t = w + sum a_i (|r_{t-i}| - g_i r_{t-i})^d + sum b_j s^d_{t-j}``

``q`` counts shock (alpha) lags and ``p`` variance (beta) lags. The mean is
fixed at zero and innovations are standard normal. The eGARCH recursion is
driven by standardized innovations ``z = r / s`` with ``E|z| = sqrt(2/pi)``.

Pre-sample values: every lagged variance equals ``init`` (by default the mean
of the squared returns, i.e. the sample variance about the zero mean) and
every lagged shock term takes its expectation under that variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ExplosiveModel, InvalidSpec, NonPositiveVariance
from .stats import ReturnSeries, ReturnsLike, as_array

FAMILIES = ("sgarch", "igarch", "gjr", "egarch", "aparch")
MAX_ORDER = 3
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LOG_2PI = math.log(2.0 * math.pi)
BURN_IN = 500

_QUADRATIC, _EXPONENTIAL, _POWER = 0, 1, 2
_KERNEL = {"sgarch": _QUADRATIC, "igarch": _QUADRATIC, "gjr": _QUADRATIC,
           "egarch": _EXPONENTIAL, "aparch": _POWER}


def aparch_kappa(gamma: float, delta: float) -> float:
    """``E(|z| - gamma*z)**delta`` for standard normal ``z``."""
    abs_moment = 2.0 ** (delta / 2.0) * math.gamma((delta + 1.0) / 2.0) / math.sqrt(math.pi)
    return 0.5 * ((1.0 - gamma) ** delta + (1.0 + gamma) ** delta) * abs_moment


@dataclass(frozen=True)
class ParamVector:
    omega: float
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...] = ()
    delta: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.delta is not None:
            object.__setattr__(self, "delta", float(self.delta))

    def to_dict(self) -> dict:
        out = {"omega": self.omega, "alpha": list(self.alpha), "beta": list(self.beta)}
        if self.gamma:
            out["gamma"] = list(self.gamma)
        if self.delta is not None:
            out["delta"] = self.delta
        return out


@dataclass(frozen=True)
class GarchModel:
    """A family tag, orders ``p`` (beta lags) and ``q`` (alpha lags), and parameters.

    Construction validates the family constraints. For ``igarch`` the last
    beta is re-derived from the unit-persistence constraint, so callers may
    pass it approximately (within 1e-9).
    """

    family: str
    p: int
    q: int
    params: ParamVector
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not (1 <= self.p <= MAX_ORDER and 1 <= self.q <= MAX_ORDER):
            raise InvalidSpec(f"orders must satisfy 1 <= p, q <= {MAX_ORDER}, got p={self.p}, q={self.q}")
        pv = self.params
        if len(pv.alpha) != self.q or len(pv.beta) != self.p:
            raise InvalidSpec("alpha must have q entries and beta p entries")
        wants_gamma = self.family in ("gjr", "egarch", "aparch")
        if wants_gamma and len(pv.gamma) != self.q:
            raise InvalidSpec(f"{self.family} needs q gamma entries")
        if not wants_gamma and pv.gamma:
            raise InvalidSpec(f"{self.family} takes no gamma")
        if (self.family == "aparch") != (pv.delta is not None):
            raise InvalidSpec("delta is required for aparch and only for aparch")
        values = [pv.omega, *pv.alpha, *pv.beta, *pv.gamma] + ([pv.delta] if pv.delta is not None else [])
        if not all(math.isfinite(v) for v in values):
            raise InvalidSpec("parameters must be finite")
        if self.family == "igarch":
            implied = 1.0 - sum(pv.alpha) - sum(pv.beta[:-1])
            if abs(implied - pv.beta[-1]) > 1e-9:
                raise InvalidSpec("igarch parameters must satisfy sum(alpha) + sum(beta) = 1")
            beta = pv.beta[:-1] + (implied,)
            object.__setattr__(self, "params", replace(pv, beta=beta))
            pv = self.params
        if self._validate:
            self._check_constraints(pv)

    def _check_constraints(self, pv: ParamVector) -> None:
        fam = self.family
        if fam == "egarch":
            return
        if pv.omega < 0 or min(pv.alpha) < 0 or min(pv.beta) < 0:
            raise InvalidSpec(f"{fam} needs omega, alpha, beta >= 0")
        if fam == "gjr" and any(a + g < 0 for a, g in zip(pv.alpha, pv.gamma)):
            raise InvalidSpec("gjr needs alpha_i + gamma_i >= 0")
        if fam == "aparch":
            if any(abs(g) >= 1 for g in pv.gamma):
                raise InvalidSpec("aparch needs |gamma_i| < 1")
            if not pv.delta > 0:
                raise InvalidSpec("aparch needs delta > 0")

    # -- free-parameter view ------------------------------------------------

    def param_names(self) -> list[str]:
        names = ["omega"] + [f"alpha{i + 1}" for i in range(self.q)]
        if self.params.gamma:
            names += [f"gamma{i + 1}" for i in range(self.q)]
        n_beta = self.p - 1 if self.family == "igarch" else self.p
        names += [f"beta{j + 1}" for j in range(n_beta)]
        if self.family == "aparch":
            names.append("delta")
        return names

    @property
    def k(self) -> int:
        """Number of free parameters."""
        return len(self.param_names())

    def free_values(self) -> np.ndarray:
        pv = self.params
        beta = pv.beta[:-1] if self.family == "igarch" else pv.beta
        vals = [pv.omega, *pv.alpha, *pv.gamma, *beta]
        if pv.delta is not None:
            vals.append(pv.delta)
        return np.array(vals)

    def with_free_values(self, theta: Sequence[float], validate: bool = True) -> "GarchModel":
        theta = [float(t) for t in theta]
        if len(theta) != self.k:
            raise InvalidSpec(f"expected {self.k} free values, got {len(theta)}")
        q, p = self.q, self.p
        omega, alpha = theta[0], tuple(theta[1:1 + q])
        pos = 1 + q
        gamma: tuple[float, ...] = ()
        if self.params.gamma:
            gamma = tuple(theta[pos:pos + q])
            pos += q
        if self.family == "igarch":
            head = tuple(theta[pos:pos + p - 1])
            beta = head + (1.0 - sum(alpha) - sum(head),)
            pos += p - 1
        else:
            beta = tuple(theta[pos:pos + p])
            pos += p
        delta = theta[pos] if self.family == "aparch" else None
        return GarchModel(self.family, p, q, ParamVector(omega, alpha, beta, gamma, delta), validate)

    def arrays(self) -> tuple[int, float, np.ndarray, np.ndarray, np.ndarray, float]:
        pv = self.params
        gamma = np.array(pv.gamma) if pv.gamma else np.zeros(self.q)
        return (_KERNEL[self.family], pv.omega, np.array(pv.alpha), gamma,
                np.array(pv.beta), pv.delta if pv.delta is not None else 2.0)

    def to_dict(self) -> dict:
        return {"family": self.family, "p": self.p, "q": self.q, "params": self.params.to_dict()}


def make_model(family: str, omega: float, alpha: Sequence[float], beta: Sequence[float],
               gamma: Sequence[float] = (), delta: float | None = None) -> GarchModel:
    """Build a model, inferring ``q`` from ``alpha`` and ``p`` from ``beta``."""
    pv = ParamVector(omega, tuple(alpha), tuple(beta), tuple(gamma), delta)
    return GarchModel(family, len(pv.beta), len(pv.alpha), pv)


@dataclass(frozen=True, eq=False)
class VariancePath:
    dates: np.ndarray
    sigma2: np.ndarray
    init_value: float

    def __len__(self) -> int:
        return len(self.sigma2)


# --------------------------------------------------------------------------- #
# Kernels
# --------------------------------------------------------------------------- #

@njit(cache=True, nogil=True)
def _variance_kernel(code, r, omega, alpha, gamma, beta, delta, init, floor):
    n = r.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    out = np.empty(n)
    if code == 0:
        for t in range(n):
            s = omega
            for i in range(1, q + 1):
                if t - i >= 0:
                    x = r[t - i]
                    s += alpha[i - 1] * x * x
                    if x < 0.0:
                        s += gamma[i - 1] * x * x
                else:
                    s += (alpha[i - 1] + 0.5 * gamma[i - 1]) * init
            for j in range(1, p + 1):
                s += beta[j - 1] * (out[t - j] if t - j >= 0 else init)
            if s < floor:
                s = floor
            out[t] = s
    elif code == 1:
        log_init = math.log(init) if init > 0.0 else -math.inf
        logs = np.empty(n)
        e_abs = math.sqrt(2.0 / math.pi)
        for t in range(n):
            s = omega
            for i in range(1, q + 1):
                if t - i >= 0:
                    z = r[t - i] / math.sqrt(out[t - i])
                    s += alpha[i - 1] * z + gamma[i - 1] * (abs(z) - e_abs)
            for j in range(1, p + 1):
                s += beta[j - 1] * (logs[t - j] if t - j >= 0 else log_init)
            v = math.exp(s) if s < 700.0 else math.inf
            if v < floor:
                v = floor
                s = math.log(floor)
            logs[t] = s
            out[t] = v
    else:
        half = delta / 2.0
        init_pow = init ** half
        abs_moment = 2.0 ** half * math.gamma((delta + 1.0) / 2.0) / math.sqrt(math.pi)
        pows = np.empty(n)
        floor_pow = floor ** half
        for t in range(n):
            s = omega
            for i in range(1, q + 1):
                g = gamma[i - 1]
                if t - i >= 0:
                    x = r[t - i]
                    s += alpha[i - 1] * (abs(x) - g * x) ** delta
                else:
                    kappa = 0.5 * ((1.0 - g) ** delta + (1.0 + g) ** delta) * abs_moment
                    s += alpha[i - 1] * kappa * init_pow
            for j in range(1, p + 1):
                s += beta[j - 1] * (pows[t - j] if t - j >= 0 else init_pow)
            if s < floor_pow:
                s = floor_pow
            pows[t] = s
            out[t] = s ** (1.0 / half) if s > 0.0 else s
    return out


@njit(cache=True, nogil=True)
def _gaussian_loglik(r, sigma2):
    total = 0.0
    for t in range(r.shape[0]):
        v = sigma2[t]
        if not (v > 0.0) or not math.isfinite(v):
            return -math.inf
        total += -0.5 * (1.8378770664093453 + math.log(v) + r[t] * r[t] / v)
    return total


@njit(cache=True, nogil=True)
def _simulate_kernel(code, z, omega, alpha, gamma, beta, delta, init):
    n = z.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    r = np.empty(n)
    var = np.empty(n)
    aux = np.empty(n)  # log-variance (egarch) or sigma**delta (aparch)
    e_abs = math.sqrt(2.0 / math.pi)
    half = delta / 2.0
    abs_moment = 2.0 ** half * math.gamma((delta + 1.0) / 2.0) / math.sqrt(math.pi)
    for t in range(n):
        s = omega
        if code == 0:
            for i in range(1, q + 1):
                if t - i >= 0:
                    x = r[t - i]
                    s += alpha[i - 1] * x * x
                    if x < 0.0:
                        s += gamma[i - 1] * x * x
                else:
                    s += (alpha[i - 1] + 0.5 * gamma[i - 1]) * init
            for j in range(1, p + 1):
                s += beta[j - 1] * (var[t - j] if t - j >= 0 else init)
            v = s
        elif code == 1:
            for i in range(1, q + 1):
                if t - i >= 0:
                    s += alpha[i - 1] * z[t - i] + gamma[i - 1] * (abs(z[t - i]) - e_abs)
            for j in range(1, p + 1):
                s += beta[j - 1] * (aux[t - j] if t - j >= 0 else math.log(init))
            aux[t] = s
            v = math.exp(s)
        else:
            for i in range(1, q + 1):
                g = gamma[i - 1]
                if t - i >= 0:
                    x = r[t - i]
                    s += alpha[i - 1] * (abs(x) - g * x) ** delta
                else:
                    kappa = 0.5 * ((1.0 - g) ** delta + (1.0 + g) ** delta) * abs_moment
                    s += alpha[i - 1] * kappa * init ** half
            for j in range(1, p + 1):
                s += beta[j - 1] * (aux[t - j] if t - j >= 0 else init ** half)
            aux[t] = s
            v = s ** (1.0 / half)
        var[t] = v
        r[t] = math.sqrt(v) * z[t]
    return r, var


# --------------------------------------------------------------------------- #
# Public operations
# --------------------------------------------------------------------------- #

def default_init(r: np.ndarray) -> float:
    return float(np.mean(r**2))


def variance_array(model: GarchModel, r: np.ndarray, init: float | None = None,
                   floor: float = 0.0) -> np.ndarray:
    """Raw conditional variances; no positivity check (see :func:`conditional_variance_path`)."""
    code, omega, alpha, gamma, beta, delta = model.arrays()
    init = default_init(r) if init is None else float(init)
    return _variance_kernel(code, np.ascontiguousarray(r, dtype=float), omega, alpha, gamma,
                            beta, delta, init, floor)


def conditional_variance_path(model: GarchModel, returns: ReturnsLike,
                              init: float | None = None) -> VariancePath:
    """Filter the conditional variance through ``returns``.

    ``init`` overrides the pre-sample variance. Non-positive or non-finite
    variances raise :class:`NonPositiveVariance`; nothing is clamped.
    """
    r = as_array(returns)
    if len(r) < 1:
        raise InvalidSpec("need at least one return")
    init_value = default_init(r) if init is None else float(init)
    s2 = variance_array(model, r, init_value)
    bad = ~(np.isfinite(s2) & (s2 > 0))
    if bad.any():
        t = int(np.argmax(bad))
        raise NonPositiveVariance(f"conditional variance at index {t} is {s2[t]!r}")
    dates = returns.dates if isinstance(returns, ReturnSeries) else np.datetime64("2000-01-01", "D") + np.arange(len(r))
    return VariancePath(dates, s2, init_value)


def persistence(model: GarchModel) -> float:
    """Persistence of the variance recursion.

    sgarch: ``sum a + sum b``; igarch: 1; gjr: ``sum a + sum b + sum g / 2``;
    egarch: ``sum b``; aparch: ``sum b + sum a_i * kappa(g_i, d)``.
    """
    pv = model.params
    fam = model.family
    if fam == "igarch":
        return 1.0
    if fam == "sgarch":
        return sum(pv.alpha) + sum(pv.beta)
    if fam == "gjr":
        return sum(pv.alpha) + sum(pv.beta) + 0.5 * sum(pv.gamma)
    if fam == "egarch":
        return sum(pv.beta)
    return sum(pv.beta) + sum(a * aparch_kappa(g, pv.delta) for a, g in zip(pv.alpha, pv.gamma))


def unconditional_variance(model: GarchModel) -> float | None:
    """Long-run variance, or ``None`` when persistence is >= 1."""
    P = persistence(model)
    if model.family == "igarch" or P >= 1.0:
        return None
    omega = model.params.omega
    if model.family == "egarch":
        return math.exp(omega / (1.0 - P))
    if model.family == "aparch":
        return (omega / (1.0 - P)) ** (2.0 / model.params.delta)
    return omega / (1.0 - P)


def log_likelihood(model: GarchModel, returns: ReturnsLike, init: float | None = None) -> float:
    """Gaussian log-likelihood with zero mean."""
    r = as_array(returns)
    path = conditional_variance_path(model, r, init)
    return float(_gaussian_loglik(r, path.sigma2))


def _simulation_start(model: GarchModel) -> float:
    uv = unconditional_variance(model)
    if uv is not None:
        return uv
    # igarch has no long-run level; start where omega balances the shock term
    a = sum(model.params.alpha)
    return model.params.omega / a if a > 0 and model.params.omega > 0 else max(model.params.omega, 1e-4)


def simulate(model: GarchModel, n: int, seed: int, burn_in: int = BURN_IN,
             start: "np.datetime64 | str" = "2000-01-02") -> ReturnSeries:
    """Draw ``n`` returns ``r_t = s_t z_t`` after discarding ``burn_in`` draws."""
    if n < 1:
        raise InvalidSpec(f"n must be >= 1, got {n}")
    if model.family != "igarch" and persistence(model) >= 1.0:
        raise ExplosiveModel(f"persistence {persistence(model):.6g} >= 1 for {model.family}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n + burn_in)
    code, omega, alpha, gamma, beta, delta = model.arrays()
    r, _ = _simulate_kernel(code, z, omega, alpha, gamma, beta, delta, _simulation_start(model))
    r = r[burn_in:]
    if not np.all(np.isfinite(r)):
        raise ExplosiveModel("simulated path overflowed")
    return ReturnSeries(np.datetime64(start, "D") + np.arange(n), r)
