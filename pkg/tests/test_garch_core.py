import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volengine.errors import ExplosiveModel, InvalidSpec, NonPositiveVariance
from volengine.garch_core import (
    FAMILIES,
    aparch_kappa,
    conditional_variance_path,
    log_likelihood,
    make_model,
    persistence,
    simulate,
    unconditional_variance,
    variance_array,
)

E_ABS = math.sqrt(2 / math.pi)


def reference_path(model, r, init):
    """Direct transcription of each recursion, one lag at a time."""
    pv, fam = model.params, model.family
    gamma = pv.gamma or (0.0,) * model.q
    out = []
    for t in range(len(r)):
        s = pv.omega
        for i in range(1, model.q + 1):
            a, g = pv.alpha[i - 1], gamma[i - 1]
            if t - i < 0:
                if fam == "egarch":
                    continue
                if fam == "aparch":
                    s += a * aparch_kappa(g, pv.delta) * init ** (pv.delta / 2)
                else:
                    s += (a + g / 2) * init
                continue
            x = r[t - i]
            if fam == "egarch":
                z = x / math.sqrt(out[t - i])
                s += a * z + g * (abs(z) - E_ABS)
            elif fam == "aparch":
                s += a * (abs(x) - g * x) ** pv.delta
            else:
                s += (a + (g if x < 0 else 0.0)) * x * x
        for j in range(1, model.p + 1):
            b = pv.beta[j - 1]
            lagged = out[t - j] if t - j >= 0 else init
            if fam == "egarch":
                s += b * math.log(lagged)
            elif fam == "aparch":
                s += b * lagged ** (pv.delta / 2)
            else:
                s += b * lagged
        if fam == "egarch":
            s = math.exp(s)
        elif fam == "aparch":
            s = s ** (2 / pv.delta)
        out.append(s)
    return np.array(out)


MODELS = {
    "sgarch": make_model("sgarch", 2e-5, [0.05, 0.03], [0.6, 0.2]),
    "igarch": make_model("igarch", 1e-5, [0.1, 0.05], [0.5, 0.35]),
    "gjr": make_model("gjr", 2e-5, [0.03, 0.02], [0.8], gamma=[0.1, -0.01]),
    "egarch": make_model("egarch", -0.4, [-0.05, 0.02], [0.7, 0.1, 0.15], gamma=[0.15, 0.05]),
    "aparch": make_model("aparch", 1e-4, [0.06], [0.88, 0.02], gamma=[0.3], delta=1.4),
}


@pytest.mark.parametrize("family", FAMILIES)
def test_recursion_matches_reference(family, rng):
    model = MODELS[family]
    r = 0.015 * rng.standard_normal(300)
    init = float(np.mean(r**2))
    np.testing.assert_allclose(variance_array(model, r), reference_path(model, r, init), rtol=1e-12)
    path = conditional_variance_path(model, r)
    assert len(path) == len(r) and np.all(path.sigma2 > 0) and path.init_value == init


def test_one_step_by_hand():
    model = make_model("sgarch", 1e-4, [0.1], [0.8])
    s2 = variance_array(model, np.array([0.02, 0.0]), init=1e-3)
    assert s2[1] == pytest.approx(9.4e-4, rel=1e-14)


def test_constant_recursion():
    model = make_model("sgarch", 4e-4, [0.0], [0.0])
    assert np.all(conditional_variance_path(model, [0.1, -0.3, 0.05]).sigma2 == 4e-4)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-7, 1e-3), st.floats(0, 0.3), st.floats(0, 0.69),
       st.lists(st.floats(-0.1, 0.1), min_size=1, max_size=50))
def test_nesting(omega, alpha, beta, r):
    r = np.array(r)
    base = variance_array(make_model("sgarch", omega, [alpha], [beta]), r)
    gjr = variance_array(make_model("gjr", omega, [alpha], [beta], gamma=[0.0]), r)
    ap = variance_array(make_model("aparch", omega, [alpha], [beta], gamma=[0.0], delta=2.0), r)
    np.testing.assert_allclose(gjr, base, rtol=1e-15)
    np.testing.assert_allclose(ap, base, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1e-3), st.floats(0.01, 0.3), st.floats(0, 0.6), st.floats(0.01, 100),
       st.lists(st.floats(-0.1, 0.1), min_size=1, max_size=40))
def test_scale_equivariance(omega, alpha, beta, c, r):
    r = np.array(r)
    lhs = variance_array(make_model("sgarch", omega * c * c, [alpha], [beta]), c * r)
    rhs = c * c * variance_array(make_model("sgarch", omega, [alpha], [beta]), r)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


class TestPersistence:
    def test_table_values(self, table_model):
        assert persistence(table_model) == 0.0833 + 0.8644
        assert round(persistence(table_model), 4) == 0.9477
        assert unconditional_variance(table_model) == pytest.approx(1.912e-3, abs=1e-6)
        assert math.sqrt(unconditional_variance(table_model)) == pytest.approx(0.0437, abs=1e-4)

    def test_simple(self):
        m = make_model("sgarch", 1e-4, [0.1], [0.8])
        assert persistence(m) == pytest.approx(0.9)
        assert unconditional_variance(m) == pytest.approx(1e-3)

    def test_igarch(self):
        m = make_model("igarch", 1e-5, [0.1], [0.9])
        assert persistence(m) == 1.0 and unconditional_variance(m) is None
        assert sum(m.params.alpha) + sum(m.params.beta) == 1.0

    def test_family_formulas(self):
        assert persistence(make_model("gjr", 1e-5, [0.05], [0.8], gamma=[0.1])) == pytest.approx(0.9)
        assert persistence(MODELS["egarch"]) == pytest.approx(0.95)
        ap = MODELS["aparch"]
        assert persistence(ap) == pytest.approx(0.9 + 0.06 * aparch_kappa(0.3, 1.4))

    @pytest.mark.parametrize("gamma,delta", [(0.0, 2.0), (0.3, 1.4), (-0.5, 0.7), (0.9, 3.1)])
    def test_kappa_against_quadrature(self, gamma, delta):
        mpmath.mp.dps = 30
        dens = lambda z: mpmath.exp(-z * z / 2) / mpmath.sqrt(2 * mpmath.pi)
        ref = mpmath.quad(lambda z: (abs(z) - gamma * z) ** delta * dens(z), [-mpmath.inf, 0, mpmath.inf])
        assert aparch_kappa(gamma, delta) == pytest.approx(float(ref), rel=1e-12)

    def test_egarch_long_run_is_fixed_point(self):
        m = make_model("egarch", -0.3, [0.0], [0.96], gamma=[0.1])
        lr = unconditional_variance(m)
        assert math.log(lr) == pytest.approx(-0.3 + 0.96 * math.log(lr))


class TestLikelihood:
    def test_standard_normal_density_at_zero(self):
        m = make_model("sgarch", 1.0, [0.0], [0.0])
        assert log_likelihood(m, [0.0]) == pytest.approx(-0.9189385, abs=1e-7)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_extended_precision(self, family, rng):
        model = MODELS[family]
        r = 0.01 * rng.standard_normal(200)
        s2 = variance_array(model, r)
        mpmath.mp.dps = 40
        ref = mpmath.fsum(-mpmath.log(2 * mpmath.pi) / 2 - mpmath.log(mpmath.mpf(v)) / 2
                          - mpmath.mpf(x) ** 2 / (2 * mpmath.mpf(v)) for x, v in zip(r, s2))
        assert log_likelihood(model, r) == pytest.approx(float(ref), rel=1e-12)

    @given(st.floats(0.05, 5.0), st.floats(0.01, 0.99))
    def test_density_orientation(self, x, shrink):
        # with sigma2 = x**2 the single-point density is at its maximum in sigma2
        at_mode = log_likelihood(make_model("sgarch", x * x, [0.0], [0.0]), [x])
        lower = log_likelihood(make_model("sgarch", shrink * x * x, [0.0], [0.0]), [x])
        assert lower < at_mode

    def test_overflow_is_reported(self):
        m = make_model("egarch", 50.0, [0.0], [0.999], gamma=[0.0])
        with pytest.raises(NonPositiveVariance):
            conditional_variance_path(m, np.full(2000, 0.01))


class TestSimulate:
    def test_iid_variance(self):
        r = simulate(make_model("sgarch", 1e-4, [0.0], [0.0]), 100_000, 7).values
        assert np.mean(r**2) == pytest.approx(1e-4, rel=0.03)

    def test_unconditional_variance(self, table_model):
        r = simulate(table_model, 100_000, 11).values
        assert np.var(r) == pytest.approx(1.912e-3, rel=0.10)

    def test_deterministic(self, table_model):
        assert simulate(table_model, 50, 3) == simulate(table_model, 50, 3)
        assert simulate(table_model, 50, 3) != simulate(table_model, 50, 4)

    def test_explosive(self):
        with pytest.raises(ExplosiveModel):
            simulate(make_model("sgarch", 1e-4, [0.3], [0.8]), 10, 1)

    def test_igarch_allowed(self):
        assert len(simulate(make_model("igarch", 1e-6, [0.05], [0.95]), 100, 1)) == 100

    @pytest.mark.parametrize("family", FAMILIES)
    def test_path_matches_filter(self, family):
        model = MODELS["sgarch"] if family == "igarch" else MODELS[family]
        r = simulate(model, 400, 5).values
        assert np.all(np.isfinite(variance_array(model, r)))


class TestValidation:
    @pytest.mark.parametrize("kwargs", [
        dict(family="sgarch", omega=-1e-6, alpha=[0.1], beta=[0.8]),
        dict(family="sgarch", omega=1e-6, alpha=[-0.1], beta=[0.8]),
        dict(family="gjr", omega=1e-6, alpha=[0.1], beta=[0.8], gamma=[-0.2]),
        dict(family="aparch", omega=1e-6, alpha=[0.1], beta=[0.8], gamma=[1.0], delta=2.0),
        dict(family="aparch", omega=1e-6, alpha=[0.1], beta=[0.8], gamma=[0.1], delta=0.0),
        dict(family="aparch", omega=1e-6, alpha=[0.1], beta=[0.8], gamma=[0.1]),
        dict(family="sgarch", omega=1e-6, alpha=[0.1], beta=[0.8], gamma=[0.1]),
        dict(family="igarch", omega=1e-6, alpha=[0.1], beta=[0.8]),
        dict(family="sgarch", omega=1e-6, alpha=[0.1] * 4, beta=[0.1]),
        dict(family="garch", omega=1e-6, alpha=[0.1], beta=[0.8]),
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(InvalidSpec):
            make_model(**kwargs)

    def test_egarch_unconstrained(self):
        make_model("egarch", -5.0, [-0.5], [-0.2], gamma=[-0.3])

    @pytest.mark.parametrize("family", FAMILIES)
    def test_free_value_round_trip(self, family):
        m = MODELS[family]
        assert m.with_free_values(m.free_values()) == m
        assert m.k == len(m.free_values())
