import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokes_tumor.errors import ValidationError
from stokes_tumor.model import ModelParams, canonical_model, general_model, validate_assumptions

BASE = dict(lam=1.0, mu=1.0, sigma_c=0.5, sigma_bar=1.0, nu=1.0, gamma=1.0)


def test_direct_evaluation():
    fns = canonical_model(ModelParams(**BASE))
    assert fns.f(2.0) == 2.0
    assert fns.g(0.5) == 0.0


def test_sigma_bar_normalisation():
    fns = canonical_model(ModelParams(**{**BASE, "sigma_bar": 2.0, "sigma_c": 1.0}))
    assert fns.sigma_c == 0.5


def test_viscosity_normalises_surface_tension():
    fns = canonical_model(ModelParams(**{**BASE, "nu": 2.0, "gamma": 1.0}))
    assert fns.gamma == 0.5


def test_constant_derivatives():
    fns = canonical_model(ModelParams(**{**BASE, "lam": 3.0, "mu": 0.7}))
    s = np.linspace(0, 2, 17)
    assert np.all(fns.f_prime(s) == 3.0)
    assert np.all(fns.g_prime(s) == 0.7)
    assert np.all(fns.d2g(s) == 0.0)


@pytest.mark.parametrize("bad,tag", [({"sigma_c": 1.2}, "(A3)"), ({"sigma_c": -0.1}, "(A2)")])
def test_invalid_params_name_assumption(bad, tag):
    with pytest.raises(ValidationError) as exc:
        canonical_model(ModelParams(**{**BASE, **bad}))
    assert tag in str(exc.value)
    assert exc.value.violations


@pytest.mark.parametrize("key", ["lam", "mu", "nu", "sigma_bar"])
def test_rejects_nonpositive_constants(key):
    with pytest.raises(ValidationError):
        canonical_model(ModelParams(**{**BASE, key: 0.0}))


def test_from_dict_strict():
    good = {"lambda": 1, "mu": 1, "sigma_c": 0.5, "sigma_bar": 1, "nu": 1, "gamma": 0}
    assert ModelParams.from_dict(good).to_dict() == {k: float(v) for k, v in good.items()}
    with pytest.raises(ValidationError):
        ModelParams.from_dict({**good, "extra": 1})
    with pytest.raises(ValidationError):
        ModelParams.from_dict({k: v for k, v in good.items() if k != "mu"})
    with pytest.raises(ValidationError):
        ModelParams.from_dict({**good, "mu": "1"})


def test_linear_model_passes_all():
    rep = validate_assumptions(canonical_model(ModelParams(**BASE)))
    assert rep.ok and rep.failed() == []


def test_nonzero_f_at_origin_fails_first_assumption():
    fns = general_model(lambda s: s + 1, lambda s: s - 0.5, lambda s: 1.0, lambda s: 1.0)
    rep = validate_assumptions(fns)
    assert rep.failed() == ["A1"]
    assert "(A1)" in rep.summary()


def test_large_sigma_c_fails_third_assumption():
    fns = general_model(lambda s: s, lambda s: s - 1.2, lambda s: 1.0, lambda s: 1.0)
    rep = validate_assumptions(fns, sigma_max=2.0)
    assert "A3" in rep.failed()


def test_general_model_finds_sigma_c():
    fns = general_model(lambda s: s * (1 + s), lambda s: s**3 + s - 0.5)
    assert abs(fns.g(fns.sigma_c)) < 1e-14
    assert abs(fns.f_prime(0.3) - 1.6) < 1e-8
    assert validate_assumptions(fns).ok


def test_rescaled_laws():
    fns = canonical_model(ModelParams(**BASE)).rescaled(2.0)
    assert fns.f(1.0) == 4.0 and fns.g_prime(0.2) == 4.0 and fns.gamma == 2.0
    assert fns.sigma_c == 0.5


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 0.99))
def test_monotone_in_sigma_max(lam, mu, sc):
    fns = canonical_model(ModelParams(lam, mu, sc))
    if validate_assumptions(fns, sigma_max=2.0).ok:
        assert validate_assumptions(fns, sigma_max=1.0).ok


def test_general_model_without_root():
    with pytest.raises(ValidationError):
        general_model(lambda s: s, lambda s: s + 1.0)
