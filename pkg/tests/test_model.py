import math

import numpy as np
import pytest

from fbspec import model
from fbspec.model import AdmissibilityError, ModelParams

ADMISSIBLE = dict(w1=1.5, w2=0.1, delta1=0.8, delta2=1.0, theta1=0.2, a_s=0.1)


def test_defaults_are_relaxed_reference_set():
    p = model.default_params()
    assert (p.w1, p.w2, p.delta1, p.delta2, p.theta1) == (0.35, 0.1, 0.8245, 1.035, 0.2)
    assert (p.K, p.a_s, p.b, p.beta1, p.D_p, p.I) == (1.0, 0.0, 1.0, 0.1, 1.0, 1.0)
    assert p.relax_admissibility
    with pytest.raises(AdmissibilityError, match="w1"):
        ModelParams()


@pytest.mark.parametrize(
    "override, word",
    [
        (dict(a_s=1.0), "a_s"),
        (dict(a_s=-0.1), "a_s"),
        (dict(theta1=1.0), "theta1"),
        (dict(delta1=1.2, delta2=1.0), "delta1"),
        (dict(w2=1.0), "w2"),
        (dict(w1=0.9), "w1"),
        (dict(D_p=0.0), "D_p"),
    ],
)
def test_strict_conditions_individually(override, word):
    ModelParams(**ADMISSIBLE)
    with pytest.raises(AdmissibilityError, match=word):
        ModelParams(**{**ADMISSIBLE, **override})
    ModelParams(**{**ADMISSIBLE, **override, "relax_admissibility": True})


@pytest.mark.parametrize(
    "override, word",
    [(dict(I=1.5), "I"), (dict(I=-0.1), "I"), (dict(D_p=-1.0), "D_p"), (dict(K=0.0), "K"), (dict(b=0.0), "b")],
)
def test_hard_conditions_always_checked(override, word):
    with pytest.raises(AdmissibilityError, match=word):
        ModelParams(**{**ADMISSIBLE, **override, "relax_admissibility": True})


def test_violations_list_and_overrides():
    p = model.default_params()
    assert p.violations(strict=False) == []
    assert len(p.violations(strict=True)) == 1
    q = p.with_overrides(I=0.5)
    assert q.I == 0.5 and p.I == 1.0
    assert set(model.PARAM_NAMES) == set(p.as_dict()) - {"relax_admissibility"}


def test_androgen():
    p = model.default_params()
    assert model.androgen(0.0, p) == 1.0
    assert model.androgen(1.0, p) == pytest.approx(math.exp(-1), rel=1e-15)
    q = p.with_overrides(a_s=0.3)
    assert model.androgen(1e3, q) == pytest.approx(0.3)
    t = np.linspace(0, 5, 50)
    assert np.all(np.diff(model.androgen(t, p)) < 0)


def test_coefficient_functions():
    p = model.default_params()
    assert model.alpha_p(0.0, p) == pytest.approx(p.theta1)
    assert model.alpha_p(1.0, p) == pytest.approx(0.6)
    assert model.beta_mut(1.0 + p.a_s, p) == 0.0
    a = np.linspace(0, 1 + p.a_s, 40)
    assert np.all(np.diff(model.alpha_p(a, p)) >= 0)
    assert np.all(np.diff(model.beta_mut(a, p)) <= 0)
    assert model.delta_p(1.0, p) == pytest.approx(0.8245 * (0.35 + 0.65 * 0.5))
    assert model.delta_q(1.0, p) == pytest.approx(1.035 * (0.1 + 0.9 * 0.5))


def test_reaction_values():
    p = model.default_params()
    assert model.reaction_f(1.0, 0.3, p) == 0.0
    t = 0.7
    dp = model.delta_p(model.androgen(t, p), p)
    assert model.reaction_f(0.0, t, p) == pytest.approx(1 - dp)
    # direct substitution at t=0, p=0.5
    dp0 = 0.8245 * (0.35 + 0.65 * 0.5)
    assert model.reaction_f(0.5, 0.0, p) == pytest.approx(0.5 - dp0 * 0.5, rel=1e-15)


def test_reaction_linearity_and_coeffs():
    p = model.default_params().with_overrides(I=0.3)
    rng = np.random.default_rng(1)
    for _ in range(50):
        p1, p2, lam, t = rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 1), rng.uniform(0, 3)
        lhs = model.reaction_f(lam * p1 + (1 - lam) * p2, t, p)
        rhs = lam * model.reaction_f(p1, t, p) + (1 - lam) * model.reaction_f(p2, t, p)
        assert abs(lhs - rhs) <= 8 * np.finfo(float).eps * (1 + abs(lhs))
        c0, c1 = model.reaction_coeffs(t, p)
        assert c0 + c1 * p1 == pytest.approx(model.reaction_f(p1, t, p), abs=1e-15)


def test_velocity_rhs():
    p = model.default_params()
    assert model.velocity_rhs(0.4, -1.0, 2.0, 0.1, p) == 0.0
    a = model.androgen(0.2, p)
    assert model.velocity_rhs(0.0, 0.5, 1.3, 0.2, p) == pytest.approx(1.3 * 2.25 / 2 * (1 - model.delta_q(a, p)))
    ap, dp, dq = 0.6, model.delta_p(1.0, p), model.delta_q(1.0, p)
    expect = 1.0 * 4 / 2 * (ap * 0.5 + 1 - 0.5 - dp * 0.5 - dq * 0.5)
    assert model.velocity_rhs(0.5, 1.0, 1.0, 0.0, p) == pytest.approx(expect, rel=1e-15)
