import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbspec.polybasis import (
    ConvergenceError,
    QuadratureRule,
    TrialBasis,
    correction_coeff,
    gauss_rule,
    legendre_deriv,
    legendre_eval,
    trial_eval,
)


def test_legendre_values():
    assert legendre_eval(0, 0.3) == 1.0
    for n in range(12):
        assert legendre_eval(n, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert legendre_eval(2, 0.5) == pytest.approx(-0.125, abs=1e-16)
    x = np.linspace(-1, 1, 9)
    np.testing.assert_allclose(legendre_eval(3, x), 0.5 * (5 * x**3 - 3 * x), atol=1e-15)


def test_legendre_derivatives():
    assert legendre_deriv(1, 0.7) == pytest.approx(1.0)
    assert legendre_deriv(2, 0.0, order=2) == pytest.approx(3.0)
    h = 1e-5
    for n in range(1, 15):
        assert legendre_deriv(n, 1.0) == pytest.approx(n * (n + 1) / 2, rel=1e-13)
        # central difference of the values, second-order accurate
        fd = (legendre_eval(n, 0.3 + h) - legendre_eval(n, 0.3 - h)) / (2 * h)
        assert legendre_deriv(n, 0.3) == pytest.approx(fd, abs=1e-7)
    with pytest.raises(ValueError):
        legendre_deriv(3, 0.1, order=3)


def test_gauss_small_rules():
    r1 = gauss_rule(1)
    np.testing.assert_allclose(r1.nodes, [0.0], atol=1e-16)
    np.testing.assert_allclose(r1.weights, [2.0])
    r2 = gauss_rule(2)
    np.testing.assert_allclose(r2.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    r5 = gauss_rule(5)
    assert r5.integrate(r5.nodes**4) == pytest.approx(0.4, abs=1e-13)
    with pytest.raises(ValueError):
        gauss_rule(0)


@pytest.mark.parametrize("N", [1, 2, 3, 7, 20, 101, 600])
def test_gauss_rule_structure(N):
    r = gauss_rule(N)
    assert isinstance(r, QuadratureRule)
    x = r.nodes
    assert x.shape == (N,)
    assert np.all(np.diff(x) > 0)
    assert np.all(np.abs(x) < 1)
    assert abs(r.weights.sum() - 2.0) <= 1e-13
    assert np.all(r.weights > 0)
    np.testing.assert_allclose(x, -x[::-1], atol=1e-14)
    if N % 2:
        assert x[N // 2] == 0.0
    assert 0 <= r.iterations <= 100


def test_rule_arrays_read_only():
    r = gauss_rule(4)
    with pytest.raises(ValueError):
        r.nodes[0] = 0.0


def test_nodes_interlace_extrema():
    # roots of P_N lie strictly between consecutive roots of P_N' (and +-1)
    for N in (5, 10, 31, 64):
        x = gauss_rule(N).nodes
        ext = np.concatenate(([-1.0], gauss_rule(N - 1).nodes, [1.0]))  # P_{N-1} roots interlace too
        assert np.all((ext[:-1] < x) & (x < ext[1:]))
        crit = np.sort(np.polynomial.legendre.legroots(np.polynomial.legendre.legder([0] * N + [1])))
        brackets = np.concatenate(([-1.0], crit, [1.0]))
        assert np.all((brackets[:-1] < x) & (x < brackets[1:]))


def test_gauss_matches_numpy_reference():
    for N in (3, 17, 80):
        xr, wr = np.polynomial.legendre.leggauss(N)
        r = gauss_rule(N)
        np.testing.assert_allclose(r.nodes, xr, atol=1e-14)
        np.testing.assert_allclose(r.weights, wr, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(N=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_quadrature_exact_random_polys(N, seed):
    rng = np.random.default_rng(seed)
    deg = 2 * N - 1
    c = rng.standard_normal(deg + 1)
    P = np.polynomial.Polynomial(c)
    exact = P.integ()(1.0) - P.integ()(-1.0)
    r = gauss_rule(N)
    assert abs(r.integrate(P(r.nodes)) - exact) <= 1e-12 * (1 + abs(exact))


def test_mapped_rule():
    x, w = gauss_rule(6).mapped(0.0, 2.0)
    assert w @ x**3 == pytest.approx(4.0, rel=1e-14)


def test_trial_basis_examples():
    assert correction_coeff(0) == 0.0
    x = np.linspace(-1, 1, 7)
    np.testing.assert_array_equal(trial_eval(0, x), np.ones_like(x))
    assert trial_eval(1, 1.0) == pytest.approx(5 / 6, abs=1e-16)
    assert trial_eval(1, 0.0) == pytest.approx(0.0, abs=1e-16)
    with pytest.raises(ValueError):
        trial_eval(2, 0.1, order=3)


def test_neumann_exactness():
    for i in range(0, 101):
        for s in (-1.0, 1.0):
            assert abs(trial_eval(i, s, order=1)) <= 1e-12, (i, s)
    B1 = TrialBasis(100).matrix([-1.0, 1.0], order=1)
    assert np.max(np.abs(B1)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(i=st.integers(0, 40), x=st.floats(-0.99, 0.99))
def test_trial_derivative_consistency(i, x):
    h = 1e-4
    fd1 = (trial_eval(i, x + h) - trial_eval(i, x - h)) / (2 * h)
    fd2 = (trial_eval(i, x + h) - 2 * trial_eval(i, x) + trial_eval(i, x - h)) / h**2
    scale = 1 + i**2
    assert abs(fd1 - trial_eval(i, x, 1)) <= 1e-6 * scale**2
    assert abs(fd2 - trial_eval(i, x, 2)) <= 1e-4 * scale**3


def test_basis_matrices_and_gram():
    b = TrialBasis(12)
    assert b.size == 13 and b.degree_bound == 14
    x = np.linspace(-0.9, 0.9, 5)
    B0, B1, B2 = b.matrices(x)
    assert B0.shape == (5, 13)
    for i in range(13):
        np.testing.assert_allclose(B0[:, i], trial_eval(i, x), atol=1e-14)
        np.testing.assert_allclose(B2[:, i], trial_eval(i, x, 2), atol=1e-10)
    c = np.arange(13.0)
    np.testing.assert_allclose(b.evaluate(c, x, 1), B1 @ c, atol=1e-12)
    G = b.gram()
    np.testing.assert_allclose(G, G.T, atol=1e-14)
    assert np.all(np.linalg.eigvalsh(G) > 0)
    assert np.linalg.cond(G) < 1e4


def test_convergence_error_is_runtime_error():
    assert issubclass(ConvergenceError, RuntimeError)
