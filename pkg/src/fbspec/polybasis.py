"""Legendre polynomials, Gauss-Legendre rules and the Neumann trial basis.

The trial functions are

    b_i(x) = P_i(x) - i(i+1) / ((i+2)(i+3)) * P_{i+2}(x),    i = 0..N,

which satisfy b_i'(-1) = b_i'(1) = 0, so any expansion in them honours the
homogeneous Neumann conditions without extra boundary rows.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

NEWTON_TOL = 1e-14
NEWTON_MAXITER = 100


class ConvergenceError(RuntimeError):
    """Newton iteration for Gauss nodes did not converge."""


def _as_points(x):
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return arr.ravel(), np.ndim(x) == 0, np.shape(x)


def legendre_eval(n, x):
    """P_n(x) via the three-term recurrence.  Scalar in, scalar out."""
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    pts, scalar, shape = _as_points(x)
    P, _, _ = kernels.legendre_table(n, pts)
    out = P[:, n]
    return float(out[0]) if scalar else out.reshape(shape)


def legendre_deriv(n, x, order=1):
    """First or second derivative of P_n at x."""
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order!r}")
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    pts, scalar, shape = _as_points(x)
    _, dP, d2P = kernels.legendre_table(n, pts)
    out = (dP if order == 1 else d2P)[:, n]
    return float(out[0]) if scalar else out.reshape(shape)


@dataclass(frozen=True)
class QuadratureRule:
    """N-point Gauss-Legendre rule on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    iterations: int = 0

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def mapped(self, a, b):
        """Nodes and weights transplanted to [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


def gauss_rule(N):
    """Gauss-Legendre rule with N nodes (the roots of P_N).

    Newton from the Chebyshev-type guesses cos(pi(i - 1/4)/(N + 1/2)) with
    tolerance 1e-14 and at most 100 sweeps; weights 2/((1-x^2) P_N'(x)^2).
    """
    N = int(N)
    if N < 1:
        raise ValueError(f"rule needs N >= 1 nodes, got {N}")
    i = np.arange(1, N + 1, dtype=np.float64)
    guess = np.cos(np.pi * (i - 0.25) / (N + 0.5))
    x, dp, its = kernels.gauss_newton(N, guess, NEWTON_TOL, NEWTON_MAXITER)
    if its < 0:
        raise ConvergenceError(f"Gauss node Newton iteration failed for N={N}")
    order = np.argsort(x)
    x = np.ascontiguousarray(x[order])
    dp = dp[order]
    if N % 2 == 1:
        # the middle root is exactly zero; Newton can leave a 1e-17 residue
        x[N // 2] = 0.0
        dp[N // 2] = kernels.legendre_table(N, np.zeros(1))[1][0, N]
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return QuadratureRule(nodes=x, weights=w, order=N, iterations=int(its))


def correction_coeff(i):
    return i * (i + 1) / ((i + 2) * (i + 3))


def trial_eval(i, x, order=0):
    """b_i, b_i' or b_i'' at x."""
    if order not in (0, 1, 2):
        raise ValueError(f"trial derivative order must be 0, 1 or 2, got {order!r}")
    if i < 0:
        raise ValueError(f"trial index must be nonnegative, got {i}")
    pts, scalar, shape = _as_points(x)
    tabs = kernels.legendre_table(i + 2, pts)
    T = tabs[order]
    out = T[:, i] - correction_coeff(i) * T[:, i + 2]
    return float(out[0]) if scalar else out.reshape(shape)


class TrialBasis:
    """The N+1 functions b_0..b_N (polynomials of degree up to N+2)."""

    def __init__(self, N):
        if N < 0:
            raise ValueError(f"basis index bound must be >= 0, got {N}")
        self.N = int(N)
        self._c = np.array([correction_coeff(i) for i in range(self.N + 1)])

    @property
    def size(self):
        return self.N + 1

    @property
    def degree_bound(self):
        return self.N + 2

    def matrices(self, x):
        """(B0, B1, B2): b_i^(k)(x_j) as (len(x), N+1) arrays."""
        pts = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
        tabs = kernels.legendre_table(self.N + 2, pts)
        n = self.N + 1
        return tuple(T[:, :n] - self._c * T[:, 2 : n + 2] for T in tabs)

    def matrix(self, x, order=0):
        if order not in (0, 1, 2):
            raise ValueError(f"trial derivative order must be 0, 1 or 2, got {order!r}")
        return self.matrices(x)[order]

    def evaluate(self, coeffs, x, order=0):
        return self.matrix(x, order) @ np.asarray(coeffs, dtype=np.float64)

    @cached_property
    def gram_rule(self):
        return gauss_rule(self.N + 2)

    def gram(self):
        """Discrete Gram matrix under the (N+2)-point Gauss rule."""
        r = self.gram_rule
        B = self.matrix(r.nodes)
        return B.T @ (r.weights[:, None] * B)
