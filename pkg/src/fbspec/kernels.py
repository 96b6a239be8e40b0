"""Inner-loop kernels.

Every kernel exists twice: a loop version compiled with ``numba.njit`` and a
vectorised numpy version.  The public names at the bottom of the module pick
one of them according to ``fbspec._accel.USE_NUMBA``; both variants stay
importable so they can be compared against each other (see
``benchmarks/bench_kernels.py`` and ``tests/test_kernels.py``).
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Legendre values and derivatives for all degrees 0..nmax at a set of points.
#
#   P_{k+1}   = ((2k+1) x P_k - k P_{k-1}) / (k+1)
#   P'_{k+1}  = P'_{k-1} + (2k+1) P_k
#   P''_{k+1} = P''_{k-1} + (2k+1) P'_k
#
# The derivative recurrences avoid the 1/(1-x^2) form, so x = +-1 is fine.
# ---------------------------------------------------------------------------


def legendre_table_numpy(nmax, x):
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    P = np.zeros((m, nmax + 1))
    dP = np.zeros((m, nmax + 1))
    d2P = np.zeros((m, nmax + 1))
    P[:, 0] = 1.0
    if nmax >= 1:
        P[:, 1] = x
        dP[:, 1] = 1.0
    for k in range(1, nmax):
        P[:, k + 1] = ((2 * k + 1) * x * P[:, k] - k * P[:, k - 1]) / (k + 1)
        dP[:, k + 1] = dP[:, k - 1] + (2 * k + 1) * P[:, k]
        d2P[:, k + 1] = d2P[:, k - 1] + (2 * k + 1) * dP[:, k]
    return P, dP, d2P


@njit(cache=True)
def legendre_table_numba(nmax, x):
    m = x.shape[0]
    P = np.zeros((m, nmax + 1))
    dP = np.zeros((m, nmax + 1))
    d2P = np.zeros((m, nmax + 1))
    for j in range(m):
        xj = x[j]
        P[j, 0] = 1.0
        if nmax >= 1:
            P[j, 1] = xj
            dP[j, 1] = 1.0
        for k in range(1, nmax):
            P[j, k + 1] = ((2 * k + 1) * xj * P[j, k] - k * P[j, k - 1]) / (k + 1)
            dP[j, k + 1] = dP[j, k - 1] + (2 * k + 1) * P[j, k]
            d2P[j, k + 1] = d2P[j, k - 1] + (2 * k + 1) * dP[j, k]
    return P, dP, d2P


# ---------------------------------------------------------------------------
# Newton iteration for the roots of P_n.  Returns the roots, P_n' at the roots
# and the number of sweeps used (-1 when the budget ran out).
# ---------------------------------------------------------------------------


def _pn_and_deriv_numpy(n, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    d0 = np.zeros_like(x)
    d1 = np.ones_like(x)
    if n == 0:
        return p0, d0
    for k in range(1, n):
        p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
        d2 = d0 + (2 * k + 1) * p1
        p0, p1 = p1, p2
        d0, d1 = d1, d2
    return p1, d1


def gauss_newton_numpy(n, x0, tol, maxiter):
    x = np.array(x0, dtype=np.float64)
    for it in range(1, maxiter + 1):
        p, dp = _pn_and_deriv_numpy(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            p, dp = _pn_and_deriv_numpy(n, x)
            return x, dp, it
    return x, _pn_and_deriv_numpy(n, x)[1], -1


@njit(cache=True)
def _pn_and_deriv_scalar(n, x):
    p0 = 1.0
    p1 = x
    d0 = 0.0
    d1 = 1.0
    if n == 0:
        return p0, d0
    for k in range(1, n):
        p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
        d2 = d0 + (2 * k + 1) * p1
        p0 = p1
        p1 = p2
        d0 = d1
        d1 = d2
    return p1, d1


@njit(cache=True)
def gauss_newton_numba(n, x0, tol, maxiter):
    x = x0.copy()
    dp_out = np.empty_like(x)
    worst = 0
    for i in range(x.shape[0]):
        xi = x[i]
        done = False
        for it in range(1, maxiter + 1):
            p, dp = _pn_and_deriv_scalar(n, xi)
            dx = p / dp
            xi -= dx
            if abs(dx) <= tol:
                done = True
                if it > worst:
                    worst = it
                break
        if not done:
            x[i] = xi
            dp_out[i] = _pn_and_deriv_scalar(n, xi)[1]
            return x, dp_out, -1
        x[i] = xi
        dp_out[i] = _pn_and_deriv_scalar(n, xi)[1]
    return x, dp_out, worst


# ---------------------------------------------------------------------------
# Collocation operator: row j, column i
#   B0[j,i] - adv[j] * B1[j,i] - diff * (B2[j,i] + 2 B1[j,i] / (x_j + 1))
# ---------------------------------------------------------------------------


def assemble_operator_numpy(B0, B1, B2, x, adv, diff):
    return B0 - adv[:, None] * B1 - diff * (B2 + (2.0 / (x + 1.0))[:, None] * B1)


@njit(cache=True)
def assemble_operator_numba(B0, B1, B2, x, adv, diff):
    m, n = B0.shape
    A = np.empty((m, n))
    for j in range(m):
        s = 2.0 / (x[j] + 1.0)
        a = adv[j]
        for i in range(n):
            A[j, i] = B0[j, i] - a * B1[j, i] - diff * (B2[j, i] + s * B1[j, i])
    return A


# ---------------------------------------------------------------------------
# Composite quadrature: integrand samples F[k, q] on panel k at point q with
# scaled weights W[k, q].  Returns the running integral after each panel.
# ---------------------------------------------------------------------------


def panel_cumsum_numpy(F, W):
    return np.cumsum(np.sum(F * W, axis=1))


@njit(cache=True)
def panel_cumsum_numba(F, W):
    k, q = F.shape
    out = np.empty(k)
    acc = 0.0
    for a in range(k):
        s = 0.0
        for b in range(q):
            s += F[a, b] * W[a, b]
        acc += s
        out[a] = acc
    return out


if USE_NUMBA:
    legendre_table = legendre_table_numba
    gauss_newton = gauss_newton_numba
    assemble_operator = assemble_operator_numba
    panel_cumsum = panel_cumsum_numba
else:
    legendre_table = legendre_table_numpy
    gauss_newton = gauss_newton_numpy
    assemble_operator = assemble_operator_numpy
    panel_cumsum = panel_cumsum_numpy
