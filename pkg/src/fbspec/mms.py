"""Manufactured solutions for the front-fixed system.

A case carries closed-form p, v, R and the source terms that make them exact
solutions of

    p_t - (rho+1) v(1,t)/R p_rho - 4 D_p/(R^2 (rho+1)^2) ((rho+1)^2 p_rho)_rho
        = f(p) + f_p,
    ((rho+1)^2 v p)_rho = R (rho+1)^2/2 * growth(p) + f_v,
    R' = v(1,t) + f_R.

Field derivatives come from sympy; the model coefficients are applied
numerically so sources track whatever ModelParams the case was built with.
:func:`verify_case` re-derives the residuals by finite differences, which is
independent of the symbolic route.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from . import model

Field2 = Callable[[np.ndarray, np.ndarray], np.ndarray]

_rho, _t = sp.symbols("rho t", real=True)


def _lambdify2(expr):
    f = sp.lambdify((_rho, _t), expr, modules="numpy")

    def call(rho, t):
        rho = np.asarray(rho, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        out = np.asarray(f(rho, t), dtype=np.float64)
        shape = np.broadcast(rho, t).shape
        return out if out.shape == shape else np.broadcast_to(out, shape).copy()

    return call


def _lambdify1(expr):
    f = sp.lambdify(_t, expr, modules="numpy")

    def call(t):
        t = np.asarray(t, dtype=np.float64)
        out = np.asarray(f(t), dtype=np.float64)
        return out if out.shape == t.shape else np.broadcast_to(out, t.shape).copy()

    return call


@dataclass(frozen=True)
class MMSCase:
    name: str
    params: model.ModelParams
    exact_p: Field2
    exact_v: Field2
    exact_R: Callable
    source_p: Field2
    source_v: Field2
    source_R: Callable = field(default=lambda t: np.zeros_like(np.asarray(t, dtype=np.float64)))

    def initial_p(self, rho):
        return self.exact_p(rho, 0.0)


def manufactured(name, p_expr, v_expr, R_expr, params):
    """Build a case from sympy expressions in ``rho`` and ``t``."""
    p_t = sp.diff(p_expr, _t)
    p_r = sp.diff(p_expr, _rho)
    # (rho+1)^-2 ((rho+1)^2 p_r)_r, cancelled so polynomial cases stay regular
    lap = sp.cancel(sp.diff(p_r, _rho) + 2 * p_r / (_rho + 1))
    flux_r = sp.diff((_rho + 1) ** 2 * v_expr * p_expr, _rho)
    v_one = v_expr.subs(_rho, 1)
    dR = sp.diff(R_expr, _t)

    P, V, R = _lambdify2(p_expr), _lambdify2(v_expr), _lambdify1(R_expr)
    Pt, Pr, Lap, Flux = map(_lambdify2, (p_t, p_r, lap, flux_r))
    V1, dRf = _lambdify1(v_one), _lambdify1(dR)

    def source_p(rho, t):
        rr = R(t)
        pv = P(rho, t)
        lhs = Pt(rho, t) - (np.asarray(rho) + 1.0) * V1(t) / rr * Pr(rho, t) - 4.0 * params.D_p / rr**2 * Lap(rho, t)
        return lhs - model.reaction_f(pv, t, params)

    def source_v(rho, t):
        return Flux(rho, t) - model.velocity_rhs(P(rho, t), rho, R(t), t, params)

    def source_R(t):
        return dRf(t) - V1(t)

    return MMSCase(
        name=name,
        params=params,
        exact_p=P,
        exact_v=V,
        exact_R=R,
        source_p=source_p,
        source_v=source_v,
        source_R=source_R,
    )


def example1(params=None, paper_literal=False):
    """p = (e^t + 1)(rho^3/3 - rho), R = 1/(t+1), v as originally stated.

    That velocity is nonzero at rho = -1.  By default the value at
    the centre is subtracted so v(-1, t) = 0; the radius equation then picks
    up a source f_R = R' - v(1, t).  ``paper_literal=True`` keeps the
    original v, for which f_R vanishes.
    """
    params = params or model.default_params()
    e2 = sp.exp(2)
    v = -(sp.exp(_rho + 1) + 1) / ((e2 + 1) * (_t + 1) ** 2)
    if not paper_literal:
        v = v - v.subs(_rho, -1)
    p = (sp.exp(_t) + 1) * (_rho**3 / 3 - _rho)
    name = "example1-literal" if paper_literal else "example1"
    return manufactured(name, p, v, 1 / (_t + 1), params)


def example2(params=None):
    """p = e^t (rho^4 - 2 rho^2), R = 1/(t+1), v = -(sin(pi rho/2) + 1)/(2 (t+1)^2)."""
    params = params or model.default_params()
    p = sp.exp(_t) * (_rho**4 - 2 * _rho**2)
    v = -(sp.sin(sp.pi * _rho / 2) + 1) / (2 * (_t + 1) ** 2)
    return manufactured("example2", p, v, 1 / (_t + 1), params)


def get_case(name, params=None, paper_literal=False):
    if name == "example1":
        return example1(params, paper_literal=paper_literal)
    if name == "example2":
        return example2(params)
    raise KeyError(f"unknown manufactured case {name!r}")


def base_model_p0(rho):
    """Initial AD fraction for source-free runs: 1/2 + 3/8 (rho^3/3 - rho).

    Lies in [1/4, 3/4], has zero slope at both ends and belongs to the trial
    space for N >= 1.
    """
    rho = np.asarray(rho, dtype=np.float64)
    return 0.5 + 0.375 * (rho**3 / 3.0 - rho)


# ---------------------------------------------------------------------------
# finite-difference residual oracle
# ---------------------------------------------------------------------------

# sixth-order central stencils at offsets -3..3
_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_OFF = np.arange(-3, 4)


def _d_rho(f, rho, t, h, stencil, power):
    return sum(c * f(rho + k * h, t) for c, k in zip(stencil, _OFF) if c != 0.0) / h**power


def _d_t(f, t, h):
    return sum(c * f(t + k * h) for c, k in zip(_D1, _OFF) if c != 0.0) / h


@dataclass
class ResidualReport:
    parabolic: float
    velocity: float
    radius: float
    neumann: float
    v_boundary: float
    samples: int

    def max(self):
        return max(self.parabolic, self.velocity, self.radius, self.neumann, self.v_boundary)

    def ok(self, tol=1e-8):
        return self.max() <= tol


def verify_case(case, samples=1000, seed=0, h=1e-2):
    """Max residuals of the exact fields against the case's own sources.

    Derivatives are sixth-order central differences of the exact closures,
    so nothing here shares code with the symbolic source construction.
    """
    rng = np.random.default_rng(seed)
    rho = rng.uniform(-0.9, 1.0, samples)
    t = rng.uniform(0.0, 1.0, samples)
    prm = case.params
    P, V, R = case.exact_p, case.exact_v, case.exact_R

    p_t = sum(c * P(rho, t + k * h) for c, k in zip(_D1, _OFF) if c != 0.0) / h
    p_r = _d_rho(P, rho, t, h, _D1, 1)
    p_rr = _d_rho(P, rho, t, h, _D2, 2)
    Rt = R(t)
    v1 = V(np.ones_like(t), t)
    lhs = p_t - (rho + 1.0) * v1 / Rt * p_r - 4.0 * prm.D_p / Rt**2 * (p_rr + 2.0 * p_r / (rho + 1.0))
    par = lhs - model.reaction_f(P(rho, t), t, prm) - case.source_p(rho, t)

    flux = _d_rho(lambda r, s: (r + 1.0) ** 2 * V(r, s) * P(r, s), rho, t, h, _D1, 1)
    vel = flux - model.velocity_rhs(P(rho, t), rho, Rt, t, prm) - case.source_v(rho, t)

    rad = _d_t(R, t, h) - v1 - case.source_R(t)

    neu = np.concatenate([_d_rho(P, np.full_like(t, s), t, h, _D1, 1) for s in (-1.0, 1.0)])
    vbc = V(-np.ones_like(t), t)
    return ResidualReport(
        parabolic=float(np.max(np.abs(par))),
        velocity=float(np.max(np.abs(vel))),
        radius=float(np.max(np.abs(rad))),
        neumann=float(np.max(np.abs(neu))),
        v_boundary=float(np.max(np.abs(vbc))),
        samples=samples,
    )
