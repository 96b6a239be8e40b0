"""Front-fixed finite-difference / collocation time march.

Each step, in this order:

1. radius from the three-level formula
   R_{n+1} = R_n - (R_{n-1} - R_n)/3 + h* w,  h* = 2h/3;
2. the parabolic equation collocated at the Gauss nodes,
   [b_i - h* g_n b_i' - (4 h* D_p / R_{n+1}^2)(b_i'' + 2 b_i'/(x+1))] a_i = g*_n,
   with g_n = (x+1)(2 v_n(1) - v_{n-1}(1)) / R_{n+1} and history
   g*_n = p_n - (p_{n-1} - p_n)/3 + h* (2 F_n - F_{n-1});
3. the velocity at the new level by integrating the elliptic equation from
   the centre and dividing by (x+1)^2 p.

``w`` is the boundary speed fed to the radius update.  ``radius_mode``
selects ``"extrapolated"`` (2 v_n(1) - v_{n-1}(1), the same linearisation
used for g_n; default) or ``"lagged"`` (v_n(1) alone).
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.linalg import lapack

from . import kernels, model
from .polybasis import TrialBasis, gauss_rule

logger = logging.getLogger(__name__)

EPS_DIV = 1e-10
COND_LIMIT = 1e13
PANEL_POINTS = 16
PROJECTION_TOL = 1e-8


class SolverError(RuntimeError):
    """A terminal condition during the march."""

    reason = "solver-error"

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class TumorCollapse(SolverError):
    reason = "collapse"


class SingularSystem(SolverError):
    reason = "singular"


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int
    h: float = field(init=False)
    h_star: float = field(init=False)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"need M >= 2 time steps, got {self.M}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        h = self.T / self.M
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "h_star", 2.0 * h / 3.0)

    def t(self, n):
        return n * self.h

    def times(self):
        return np.arange(self.M + 1) * self.h


@dataclass(frozen=True)
class Forcing:
    """Optional right-hand-side additions (manufactured sources, perturbations)."""

    source_p: Optional[Callable] = None
    source_v: Optional[Callable] = None
    source_R: Optional[Callable] = None
    eps_p: float = 0.0
    eps_v: float = 0.0

    @classmethod
    def from_case(cls, case, eps_p=0.0, eps_v=0.0):
        return cls(case.source_p, case.source_v, case.source_R, eps_p, eps_v)

    def p_extra(self, x, t):
        out = np.full_like(x, self.eps_p)
        if self.source_p is not None:
            out += self.source_p(x, t)
        return out

    def v_extra(self, x, t):
        out = np.full_like(x, self.eps_v)
        if self.source_v is not None:
            out += self.source_v(x, t)
        return out

    def R_extra(self, t):
        return 0.0 if self.source_R is None else float(self.source_R(t))


NO_FORCING = Forcing()


class Discretization:
    """Basis, collocation rule and everything precomputed from them."""

    def __init__(self, N):
        self.N = int(N)
        self.basis = TrialBasis(self.N)
        self.rule = gauss_rule(self.N + 1)
        x = self.rule.nodes
        self.nodes = x
        self.B0, self.B1, self.B2 = self.basis.matrices(x)
        self.B_one = self.basis.matrix([1.0])[0]

        # composite panels [-1, x_0], [x_0, x_1], ..., [x_N, 1]
        edges = np.concatenate(([-1.0], x, [1.0]))
        panel = gauss_rule(PANEL_POINTS)
        half = 0.5 * np.diff(edges)[:, None]
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        self.panel_x = mid + half * panel.nodes[None, :]
        self.panel_w = half * panel.weights[None, :]
        self.panel_B = self.basis.matrix(self.panel_x.ravel())

    @property
    def size(self):
        return self.N + 1

    def nodal(self, coeffs):
        return self.B0 @ coeffs

    def evaluate(self, coeffs, x):
        return self.basis.evaluate(coeffs, x)


@dataclass(frozen=True)
class VelocityField:
    rho: np.ndarray  # [-1, x_0..x_N, 1]
    values: np.ndarray
    flagged: tuple = ()

    @property
    def v1(self):
        return float(self.values[-1])

    @property
    def at_nodes(self):
        return self.values[1:-1]


@dataclass(frozen=True)
class SolverState:
    n: int
    coeffs_n: np.ndarray
    coeffs_nm1: np.ndarray
    p_nodes_n: np.ndarray
    p_nodes_nm1: np.ndarray
    velocity_n: VelocityField
    v1_n: float
    v1_nm1: float
    R_n: float
    R_nm1: float


def radius_update(R_n, R_nm1, w, h_star, step=None):
    """Three-level radius update R_n - (R_{n-1} - R_n)/3 + h* w."""
    R = R_n - (R_nm1 - R_n) / 3.0 + h_star * w
    if not R > 0.0:
        raise TumorCollapse(f"radius became nonpositive ({R!r})", step)
    return R


def _fill_flagged(x, v, bad, npts=6):
    good = np.flatnonzero(~bad)
    if good.size == 0:
        return v
    out = v.copy()
    for j in np.flatnonzero(bad):
        near = good[np.argsort(np.abs(x[good] - x[j]), kind="stable")[:npts]]
        near = np.sort(near)
        out[j] = BarycentricInterpolator(x[near], v[near])(x[j])
    return out


def reconstruct_velocity(disc, coeffs, R, t, params, forcing=NO_FORCING, eps_div=EPS_DIV):
    """Velocity from ((x+1)^2 v p)' = rhs, v(-1) = 0.

    W(x) = int_{-1}^{x} rhs is accumulated panel by panel with a 16-point
    Gauss rule; v = W / ((x+1)^2 p).  Nodes where the divisor is below
    ``eps_div`` get an interpolated value and are listed in ``flagged``.
    """
    xq = disc.panel_x
    pq = (disc.panel_B @ coeffs).reshape(xq.shape)
    F = model.velocity_rhs(pq, xq, R, t, params)
    if forcing.source_v is not None or forcing.eps_v:
        F = F + forcing.v_extra(xq, t)
    W = kernels.panel_cumsum(np.ascontiguousarray(F), disc.panel_w)

    x = np.concatenate((disc.nodes, [1.0]))
    p = np.concatenate((disc.B0 @ coeffs, [disc.B_one @ coeffs]))
    denom = (x + 1.0) ** 2 * p
    bad = np.abs(denom) < eps_div
    v = np.where(bad, 0.0, W / np.where(bad, 1.0, denom))
    flagged = ()
    if bad.any():
        v = _fill_flagged(x, v, bad)
        flagged = tuple(int(i) for i in np.flatnonzero(bad))
    return VelocityField(
        rho=np.concatenate(([-1.0], x)),
        values=np.concatenate(([0.0], v)),
        flagged=flagged,
    )


def _history_terms(disc, p_k, t_k, params, forcing):
    c0, c1 = model.reaction_coeffs(t_k, params)
    F = c0 + c1 * p_k
    if forcing.source_p is not None or forcing.eps_p:
        F = F + forcing.p_extra(disc.nodes, t_k)
    return F


def _operator(disc, dt, adv_speed, R_new, params):
    x = disc.nodes
    adv = dt * (x + 1.0) * adv_speed / R_new
    diff = 4.0 * dt * params.D_p / R_new**2
    return kernels.assemble_operator(disc.B0, disc.B1, disc.B2, x, adv, diff)


def assemble_step_system(disc, state, R_np1, t_np1, grid, params, forcing=NO_FORCING):
    """Matrix and right side of the collocated step to level n+1."""
    hs = grid.h_star
    A = _operator(disc, hs, 2.0 * state.v1_n - state.v1_nm1, R_np1, params)
    t_n = t_np1 - grid.h
    t_nm1 = t_n - grid.h
    Fn = _history_terms(disc, state.p_nodes_n, t_n, params, forcing)
    Fm = _history_terms(disc, state.p_nodes_nm1, t_nm1, params, forcing)
    rhs = state.p_nodes_n - (state.p_nodes_nm1 - state.p_nodes_n) / 3.0 + hs * (2.0 * Fn - Fm)
    return A, rhs


def solve_dense(A, b, step=None, cond_limit=COND_LIMIT):
    """LU with partial pivoting plus a 1-norm condition estimate."""
    lu, piv, info = lapack.dgetrf(A)
    if info > 0:
        raise SingularSystem("exactly singular collocation matrix", step)
    anorm = np.abs(A).sum(axis=0).max()
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if rcond * cond_limit < 1.0:
        raise SingularSystem(f"condition estimate {1.0 / max(rcond, 1e-300):.3e} exceeds {cond_limit:.0e}", step)
    x, info = lapack.dgetrs(lu, piv, b)
    return x


def project(disc, p0):
    """Least-squares coefficients of p0 at the collocation nodes, and the
    max deviation of the expansion from p0 on a dense check grid."""
    a, *_ = np.linalg.lstsq(disc.B0, p0(disc.nodes), rcond=None)
    check = np.linspace(-1.0, 1.0, 4 * disc.size + 1)
    resid = float(np.max(np.abs(disc.evaluate(a, check) - p0(check))))
    return a, resid


def _boundary_speed(v1, t, forcing):
    return v1 + forcing.R_extra(t)


def bootstrap(p0, grid, disc, params, forcing=NO_FORCING, exact=None, R0=1.0):
    """State at n = 1.

    Level 0 is the projection of ``p0``.  Level 1 is one backward-Euler step
    of size h (radius by forward Euler), or, when ``exact`` is given as
    (p_exact(rho, t), R_exact(t)), the projection of the exact data at t = h.
    Returns the state and the projection residual.
    """
    a0, resid = project(disc, p0)
    if resid > PROJECTION_TOL:
        logger.warning("initial data lies outside the trial space (residual %.3e)", resid)
    t0, t1 = 0.0, grid.h
    vel0 = reconstruct_velocity(disc, a0, R0, t0, params, forcing)
    p_nodes0 = disc.nodal(a0)
    if exact is not None:
        p_ex, R_ex = exact
        a1, _ = project(disc, lambda r: p_ex(r, t1))
        R1 = float(R_ex(t1))
    else:
        R1 = radius_update(R0, R0, _boundary_speed(vel0.v1, t0, forcing), grid.h, step=1)
        A = _operator(disc, grid.h, vel0.v1, R1, params)
        c0, c1 = model.reaction_coeffs(t1, params)
        A = A - grid.h * c1 * disc.B0
        rhs = p_nodes0 + grid.h * c0
        if forcing.source_p is not None or forcing.eps_p:
            rhs = rhs + grid.h * forcing.p_extra(disc.nodes, t1)
        a1 = solve_dense(A, rhs, step=1)
    vel1 = reconstruct_velocity(disc, a1, R1, t1, params, forcing)
    state = SolverState(
        n=1,
        coeffs_n=a1,
        coeffs_nm1=a0,
        p_nodes_n=disc.nodal(a1),
        p_nodes_nm1=p_nodes0,
        velocity_n=vel1,
        v1_n=vel1.v1,
        v1_nm1=vel0.v1,
        R_n=R1,
        R_nm1=R0,
    )
    return state, resid


def advance(state, grid, disc, params, forcing=NO_FORCING, radius_mode="extrapolated"):
    """One step n -> n+1 (radius first, then p, then velocity)."""
    n = state.n
    t_n = grid.t(n)
    t_np1 = grid.t(n + 1)
    w_n = _boundary_speed(state.v1_n, t_n, forcing)
    if radius_mode == "extrapolated":
        w = 2.0 * w_n - _boundary_speed(state.v1_nm1, grid.t(n - 1), forcing)
    elif radius_mode == "lagged":
        w = w_n
    else:
        raise ValueError(f"unknown radius_mode {radius_mode!r}")
    R_np1 = radius_update(state.R_n, state.R_nm1, w, grid.h_star, step=n + 1)
    A, rhs = assemble_step_system(disc, state, R_np1, t_np1, grid, params, forcing)
    a = solve_dense(A, rhs, step=n + 1)
    vel = reconstruct_velocity(disc, a, R_np1, t_np1, params, forcing)
    return SolverState(
        n=n + 1,
        coeffs_n=a,
        coeffs_nm1=state.coeffs_n,
        p_nodes_n=disc.nodal(a),
        p_nodes_nm1=state.p_nodes_n,
        velocity_n=vel,
        v1_n=vel.v1,
        v1_nm1=state.v1_n,
        R_n=R_np1,
        R_nm1=state.R_n,
    )


@dataclass
class Trajectory:
    """Retained time levels of a run."""

    N: int
    M: int
    T: float
    stride: int
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    p_nodes: list = field(default_factory=list)
    R: list = field(default_factory=list)
    v1: list = field(default_factory=list)
    nodes: Optional[np.ndarray] = None

    def append(self, n, t, state_coeffs, p_nodes, R, v1):
        self.steps.append(n)
        self.times.append(t)
        self.coeffs.append(np.array(state_coeffs))
        self.p_nodes.append(np.array(p_nodes))
        self.R.append(float(R))
        self.v1.append(float(v1))

    def __len__(self):
        return len(self.steps)

    def p_array(self):
        return np.array(self.p_nodes)

    def coeff_array(self):
        return np.array(self.coeffs)


@dataclass
class RunReport:
    completed: bool = True
    reason: str = "ok"
    message: str = ""
    failed_step: Optional[int] = None
    projection_residual: float = 0.0
    flagged_velocity_nodes: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def as_dict(self):
        return {
            "completed": self.completed,
            "reason": self.reason,
            "message": self.message,
            "failed_step": self.failed_step,
            "projection_residual": self.projection_residual,
            "flagged_velocity_levels": len(self.flagged_velocity_nodes),
            "wall_time": self.wall_time,
        }


def run(
    N,
    M,
    T=1.0,
    params=None,
    p0=None,
    forcing=NO_FORCING,
    exact=None,
    stride=1,
    radius_mode="extrapolated",
    disc=None,
):
    """March from t = 0 to T; returns (Trajectory, RunReport).

    Terminal conditions end the run early with ``report.completed`` false
    and the trajectory holding every level reached.
    """
    params = params or model.default_params()
    if p0 is None:
        raise ValueError("initial data p0 is required")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    grid = TimeGrid(T, M)
    disc = disc or Discretization(N)
    traj = Trajectory(N=N, M=M, T=T, stride=stride, nodes=disc.nodes)
    report = RunReport()
    started = time.perf_counter()

    def keep(n):
        return n % stride == 0 or n == M

    try:
        state, report.projection_residual = bootstrap(p0, grid, disc, params, forcing, exact)
        if keep(0):
            traj.append(0, 0.0, state.coeffs_nm1, state.p_nodes_nm1, state.R_nm1, state.v1_nm1)
        if keep(1):
            traj.append(1, grid.t(1), state.coeffs_n, state.p_nodes_n, state.R_n, state.v1_n)
        while state.n < M:
            state = advance(state, grid, disc, params, forcing, radius_mode)
            if state.velocity_n.flagged:
                report.flagged_velocity_nodes[state.n] = state.velocity_n.flagged
            if keep(state.n):
                traj.append(state.n, grid.t(state.n), state.coeffs_n, state.p_nodes_n, state.R_n, state.v1_n)
    except SolverError as err:
        report.completed = False
        report.reason = err.reason
        report.message = str(err)
        report.failed_step = err.step
        logger.warning("run stopped: %s", err)
    report.wall_time = time.perf_counter() - started
    return traj, report


def run_case(case, N, M, T=1.0, stride=1, exact_bootstrap=True, eps=0.0, radius_mode="extrapolated", disc=None):
    """Run a manufactured case (optionally with constant perturbations eps)."""
    forcing = Forcing.from_case(case, eps_p=eps, eps_v=eps)
    exact = (case.exact_p, case.exact_R) if exact_bootstrap else None
    return run(
        N,
        M,
        T,
        params=case.params,
        p0=case.initial_p,
        forcing=forcing,
        exact=exact,
        stride=stride,
        radius_mode=radius_mode,
        disc=disc,
    )


__all__ = [
    "Discretization",
    "Forcing",
    "RunReport",
    "SingularSystem",
    "SolverError",
    "SolverState",
    "TimeGrid",
    "Trajectory",
    "TumorCollapse",
    "VelocityField",
    "advance",
    "assemble_step_system",
    "bootstrap",
    "radius_update",
    "reconstruct_velocity",
    "run",
    "run_case",
    "solve_dense",
]
