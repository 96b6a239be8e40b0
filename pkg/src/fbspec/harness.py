"""Error metrics, refinement studies and the perturbation study."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import mms, model, stepper
from .polybasis import TrialBasis


class IncommensurateGrids(ValueError):
    """A reference trajectory does not contain the levels being checked."""


@dataclass(frozen=True)
class Problem:
    """Everything needed to launch a run: data, forcing, and (for manufactured
    cases) the exact solution."""

    name: str
    params: model.ModelParams
    p0: Callable
    forcing: stepper.Forcing = stepper.NO_FORCING
    exact_p: Optional[Callable] = None
    exact_R: Optional[Callable] = None
    exact_bootstrap: bool = True
    radius_mode: str = "extrapolated"

    @classmethod
    def from_case(cls, case, exact_bootstrap=True):
        return cls(
            name=case.name,
            params=case.params,
            p0=case.initial_p,
            forcing=stepper.Forcing.from_case(case),
            exact_p=case.exact_p,
            exact_R=case.exact_R,
            exact_bootstrap=exact_bootstrap,
        )

    @classmethod
    def base_model(cls, params=None, p0=mms.base_model_p0):
        return cls(name="base-model", params=params or model.default_params(), p0=p0)

    def solve(self, N, M, T=1.0, stride=1, eps_p=0.0, eps_v=0.0, disc=None):
        forcing = self.forcing
        if eps_p or eps_v:
            forcing = replace(forcing, eps_p=forcing.eps_p + eps_p, eps_v=forcing.eps_v + eps_v)
        exact = None
        if self.exact_bootstrap and self.exact_p is not None:
            exact = (self.exact_p, self.exact_R)
        return stepper.run(
            N,
            M,
            T,
            params=self.params,
            p0=self.p0,
            forcing=forcing,
            exact=exact,
            stride=stride,
            radius_mode=self.radius_mode,
            disc=disc,
        )


def make_problem(name, params=None, paper_literal=False, exact_bootstrap=True):
    if name == "base-model":
        return Problem.base_model(params)
    return Problem.from_case(mms.get_case(name, params, paper_literal), exact_bootstrap)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _sampled(traj, include_initial):
    steps = np.asarray(traj.steps)
    keep = steps >= (0 if include_initial else 1)
    return steps[keep], np.asarray(traj.times)[keep], traj.p_array()[keep]


def e_infinity(traj, reference, include_initial=False):
    """Max |p_ref - p| over the trajectory's nodes and retained levels n >= 1.

    ``reference`` is either an exact field ``p(rho, t)`` or another
    Trajectory over the same interval whose step count is a multiple of
    ``traj.M``.  A reference with a different N is evaluated through its
    coefficients at ``traj``'s nodes.
    """
    steps, times, P = _sampled(traj, include_initial)
    if P.size == 0:
        return 0.0
    if callable(reference):
        exact = reference(np.asarray(traj.nodes)[None, :], times[:, None])
        return float(np.max(np.abs(exact - P)))

    ref = reference
    if not math.isclose(ref.T, traj.T) or ref.M % traj.M:
        raise IncommensurateGrids(f"reference grid (M={ref.M}, T={ref.T}) does not refine (M={traj.M}, T={traj.T})")
    ratio = ref.M // traj.M
    index = {s: k for k, s in enumerate(ref.steps)}
    try:
        rows = [index[s * ratio] for s in steps]
    except KeyError as err:
        raise IncommensurateGrids(f"reference lacks level {err.args[0]} (stride {ref.stride})") from None
    if ref.N == traj.N:
        R = ref.p_array()[rows]
    else:
        B = TrialBasis(ref.N).matrix(traj.nodes)
        R = ref.coeff_array()[rows] @ B.T
    return float(np.max(np.abs(R - P)))


def convergence_rate(e1, e2, n1, n2):
    """Observed order s = log(e2/e1) / log(n1/n2) between two levels."""
    if not (e1 > 0 and e2 > 0):
        raise ValueError(f"errors must be positive, got {e1!r}, {e2!r}")
    if n1 == n2:
        raise ValueError("levels must differ")
    return math.log(e2 / e1) / math.log(n1 / n2)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class ErrorReport:
    axis: str  # "time" | "space"
    case: str
    levels: list = field(default_factory=list)  # (M or N, E_inf or None)
    rates: list = field(default_factory=list)  # len(levels) - 1, None where undefined
    wall_times: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    flagged: list = field(default_factory=list)  # reference-contaminated levels
    reference: Optional[int] = None

    @property
    def errors(self):
        return [e for _, e in self.levels]

    def rows(self):
        for k, (n, e) in enumerate(self.levels):
            yield n, e, (self.rates[k - 1] if k else None)


@dataclass
class StabilityReport:
    eps_levels: list = field(default_factory=list)
    diffs: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    case: str = ""
    M: int = 0
    N: int = 0
    wall_times: list = field(default_factory=list)

    def rows(self):
        return zip(self.eps_levels, self.diffs, self.ratios)


def _rates(levels, floor):
    out = []
    for (n1, e1), (n2, e2) in zip(levels, levels[1:]):
        if e1 is None or e2 is None or e1 <= floor or e2 <= floor:
            out.append(None)
        else:
            out.append(convergence_rate(e1, e2, n1, n2))
    return out


def _map_levels(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _timed_solve(problem, N, M, T, **kw):
    started = time.perf_counter()
    traj, rep = problem.solve(N, M, T, **kw)
    return traj, rep, time.perf_counter() - started


def _check_increasing(values, what):
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{what} list not increasing: {list(values)}")


RATE_FLOOR = 1e-13


def time_refinement_study(problem, N, M_list, T=1.0, workers=1, rate_floor=RATE_FLOOR):
    """E_inf against the exact solution for each M at fixed N."""
    if problem.exact_p is None:
        raise ValueError(f"{problem.name} has no exact solution; use self_convergence_study")
    _check_increasing(M_list, "M")

    def one(M):
        traj, rep, wall = _timed_solve(problem, N, M, T)
        err = e_infinity(traj, problem.exact_p) if rep.completed else None
        return M, err, wall, rep

    report = ErrorReport(axis="time", case=problem.name)
    for M, err, wall, rep in _map_levels(one, list(M_list), workers):
        report.levels.append((M, err))
        report.wall_times.append(wall)
        if not rep.completed:
            report.failures[M] = rep.message
    report.rates = _rates(report.levels, rate_floor)
    return report


def space_refinement_study(problem, M, N_list, N_ref=600, T=1.0, workers=1, rate_floor=RATE_FLOOR):
    """E_inf against a run at N_ref for each N at fixed M."""
    _check_increasing(N_list, "N")
    if N_ref < max(N_list):
        raise ValueError(f"N_ref={N_ref} must be at least max(N)={max(N_list)}")
    ref, ref_rep, _ = _timed_solve(problem, N_ref, M, T)
    if not ref_rep.completed:
        raise stepper.SolverError(f"reference run failed: {ref_rep.message}", ref_rep.failed_step)

    def one(N):
        if N == N_ref:
            return N, 0.0, 0.0, ref_rep
        traj, rep, wall = _timed_solve(problem, N, M, T)
        err = e_infinity(traj, ref) if rep.completed else None
        return N, err, wall, rep

    report = ErrorReport(axis="space", case=problem.name, reference=N_ref)
    for N, err, wall, rep in _map_levels(one, list(N_list), workers):
        report.levels.append((N, err))
        report.wall_times.append(wall)
        if not rep.completed:
            report.failures[N] = rep.message
    report.rates = _rates(report.levels, rate_floor)
    return report


def self_convergence_study(problem, M_list, M_ref, N, T=1.0, workers=1, rate_floor=RATE_FLOOR):
    """Time refinement against a fine-step run of the same scheme.

    Levels whose error is within 10x of the reference's own estimated
    error (extrapolated from the finest computed rate) are listed in
    ``flagged``.
    """
    _check_increasing(M_list, "M")
    if M_ref < max(M_list):
        raise ValueError(f"M_ref={M_ref} must be at least max(M)={max(M_list)}")
    ref, ref_rep, _ = _timed_solve(problem, N, M_ref, T)
    if not ref_rep.completed:
        raise stepper.SolverError(f"reference run failed: {ref_rep.message}", ref_rep.failed_step)

    def one(M):
        if M == M_ref:
            return M, 0.0, 0.0, ref_rep
        traj, rep, wall = _timed_solve(problem, N, M, T)
        err = e_infinity(traj, ref) if rep.completed else None
        return M, err, wall, rep

    report = ErrorReport(axis="time", case=problem.name, reference=M_ref)
    for M, err, wall, rep in _map_levels(one, list(M_list), workers):
        report.levels.append((M, err))
        report.wall_times.append(wall)
        if not rep.completed:
            report.failures[M] = rep.message
    report.rates = _rates(report.levels, rate_floor)

    known = [(m, e, s) for (m, e), s in zip(report.levels[1:], report.rates) if s is not None and e]
    if known:
        m_last, e_last, s_last = known[-1]
        ref_est = e_last * (m_last / M_ref) ** max(s_last, 0.0)
        report.flagged = [m for m, e in report.levels if e is not None and m != M_ref and e < 10.0 * ref_est]
    return report


def stability_study(problem, eps_list, M, N, T=1.0, components="both", workers=1):
    """Distance between base and perturbed runs for each perturbation level.

    The perturbations are constants of size eps added to the parabolic
    right side (``components`` "parabolic"), the velocity right side
    ("velocity"), or both (default).
    """
    if components not in ("both", "parabolic", "velocity"):
        raise ValueError(f"unknown components {components!r}")
    if any(e < 0 for e in eps_list):
        raise ValueError("perturbation sizes must be nonnegative")
    base, base_rep, _ = _timed_solve(problem, N, M, T)
    if not base_rep.completed:
        raise stepper.SolverError(f"base run failed: {base_rep.message}", base_rep.failed_step)

    def one(eps):
        if eps == 0:
            return eps, 0.0, 0.0
        kw = {}
        if components in ("both", "parabolic"):
            kw["eps_p"] = eps
        if components in ("both", "velocity"):
            kw["eps_v"] = eps
        traj, rep, wall = _timed_solve(problem, N, M, T, **kw)
        if not rep.completed:
            return eps, None, wall
        return eps, e_infinity(traj, base), wall

    report = StabilityReport(case=problem.name, M=M, N=N)
    for eps, diff, wall in _map_levels(one, list(eps_list), workers):
        report.eps_levels.append(eps)
        report.diffs.append(diff)
        report.ratios.append(diff / eps if (diff is not None and eps > 0) else None)
        report.wall_times.append(wall)
    return report
