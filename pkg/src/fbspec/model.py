"""Coefficient functions and parameters of the reduced prostate-tumour model.

Only the androgen-dependent fraction p is evolved; the androgen-independent
fraction is eliminated through the constant-sum closure, so the AI rates
enter only through the velocity right-hand side.
"""

from dataclasses import asdict, dataclass, fields, replace

import numpy as np


class AdmissibilityError(ValueError):
    """A parameter set violates the model's admissibility conditions."""


@dataclass(frozen=True)
class ModelParams:
    """Biological and therapy constants.

    Defaults are the customary experimental values.  They
    violate ``w2 < 1 < w1`` (w1 = 0.35), so the default set is only accepted
    with ``relax_admissibility=True``; see :func:`default_params`.
    """

    w1: float = 0.35
    w2: float = 0.1
    delta1: float = 0.8245
    delta2: float = 1.035
    theta1: float = 0.2
    K: float = 1.0
    a_s: float = 0.0
    b: float = 1.0
    beta1: float = 0.1
    D_p: float = 1.0
    I: float = 1.0  # noqa: E741 - inhibitor intensity
    relax_admissibility: bool = False

    def __post_init__(self):
        for problem in self.violations(strict=not self.relax_admissibility):
            raise AdmissibilityError(problem)

    def violations(self, strict=True):
        """Human-readable list of broken conditions.

        The hard conditions (signs, ranges) are always checked; the
        model-admissibility inequalities, and D_p > 0, only when ``strict``.
        Relaxed sets may therefore describe the degenerate limit D_p = 0.
        """
        out = []
        if not 0.0 <= self.I <= 1.0:
            out.append(f"I must lie in [0, 1], got {self.I}")
        if not self.D_p >= 0:
            out.append(f"D_p must be nonnegative, got {self.D_p}")
        if not self.K > 0:
            out.append(f"K must be positive, got {self.K}")
        if not self.b > 0:
            out.append(f"b must be positive, got {self.b}")
        if not strict:
            return out
        if not self.D_p > 0:
            out.append(f"D_p must be positive, got {self.D_p}")
        if not 0.0 <= self.a_s < 1.0:
            out.append(f"a_s must satisfy 0 <= a_s < 1, got {self.a_s}")
        if not 0.0 <= self.theta1 < 1.0:
            out.append(f"theta1 must satisfy 0 <= theta1 < 1, got {self.theta1}")
        if not self.delta1 < self.delta2:
            out.append(f"need delta1 < delta2, got {self.delta1} >= {self.delta2}")
        if not self.w2 < 1.0:
            out.append(f"need w2 < 1, got {self.w2}")
        if not self.w1 > 1.0:
            out.append(f"need w1 > 1, got {self.w1}")
        return out

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return asdict(self)


PARAM_NAMES = tuple(f.name for f in fields(ModelParams) if f.name != "relax_admissibility")


def default_params():
    return ModelParams(relax_admissibility=True)


def androgen(t, p):
    """a(t) = exp(-b t) + a_s."""
    return np.exp(-p.b * np.asarray(t, dtype=np.float64)) + p.a_s


def _saturation(a, p):
    return a / (a + p.K)


def alpha_p(a, p):
    return p.theta1 + (1.0 - p.theta1) * _saturation(a, p)


def delta_p(a, p):
    return p.delta1 * (p.w1 + (1.0 - p.w1) * _saturation(a, p))


def delta_q(a, p):
    return p.delta2 * (p.w2 + (1.0 - p.w2) * _saturation(a, p))


def beta_mut(a, p):
    return p.beta1 * (1.0 - a / (1.0 + p.a_s))


def reaction_f(p_val, t, params):
    """Reaction term of the AD equation, affine in ``p_val``."""
    a = androgen(t, params)
    return 1.0 - p_val - delta_p(a, params) * (1.0 - p_val) - (1.0 - params.I) * beta_mut(a, params) * p_val


def reaction_coeffs(t, params):
    """(c0, c1) with reaction_f(p, t) == c0 + c1 * p."""
    a = androgen(t, params)
    dp = delta_p(a, params)
    return 1.0 - dp, -1.0 + dp - (1.0 - params.I) * beta_mut(a, params)


def growth_rate(p_val, t, params):
    """Net local volume production alpha_p p + 1 - p - delta_p p - delta_q (1 - p)."""
    a = androgen(t, params)
    return (
        alpha_p(a, params) * p_val
        + 1.0
        - p_val
        - delta_p(a, params) * p_val
        - delta_q(a, params) * (1.0 - p_val)
    )


def velocity_rhs(p_val, rho, R, t, params):
    """Right side of the velocity equation, R (rho+1)^2 / 2 * growth."""
    return R * (np.asarray(rho) + 1.0) ** 2 / 2.0 * growth_rate(p_val, t, params)
