"""Closed-form side of the constrained minimization of the Lyapunov exponent.

The curve minimizing the exponent under the quadratic smoothness constraint
Int a D^2 + b D'^2 + c D''^2 = 1 satisfies a periodic Euler-Lagrange problem.
For small noise the problem is solved by regular perturbation: the leading
curve is a pure sine (Type II), and the first correction is a second-harmonic
deformation of size sigma^2.  This module carries the closed forms; the
``bvp`` module solves the same problem numerically at finite sigma.

Which of three qualitatively different regimes the constraint weights fall in
is decided by the characteristic polynomial of the leading-order operator,

    a nu + (1 - b nu) y^2 + c nu y^4 = 0,

evaluated on periodic exponents y = 2 pi i k:

* a > 0: a unique multiplier nu makes y = +-2 pi i a root, giving the unique
  sine optimum ("unique-optimum").
* a = 0, c > 0: y = 0 is a double root, constants join the kernel, and the
  constraint leaves a one-parameter family of candidates ("solution-family").
* a = 0, c = 0, b > 0: no choice of nu admits periodic solutions
  ("no-periodic-solution").

The {0,1} taxonomy extends verbatim to general nonnegative weights through
the same root analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .density import interval_decomposition
from .lyapunov import lyapunov_family
from .prc import ConstraintParams, Prc, prc_from_fourier

__all__ = [
    "CASE_NO_SOLUTION",
    "CASE_UNIQUE",
    "CASE_FAMILY",
    "ConstraintCase",
    "InadmissibleConstraintError",
    "classify_constraint_case",
    "leading_multiplier",
    "PerturbationSolution",
    "optimal_prc_perturbative",
    "family_prc",
    "family_optimal_k",
    "extrema_locations",
]

CASE_NO_SOLUTION = "no-periodic-solution"
CASE_UNIQUE = "unique-optimum"
CASE_FAMILY = "solution-family"

_PI = math.pi


class InadmissibleConstraintError(Exception):
    """Raised when an operation requires a constraint regime it was not given."""


@dataclass(frozen=True)
class ConstraintCase:
    params: ConstraintParams
    classification: str


def classify_constraint_case(params: ConstraintParams) -> ConstraintCase:
    """Classify the constraint weights by the periodic-root structure above."""
    if params.a > 0.0:
        kind = CASE_UNIQUE
    elif params.c > 0.0:
        kind = CASE_FAMILY
    else:
        kind = CASE_NO_SOLUTION
    return ConstraintCase(params, kind)


def _denominator(params: ConstraintParams) -> float:
    return params.a + 4.0 * params.b * _PI**2 + 16.0 * params.c * _PI**4


def leading_multiplier(params: ConstraintParams) -> float:
    """Leading-order Lagrange multiplier 4 pi^2 / (a + 4 b pi^2 + 16 c pi^4).

    Defined by requiring y = 2 pi i to be a root of the characteristic
    polynomial; only the unique-optimum regime (a > 0) pins it down.
    """
    if classify_constraint_case(params).classification != CASE_UNIQUE:
        raise InadmissibleConstraintError(
            "the leading multiplier is only defined in the unique-optimum regime (a > 0)"
        )
    return 4.0 * _PI**2 / _denominator(params)


@dataclass(frozen=True)
class PerturbationSolution:
    """Perturbation-series solution of the constrained minimization.

    The total curve is ``base + sigma^2 * correction`` and is exposed as
    ``prc``.  ``multiplier`` is the leading Lagrange multiplier of the
    integral constraint; its first correction vanishes, as does the
    sine-component amplitude of the correction term (both recorded
    explicitly so they can be asserted against).
    """

    base: Prc
    correction: Prc
    multiplier: float
    multiplier_correction: float
    base_amplitude: float
    correction_amplitude: float
    sigma: float
    prc: Prc

    def stationarity_multiplier(self, theta):
        """Leading multiplier function of the stationarity constraint.

        Equal to base * base'' pointwise; only the leading order is defined
        by the series.
        """
        return self.base(theta) * self.base(theta, order=2)


def optimal_prc_perturbative(
    params: ConstraintParams, sigma: float, positive_branch: bool = False
) -> PerturbationSolution:
    """Optimal curve through second order in the noise amplitude.

    The leading term is C0 sin(2 pi theta) with
    C0 = -sqrt(2)/sqrt(a + 4 b pi^2 + 16 c pi^4); the negative amplitude is
    the canonical branch (the one shaped like measured resetting curves), and
    the mirrored branch is available behind ``positive_branch``.  The
    correction term is

        correction = sqrt(2) pi sin(2 pi theta) sin(4 pi theta)
                     / (2 (a - 144 c pi^4) sqrt(a + 4 b pi^2 + 16 c pi^4)),

    so that base + sigma^2 * correction carries the full second-order
    deformation.  The correction changes sign with the branch.
    """
    if classify_constraint_case(params).classification != CASE_UNIQUE:
        raise InadmissibleConstraintError(
            "the perturbative optimum exists only in the unique-optimum regime (a > 0)"
        )
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    a, _, c = params.as_tuple()
    resonant = a - 144.0 * c * _PI**4
    if resonant == 0.0:
        raise InadmissibleConstraintError(
            "constraint weights hit the resonant ratio a = 144 c pi^4; the "
            "second-order correction is unbounded there"
        )
    den = _denominator(params)
    c0 = -math.sqrt(2.0) / math.sqrt(den)
    if positive_branch:
        c0 = -c0
    base = prc_from_fourier([0.0], [c0])

    # sin(2 pi t) sin(4 pi t) = (cos(2 pi t) - cos(6 pi t)) / 2
    gain = math.sqrt(2.0) * _PI / (2.0 * resonant * math.sqrt(den))
    if positive_branch:
        gain = -gain
    correction = prc_from_fourier([0.0, gain / 2.0, 0.0, -gain / 2.0], [])

    total = base.plus(correction.scaled(sigma**2))
    return PerturbationSolution(
        base=base,
        correction=correction,
        multiplier=leading_multiplier(params),
        multiplier_correction=0.0,
        base_amplitude=c0,
        correction_amplitude=0.0,
        sigma=float(sigma),
        prc=total,
    )


def family_prc(K: float, b: float) -> Prc:
    """Member K of the candidate family in the a=0, c=1 regime.

    D(theta) = [K (1 - cos 2 pi theta) - sqrt(1-K^2) sin 2 pi theta]
               / sqrt(2 pi^2 (b + 4 pi^2))

    K = 0 is the sine-shaped (Type II) member, K = 1 the raised-cosine
    (Type I) member; every member has unit (0, b, 1) constraint norm.
    """
    if abs(K) > 1.0:
        raise ValueError("family parameter K must lie in [-1, 1]")
    amp = 1.0 / math.sqrt(2.0 * _PI**2 * (b + 4.0 * _PI**2))
    s = math.sqrt(1.0 - K * K)
    return prc_from_fourier([K * amp, -K * amp], [-s * amp])


def family_optimal_k(b: float, sigma: float) -> float:
    """Minimizer of the family's closed-form exponent over K in [-1, 1]."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive; at sigma = 0 the family is degenerate")
    res = minimize_scalar(
        lambda k: lyapunov_family(k, b, sigma).value,
        bounds=(-1.0, 1.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


def extrema_locations(params: ConstraintParams, sigma: float):
    """Extrema of the perturbative optimal curve, as zeros of its derivative.

    At sigma = 0 these sit exactly at theta = 1/4 and 3/4; the noise-induced
    shift scales like sigma^2 pi / (a - 144 c pi^4), so it is invisible when
    the second derivative is constrained and order sigma^2 when it is not.
    """
    sol = optimal_prc_perturbative(params, sigma)
    decomp = interval_decomposition(sol.prc.derivative())
    return [float(r) for r in decomp.roots]
