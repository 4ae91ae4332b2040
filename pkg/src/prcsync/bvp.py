"""Periodic Euler-Lagrange boundary-value problem for the optimal curve.

With the stationary density replaced by its leading correction
P = 1 + (sigma^2/2) D D', the constrained minimization of the Lyapunov
exponent reduces to a single nonlinear ODE for the curve D and the scalar
multiplier nu1 (see docs/math_notes.md for the derivation):

    2 c nu1 D'''' + 2 D'' + 2 a nu1 D - 2 b nu1 D''
        + sigma^2 (D'^3 + 3 D D' D'') = 0,

together with the integral constraint Int a D^2 + b D'^2 + c D''^2 = 1 and
periodic boundary conditions.  When c = 0 the same expression is the
second-order problem; no separate code path is needed.

Discretization is spectral: D is a truncated Fourier series, so periodicity
holds by construction, derivatives are exact, and the residual is projected
back onto the basis through an alias-free FFT (Galerkin).  Translation
invariance of the periodic problem is removed by the phase condition
D(0) = 0 (with D'(0) < 0 selecting the canonical branch), giving one more
equation than unknowns; Newton steps therefore solve the consistent
overdetermined linear system in the least-squares sense, with simple
backtracking damping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .prc import ConstraintParams, Prc, constraint_norm
from .variational import (
    CASE_UNIQUE,
    InadmissibleConstraintError,
    classify_constraint_case,
    leading_multiplier,
    optimal_prc_perturbative,
)

__all__ = [
    "BvpSolution",
    "ConvergenceError",
    "solve_euler_lagrange",
    "el_residual",
    "continuation_in_sigma",
]

_TWO_PI = 2.0 * math.pi


class ConvergenceError(Exception):
    """Newton iteration failed; carries the final residual norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class BvpSolution:
    """Converged solution of the periodic Euler-Lagrange problem."""

    prc: Prc
    multiplier: float
    ode_residual: float
    constraint_residual: float
    periodicity_residual: float
    iterations: int
    sigma: float
    params: ConstraintParams

    def residual_norms(self) -> dict:
        return {
            "ode": self.ode_residual,
            "constraint": self.constraint_residual,
            "periodicity": self.periodicity_residual,
        }

    def to_dict(self) -> dict:
        return {
            "cos": self.prc.cos.tolist(),
            "sin": self.prc.sin.tolist(),
            "nu1": self.multiplier,
            "sigma": self.sigma,
            "residuals": self.residual_norms(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _ode_rhs_samples(d, d1, d2, d4, nu1, params: ConstraintParams, sigma: float):
    a, b, c = params.as_tuple()
    return (
        2.0 * c * nu1 * d4
        + 2.0 * d2
        + 2.0 * a * nu1 * d
        - 2.0 * b * nu1 * d2
        + sigma**2 * (d1**3 + 3.0 * d * d1 * d2)
    )


def _project(samples: np.ndarray, n_modes: int):
    """Alias-free projection of grid samples onto the first n_modes harmonics."""
    m = samples.size
    f = np.fft.rfft(samples) / m
    cos = np.empty(n_modes + 1)
    cos[0] = f[0].real
    cos[1:] = 2.0 * f[1 : n_modes + 1].real
    sin = -2.0 * f[1 : n_modes + 1].imag
    return np.concatenate([cos, sin])


def _coeffs_to_prc(x: np.ndarray, n_modes: int) -> Prc:
    cos = x[: n_modes + 1]
    sin = np.concatenate([[0.0], x[n_modes + 1 : 2 * n_modes + 1]])
    return Prc(cos, sin)


def _quasilinear_floor(prc: Prc, nu1: float, params: ConstraintParams, sigma: float) -> float:
    """Minimum of the coefficient multiplying the highest derivative.

    For c > 0 that coefficient is the constant 2 c nu1.  For c = 0 the
    second-order problem is quasilinear: collecting D'' terms gives the
    coefficient 2 (1 - b nu1) + 3 sigma^2 D D', which is positive on the
    solution branch continued from sigma = 0 and vanishes where that branch
    terminates.  A converged Galerkin iterate with a nonpositive floor is a
    spurious discretization artifact, not a solution.
    """
    a, b, c = params.as_tuple()
    if c > 0.0:
        return 2.0 * c * nu1
    grid = np.arange(2048) / 2048
    return float(np.min(2.0 * (1.0 - b * nu1) + 3.0 * sigma**2 * prc(grid) * prc(grid, order=1)))


def _newton_galerkin(params, sigma, init, n, tol, max_iter):
    """One Newton-Galerkin run at fixed truncation; returns (prc, nu1, iters)."""
    a, b, c = params.as_tuple()
    m = max(64, 4 * (n + 1))  # alias-free for the cubic nonlinearity
    grid = np.arange(m) / m
    k = np.arange(n + 1, dtype=float)
    w = _TWO_PI * k
    # trig tables for all basis functions on the grid
    ang = np.outer(grid, k) * _TWO_PI
    ctab, stab = np.cos(ang), np.sin(ang)

    # parseval weights of the constraint quadratic form per harmonic
    qweight = (a + b * w**2 + c * w**4) * np.where(k == 0, 1.0, 0.5)

    x = np.zeros(2 * n + 2)
    x[: min(n + 1, init.cos.size)] = init.cos[: n + 1]
    x[n + 1 : n + 1 + min(n, init.sin.size - 1)] = init.sin[1 : n + 1]
    x[-1] = leading_multiplier(params)

    def unpack(xv):
        cosc = xv[: n + 1]
        sinc = xv[n + 1 : 2 * n + 1]
        nu1 = xv[-1]
        d = ctab @ cosc + stab[:, 1:] @ sinc
        d1 = -(stab * w) @ cosc + (ctab[:, 1:] * w[1:]) @ sinc
        d2 = -(ctab * w**2) @ cosc - (stab[:, 1:] * w[1:] ** 2) @ sinc
        d4 = (ctab * w**4) @ cosc + (stab[:, 1:] * w[1:] ** 4) @ sinc
        return cosc, sinc, nu1, d, d1, d2, d4

    def residual(xv):
        cosc, sinc, nu1, d, d1, d2, d4 = unpack(xv)
        g = _ode_rhs_samples(d, d1, d2, d4, nu1, params, sigma)
        proj = _project(g, n)
        coef_sq = np.concatenate([cosc, sinc]) ** 2
        qw = np.concatenate([qweight, qweight[1:]])
        constraint = float(np.sum(qw * coef_sq)) - 1.0
        phase = float(np.sum(cosc))
        return np.concatenate([proj, [constraint, phase]])

    def jacobian(xv):
        cosc, sinc, nu1, d, d1, d2, d4 = unpack(xv)
        ncols = 2 * n + 2
        jac = np.zeros((2 * n + 3, ncols))
        # nonlinear-part multipliers for a perturbation e of the curve:
        # dG.e = mu_k e (linear, diagonal) + s^2 [A e + B e' + C e'']
        s2 = sigma**2
        A = s2 * 3.0 * d1 * d2
        B = s2 * (3.0 * d1**2 + 3.0 * d * d2)
        C = s2 * 3.0 * d * d1
        mu = 2.0 * a * nu1 - 2.0 * w**2 + 2.0 * b * nu1 * w**2 + 2.0 * c * nu1 * w**4

        for j in range(n + 1):  # cosine basis columns
            e, e1, e2 = ctab[:, j], -w[j] * stab[:, j], -(w[j] ** 2) * ctab[:, j]
            col = _project(A * e + B * e1 + C * e2, n)
            col[j] += mu[j]
            jac[: 2 * n + 1, j] = col
        for j in range(1, n + 1):  # sine basis columns
            e, e1, e2 = stab[:, j], w[j] * ctab[:, j], -(w[j] ** 2) * stab[:, j]
            col = _project(A * e + B * e1 + C * e2, n)
            col[n + j] += mu[j]
            jac[: 2 * n + 1, n + j] = col
        # multiplier column
        dnu = 2.0 * c * d4 + 2.0 * a * d - 2.0 * b * d2
        jac[: 2 * n + 1, -1] = _project(dnu, n)
        # constraint gradient
        jac[2 * n + 1, : n + 1] = 2.0 * qweight * cosc
        jac[2 * n + 1, n + 1 : 2 * n + 1] = 2.0 * qweight[1:] * sinc
        # phase gradient
        jac[2 * n + 2, : n + 1] = 1.0
        return jac

    # Gauss-Newton on the consistent overdetermined system; backtracking on
    # the 2-norm (the least-squares direction is a descent direction for it)
    fx = residual(x)
    norm = np.linalg.norm(fx)
    iterations = 0
    while norm > tol and iterations < max_iter:
        step, *_ = np.linalg.lstsq(jacobian(x), -fx, rcond=None)
        alpha = 1.0
        for _ in range(25):
            trial = x + alpha * step
            f_trial = residual(trial)
            n_trial = np.linalg.norm(f_trial)
            if n_trial < norm:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError("Newton step failed to reduce the residual", norm)
        x, fx, norm = trial, f_trial, n_trial
        iterations += 1
    if norm > tol:
        raise ConvergenceError("Newton iteration did not converge", norm)

    prc = _coeffs_to_prc(x, n)
    if prc(0.0, order=1) > 0.0:
        # the problem is odd in the curve: flip to the canonical branch
        prc = prc.scaled(-1.0)
    return prc, float(x[-1]), iterations


def solve_euler_lagrange(
    params: ConstraintParams,
    sigma: float,
    init: Prc | None = None,
    n_modes: int = 64,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> BvpSolution:
    """Newton-Galerkin solve of the periodic Euler-Lagrange problem.

    Parameters
    ----------
    params : ConstraintParams
        Must classify as unique-optimum (a > 0).
    sigma : float
        Noise amplitude, 0 <= sigma < 0.5 (the reduced density approximation
        degrades beyond that).  For c = 0 the smooth solution branch
        terminates where the quasilinear coefficient first vanishes (near
        sigma = 0.27 for a = b = 1); past that point no solution exists and
        ``ConvergenceError`` is raised.
    init : Prc, optional
        Initial guess.  Defaults to the leading-order sine optimum; if
        Newton stalls from there, one retry is made from the
        second-order perturbative curve before giving up.
    n_modes : int
        Fourier truncation of the unknown curve.  The solution is strongly
        band-limited (odd harmonics decay geometrically), but the sup-norm
        of the ODE residual is set by the first truncated harmonic, so the
        truncation is doubled (up to 256) until that residual drops below
        1e-8.

    Raises
    ------
    InadmissibleConstraintError
        For constraint weights outside the unique-optimum regime.
    ConvergenceError
        If damped Newton stalls, or if the converged iterate left the
        regime where the equation is nondegenerate (spurious Galerkin
        artifact); the exception carries the final residual.
    """
    if classify_constraint_case(params).classification != CASE_UNIQUE:
        raise InadmissibleConstraintError(
            "the Euler-Lagrange problem has a unique periodic solution only for a > 0"
        )
    if not 0.0 <= sigma < 0.5:
        raise ValueError("sigma must lie in [0, 0.5) for the reduced problem")

    inits = [init] if init is not None else [
        optimal_prc_perturbative(params, 0.0).base,
        optimal_prc_perturbative(params, sigma).prc,
    ]

    n = int(n_modes)
    while True:
        last_err = None
        for guess in inits:
            try:
                prc, nu1, iterations = _newton_galerkin(params, sigma, guess, n, tol, max_iter)
                break
            except ConvergenceError as err:
                last_err = err
        else:
            raise last_err

        floor = _quasilinear_floor(prc, nu1, params, sigma)
        if floor <= 0.0:
            raise ConvergenceError(
                "converged iterate is a spurious discretization artifact: the "
                "coefficient of the highest derivative changes sign, so the "
                f"smooth solution branch does not extend to sigma = {sigma}",
                floor,
            )
        checks = el_residual_parts(prc, nu1, params, sigma)
        if checks["ode"] <= 1e-8 or n >= 256:
            break
        n = min(2 * n, 256)
        inits = [prc]

    return BvpSolution(
        prc=prc,
        multiplier=nu1,
        ode_residual=checks["ode"],
        constraint_residual=checks["constraint"],
        periodicity_residual=checks["periodicity"],
        iterations=iterations,
        sigma=float(sigma),
        params=params,
    )


def el_residual_parts(prc: Prc, nu1: float, params: ConstraintParams, sigma: float, n_check: int = 2048) -> dict:
    """Recompute all three residual norms from scratch on a fresh grid.

    Uses exact term-by-term derivatives of the curve, so the check shares no
    state with the solver's collocation grid.
    """
    grid = np.arange(n_check) / n_check
    d = prc(grid)
    d1 = prc(grid, order=1)
    d2 = prc(grid, order=2)
    d4 = prc(grid, order=4)
    g = _ode_rhs_samples(d, d1, d2, d4, nu1, params, sigma)
    ode = float(np.max(np.abs(g)))
    constraint = abs(constraint_norm(prc, params) - 1.0)
    probe = np.array([0.0, 0.1234567, 0.5, 0.875])
    periodicity = max(
        float(np.max(np.abs(prc(probe + 1.0, order=o) - prc(probe, order=o))))
        for o in range(4)
    )
    return {"ode": ode, "constraint": constraint, "periodicity": periodicity}


def el_residual(solution: BvpSolution, params: ConstraintParams, sigma: float, n_check: int = 2048) -> dict:
    """Independent residual norms for a solution object (any check grid size)."""
    return el_residual_parts(solution.prc, solution.multiplier, params, sigma, n_check)


def continuation_in_sigma(params: ConstraintParams, sigma_list, n_modes: int = 64) -> list:
    """Solve along an increasing noise schedule, warm-starting each solve.

    The first entry must be small (<= 0.05) so the leading-order initial
    guess is in Newton's basin; each later solve starts from the previous
    solution.  Failure at any entry re-raises with the failing index.
    """
    sigmas = [float(s) for s in sigma_list]
    if any(s2 <= s1 for s1, s2 in zip(sigmas, sigmas[1:])):
        raise ValueError("sigma_list must be strictly increasing")
    if sigmas and sigmas[0] > 0.05:
        raise ValueError("first continuation sigma must be <= 0.05")
    out = []
    init = None
    for i, s in enumerate(sigmas):
        try:
            sol = solve_euler_lagrange(params, s, init=init, n_modes=n_modes)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"continuation failed at index {i} (sigma = {s})", err.residual
            ) from err
        out.append(sol)
        init = sol.prc
    return out
