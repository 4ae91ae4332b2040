"""Stationary phase density P(theta) and probability flux J.

The phase of a noise-driven oscillator with resetting curve D and noise
amplitude sigma has a stationary density solving the first integral of the
stationary Fokker-Planck equation,

    -J = -P + (sigma^2 / 2) * D * (D * P)',

with P periodic, nonnegative and normalized, and J the constant probability
flux.  The equation is singular wherever D vanishes, which is the generic
situation for resetting curves.  Two solvers are provided:

``density_perturbative``
    Small-noise series in powers of sigma^2, truncated at order 2 or 4.

``density_exact``
    Direct solution of the singular linear ODE at any sigma, built from the
    integrating-factor representation on each interval between adjacent roots
    of D.  Writing z(x) for the (divergent) integral of -2/(sigma^2 D^2), the
    bounded solution on an interval with right endpoint beta is

        P(x) = (2 J / sigma^2) e^{-z(x)} Int_x^beta e^{z(t)} / D(t) dt / D(x),

    with limit P -> J at the roots.  The exponentials are never formed on
    their own: the integral is evaluated with the exponent shifted by its
    maximum over the integration range, i.e. as e^{z(t) - z(x)} (z is strictly
    decreasing, so z(x) is that maximum).  Substituting u = z(x) - z(t)
    turns the formula into the well-conditioned expectation

        P(x) = J * Int_0^inf e^{-u} D(phi_u(x)) / D(x) du,

    where phi_u(x) follows the flow dphi/du = (sigma^2 / 2) D(phi)^2 starting
    at x.  The flow stalls at the next root of D to the right (and wraps
    around the circle when D has no roots), so one quadrature handles every
    case without ever overflowing.  Note the reference point of z cancels
    from the difference, so it plays no numerical role.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .prc import Prc, periodic_quadrature

__all__ = [
    "StationaryDensity",
    "IntervalDecomposition",
    "DegenerateRootError",
    "interval_decomposition",
    "density_perturbative",
    "density_exact",
    "stationarity_residual",
    "uniform_density",
    "spectral_derivative",
]


class DegenerateRootError(Exception):
    """Raised when the resetting curve is tangent to zero or has nearly
    coincident roots, where the singular construction has no stated limit."""


@dataclass(frozen=True)
class StationaryDensity:
    """Sampled stationary density on the uniform grid theta_i = i/n."""

    theta: np.ndarray
    p: np.ndarray
    flux: float
    method: str
    sigma: float
    order: int | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if theta.shape != p.shape or theta.ndim != 1:
            raise ValueError("theta and p must be 1-d arrays of equal length")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.theta.size

    def mass(self) -> float:
        """Integral of the density over one period (should be 1)."""
        return periodic_quadrature(self.p)

    def sidecar(self) -> dict:
        return {"J": self.flux, "method": self.method, "sigma": self.sigma}

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("theta,P\n")
            for t, v in zip(self.theta, self.p):
                fh.write(f"{t!r},{v!r}\n")


@dataclass(frozen=True)
class IntervalDecomposition:
    """Roots of the resetting curve and the signed intervals between them.

    ``intervals`` are (lo, hi) pairs in ascending theta with hi - lo <= 1;
    the last one wraps past 1 when the curve does not vanish at 0.  ``signs``
    holds the sign of the curve on each interval.  When the curve has no
    roots at all, the single interval is the whole circle.
    """

    roots: np.ndarray
    intervals: tuple
    signs: tuple

    @property
    def n_roots(self) -> int:
        return self.roots.size


_SCAN_POINTS = 4096
_MIN_ROOT_GAP = 1e-6
_TANGENCY_TOL = 1e-7
_BUFFER = 1e-4


def _newton_polish(prc: Prc, x0: float, lo: float, hi: float, deriv_of: int = 0) -> float:
    """Newton refinement of a bracketed simple zero of the given derivative."""
    f = lambda t: prc(t, order=deriv_of)
    fp = lambda t: prc(t, order=deriv_of + 1)
    a, b, fa = lo, hi, f(lo)
    # a few bisection steps to tighten the bracket first
    for _ in range(20):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fa * fm <= 0.0:
            b = mid
        else:
            a, fa = mid, fm
    x = 0.5 * (a + b)
    for _ in range(40):
        d = fp(x)
        if d == 0.0:
            break
        step = f(x) / d
        x_new = x - step
        if not (lo - 1e-3 <= x_new <= hi + 1e-3):
            x_new = 0.5 * (a + b)
        x = x_new
        if abs(step) < 1e-15:
            break
    return x


def interval_decomposition(prc: Prc, n_scan: int = _SCAN_POINTS) -> IntervalDecomposition:
    """Locate the roots of the curve in [0, 1) and split the circle.

    Roots are bracketed by sign changes on a fine uniform grid and polished
    by Newton iteration with the exact derivative.  Nearly coincident roots
    (closer than 1e-6) and tangencies (a critical point where the curve is
    within 1e-7 of zero relative to its amplitude) raise
    ``DegenerateRootError`` instead of being silently regularized.
    """
    grid = np.arange(n_scan) / n_scan
    vals = prc(grid)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        raise DegenerateRootError("resetting curve is identically zero")

    roots = []
    nxt = np.roll(vals, -1)
    for i in np.nonzero((vals * nxt < 0.0) | (vals == 0.0))[0]:
        lo, hi = grid[i], grid[i] + 1.0 / n_scan
        if vals[i] == 0.0:
            root = _newton_polish(prc, lo, lo - 0.5 / n_scan, lo + 0.5 / n_scan)
        else:
            root = _newton_polish(prc, 0.5 * (lo + hi), lo, hi)
        roots.append(root % 1.0)

    # merge repeated detections of the same root (clusters much tighter than
    # the degeneracy threshold), then flag genuinely close pairs
    merged = []
    for r in sorted(roots):
        if merged and abs(r - merged[-1]) < 1e-9:
            continue
        merged.append(r)
    if len(merged) > 1 and merged[0] + 1.0 - merged[-1] < 1e-9:
        merged.pop()
    roots = np.asarray(merged, dtype=float)
    if roots.size:
        gaps = np.diff(np.concatenate([roots, [roots[0] + 1.0]]))
        if np.any(gaps < _MIN_ROOT_GAP):
            raise DegenerateRootError(
                f"roots closer than {_MIN_ROOT_GAP} detected; the construction "
                "assumes simple, well-separated roots"
            )

    # tangency scan: critical points where the curve nearly touches zero
    dvals = prc(grid, order=1)
    dnxt = np.roll(dvals, -1)
    for i in np.nonzero((dvals * dnxt < 0.0) | (dvals == 0.0))[0]:
        lo, hi = grid[i], grid[i] + 1.0 / n_scan
        crit = _newton_polish(prc, 0.5 * (lo + hi), lo, hi, deriv_of=1) % 1.0
        if abs(prc(crit)) < _TANGENCY_TOL * scale:
            near_simple = roots.size and np.min(
                np.minimum(np.abs(roots - crit), 1.0 - np.abs(roots - crit))
            ) < _MIN_ROOT_GAP
            if not near_simple:
                raise DegenerateRootError(
                    f"curve is tangent to zero near theta = {crit:.6f} "
                    "(double root); no stationary-density limit is defined here"
                )

    if roots.size == 0:
        sign = 1.0 if vals[0] > 0 else -1.0
        return IntervalDecomposition(roots, ((0.0, 1.0),), (sign,))

    intervals, signs = [], []
    ext = np.concatenate([roots, [roots[0] + 1.0]])
    for lo, hi in zip(ext[:-1], ext[1:]):
        mid = 0.5 * (lo + hi)
        intervals.append((float(lo), float(hi)))
        signs.append(1.0 if prc(mid) > 0 else -1.0)
    return IntervalDecomposition(roots, tuple(intervals), tuple(signs))


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise ValueError("noise amplitude sigma must be positive and finite")
    return sigma


def _mean_sq_dd(prc: Prc) -> float:
    """Exact integral of (D D')^2 over one period (rectangle rule on a grid
    fine enough that no harmonic of the integrand aliases to zero)."""
    m = max(512, 4 * prc.order + 9)
    g = np.arange(m) / m
    return periodic_quadrature((prc(g) * prc(g, order=1)) ** 2)


def density_perturbative(prc: Prc, sigma: float, order: int = 4, n: int = 512) -> StationaryDensity:
    """Small-noise expansion of the stationary density.

    Order 2 returns P = 1 + (sigma^2/2) D D' with J = 1.  Order 4 adds
    (sigma^4/4) [2 D^2 D'^2 + D^3 D'' + Int (D D')^2] and
    J = 1 + (sigma^4/4) Int (D D')^2.  Valid for sigma well below 1; a
    warning (not an error) is issued beyond sigma = 0.3.
    """
    sigma = _check_sigma(sigma)
    if order not in (2, 4):
        raise ValueError("perturbative order must be 2 or 4")
    if sigma > 0.3:
        warnings.warn(
            f"perturbative density requested at sigma = {sigma}; the series "
            "is only asymptotic for small noise",
            stacklevel=2,
        )
    theta = np.arange(n) / n
    d = prc(theta)
    dp = prc(theta, order=1)
    p = 1.0 + 0.5 * sigma**2 * d * dp
    flux = 1.0
    if order == 4:
        dpp = prc(theta, order=2)
        c = _mean_sq_dd(prc)
        p = p + 0.25 * sigma**4 * (2.0 * d**2 * dp**2 + d**3 * dpp + c)
        flux = 1.0 + 0.25 * sigma**4 * c
    return StationaryDensity(theta, p, flux, "perturbative", sigma, order=order)


# quadrature layout for the u-integral Int_0^inf e^{-u} r(u) du
_U_MAX = 40.0
_U_PANELS = 16
_GAUSS_NODES = 12


def _u_quadrature_nodes():
    x, w = np.polynomial.legendre.leggauss(_GAUSS_NODES)
    edges = np.linspace(0.0, _U_MAX, _U_PANELS + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(half * x + 0.5 * (hi + lo))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _flow_at_nodes(prc: Prc, sigma: float, x0: np.ndarray, u_nodes: np.ndarray, du_max: float):
    """Evolve dphi/du = (sigma^2/2) D(phi)^2 from each x0, sampling at u_nodes.

    Fixed-step RK4 between consecutive nodes.  The flow is monotone and
    stalls at roots of D, so steps can never jump across a root.
    """
    half_s2 = 0.5 * sigma**2

    def rhs(phi):
        v = prc(phi)
        return half_s2 * v * v

    phi = x0.copy()
    out = np.empty((u_nodes.size, x0.size))
    u_prev = 0.0
    for j, u in enumerate(u_nodes):
        span = u - u_prev
        nsub = max(1, int(math.ceil(span / du_max)))
        h = span / nsub
        for _ in range(nsub):
            k1 = rhs(phi)
            k2 = rhs(phi + 0.5 * h * k1)
            k3 = rhs(phi + 0.5 * h * k2)
            k4 = rhs(phi + h * k3)
            phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[j] = phi
        u_prev = u
    return out


def _unnormalized_exact(prc: Prc, sigma: float, x: np.ndarray) -> np.ndarray:
    """P/J at points x where the curve does not vanish."""
    u_nodes, u_weights = _u_quadrature_nodes()
    du_max = min(0.02, 2e-4 / sigma**2)
    phi = _flow_at_nodes(prc, sigma, x, u_nodes, du_max)
    r = prc(phi.ravel()).reshape(phi.shape) / prc(x)[None, :]
    return (u_weights * np.exp(-u_nodes)) @ r


def density_exact(prc: Prc, sigma: float, n: int = 512) -> StationaryDensity:
    """Stationary density from the singular-ODE construction, any sigma > 0.

    The curve must have simple, well-separated roots (or none at all).  At
    each root the density takes the limiting value J; within a buffer of
    1e-4 around a root the quadrature loses accuracy and the density is
    filled by linear interpolation between the root value and the computed
    value at the buffer edge.  J itself is fixed by normalization, which is
    exact at any noise level.
    """
    sigma = _check_sigma(sigma)
    theta = np.arange(n) / n
    if not np.any(prc.cos) and not np.any(prc.sin):
        # zero curve: the noise never couples, so the density stays flat
        return StationaryDensity(theta, np.ones(n), 1.0, "exact", sigma)

    decomp = interval_decomposition(prc)
    roots = decomp.roots

    if roots.size == 0:
        ptilde = _unnormalized_exact(prc, sigma, theta)
    else:
        dist = np.abs(theta[:, None] - roots[None, :])
        dist = np.minimum(dist, 1.0 - dist)
        nearest = np.argmin(dist, axis=1)
        mindist = dist[np.arange(n), nearest]

        at_root = mindist < 1e-12
        buffered = (mindist < _BUFFER) & ~at_root
        interior = ~(at_root | buffered)

        # anchors just outside the buffer of each root, for interpolation
        anchor_theta = np.concatenate([roots - _BUFFER, roots + _BUFFER])
        compute = np.concatenate([theta[interior], anchor_theta])
        values = _unnormalized_exact(prc, sigma, compute)

        ptilde = np.empty(n)
        ptilde[interior] = values[: interior.sum()]
        ptilde[at_root] = 1.0
        left_anchor = values[interior.sum() : interior.sum() + roots.size]
        right_anchor = values[interior.sum() + roots.size :]
        for i in np.nonzero(buffered)[0]:
            r_idx = nearest[i]
            delta = theta[i] - roots[r_idx]
            delta -= round(delta)  # signed circular offset in (-0.5, 0.5]
            frac = abs(delta) / _BUFFER
            edge = right_anchor[r_idx] if delta > 0 else left_anchor[r_idx]
            ptilde[i] = 1.0 + frac * (edge - 1.0)

    flux = 1.0 / periodic_quadrature(ptilde)
    p = flux * ptilde
    if np.any(p < -1e-9):
        raise RuntimeError("exact stationary density went negative; defect in quadrature")
    return StationaryDensity(theta, np.maximum(p, 0.0), flux, "exact", sigma)


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """Derivative of a smooth period-1 function sampled on the grid i/n."""
    v = np.asarray(values, dtype=float)
    n = v.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k = k.copy()
        k[n // 2] = 0.0  # Nyquist mode has no well-defined odd derivative
    return np.real(np.fft.ifft(2j * np.pi * k * np.fft.fft(v)))


def stationarity_residual(density: StationaryDensity, prc: Prc, sigma: float) -> float:
    """Sup-norm residual of the flux relation -J = -P + (s^2/2) D (D P)'.

    The derivative of D*P is taken spectrally on the density's own grid, so
    the check is independent of how the density was produced.
    """
    sigma = _check_sigma(sigma)
    theta = density.theta
    n = theta.size
    if not np.allclose(theta, np.arange(n) / n, atol=1e-12):
        raise ValueError("stationarity residual requires the uniform grid i/n")
    d = prc(theta)
    dp_dtheta = spectral_derivative(d * density.p)
    resid = -density.flux + density.p - 0.5 * sigma**2 * d * dp_dtheta
    return float(np.max(np.abs(resid)))


def uniform_density(n: int = 512, sigma: float = 0.0) -> StationaryDensity:
    """The flat density P = 1 with unit flux (zero-noise limit)."""
    theta = np.arange(n) / n
    return StationaryDensity(theta, np.ones(n), 1.0, "uniform", float(sigma))
