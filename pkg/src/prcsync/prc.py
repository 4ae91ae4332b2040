"""Spectral representation and calculus of period-1 phase-resetting curves.

A phase-resetting curve (PRC) maps oscillator phase theta in [0, 1) to the
phase shift produced by a unit perturbation.  Everything downstream (densities,
Lyapunov exponents, the variational solver) consumes PRCs through this module,
so the representation is a truncated Fourier series: evaluation is exactly
periodic, differentiation is exact term by term, and quadratic functionals of
the curve and its derivatives reduce to Parseval sums over the coefficients.

Conventions
-----------
The circle is parameterized as [0, 1) with unit intrinsic frequency, so the
k-th harmonic is cos(2*pi*k*theta) / sin(2*pi*k*theta).  Internally both
coefficient arrays are index-aligned: ``cos[k]`` and ``sin[k]`` multiply
frequency 2*pi*k, with ``sin[0]`` identically zero (a sin term at frequency
zero has no meaning).  The JSON wire format uses the same aligned layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Prc",
    "ConstraintParams",
    "prc_from_fourier",
    "periodic_quadrature",
    "constraint_norm",
    "canonical_prc",
    "harmonic_amplitude",
]

_TWO_PI = 2.0 * math.pi


def _as_clean_coeffs(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} coefficients must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} coefficients must be finite")
    return arr


@dataclass(frozen=True)
class Prc:
    """A period-1 phase-resetting curve as a truncated Fourier series.

    Parameters
    ----------
    cos : ndarray
        Cosine coefficients, ``cos[k]`` multiplying cos(2*pi*k*theta)
        for k = 0 .. order.
    sin : ndarray
        Sine coefficients on the same index grid; ``sin[0]`` must be 0.

    The instance is immutable; all methods are pure, so a ``Prc`` can be
    shared freely across threads.
    """

    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        cos = _as_clean_coeffs(self.cos, "cosine")
        sin = _as_clean_coeffs(self.sin, "sine")
        n = max(cos.size, sin.size, 2)
        cos = np.pad(cos, (0, n - cos.size))
        sin = np.pad(sin, (0, n - sin.size))
        if sin[0] != 0.0:
            raise ValueError("sin[0] multiplies a zero-frequency sine and must be 0")
        cos.flags.writeable = False
        sin.flags.writeable = False
        object.__setattr__(self, "cos", cos)
        object.__setattr__(self, "sin", sin)

    @property
    def order(self) -> int:
        """Truncation order N (highest representable harmonic)."""
        return self.cos.size - 1

    def _deriv_coeffs(self, order: int):
        """Coefficient arrays of the exact term-by-term derivative."""
        if order < 0 or order != int(order):
            raise ValueError("derivative order must be a nonnegative integer")
        cos, sin = self.cos, self.sin
        k = np.arange(cos.size, dtype=float)
        for _ in range(int(order)):
            # d/dtheta [a cos + b sin] = (2 pi k) [b cos - a sin]
            cos, sin = _TWO_PI * k * sin, -_TWO_PI * k * cos
        return cos, sin

    def derivative(self, order: int = 1) -> "Prc":
        """Return the exact derivative as a new Prc."""
        cos, sin = self._deriv_coeffs(order)
        return Prc(cos, sin)

    def __call__(self, theta, order: int = 0):
        """Evaluate the curve or one of its exact derivatives.

        ``theta`` may be a scalar or array; any real value is accepted and
        evaluation is exactly period 1.
        """
        theta_arr = np.asarray(theta, dtype=float)
        if theta_arr.size and not np.all(np.isfinite(theta_arr)):
            raise ValueError("theta must be finite")
        cos, sin = self._deriv_coeffs(order)
        k = np.arange(cos.size, dtype=float)
        ang = _TWO_PI * np.multiply.outer(theta_arr, k)
        out = np.cos(ang) @ cos + np.sin(ang) @ sin
        return float(out) if np.isscalar(theta) or theta_arr.ndim == 0 else out

    def l2_norm_sq(self) -> float:
        """Exact value of the integral of the squared curve over one period."""
        return constraint_norm(self, ConstraintParams(1.0, 0.0, 0.0))

    def scaled(self, factor: float) -> "Prc":
        return Prc(self.cos * factor, self.sin * factor)

    def translated(self, delta: float) -> "Prc":
        """The curve shifted in phase: returns theta -> self(theta + delta)."""
        k = np.arange(self.cos.size, dtype=float)
        c, s = np.cos(_TWO_PI * k * delta), np.sin(_TWO_PI * k * delta)
        return Prc(self.cos * c + self.sin * s, -self.cos * s + self.sin * c)

    def plus(self, other: "Prc") -> "Prc":
        n = max(self.cos.size, other.cos.size)
        return Prc(
            np.pad(self.cos, (0, n - self.cos.size)) + np.pad(other.cos, (0, n - other.cos.size)),
            np.pad(self.sin, (0, n - self.sin.size)) + np.pad(other.sin, (0, n - other.sin.size)),
        )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        """JSON-ready dict; index k in either list multiplies frequency 2*pi*k."""
        return {"cos": self.cos.tolist(), "sin": self.sin.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "Prc":
        if "cos" not in payload or "sin" not in payload:
            raise ValueError("PRC payload must carry 'cos' and 'sin' lists")
        return cls(np.asarray(payload["cos"], dtype=float), np.asarray(payload["sin"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Prc":
        return cls.from_dict(json.loads(text))


def prc_from_fourier(cos_coeffs, sin_coeffs) -> Prc:
    """Build a Prc from plain coefficient lists.

    ``cos_coeffs[k]`` multiplies cos(2*pi*k*theta) starting at the constant
    term; ``sin_coeffs[i]`` multiplies sin(2*pi*(i+1)*theta), i.e. the sine
    list starts at the fundamental (there is no zero-frequency sine).
    """
    cos = _as_clean_coeffs(cos_coeffs, "cosine")
    sin = np.asarray(sin_coeffs, dtype=float).ravel()
    if sin.size and not np.all(np.isfinite(sin)):
        raise ValueError("sine coefficients must be finite")
    return Prc(cos, np.concatenate(([0.0], sin)))


@dataclass(frozen=True)
class ConstraintParams:
    """Weights (a, b, c) of the quadratic smoothness constraint.

    The constraint functional is the integral over one period of
    ``a*D^2 + b*D'^2 + c*D''^2`` where D is the PRC.  All three weights are
    nonnegative and at least one must be positive.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"constraint weight {name} must be finite and >= 0")
            object.__setattr__(self, name, v)
        if self.a == 0.0 and self.b == 0.0 and self.c == 0.0:
            raise ValueError("constraint weights must not all be zero")

    def as_tuple(self):
        return (self.a, self.b, self.c)


def periodic_quadrature(samples) -> float:
    """Integrate samples of a periodic function on the uniform grid i/n.

    On a periodic uniform grid the rectangle and trapezoid rules coincide and
    are spectrally accurate: the rule is exact for every harmonic below the
    grid's Nyquist frequency.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot integrate an empty sample list")
    return float(np.mean(arr))


def constraint_norm(prc: Prc, params: ConstraintParams) -> float:
    """Exact constraint functional from Fourier coefficients.

    Parseval on the period-1 circle: for coefficients at harmonic k >= 1 the
    mean square of each term is (cos_k^2 + sin_k^2)/2, and each derivative
    contributes a factor (2 pi k)^2.
    """
    k = np.arange(prc.cos.size, dtype=float)
    power = prc.cos**2 + prc.sin**2
    weight = np.full_like(k, 0.5)
    weight[0] = 1.0
    w2 = (_TWO_PI * k) ** 2
    total = (params.a + params.b * w2 + params.c * w2**2) * power * weight
    return float(np.sum(total))


def harmonic_amplitude(prc: Prc, k: int) -> float:
    """Amplitude sqrt(cos_k^2 + sin_k^2) of harmonic k (0 <= k <= order)."""
    if k < 0 or k > prc.order:
        return 0.0
    return float(np.hypot(prc.cos[k], prc.sin[k]))


def canonical_prc(name: str) -> Prc:
    """Named reference curves, normalized to unit L2 norm.

    ``type2`` is the sine-shaped curve with a full negative lobe,
    ``type1`` the nonnegative raised-cosine shape.  Both satisfy
    ``constraint_norm(prc, ConstraintParams(1, 0, 0)) == 1`` so Lyapunov
    comparisons across the two types are at equal curve energy.
    """
    key = name.strip().lower()
    if key == "type2":
        return prc_from_fourier([0.0], [-math.sqrt(2.0)])
    if key == "type1":
        amp = math.sqrt(2.0 / 3.0)
        return prc_from_fourier([amp, -amp], [])
    raise ValueError(f"unknown canonical PRC name: {name!r} (expected 'type1' or 'type2')")
