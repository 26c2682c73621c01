"""The two-point discrete derivative in complex time and its series form.

    delta_f(s) = (f(s + delta_s) - f(s + delta_s - lam)) / lam

Exponentials e^{sE} are eigenfunctions with eigenvalue E_D (see
:mod:`chronon.dispersion`).  The Taylor series in ``lam``

    sum_{n>=1} lam**(n-1) / n! * f^(n)(s*)

reproduces the quotient exactly when expanded about
``s* = s + delta_s - lam`` (the lower sample point): it is then the Taylor
series of (f(s* + lam) - f(s*)) / lam.  For delta_s == lam the expansion
point is s itself.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from .errors import CapabilityError, DomainError

POLYNOMIAL = "polynomial"
EXPONENTIAL = "exponential"
USER = "user"


@dataclass(frozen=True)
class AnalyticSignal:
    """An entire function of complex s.

    Polynomials (coefficients in ascending order) and exponentials e^{sE}
    carry exact derivatives of every order; ``user`` signals only support
    :func:`apply_delta`.
    """

    kind: str
    coefficients: tuple = ()
    energy: float = 0.0
    evaluator: Optional[Callable[[complex], complex]] = field(default=None, compare=False)

    @classmethod
    def polynomial(cls, coefficients: Sequence[complex]) -> "AnalyticSignal":
        return cls(POLYNOMIAL, tuple(complex(c) for c in coefficients))

    @classmethod
    def exponential(cls, energy: float) -> "AnalyticSignal":
        return cls(EXPONENTIAL, energy=float(energy))

    @classmethod
    def user(cls, func: Callable[[complex], complex]) -> "AnalyticSignal":
        return cls(USER, evaluator=func)

    def __call__(self, s: complex) -> complex:
        return self.derivative(s, 0) if self.kind != USER else complex(self.evaluator(s))

    def derivative(self, s: complex, order: int) -> complex:
        if self.kind == EXPONENTIAL:
            return self.energy ** order * cmath.exp(s * self.energy)
        if self.kind == POLYNOMIAL:
            coeffs = self.coefficients
            total = 0j
            # Horner on the differentiated coefficients
            for k in range(len(coeffs) - 1, order - 1, -1):
                falling = math.perm(k, order)
                total = total * s + falling * coeffs[k]
            return total
        raise CapabilityError("user-supplied signals have no exact derivatives")

    def scaled(self, a: complex) -> "AnalyticSignal":
        if self.kind == POLYNOMIAL:
            return AnalyticSignal.polynomial([a * c for c in self.coefficients])
        f = self
        return AnalyticSignal.user(lambda s: a * f(s))

    def __add__(self, other: "AnalyticSignal") -> "AnalyticSignal":
        if self.kind == POLYNOMIAL and other.kind == POLYNOMIAL:
            a, b = list(self.coefficients), list(other.coefficients)
            n = max(len(a), len(b))
            a += [0j] * (n - len(a))
            b += [0j] * (n - len(b))
            return AnalyticSignal.polynomial([x + y for x, y in zip(a, b)])
        f, g = self, other
        return AnalyticSignal.user(lambda s: f(s) + g(s))


def _check_lambda(lam: complex) -> complex:
    lam = complex(lam)
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    return lam


def apply_delta(f: AnalyticSignal, s: complex, delta_s: complex, lam: complex) -> complex:
    """Discrete derivative (f(s + delta_s) - f(s + delta_s - lam)) / lam.

    For exponentials the difference is formed as
    -e^{(s + delta_s)E} * expm1(-lam E), which is the same quantity without
    the cancellation of two nearly equal exponentials when lam E is small.
    """
    lam = _check_lambda(lam)
    s, delta_s = complex(s), complex(delta_s)
    if f.kind == EXPONENTIAL:
        E = f.energy
        upper = cmath.exp((s + delta_s) * E)
        return complex(-upper * np.expm1(-lam * E) / lam)
    return (f(s + delta_s) - f(s + delta_s - lam)) / lam


def expansion_point(s: complex, delta_s: complex, lam: complex) -> complex:
    """Point about which the lam-series equals the difference quotient exactly."""
    return complex(s) + complex(delta_s) - complex(lam)


def series_delta(f: AnalyticSignal, s: complex, delta_s: complex, lam: complex,
                 n_max: int) -> complex:
    """Truncated series sum_{n=1}^{n_max} lam^(n-1)/n! f^(n)(s*), s* = s + delta_s - lam."""
    lam = _check_lambda(lam)
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    if f.kind == USER:
        raise CapabilityError("series_delta needs a polynomial or exponential signal")
    point = expansion_point(s, delta_s, lam)
    total = 0j
    coeff = 1.0 + 0j  # lam^(n-1) / n!
    for n in range(1, n_max + 1):
        if n > 1:
            coeff *= lam / n
        total += coeff * f.derivative(point, n)
    return total


def eigen_ratio(E: float, s: complex, delta_s: complex, lam: complex) -> complex:
    """apply_delta(e^{sE}) / e^{sE}; independent of s and equal to E_D."""
    f = AnalyticSignal.exponential(E)
    return apply_delta(f, s, delta_s, lam) / f(complex(s))


def eigen_ratio_mp(E, s, delta_s, lam, dps: int = 50) -> complex:
    """Arbitrary-precision eigen ratio, evaluated straight from the difference quotient."""
    with mpmath.workdps(dps):
        E = mpmath.mpf(E)
        s, delta_s, lam = mpmath.mpc(s), mpmath.mpc(delta_s), mpmath.mpc(lam)
        if lam == 0:
            raise DomainError("lambda must be nonzero")
        num = mpmath.exp((s + delta_s) * E) - mpmath.exp((s + delta_s - lam) * E)
        value = num / lam / mpmath.exp(s * E)
        return complex(value)
