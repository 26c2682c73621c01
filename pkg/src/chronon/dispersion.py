"""Deformed energy spectra of discrete complex-time evolution.

Natural units throughout (hbar = c = 1).  A discretisation is a pair
(delta_s, lam): the two-point difference quotient

    (f(s + delta_s) - f(s + delta_s - lam)) / lam

turns the ordinary energy E of a stationary state into the deformed
energy

    E_D = (2 / lam) * exp((delta_s - lam / 2) * E) * sinh(lam * E / 2).

Two real families are singled out:

* case a, the forward difference ``lam = delta_s = tau1`` (real):
  E_D = (exp(tau1 E) - 1) / tau1, group velocity exp(tau1 E) p / E.
* case b, the symmetric difference ``delta_s = -i tau0, lam = 2 delta_s``:
  E_D = sin(tau0 E) / tau0, group velocity cos(tau0 E) p / E.

Every function here is pure and accepts numpy arrays where it makes sense.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import DomainError

CASE_A = "a"
CASE_B = "b"
GENERAL = "general"


@dataclass(frozen=True)
class ComplexTime:
    """Evolution parameter s = -i (t + i v) = v - i t."""

    t: float
    v: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.v)):
            raise DomainError("t and v must be finite")

    @property
    def s(self) -> complex:
        return complex(self.v, -self.t)


@dataclass(frozen=True)
class StepSpec:
    """A discretisation scheme: shift ``delta_s`` and span ``lam``.

    Build instances with :meth:`case_a`, :meth:`case_b` or :meth:`general`.
    ``case_a(0.0)`` is accepted and stands for the continuum limit; the
    case-specific functions evaluate it through their limit forms while
    :func:`ed_general` still refuses ``lam == 0``.
    """

    delta_s: complex
    lam: complex
    case: str = GENERAL
    tau: Optional[float] = None

    def __post_init__(self):
        if self.case not in (CASE_A, CASE_B, GENERAL):
            raise DomainError(f"unknown case tag {self.case!r}")
        if self.case == GENERAL and self.lam == 0:
            raise DomainError("lambda must be nonzero")

    @classmethod
    def case_a(cls, tau1: float) -> "StepSpec":
        tau1 = float(tau1)
        if not math.isfinite(tau1):
            raise DomainError("tau1 must be finite")
        return cls(complex(tau1), complex(tau1), CASE_A, tau1)

    @classmethod
    def case_b(cls, tau0: float) -> "StepSpec":
        tau0 = float(tau0)
        if not (tau0 > 0 and math.isfinite(tau0)):
            raise DomainError("tau0 must be a positive finite number")
        ds = complex(0.0, -tau0)
        return cls(ds, 2.0 * ds, CASE_B, tau0)

    @classmethod
    def general(cls, lam: complex, delta_s: complex) -> "StepSpec":
        return cls(complex(delta_s), complex(lam), GENERAL, None)

    @property
    def is_real_case(self) -> bool:
        return self.case in (CASE_A, CASE_B)


@dataclass(frozen=True)
class StationaryMode:
    """Stationary state label with complex frequency epsilon and ordinary energy."""

    alpha: object
    epsilon: complex
    energy: float

    @property
    def eps_r(self) -> float:
        return complex(self.epsilon).real

    @property
    def eps_i(self) -> float:
        return complex(self.epsilon).imag

    def factor(self, s: ComplexTime) -> complex:
        return stationary_factor(s, self.epsilon)


@dataclass(frozen=True)
class KinematicPoint:
    p_vec: tuple
    m: float
    E: float
    E_D: complex
    v_vec: tuple
    g: float
    step: StepSpec = field(repr=False, default=None)

    @classmethod
    def evaluate(cls, step: StepSpec, p_vec, m: float) -> "KinematicPoint":
        p = np.asarray(p_vec, dtype=float)
        E = float(rel_energy(float(np.linalg.norm(p)), m))
        return cls(
            p_vec=tuple(p.tolist()),
            m=float(m),
            E=E,
            E_D=complex(deformed_energy(step, E)),
            v_vec=tuple(np.asarray(group_velocity(step, p, m)).tolist()),
            g=float(canonical_factor(step, E)),
            step=step,
        )


def rel_energy(p_mag, m):
    """sqrt(p**2 + m**2); both arguments must be nonnegative."""
    p_mag = np.asarray(p_mag, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(p_mag < 0) or np.any(m < 0):
        raise DomainError("momentum magnitude and mass must be nonnegative")
    if not (np.all(np.isfinite(p_mag)) and np.all(np.isfinite(m))):
        raise DomainError("momentum magnitude and mass must be finite")
    out = np.hypot(p_mag, m)
    return out if out.ndim else float(out)


def ed_general(E, lam: complex, delta_s: complex):
    """Deformed energy of the general (delta_s, lam) scheme; complex valued."""
    lam = complex(lam)
    delta_s = complex(delta_s)
    if lam == 0:
        raise DomainError("lambda = 0: use the case-specific limit forms instead")
    E = np.asarray(E, dtype=float)
    out = (2.0 / lam) * np.exp((delta_s - lam / 2.0) * E) * np.sinh(lam * E / 2.0)
    return out if out.ndim else complex(out)


def ed_case_a(E, tau1: float):
    """Forward-difference spectrum (exp(tau1 E) - 1) / tau1.

    Negative ``tau1`` is allowed (the step then damps instead of growing);
    ``tau1 == 0`` returns E, the continuum limit.
    """
    E = np.asarray(E, dtype=float)
    tau1 = float(tau1)
    out = E.copy() if tau1 == 0.0 else np.expm1(tau1 * E) / tau1
    return out if out.ndim else float(out)


def ed_case_b(E, tau0: float):
    """Symmetric-difference spectrum sin(tau0 E) / tau0, bounded by 1 / tau0."""
    tau0 = float(tau0)
    if not tau0 > 0:
        raise DomainError("tau0 must be positive")
    E = np.asarray(E, dtype=float)
    out = np.sin(tau0 * E) / tau0
    return out if out.ndim else float(out)


def deformed_energy(step: StepSpec, E):
    """E_D for any scheme, routing the real cases to their closed forms."""
    if step.case == CASE_A:
        return ed_case_a(E, step.tau)
    if step.case == CASE_B:
        return ed_case_b(E, step.tau)
    return ed_general(E, step.lam, step.delta_s)


def ed_general_slope(E, lam: complex, delta_s: complex):
    """dE_D/dE for the general scheme (complex)."""
    lam = complex(lam)
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    a = complex(delta_s) - lam / 2.0
    b = lam / 2.0
    E = np.asarray(E, dtype=float)
    out = (2.0 / lam) * np.exp(a * E) * (a * np.sinh(b * E) + b * np.cosh(b * E))
    return out if out.ndim else complex(out)


def velocity_factor(step: StepSpec, E):
    """dE_D/dE: exp(tau1 E) for case a, cos(tau0 E) for case b."""
    E = np.asarray(E, dtype=float)
    if step.case == CASE_A:
        out = np.exp(step.tau * E)
    elif step.case == CASE_B:
        out = np.cos(step.tau * E)
    else:
        raise DomainError("group velocity is only defined for the real schemes (case a, case b)")
    return out if out.ndim else float(out)


def group_velocity(step: StepSpec, p_vec, m: float):
    """Gradient of E_D with respect to momentum.

    ``p_vec`` has the spatial components on its last axis (three for the
    analytic checks, one for the 1-D grid).
    """
    p = np.asarray(p_vec, dtype=float)
    if np.any(np.asarray(m) < 0):
        raise DomainError("mass must be nonnegative")
    E = np.hypot(np.hypot.reduce(p, axis=-1), np.asarray(m, dtype=float))
    if np.any(E == 0):
        raise DomainError("E = 0: velocity direction undefined at the massless rest point")
    return np.asarray(velocity_factor(step, E))[..., None] * p / E[..., None]


def canonical_factor(step: StepSpec, E):
    """Scalar g(E) with canonical momentum p_hat = g(E) p."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise DomainError("canonical factor needs E > 0")
    tau = step.tau
    if step.case == CASE_A:
        if tau == 0:
            out = np.ones_like(E)
        else:
            x = tau * E
            out = np.exp(x) * np.expm1(x) / x
    elif step.case == CASE_B:
        x = 2.0 * tau * E
        out = np.sin(x) / x
    else:
        raise DomainError("canonical factor is only defined for case a and case b")
    return out if out.ndim else float(out)


def mass_shift(m: float, tau1: float) -> float:
    """Deformed rest energy (exp(tau1 m) - 1) / tau1 of a particle at rest."""
    if m < 0:
        raise DomainError("mass must be nonnegative")
    return ed_case_a(float(m), tau1)


def superluminal_threshold(m: float, tau1: float, tol: float = 1e-12,
                           max_doublings: int = 2000) -> Optional[float]:
    """Smallest momentum above which the case-a group speed exceeds 1.

    Massless particles are superluminal for any nonzero momentum, so 0 is
    returned.  Otherwise the root of (p/E) exp(tau1 E) = 1 is bracketed by
    doubling and then bisected.  The objective is written in log form,
    tau1 E - log(E/p), which stays well conditioned for large roots.
    Returns ``None`` if no bracket is found (not expected for tau1 > 0).
    """
    if not tau1 > 0:
        raise DomainError("tau1 must be positive")
    if m < 0:
        raise DomainError("mass must be nonnegative")
    if m == 0:
        return 0.0

    def objective(p):
        return tau1 * math.hypot(p, m) - 0.5 * math.log1p((m / p) ** 2)

    hi = 1.0
    for _ in range(max_doublings):
        if objective(hi) > 0:
            break
        hi *= 2.0
    else:
        return None
    lo = hi / 2.0
    while lo > 0 and objective(lo) > 0:
        lo /= 2.0
    if lo == 0:
        return 0.0
    return optimize.bisect(objective, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=2000)


def max_energy_case_b(tau0: float) -> tuple[float, float]:
    """Location and value of the case-b energy maximum: (pi / (2 tau0), 1 / tau0)."""
    if not tau0 > 0:
        raise DomainError("tau0 must be positive")
    return math.pi / (2.0 * tau0), 1.0 / tau0


def stationary_factor(s: ComplexTime, epsilon: complex) -> complex:
    """Time factor exp(s * epsilon) of a stationary state."""
    return complex(np.exp(s.s * complex(epsilon)))


def stationary_split(s: ComplexTime, epsilon: complex) -> tuple[float, float]:
    """(modulus, phase) of exp(s * epsilon) from the real/imaginary split.

    modulus = exp(t eps_I + v eps_R), phase = -(t eps_R - v eps_I).
    """
    eps = complex(epsilon)
    modulus = math.exp(s.t * eps.imag + s.v * eps.real)
    phase = -(s.t * eps.real - s.v * eps.imag)
    return modulus, phase


def reality_residual(E, lam: complex, delta_s: complex):
    """|Im E_D|; vanishes for the case-a and case-b parameterisations."""
    out = np.abs(np.imag(ed_general(E, lam, delta_s)))
    return out if np.ndim(out) else float(out)
