"""Operator identities of the deformed canonical structure.

Everything lives in the momentum representation of a free particle:
H = E(p) is a multiplication operator, the canonical momentum is
p_hat_j = g(E) p_j, and the position operator is q_i = i d/dp_i.  The
commutator [q_i, p_hat_j] is therefore the multiplication operator

    i (g(E) delta_ij + g'(E) p_i p_j / E).

The functions below evaluate this three ways (gradient form, the printed
exact forms, and a finite-difference oracle acting on test states) plus the
printed small-step expansions, and check the time-energy commutator and
self-adjointness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dispersion as disp
from .difference_calculus import AnalyticSignal, apply_delta
from .dispersion import CASE_A, CASE_B, StepSpec
from .errors import DomainError, ProbeError, UsageError
from .numerics import DEFAULT_STEPS, fit_order, halving_sequence, partial_derivative
from .wavepacket import MomentumGrid, PacketState

PROBE_FLOOR = 1e-30


@dataclass(frozen=True)
class GaussianTestState3D:
    """psi(p) = N exp(-|p - p0|^2 / (4 sigma^2) - i x0.p) with analytic gradient."""

    p0_vec: tuple
    sigma: float
    x0_vec: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    @property
    def normalization(self) -> float:
        return (2.0 * math.pi * self.sigma ** 2) ** -0.75

    def __call__(self, p) -> complex:
        d = np.asarray(p, dtype=float) - np.asarray(self.p0_vec, dtype=float)
        x0 = np.asarray(self.x0_vec, dtype=float)
        return complex(self.normalization * np.exp(-d @ d / (4.0 * self.sigma ** 2)
                                                   - 1j * (x0 @ np.asarray(p, dtype=float))))

    def gradient(self, p) -> np.ndarray:
        d = np.asarray(p, dtype=float) - np.asarray(self.p0_vec, dtype=float)
        x0 = np.asarray(self.x0_vec, dtype=float)
        return (-d / (2.0 * self.sigma ** 2) - 1j * x0) * self(p)

    def self_check(self, p) -> float:
        """Largest gap between the analytic gradient and a central difference."""
        p = np.asarray(p, dtype=float)
        h = 1e-5
        fd = np.array([(self(p + h * e) - self(p - h * e)) / (2 * h) for e in np.eye(3)])
        return float(np.max(np.abs(fd - self.gradient(p))))


def _energy(p_vec, m) -> float:
    p = np.asarray(p_vec, dtype=float)
    E = disp.rel_energy(float(np.linalg.norm(p)), m)
    if E == 0:
        raise DomainError("E = 0: commutators are undefined at the massless rest point")
    return E


def canonical_factor_derivative(step: StepSpec, E: float) -> float:
    """dg/dE for the canonical factor g of case a or case b."""
    if E <= 0:
        raise DomainError("E must be positive")
    tau = step.tau
    if step.case == CASE_A:
        if tau == 0:
            return 0.0
        x = tau * E
        ex = math.exp(x)
        return ex / E * (2.0 * ex - 1.0 - math.expm1(x) / x)
    if step.case == CASE_B:
        y = 2.0 * tau * E
        return (math.cos(y) - math.sin(y) / y) / E
    raise DomainError("canonical structure is only defined for case a and case b")


def commutator_qp_closed(step: StepSpec, p_vec, m: float) -> np.ndarray:
    """[q_i, p_hat_j] as i (g delta_ij + g' p_i p_j / E)."""
    E = _energy(p_vec, m)
    p = np.asarray(p_vec, dtype=float)
    g = disp.canonical_factor(step, E)
    dg = canonical_factor_derivative(step, E)
    return 1j * (g * np.eye(3) + dg * np.outer(p, p) / E)


def commutator_qp_printed(step: StepSpec, p_vec, m: float) -> np.ndarray:
    """The exact commutator in its printed operator form.

    case a: i (1 + tau E_D) ((E_D/E) delta_ij + (1 - (1 - 2 tau E) E_D/E) p_i p_j / E^2)
    case b: i sinc delta_ij + i (cos(2 tau E) - sinc) p_i p_j / E^2, sinc = sin(2 tau E)/(2 tau E)
    """
    E = _energy(p_vec, m)
    p = np.asarray(p_vec, dtype=float)
    pp = np.outer(p, p) / E ** 2
    tau = step.tau
    if step.case == CASE_A:
        ed = disp.ed_case_a(E, tau)
        ratio = ed / E
        return 1j * (1.0 + tau * ed) * (ratio * np.eye(3) + (1.0 - (1.0 - 2.0 * tau * E) * ratio) * pp)
    if step.case == CASE_B:
        y = 2.0 * tau * E
        sinc = math.sin(y) / y
        return 1j * sinc * np.eye(3) + 1j * (math.cos(y) - sinc) * pp
    raise DomainError("canonical structure is only defined for case a and case b")


def commutator_expansion(step: StepSpec, p_vec, m: float) -> np.ndarray:
    """Leading small-step expansion of [q_i, p_hat_j], H and H_D replaced by E and E_D.

    case a: i (1 + 3/2 tau E_D) delta_ij + i 3/2 tau p_i p_j / E_D       (error O(tau^2))
    case b: i (1 - 2/3 tau^2 E_D^2) delta_ij - i 4/3 tau^2 p_i p_j       (error O(tau^3))
    """
    E = _energy(p_vec, m)
    p = np.asarray(p_vec, dtype=float)
    pp = np.outer(p, p)
    tau = step.tau
    if step.case == CASE_A:
        ed = disp.ed_case_a(E, tau)
        if ed == 0:
            raise DomainError("E_D = 0: the inverse-H_D term is singular")
        return 1j * (1.0 + 1.5 * tau * ed) * np.eye(3) + 1j * 1.5 * tau * pp / ed
    if step.case == CASE_B:
        ed = disp.ed_case_b(E, tau)
        return 1j * (1.0 - (2.0 / 3.0) * tau ** 2 * ed ** 2) * np.eye(3) - 1j * (4.0 / 3.0) * tau ** 2 * pp
    raise DomainError("canonical structure is only defined for case a and case b")


def _canonical_momentum(step: StepSpec, m: float):
    def p_hat(p):
        E = math.sqrt(float(p @ p) + m * m)
        return disp.canonical_factor(step, E) * p
    return p_hat


def commutator_qp_numeric(step: StepSpec, p_vec, m: float, test: GaussianTestState3D,
                          steps: Sequence[float] = DEFAULT_STEPS) -> np.ndarray:
    """([q_i, p_hat_j] psi)(p) / psi(p) from finite differences.

    The product rule is applied term by term: q_i (p_hat_j psi) needs
    d(g p_j)/dp_i, taken by swept Richardson differences, and the analytic
    gradient of the test state; p_hat_j (q_i psi) uses the analytic
    gradient only.  The quotient does not depend on the test state.
    """
    p = np.asarray(p_vec, dtype=float)
    _energy(p, m)
    psi = test(p)
    if abs(psi) < PROBE_FLOOR:
        raise ProbeError(f"test state is {abs(psi):.3g} at the probe point")
    dpsi = test.gradient(p)
    p_hat = _canonical_momentum(step, m)
    G = p_hat(p)
    out = np.empty((3, 3), dtype=complex)
    for i in range(3):
        dG = np.asarray(partial_derivative(p_hat, p, i, steps).value)
        for j in range(3):
            q_of_p = 1j * (dG[j] * psi + G[j] * dpsi[i])
            p_of_q = G[j] * (1j * dpsi[i])
            out[i, j] = (q_of_p - p_of_q) / psi
    return out


def commutator_null_checks(step: StepSpec, p_vec, m: float, test: GaussianTestState3D,
                           steps: Sequence[float] = DEFAULT_STEPS) -> float:
    """Largest |[q_i, q_j] psi / psi| and |[p_hat_i, p_hat_j] psi / psi| over i, j."""
    p = np.asarray(p_vec, dtype=float)
    _energy(p, m)
    psi = test(p)
    if abs(psi) < PROBE_FLOOR:
        raise ProbeError(f"test state is {abs(psi):.3g} at the probe point")
    # hessian[i, j] = d_i (d_j psi), by differentiating the analytic gradient
    hessian = np.array([np.asarray(partial_derivative(test.gradient, p, i, steps).value)
                        for i in range(3)])
    qq = -(hessian - hessian.T) / psi
    G = _canonical_momentum(step, m)(p)
    pp = (np.outer(G, G) * psi - np.outer(G, G).T * psi) / psi
    return float(max(np.max(np.abs(qq)), np.max(np.abs(pp))))


@dataclass(frozen=True)
class CommutatorReport:
    case: str
    p_vec: tuple
    m: float
    tau: float
    closed_form: np.ndarray = field(repr=False)
    numeric: np.ndarray = field(repr=False)
    expansion: np.ndarray = field(repr=False)
    max_abs_residual: float
    numeric_asymmetry: float
    expansion_order_fit: float


def expansion_order(case: str, tau: float, p_vec, m: float, halvings: int = 5) -> float:
    """Observed order of ||closed - expansion|| under repeated halving of tau."""
    taus = halving_sequence(tau, halvings)
    make = StepSpec.case_a if case == CASE_A else StepSpec.case_b
    res = [np.max(np.abs(commutator_qp_closed(make(t), p_vec, m) - commutator_expansion(make(t), p_vec, m)))
           for t in taus]
    return fit_order(taus, res)


def commutator_report(step: StepSpec, p_vec, m: float, test: GaussianTestState3D) -> CommutatorReport:
    closed = commutator_qp_closed(step, p_vec, m)
    raw = commutator_qp_numeric(step, p_vec, m, test)
    numeric = 0.5 * (raw + raw.T)
    expansion = commutator_expansion(step, p_vec, m)
    return CommutatorReport(
        case=step.case,
        p_vec=tuple(float(c) for c in p_vec),
        m=float(m),
        tau=float(step.tau),
        closed_form=closed,
        numeric=numeric,
        expansion=expansion,
        max_abs_residual=float(np.max(np.abs(closed - numeric))),
        numeric_asymmetry=float(np.max(np.abs(raw - raw.T))),
        expansion_order_fit=expansion_order(step.case, step.tau, p_vec, m),
    )


def time_energy_commutator(E: float, tau1: float, s: complex = complex(0.5, -0.25)) -> complex:
    """([H_D, s] f)(s) / f(s) for f = e^{sE}, H_D the forward difference of step tau1.

    H_D f = (f(s + tau1) - f(s)) / tau1, so [H_D, s] f = f(s + tau1) and the
    ratio is exp(tau1 E) = 1 + tau1 E_D.  Both samples are evaluated
    literally through the generic difference quotient.
    """
    if tau1 == 0:
        return 1.0 + 0j
    f = AnalyticSignal.user(lambda z: np.exp(z * E))
    sf = AnalyticSignal.user(lambda z: z * np.exp(z * E))
    s = complex(s)
    commutator = apply_delta(sf, s, tau1, tau1) - s * apply_delta(f, s, tau1, tau1)
    return complex(commutator / f(s))


def time_energy_identity(E: float, tau1: float) -> tuple[float, float]:
    """(1 + tau1 E_D, exp(tau1 E)); the two agree identically."""
    return 1.0 + tau1 * disp.ed_case_a(E, tau1), math.exp(tau1 * E)


def operator_symbol(step: StepSpec, grid: MomentumGrid, m: float) -> np.ndarray:
    """E_D(E(p_k)) on the grid; complex for general schemes."""
    E = disp.rel_energy(np.abs(grid.p), m)
    return np.asarray(disp.deformed_energy(step, E), dtype=complex)


def hermiticity_residual(step: StepSpec, m: float, grid: MomentumGrid,
                         states: tuple[PacketState, PacketState]) -> float:
    """|<phi|O psi> - <psi|O phi>*| for O = E_D(H), inner product sum phi* psi dp."""
    phi, psi = states
    if phi.grid != grid or psi.grid != grid:
        raise UsageError("states must live on the given grid")
    symbol = operator_symbol(step, grid, m)
    forward = np.sum(np.conj(phi.amps) * (symbol * psi.amps)) * grid.dp
    backward = np.sum(np.conj(psi.amps) * (symbol * phi.amps)) * grid.dp
    return float(abs(forward - np.conj(backward)))


def reality_defect(step: StepSpec, grid: MomentumGrid, m: float) -> float:
    """max |Im E_D| over the grid modes."""
    return float(np.max(np.abs(np.imag(operator_symbol(step, grid, m)))))
