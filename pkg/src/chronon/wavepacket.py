"""Free relativistic wave packets on a periodic 1-D momentum grid.

A state is the array of momentum amplitudes psi(p_k).  Every operator of
the form f(H) is diagonal here, so each stepping rule is a per-mode
multiplication (or, for the symmetric derivative, a per-mode two-step
recurrence).  Position-space observables go through one FFT.

Three steppers are provided, and the trajectories they produce carry a
``semantics`` label:

``literal``   forward-difference step along the imaginary-time axis:
              psi <- exp(tau1 E) psi.  Amplitudes change, nothing moves.
``leapfrog``  symmetric-derivative recurrence
              psi_{n+1} = psi_{n-1} - 2 i tau0 E_D psi_n, started on the
              physical root.
``effective`` real-time propagation psi <- exp(-i dt E_D) psi under the
              deformed dispersion; packets move with dE_D/dp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from . import dispersion as disp
from .dispersion import StepSpec
from .errors import (ConfigurationError, DegenerateStateError, DomainError,
                     UsageError, WrapAroundError)
from .numerics import fit_line

FRONT_QUANTILE = 0.999
WRAP_BAND_CELLS = 4
WRAP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform grid p_k = -p_max + k dp, dp = 2 p_max / n, with conjugate spacing dx = pi / p_max."""

    n: int
    p_max: float

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ConfigurationError(f"grid size must be a power of two, got {self.n}")
        if not self.p_max > 0:
            raise ConfigurationError("p_max must be positive")

    @property
    def dp(self) -> float:
        return 2.0 * self.p_max / self.n

    @property
    def dx(self) -> float:
        return math.pi / self.p_max

    @property
    def p(self) -> np.ndarray:
        return -self.p_max + self.dp * np.arange(self.n)

    @property
    def x(self) -> np.ndarray:
        return self.dx * (np.arange(self.n) - self.n // 2)

    def to_position(self, amps: np.ndarray) -> np.ndarray:
        """psi(x_j) = dp / sqrt(2 pi) * sum_k psi(p_k) exp(i p_k x_j)."""
        scale = self.dp * self.n / math.sqrt(2.0 * math.pi)
        return scale * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(amps)))

    def to_momentum(self, psi_x: np.ndarray) -> np.ndarray:
        scale = self.dx / math.sqrt(2.0 * math.pi)
        return scale * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(psi_x)))


@dataclass(frozen=True)
class CaseALiteral:
    tau1: float
    label = "literal"


@dataclass(frozen=True)
class CaseBLeapfrog:
    tau0: float
    label = "leapfrog"

    def __post_init__(self):
        if not self.tau0 > 0:
            raise DomainError("tau0 must be positive")


@dataclass(frozen=True)
class EffectiveDispersion:
    step: StepSpec
    dt: float
    label = "effective"

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")


Scheme = Union[CaseALiteral, CaseBLeapfrog, EffectiveDispersion]


@dataclass
class PacketState:
    grid: MomentumGrid
    amps: np.ndarray
    m: float = 0.0
    scheme: Optional[Scheme] = None
    step_index: int = 0
    amps_prev: Optional[np.ndarray] = None

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.grid.n,):
            raise ConfigurationError("amplitude array does not match the grid")
        if isinstance(self.scheme, CaseBLeapfrog) and self.step_index >= 1 and self.amps_prev is None:
            raise UsageError("a leapfrog state past step 0 needs its previous amplitudes")

    @property
    def energy(self) -> np.ndarray:
        return disp.rel_energy(np.abs(self.grid.p), self.m)

    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm_sq(self) -> float:
        return float(np.sum(self.density()) * self.grid.dp)

    def with_scheme(self, scheme: Scheme) -> "PacketState":
        return replace(self, scheme=scheme, step_index=0, amps_prev=None)


def gaussian_packet(grid: MomentumGrid, p0: float, sigma: float, m: float = 0.0,
                    scheme: Optional[Scheme] = None) -> PacketState:
    """Normalised psi(p) ~ exp(-(p - p0)^2 / (4 sigma^2)); |psi|^2 has variance sigma^2."""
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    if abs(p0) + 4.0 * sigma >= grid.p_max:
        raise ConfigurationError(
            f"packet band |p0| + 4 sigma = {abs(p0) + 4 * sigma:g} exceeds p_max = {grid.p_max:g}")
    if m < 0:
        raise DomainError("mass must be nonnegative")
    amps = np.exp(-((grid.p - p0) ** 2) / (4.0 * sigma ** 2)).astype(complex)
    amps /= math.sqrt(np.sum(np.abs(amps) ** 2) * grid.dp)
    return PacketState(grid, amps, m, scheme)


def random_state(grid: MomentumGrid, rng: np.random.Generator, m: float = 0.0) -> PacketState:
    """Normalised state with independent complex Gaussian amplitudes."""
    amps = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    amps /= math.sqrt(np.sum(np.abs(amps) ** 2) * grid.dp)
    return PacketState(grid, amps, m)


@dataclass(frozen=True)
class Observables:
    norm: float
    norm_sq: float
    centroid_x: float
    spectral_centroid_p: float
    quantile_front_x: float


def observables(state: PacketState) -> Observables:
    """Norm, position centroid, mean |p| and the 0.999 front of the |x| density."""
    return _observables(state, np.abs(state.grid.to_position(state.amps)) ** 2)


def _observables(state: PacketState, rho_x: np.ndarray) -> Observables:
    grid = state.grid
    with np.errstate(over="ignore"):
        rho_p = state.density()
        norm_sq = float(np.sum(rho_p) * grid.dp)
    if not math.isfinite(norm_sq):
        raise DegenerateStateError("state norm overflowed")
    if not norm_sq > 0:
        raise DegenerateStateError("state has zero norm")
    x = grid.x
    centroid = float(np.sum(x * rho_x) * grid.dx / norm_sq)
    mean_abs_p = float(np.sum(np.abs(grid.p) * rho_p) * grid.dp / norm_sq)
    front = _quantile_radius(np.abs(x), rho_x * grid.dx, FRONT_QUANTILE * norm_sq)
    return Observables(math.sqrt(norm_sq), norm_sq, centroid, mean_abs_p, front)


def _quantile_radius(radius: np.ndarray, weight: np.ndarray, target: float) -> float:
    order = np.argsort(radius, kind="stable")
    cumulative = np.cumsum(weight[order])
    idx = int(np.searchsorted(cumulative, target, side="left"))
    idx = min(idx, radius.size - 1)
    return float(radius[order][idx])


def check_wraparound(state: PacketState, rho_x: Optional[np.ndarray] = None) -> float:
    """Probability fraction near the periodic boundary; raises past the tolerance."""
    grid = state.grid
    if rho_x is None:
        rho_x = np.abs(grid.to_position(state.amps)) ** 2
    edge = (grid.n // 2 - WRAP_BAND_CELLS) * grid.dx
    near = float(np.sum(rho_x[np.abs(grid.x) >= edge]) * grid.dx)
    fraction = near / (float(np.sum(rho_x)) * grid.dx)
    if fraction > WRAP_TOLERANCE:
        raise WrapAroundError(
            f"{fraction:.3g} of the probability is within {WRAP_BAND_CELLS} cells of the "
            f"grid boundary at step {state.step_index}; enlarge grid_n or reduce the run length")
    return fraction


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    t: float
    norm: float
    centroid_x: float
    centroid_v: float
    front_x: float
    cone_fraction: float


@dataclass
class Trajectory:
    semantics: str
    records: list
    initial: PacketState
    final: PacketState
    elapsed_label: str = "t"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self):
        return len(self.records)


class _Recorder:
    """Builds trajectory records; cone_fraction is the probability outside
    |x - x0| <= R0 + t, with x0 and R0 the initial centroid and 0.999 radius."""

    def __init__(self, state: PacketState, guard: bool):
        self.guard = guard
        grid = state.grid
        rho_x = np.abs(grid.to_position(state.amps)) ** 2
        norm_sq = state.norm_sq()
        self.x0 = float(np.sum(grid.x * rho_x) * grid.dx / norm_sq)
        self.dist = np.abs(grid.x - self.x0)
        self.r0 = _quantile_radius(self.dist, rho_x * grid.dx, FRONT_QUANTILE * norm_sq)
        self.records: list[TrajectoryRecord] = []
        self._raw: list[tuple] = []

    def add(self, state: PacketState, elapsed: float):
        grid = state.grid
        rho_x = np.abs(grid.to_position(state.amps)) ** 2
        obs = _observables(state, rho_x)
        if self.guard:
            check_wraparound(state, rho_x)
        outside = float(np.sum(rho_x[self.dist > self.r0 + abs(elapsed)]) * grid.dx) / obs.norm_sq
        self._raw.append((state.step_index, elapsed, obs.norm, obs.centroid_x,
                          obs.quantile_front_x, outside))

    def finish(self) -> list[TrajectoryRecord]:
        raw = self._raw
        out = []
        for k, (step, t, norm, cx, front, cone) in enumerate(raw):
            if len(raw) < 2:
                v = 0.0
            elif k == 0:
                v = (raw[1][3] - cx) / (raw[1][1] - t)
            else:
                v = (cx - raw[k - 1][3]) / (t - raw[k - 1][1])
            out.append(TrajectoryRecord(step, t, norm, cx, v, front, cone))
        return out


def _record_due(k: int, steps: int, every: int) -> bool:
    return k % every == 0 or k == steps


def step_case_a(state: PacketState, tau1: Optional[float] = None) -> PacketState:
    """One forward-difference step psi <- exp(tau1 E) psi along the imaginary-time axis."""
    if not isinstance(state.scheme, CaseALiteral):
        raise UsageError("step_case_a needs a state with the CaseALiteral scheme")
    tau1 = state.scheme.tau1 if tau1 is None else tau1
    amps = state.amps * np.exp(tau1 * state.energy)
    return replace(state, amps=amps, step_index=state.step_index + 1)


def evolve_case_a(state: PacketState, tau1: float, steps: int, record_every: int = 1,
                  guard: bool = True) -> Trajectory:
    """Repeated literal case-a steps; elapsed parameter is v = step * tau1."""
    if steps < 1:
        raise UsageError("steps must be at least 1")
    state = state.with_scheme(CaseALiteral(tau1))
    initial = state
    growth = np.exp(tau1 * state.energy)
    rec = _Recorder(state, guard=guard)
    rec.add(state, 0.0)
    for k in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            amps = state.amps * growth
        if not np.all(np.isfinite(amps)):
            raise DegenerateStateError(f"amplitudes overflowed at step {k}; reduce tau1 or steps")
        state = replace(state, amps=amps, step_index=k)
        if _record_due(k, steps, record_every):
            with np.errstate(over="ignore"):
                rec.add(state, k * tau1)
    return Trajectory("literal", rec.finish(), initial, state, elapsed_label="v")


def physical_root(theta_arg: np.ndarray) -> np.ndarray:
    """Physical characteristic root of z^2 + 2 i theta z - 1 = 0, theta = sin(arg).

    z = sqrt(1 - theta^2) - i theta with the nonnegative square root, written
    as |cos(arg)| - i sin(arg) to avoid cancellation near theta = 1.
    """
    return np.abs(np.cos(theta_arg)) - 1j * np.sin(theta_arg)


def evolve_case_b(state: PacketState, tau0: float, steps: int, record_every: int = 1,
                  guard: bool = True) -> Trajectory:
    """Symmetric-derivative leapfrog over ``steps`` steps of tau0."""
    if steps < 1:
        raise UsageError("steps must be at least 1")
    if not tau0 > 0:
        raise DomainError("tau0 must be positive")
    state = state.with_scheme(CaseBLeapfrog(tau0))
    initial = state
    arg = tau0 * state.energy
    theta = np.sin(arg)
    coef = -2j * theta

    rec = _Recorder(state, guard)
    rec.add(state, 0.0)
    prev = state.amps
    cur = physical_root(arg) * prev
    state = replace(state, amps=cur, amps_prev=prev, step_index=1)
    if _record_due(1, steps, record_every):
        rec.add(state, tau0)
    for k in range(2, steps + 1):
        prev, cur = cur, prev + coef * cur
        if _record_due(k, steps, record_every):
            state = replace(state, amps=cur, amps_prev=prev, step_index=k)
            rec.add(state, k * tau0)
    state = replace(state, amps=cur, amps_prev=prev, step_index=steps)
    return Trajectory("leapfrog", rec.finish(), initial, state)


def evolve_effective(state: PacketState, case: StepSpec, dt: float, steps: int,
                     record_every: int = 1, guard: bool = True) -> Trajectory:
    """Real-time propagation psi <- exp(-i dt E_D) psi under the deformed dispersion."""
    if steps < 1:
        raise UsageError("steps must be at least 1")
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not case.is_real_case:
        worst = float(np.max(disp.reality_residual(state.energy, case.lam, case.delta_s)))
        raise DomainError(
            f"scheme violates the reality condition (max |Im E_D| = {worst:.3g} on the grid); "
            "effective evolution would not be unitary")
    state = state.with_scheme(EffectiveDispersion(case, dt))
    initial = state
    phase = np.exp(-1j * dt * disp.deformed_energy(case, state.energy))
    rec = _Recorder(state, guard)
    rec.add(state, 0.0)
    amps = state.amps
    for k in range(1, steps + 1):
        amps = amps * phase
        if _record_due(k, steps, record_every):
            state = replace(state, amps=amps, step_index=k)
            rec.add(state, k * dt)
    state = replace(state, amps=amps, step_index=steps)
    return Trajectory("effective", rec.finish(), initial, state)


def mean_group_velocity(state: PacketState, case: StepSpec) -> float:
    """Momentum-density average of the 1-D group velocity."""
    grid = state.grid
    p = grid.p
    E = state.energy
    rho = state.density()
    v = np.zeros_like(p)
    moving = E > 0
    v[moving] = np.asarray(disp.velocity_factor(case, E[moving])) * p[moving] / E[moving]
    return float(np.sum(v * rho) / np.sum(rho))


@dataclass(frozen=True)
class LightConeReport:
    semantics: str
    fitted_centroid_speed: float
    centroid_fit_error: float
    fitted_front_speed: float
    front_fit_error: float
    predicted_speed: float
    superluminal: bool


def light_cone_report(traj: Trajectory, case: StepSpec, m: Optional[float] = None) -> LightConeReport:
    """Least-squares speeds over the second half of an effective-dispersion trajectory."""
    if len(traj) < 10:
        raise UsageError("light-cone analysis needs at least 10 records")
    if traj.semantics != "effective":
        raise UsageError("light-cone analysis needs an evolve_effective trajectory")
    initial = traj.initial
    if m is not None and m != initial.m:
        initial = replace(initial, m=m)
    half = traj.records[len(traj.records) // 2:]
    t = [r.t for r in half]
    cfit = fit_line(t, [r.centroid_x for r in half])
    ffit = fit_line(t, [r.front_x for r in half])
    predicted = mean_group_velocity(initial, case)
    superluminal = cfit.slope > 1.0 + 3.0 * cfit.slope_stderr
    return LightConeReport(traj.semantics, cfit.slope, cfit.slope_stderr, ffit.slope,
                           ffit.slope_stderr, predicted, bool(superluminal))


def mode_oracle(p: float, m: float, scheme: Scheme, steps: int) -> complex:
    """Closed-form amplitude factor of a single momentum mode after ``steps`` steps."""
    E = disp.rel_energy(abs(p), m)
    if steps == 0:
        return 1.0 + 0j
    if isinstance(scheme, CaseALiteral):
        return complex(math.exp(steps * scheme.tau1 * E))
    if isinstance(scheme, CaseBLeapfrog):
        return complex(physical_root(np.asarray(scheme.tau0 * E)) ** steps)
    if isinstance(scheme, EffectiveDispersion):
        ed = disp.deformed_energy(scheme.step, E)
        return complex(np.exp(-1j * steps * scheme.dt * ed))
    raise UsageError(f"unknown scheme {scheme!r}")
