import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from chronon import algebra as alg
from chronon import dispersion as d
from chronon import wavepacket as w
from chronon.dispersion import CASE_A, CASE_B, StepSpec
from chronon.errors import DomainError, ProbeError, UsageError

SIN2_OVER_2 = 0.45464871341284085  # mpmath: sin(2) / 2
EXP_01 = 1.1051709180756477


def random_point(rng):
    while True:
        p = rng.uniform(-2, 2, 3)
        if np.linalg.norm(p) >= 0.3:
            return p, rng.uniform(0, 2)


def random_step(rng, case):
    tau = rng.uniform(0.01, 0.5)
    return StepSpec.case_a(tau) if case == CASE_A else StepSpec.case_b(tau)


def random_test_state(rng, p):
    return alg.GaussianTestState3D(tuple(p + rng.normal(0, 0.3, 3)), rng.uniform(0.5, 1.5),
                                   tuple(rng.normal(0, 0.5, 3)))


def test_sin2_constant():
    assert SIN2_OVER_2 == float(mpmath.sin(2) / 2)


def test_test_state_self_check(rng):
    for _ in range(20):
        p = rng.uniform(-2, 2, 3)
        state = random_test_state(rng, p)
        assert state.self_check(p) <= 1e-8
    with pytest.raises(DomainError):
        alg.GaussianTestState3D((0, 0, 0), 0.0)


def test_test_state_normalized():
    # |psi|^2 integrates to one: a product of three 1-D Gaussians of variance sigma^2
    state = alg.GaussianTestState3D((0.2, -0.1, 0.4), 0.7, (1.0, 0.0, -2.0))
    x = np.linspace(-6, 6, 801)
    one_d = trapezoid(np.exp(-x ** 2 / (2 * 0.49)), x)
    assert state.normalization ** 2 * one_d ** 3 == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("case", [CASE_A, CASE_B])
def test_canonical_limit(case):
    make = StepSpec.case_a if case == CASE_A else StepSpec.case_b
    for tau in (1e-9, 1e-10):
        got = alg.commutator_qp_closed(make(tau), (0.4, -1.0, 0.3), 0.7)
        assert np.max(np.abs(got - 1j * np.eye(3))) < 1e-8
    got = alg.commutator_qp_closed(StepSpec.case_a(0.0), (0.4, -1.0, 0.3), 0.7)
    assert np.array_equal(got, 1j * np.eye(3))


def test_case_b_rest_value():
    got = alg.commutator_qp_closed(StepSpec.case_b(1.0), (0, 0, 0), 1.0)
    assert np.max(np.abs(got - 1j * SIN2_OVER_2 * np.eye(3))) < 1e-15


@pytest.mark.parametrize("step", [StepSpec.case_a(0.3), StepSpec.case_b(0.3)])
def test_axis_structure(step):
    M = alg.commutator_qp_closed(step, (1.3, 0, 0), 0.5)
    E = math.hypot(1.3, 0.5)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        assert M[i, j] == 0 and M[j, i] == 0
    assert M[1, 1] == M[2, 2] == pytest.approx(1j * d.canonical_factor(step, E), rel=1e-15)


def test_closed_requires_energy():
    with pytest.raises(DomainError):
        alg.commutator_qp_closed(StepSpec.case_a(0.1), (0, 0, 0), 0.0)
    with pytest.raises(DomainError):
        alg.commutator_qp_closed(StepSpec.general(1, 1j), (1, 0, 0), 0.0)


@pytest.mark.parametrize("case", [CASE_A, CASE_B])
def test_route_equality(rng, case):
    worst = 0.0
    for _ in range(1000):
        p, m = random_point(rng)
        step = random_step(rng, case)
        a = alg.commutator_qp_closed(step, p, m)
        b = alg.commutator_qp_printed(step, p, m)
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst <= 1e-12


@pytest.mark.parametrize("case", [CASE_A, CASE_B])
def test_derivative_of_canonical_factor(rng, case):
    for _ in range(50):
        step = random_step(rng, case)
        E = rng.uniform(0.2, 3)
        ref = float(mpmath.diff(lambda e: _g_mp(step, e), E))
        assert alg.canonical_factor_derivative(step, E) == pytest.approx(ref, rel=1e-11, abs=1e-13)


def _g_mp(step, E):
    tau = mpmath.mpf(step.tau)
    if step.case == CASE_A:
        return mpmath.exp(tau * E) * mpmath.expm1(tau * E) / (tau * E)
    return mpmath.sin(2 * tau * E) / (2 * tau * E)


@pytest.mark.parametrize("case", [CASE_A, CASE_B])
def test_numeric_oracle_agrees(rng, case):
    worst = 0.0
    for _ in range(100):
        p, m = random_point(rng)
        step = random_step(rng, case)
        test = random_test_state(rng, p)
        num = alg.commutator_qp_numeric(step, p, m, test)
        worst = max(worst, np.max(np.abs(num - alg.commutator_qp_closed(step, p, m))))
    assert worst <= 1e-8


def test_numeric_independent_of_test_state(rng):
    p, m = np.array([0.7, -0.4, 1.1]), 0.8
    step = StepSpec.case_b(0.35)
    states = [alg.GaussianTestState3D((0, 0, 0), 1.0),
              alg.GaussianTestState3D((1.0, 0.5, -0.2), 0.6, (0.3, 0.0, 1.0)),
              alg.GaussianTestState3D((0.5, -0.5, 1.5), 2.0, (-1.0, 2.0, 0.5))]
    mats = [alg.commutator_qp_numeric(step, p, m, s) for s in states]
    for a in mats[1:]:
        assert np.max(np.abs(a - mats[0])) <= 1e-8


def test_numeric_canonical_limit():
    test = alg.GaussianTestState3D((0.5, 0.5, 0.5), 1.0)
    got = alg.commutator_qp_numeric(StepSpec.case_a(1e-10), (0.3, 0.9, -0.2), 0.4, test)
    assert np.max(np.abs(got - 1j * np.eye(3))) <= 1e-8


def test_numeric_probe_floor():
    test = alg.GaussianTestState3D((0, 0, 0), 0.05)
    with pytest.raises(ProbeError):
        alg.commutator_qp_numeric(StepSpec.case_a(0.1), (2.0, 2.0, 2.0), 0.5, test)


@pytest.mark.parametrize("step", [StepSpec.case_a(0.0), StepSpec.case_b(1e-300)])
def test_expansion_trivial_limit(step):
    got = alg.commutator_expansion(step, (0.5, 0.2, -0.1), 1.0)
    assert np.max(np.abs(got - 1j * np.eye(3))) == 0.0


def test_expansion_case_a_singularity():
    with pytest.raises(DomainError):
        alg.commutator_expansion(StepSpec.case_a(0.1), (0, 0, 0), 0.0)


def test_expansion_orders(rng):
    for _ in range(10):
        p, m = random_point(rng)
        assert alg.expansion_order(CASE_A, 0.05, p, m) == pytest.approx(2.0, abs=0.2)
        assert alg.expansion_order(CASE_B, 0.05, p, m) >= 2.5


@pytest.mark.parametrize("case", [CASE_A, CASE_B])
def test_null_checks(rng, case):
    for _ in range(30):
        p, m = random_point(rng)
        step = random_step(rng, case)
        assert alg.commutator_null_checks(step, p, m, random_test_state(rng, p)) <= 1e-10


def test_report_fields(rng):
    p, m = random_point(rng)
    step = StepSpec.case_a(0.1)
    rep = alg.commutator_report(step, p, m, random_test_state(rng, p))
    for M in (rep.closed_form, rep.numeric, rep.expansion):
        assert np.array_equal(M, M.T)
    assert 0 <= rep.max_abs_residual <= 1e-8
    assert rep.numeric_asymmetry <= 1e-8
    assert rep.expansion_order_fit == pytest.approx(2.0, abs=0.2)


def test_time_energy_examples():
    assert alg.time_energy_commutator(0.0, 0.1) == pytest.approx(1.0, abs=1e-15)
    assert alg.time_energy_commutator(1.0, 0.1) == pytest.approx(EXP_01, rel=1e-13)
    assert EXP_01 == float(mpmath.exp(mpmath.mpf("0.1")))


def test_time_energy_identity(rng):
    for _ in range(100):
        E, tau = rng.uniform(0, 5), rng.uniform(-0.5, 0.5)
        lhs, rhs = alg.time_energy_identity(E, tau)
        assert abs(lhs - rhs) <= 1e-13 * rhs
        got = alg.time_energy_commutator(E, tau, complex(*rng.uniform(-2, 2, 2)))
        assert abs(got - rhs) <= 1e-12 * rhs


@given(st.floats(0, 10), st.floats(-1, 1).filter(lambda t: abs(t) > 1e-6))
@settings(max_examples=200)
def test_time_energy_identity_property(E, tau):
    lhs, rhs = alg.time_energy_identity(E, tau)
    assert abs(lhs - rhs) <= 1e-13 * rhs


@pytest.fixture(scope="module")
def small_grid():
    return w.MomentumGrid(512, 8.0)


@pytest.mark.parametrize("step", [StepSpec.case_a(0.1), StepSpec.case_b(0.3), StepSpec.case_a(-0.2)])
def test_hermiticity_real_cases(small_grid, step, rng):
    for _ in range(10):
        pair = (w.random_state(small_grid, rng, 1.0), w.random_state(small_grid, rng, 1.0))
        assert alg.hermiticity_residual(step, 1.0, small_grid, pair) <= 1e-12
    assert alg.reality_defect(step, small_grid, 1.0) < 1e-15


def test_hermiticity_complex_scheme(small_grid, rng):
    step = StepSpec.general(1.0, 1j)
    for _ in range(10):
        pair = (w.random_state(small_grid, rng, 0.5), w.random_state(small_grid, rng, 0.5))
        assert alg.hermiticity_residual(step, 0.5, small_grid, pair) > 1e-3
    assert alg.reality_defect(step, small_grid, 0.5) > 0.1


def test_hermiticity_tracks_reality_defect(small_grid, rng):
    pair = (w.random_state(small_grid, rng, 0.5), w.random_state(small_grid, rng, 0.5))
    defects, residuals = [], []
    for eps in (0.0, 1e-6, 1e-4, 1e-2, 0.3):
        # tilt the case-a scheme off the real axis
        step = StepSpec.general(0.1, 0.1 + 1j * eps)
        defects.append(alg.reality_defect(step, small_grid, 0.5))
        residuals.append(alg.hermiticity_residual(step, 0.5, small_grid, pair))
    assert residuals[0] <= 1e-12 and defects[0] <= 1e-12
    assert residuals == sorted(residuals) and defects == sorted(defects)
    assert np.corrcoef(np.log(defects[1:]), np.log(residuals[1:]))[0, 1] > 0.99


def test_hermiticity_grid_mismatch(small_grid, rng):
    other = w.MomentumGrid(256, 8.0)
    pair = (w.random_state(other, rng, 0.5), w.random_state(other, rng, 0.5))
    with pytest.raises(UsageError):
        alg.hermiticity_residual(StepSpec.case_a(0.1), 0.5, small_grid, pair)
