import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhaah.integrals import (i_integral_closed, on_cut, q_integral_closed, quadrature_oracle,
                             theta_of_energy)

H15 = math.log(1.5)


def test_theta_examples():
    assert theta_of_energy(2.0, 1.0).theta == 0
    psi = 0.8
    th = theta_of_energy(2 * math.cosh(psi), 1.0).theta
    assert th.real == pytest.approx(0, abs=1e-15) and th.imag == pytest.approx(-psi, rel=1e-14)
    th = theta_of_energy(2 * cmath.cos(0.7 - 1j * H15), 1.0).theta
    assert abs(th - (0.7 - 1j * H15)) < 1e-14


def test_theta_negative_real_axis_and_signed_zero():
    for E in (-3.0, complex(-3.0, -0.0), complex(-3.0, 0.0)):
        th = theta_of_energy(E, 1.0)
        assert th.theta.real == pytest.approx(math.pi) and th.theta.imag < 0


def test_theta_on_cut_is_real_lower_limit():
    for q0 in (0.0, 0.4, 1.7, math.pi):
        th = theta_of_energy(2 * math.cos(q0), 1.0)
        assert th.on_cut and th.theta.imag == 0 and th.theta.real == pytest.approx(q0, abs=1e-7)
        # the E + i eps limit approaches the same angle from Im(theta) < 0
        near = theta_of_energy(complex(2 * math.cos(q0), 1e-10), 1.0).theta
        assert near.imag <= 0 and abs(near.real - q0) < 1e-4


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 6), st.floats(-math.pi, math.pi), st.floats(0.2, 3.0))
def test_branch_consistency(radius, angle, J):
    E = cmath.rect(radius * J, angle)
    th = theta_of_energy(E, J)
    assert abs(2 * J * cmath.cos(th.theta) - E) <= 1e-12 * max(abs(E), J)
    assert th.theta.imag <= 0
    assert -math.pi < th.theta.real <= math.pi
    if not on_cut(E, J):
        assert th.branch_ok


def test_branch_consistency_dense_sample():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        E = 6 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        worst = max(worst, abs(2 * cmath.cos(theta_of_energy(E, 1.0).theta) - E) / abs(E))
    assert worst < 1e-12


def test_q_closed_examples():
    assert q_integral_closed(3, 1).real == pytest.approx(math.log((3 + math.sqrt(5)) / 2), rel=1e-15)
    assert q_integral_closed(3, 1).real == pytest.approx(0.962424, abs=1e-6)
    assert q_integral_closed(2 * 1.7, 1.7) == pytest.approx(math.log(1.7))
    E = 1 + 2j
    assert abs(q_integral_closed(E, 1) - quadrature_oracle("B1", E=E).value) < 1e-10


def test_i_closed_examples():
    assert i_integral_closed(0, 1) == 0
    assert i_integral_closed(3, 1) == pytest.approx(math.log((3 + math.sqrt(5)) / 2))
    E = 2 * cmath.cos(1.1 - 1j * H15)
    assert i_integral_closed(E, 1) == pytest.approx(0.405465, abs=1e-6)
    for E in np.linspace(-1.99, 1.99, 9):
        assert i_integral_closed(E, 2.5) == math.log(2.5)


def test_cut_limit_continuity():
    for x in np.linspace(-1.9, 1.9, 11):
        for sign in (1, -1):
            assert abs(q_integral_closed(complex(x, sign * 1e-8), 1.0).real) < 1e-6


@pytest.mark.parametrize("th0", [0.3 - 0.5j, 2.0 - 0.1j, -1.0 - 1.2j, 3.0 - 2.0j])
def test_dq_dtheta_is_i(th0):
    h = 1e-5
    E = lambda th: 2 * cmath.cos(th)
    d = (q_integral_closed(E(th0 + h), 1.0) - q_integral_closed(E(th0 - h), 1.0)) / (2 * h)
    assert abs(d - 1j) < 1e-6


def test_eq13():
    res = quadrature_oracle("Eq13")
    assert abs(res.value.real + 2 * math.pi * math.log(2)) < 1e-8
    assert res.nodes >= 4096 and res.error < 1e-10


@pytest.mark.parametrize("q0", [0.3, 1.0, 2.5, math.pi, 0.0])
def test_eq12_independent_of_q0(q0):
    ref = quadrature_oracle("Eq12_offset", q0=math.pi / 2).value
    assert abs(quadrature_oracle("Eq12_offset", q0=q0).value - ref) < 1e-8
    # with J = V0 the exponent vanishes
    assert abs(ref) < 1e-12


def test_eq12_offset_equals_metallic_exponent():
    val = quadrature_oracle("Eq12_offset", q0=0.9, J=1.0, V0=0.5).value.real
    assert val == pytest.approx(math.log(2), abs=1e-10)


def test_b1_at_three():
    assert abs(quadrature_oracle("B1", E=3).value - 0.9624236501192069) < 1e-10


def test_b12_on_cut_is_log_j():
    for q0 in (0.3, 1.2, 2.8):
        assert quadrature_oracle("B12", q0=q0, J=1.7).value.real == pytest.approx(math.log(1.7), abs=1e-10)


def test_closed_vs_oracle_grid():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 100:
        E = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
        if abs(E.imag) < 0.1 and abs(E.real) < 2.1:
            continue
        J = 1.0 if checked % 2 else 0.8
        assert abs(quadrature_oracle("B1", E=E, J=J).value - q_integral_closed(E, J)) < 1e-9
        assert abs(quadrature_oracle("B12", E=E, J=J).value.real - i_integral_closed(E, J)) < 1e-9
        checked += 1


def test_negative_control_without_reflection():
    # E = 2cosh(psi) has principal arccos with Im > 0; without reflection Q is wrong
    E = 2 * math.cosh(0.5)
    assert abs(q_integral_closed(E, 1.0, reflect=False) - quadrature_oracle("B1", E=E).value) > 0.5


def test_b1_rejects_cut():
    with pytest.raises(ValueError):
        quadrature_oracle("B1", E=0.5)
