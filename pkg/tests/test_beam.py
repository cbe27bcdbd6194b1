import math

import numpy as np
import pytest
import sympy as sp

from findisp.beam import (
    BeamParams,
    PhasePointState,
    beam_group_velocity_inf,
    beam_omega,
    beam_omega_inf,
    group_velocity_fd,
    jf_omission_error,
    normalized_residual,
    residual_conventional,
    residual_inextensional,
)
from findisp.core import MaterialSpec, Model, circular_section
from findisp.errors import DomainError

P = BeamParams()
A, J, JF = P.section.A, P.section.J, P.section.J_f


def conventional_closed_form(k, B, E=1.0, rho=1.0, A=A, J=J):
    x = (B * k) ** 2
    return math.sqrt(
        E * k**4 * (A * B**2 * (1 + x) ** 2 + J * (2 + 3 * x)) / (2 * rho * (A * (1 + x) ** 2 + J * k**2))
    )


def inextensional_closed_form(k, B, E=1.0, rho=1.0, A=A, J=J):
    x = (B * k) ** 2
    return math.sqrt(E * J * k**4 / ((1 - x) * (rho * A + rho * J * k**2 / (1 + x))))


# ---------------------------------------------------------------- symbolic oracle

_z = sp.Symbol("z")
_k, _w, _E, _rho, _A, _J, _Jf = sp.symbols("kappa omega E rho A J J_f", positive=True)
_c = sp.symbols("c0:4")
# a general smooth slope field; its value and derivatives at z = 0 are free
_v = _c[0] + _c[1] * _z + _c[2] * _z**2 / 2 + _c[3] * _z**3 / 6


def _symbolic_residual(model):
    v, vz, vzz = _v, sp.diff(_v, _z), sp.diff(_v, _z, 2)
    alpha_zz = sp.diff(sp.atan(v), _z, 2)
    if model is Model.CONVENTIONAL:
        r2 = 1 + v**2
        cvp = (
            _E * _A * v**3 / 2
            + _E * _J * _k**2 * (2 - 3 * r2) * v * vz**2 / (2 * r2**3)
            - _E * _Jf * _k**4 * v * vz**4 / r2**5
        )
        cvpp = _E * _Jf * _k**3 * vz**3 / (2 * r2**4) - _E * _J * _k * (1 - 3 * r2) * vz / (2 * r2**2)
        rot = alpha_zz / r2
    else:
        w = 1 - v**2
        cvp = (
            -(_J + _k**2 * _Jf * (1 + 2 * v**2) * vz**2 / (2 * w)) * _E * _k**2 * v * vz**2 / w**2
            - (_J + 3 * _k**2 * _Jf * vz**2 / (2 * w)) * _E * _k**2 * v**2 * vzz / w
        )
        cvpp = (_J + _Jf * _k**2 * vz**2 / (2 * w)) * _E * _k * vz
        rot = alpha_zz
    expr = -_rho * _A * _w**2 * v + _rho * _J * _k**2 * _w**2 * rot + _k**2 * cvp - _k**3 * sp.diff(cvpp, _z)
    args = (_w, _k, _E, _rho, _A, _J, _Jf) + _c
    return sp.lambdify(args, expr.subs(_z, 0), "math")


_SYM = {m: _symbolic_residual(m) for m in (Model.CONVENTIONAL, Model.INEXTENSIONAL)}


@pytest.mark.parametrize("model", [Model.CONVENTIONAL, Model.INEXTENSIONAL])
@pytest.mark.parametrize(
    "state",
    [(0.3, 0.0, -0.3, 0.0), (0.2, 0.15, -0.1, 0.05), (-0.4, -0.2, 0.3, -0.1), (0.05, 0.3, 0.2, 0.4)],
)
def test_residual_matches_symbolic_derivation_at_arbitrary_states(model, state):
    w, k = 1.3, 2.1
    p = BeamParams(MaterialSpec(E=2.0, rho=1.5), circular_section(0.2))
    st = PhasePointState(*state)
    fn = residual_conventional if model is Model.CONVENTIONAL else residual_inextensional
    got = fn(w, k, abs(state[0]) / k, p, st)
    want = _SYM[model](w, k, 2.0, 1.5, p.section.A, p.section.J, p.section.J_f, *state)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_phase_state_at_origin():
    st = PhasePointState.at_origin(2.0, 0.1)
    assert (st.vbar, st.vbar_z, st.vbar_zz, st.vbar_zzz) == (0.2, 0.0, -0.2, 0.0)
    assert st.alpha == pytest.approx(math.atan(0.2))
    assert st.alpha_zz == pytest.approx(-0.2 / 1.04)


# ---------------------------------------------------------------- roots


@pytest.mark.parametrize("k", [0.5, 1.0, math.pi, 5.0])
@pytest.mark.parametrize("B", [0.01, 0.05, 0.1])
def test_conventional_root_matches_closed_form(k, B):
    assert beam_omega("conventional", k, B) == pytest.approx(conventional_closed_form(k, B), rel=1e-11)


@pytest.mark.parametrize("k", [0.5, 1.0, math.pi, 5.0])
@pytest.mark.parametrize("B", [0.01, 0.05, 0.1])
def test_inextensional_root_matches_closed_form(k, B):
    if B * k >= 1:
        pytest.skip("outside slope limit")
    assert beam_omega("inextensional", k, B) == pytest.approx(inextensional_closed_form(k, B), rel=1e-11)


def test_frozen_values():
    # closed forms evaluated independently
    assert beam_omega("conventional", math.pi, 0.05) == pytest.approx(0.5949481868, rel=1e-9)
    assert beam_omega("inextensional", math.pi, 0.01) == pytest.approx(0.4877490884, rel=1e-9)
    assert beam_omega("inextensional", math.pi, 0.05) == pytest.approx(0.4937736813, rel=1e-9)
    assert beam_omega_inf(math.pi) == pytest.approx(0.4875025471, rel=1e-9)


def test_reference_example_values():
    # reference values carry about five significant digits
    assert beam_omega("conventional", math.pi, 0.05) == pytest.approx(0.594954, rel=2e-5)
    assert beam_omega("inextensional", math.pi, 0.01) == pytest.approx(0.4877517, rel=2e-5)
    assert beam_omega("inextensional", math.pi, 0.05) == pytest.approx(0.4937761, rel=2e-5)
    assert beam_omega_inf(math.pi) == pytest.approx(0.4875033, rel=2e-5)


def test_zero_amplitude_returns_linear_branch():
    assert beam_omega("conventional", 2.0, 0.0) == beam_omega_inf(2.0)


@pytest.mark.parametrize("model", ["conventional", "inextensional"])
@pytest.mark.parametrize("B", [1e-310, 1e-200, 1e-100, 1e-20])
def test_tiny_amplitude_never_drops_below_linear_branch(model, B):
    # subnormal amplitudes once underflowed the residual at the bracket start
    assert beam_omega(model, 0.5, B) >= beam_omega_inf(0.5)


def test_residual_vanishes_at_root():
    for model in ("conventional", "inextensional"):
        w = beam_omega(model, 2.0, 0.1)
        assert abs(normalized_residual(model, w, 2.0, 0.1)) < 1e-12


def test_inextensional_slope_limit():
    with pytest.raises(DomainError, match="slope limit"):
        beam_omega("inextensional", 5.0, 0.2)
    with pytest.raises(DomainError):
        residual_inextensional(1.0, 2.0, 0.5)


def test_rotary_divisor_variant():
    unity = beam_omega("inextensional", 3.0, 0.1)
    constrained = beam_omega("inextensional", 3.0, 0.1, BeamParams(rotary_divisor="constraint"))
    assert constrained != unity
    # conventional model ignores the switch
    assert beam_omega("conventional", 3.0, 0.1, BeamParams(rotary_divisor="constraint")) == beam_omega(
        "conventional", 3.0, 0.1
    )
    with pytest.raises(ValueError):
        BeamParams(rotary_divisor="bogus")


def test_rod_is_not_a_beam_model():
    with pytest.raises(ValueError, match="not a beam model"):
        beam_omega("rod", 1.0, 0.1)


@pytest.mark.parametrize("bad", [dict(kappa=0.0), dict(B=-0.1), dict(kappa=math.inf)])
def test_invalid_inputs(bad):
    kw = dict(kappa=1.0, B=0.1) | bad
    with pytest.raises(ValueError):
        beam_omega("conventional", **kw)


def test_group_velocity_linear():
    k = 2.0
    h = 1e-6
    fd = (beam_omega_inf(k + h) - beam_omega_inf(k - h)) / (2 * h)
    assert beam_group_velocity_inf(k, 1.0, 0.05) == pytest.approx(fd, rel=1e-8)


def test_group_velocity_fd_matches_closed_form_derivative():
    k, B, h = 2.0, 0.1, 1e-5
    for model, f in (("conventional", conventional_closed_form), ("inextensional", inextensional_closed_form)):
        exact = (f(k + h, B) - f(k - h, B)) / (2 * h)
        assert group_velocity_fd(model, k, B) == pytest.approx(exact, rel=1e-6)
    with pytest.raises(ValueError):
        group_velocity_fd("conventional", 1e-7, 0.1)


def test_jf_terms_vanish_at_phase_origin():
    # every J_f contribution carries a power of vbar_z, which is zero at z = 0
    for model in ("conventional", "inextensional"):
        for ratio in (0.01, 0.2, 1.0):
            assert jf_omission_error(ratio, model) == 0.0
    with pytest.raises(ValueError):
        jf_omission_error(0.0, "conventional")


@pytest.mark.xfail(
    strict=True,
    reason="the omission error is identically zero at the phase origin, so it cannot grow with a/B",
)
def test_jf_error_grows_with_section_radius():
    for model in ("conventional", "inextensional"):
        assert jf_omission_error(0.2, model) > jf_omission_error(0.025, model)


def test_jf_toggle_matters_away_from_origin():
    st = PhasePointState(0.2, 0.3, -0.1, 0.0)
    on = residual_conventional(1.0, 2.0, 0.1, BeamParams(include_jf=True), st)
    off = residual_conventional(1.0, 2.0, 0.1, BeamParams(include_jf=False), st)
    assert on != off
