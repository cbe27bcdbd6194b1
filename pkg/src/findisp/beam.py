"""Finite-strain flexural dispersion for Euler-Bernoulli beams.

The twice-integrated travelling-wave equation is evaluated at the wave-phase
origin z = 0, where the slope field ``vbar = v'`` is pinned by the wave
amplitude.  The remaining z-derivatives come from the fundamental harmonic
``vbar(z) = B*kappa*cos(z)``.  The result is a scalar residual in omega that
is solved by bracketing upward from the linear frequency.

At z = 0 the slope derivative ``vbar_z`` vanishes, and every term carrying
the fourth area moment ``J_f`` is multiplied by a power of it.  The
``include_jf`` toggle therefore has no effect on the dispersion roots; it
is kept so the residual can be probed at other phase states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import MaterialSpec, Model, SectionProps, circular_section
from .errors import DomainError
from .roots import bracket_upward, brentq

ROTARY_DIVISORS = ("unity", "constraint")


@dataclass(frozen=True)
class BeamParams:
    material: MaterialSpec = field(default_factory=MaterialSpec)
    section: SectionProps = field(default_factory=lambda: circular_section(0.1))
    include_jf: bool = True
    # inextensional model only: "unity" (r == 1 under the constraint) or
    # "constraint" (1 - vbar**2)
    rotary_divisor: str = "unity"

    def __post_init__(self):
        if self.rotary_divisor not in ROTARY_DIVISORS:
            raise ValueError(
                f"rotary_divisor must be one of {ROTARY_DIVISORS}, got {self.rotary_divisor!r}"
            )

    @property
    def J_f(self) -> float:
        return self.section.J_f if self.include_jf else 0.0


@dataclass(frozen=True)
class PhasePointState:
    """Slope field and its z-derivatives at one wave phase."""

    vbar: float
    vbar_z: float
    vbar_zz: float
    vbar_zzz: float

    @classmethod
    def at_origin(cls, kappa: float, B: float) -> "PhasePointState":
        bk = B * kappa
        return cls(bk, 0.0, -bk, 0.0)

    @property
    def alpha(self) -> float:
        return math.atan(self.vbar)

    @property
    def alpha_zz(self) -> float:
        v, vz, vzz = self.vbar, self.vbar_z, self.vbar_zz
        r2 = 1.0 + v * v
        return vzz / r2 - 2.0 * v * vz * vz / (r2 * r2)


def _check_inputs(omega, kappa, B):
    for name, x in (("omega", omega), ("kappa", kappa), ("B", B)):
        if not math.isfinite(x):
            raise ValueError(f"{name} must be finite, got {x!r}")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    if B < 0:
        raise ValueError("amplitude B must be >= 0")
    if omega < 0:
        raise ValueError("omega must be >= 0")


def residual_conventional(
    omega: float,
    kappa: float,
    B: float,
    params: BeamParams | None = None,
    state: PhasePointState | None = None,
) -> float:
    """Dispersion residual of the conventional (transverse-only) beam."""
    p = params or BeamParams()
    _check_inputs(omega, kappa, B)
    st = state or PhasePointState.at_origin(kappa, B)
    E, rho = p.material.E, p.material.rho
    A, J, Jf = p.section.A, p.section.J, p.J_f
    v, vz, vzz = st.vbar, st.vbar_z, st.vbar_zz
    k = kappa
    r2 = 1.0 + v * v

    c_vp = (
        0.5 * E * A * v**3
        + E * J * k**2 * (2.0 - 3.0 * r2) * v * vz**2 / (2.0 * r2**3)
        - E * Jf * k**4 * v * vz**4 / r2**5
    )
    # d(C_vpp)/dz by the chain rule through (vbar, vbar_z)
    dC_dv = -4.0 * E * Jf * k**3 * vz**3 * v / r2**5 - E * J * k * vz * v * (3.0 * r2 - 2.0) / r2**3
    dC_dvz = 1.5 * E * Jf * k**3 * vz**2 / r2**4 - E * J * k * (1.0 - 3.0 * r2) / (2.0 * r2**2)
    c_vpp_z = dC_dv * vz + dC_dvz * vzz

    w2 = omega * omega
    return (
        -rho * A * w2 * v
        + rho * J * k**2 * w2 * st.alpha_zz / r2
        + k**2 * c_vp
        - k**3 * c_vpp_z
    )


def residual_inextensional(
    omega: float,
    kappa: float,
    B: float,
    params: BeamParams | None = None,
    state: PhasePointState | None = None,
) -> float:
    """Dispersion residual of the inextensional planar beam.

    Requires ``|vbar| < 1``; at the origin that is ``B*kappa < 1``.
    """
    p = params or BeamParams()
    _check_inputs(omega, kappa, B)
    st = state or PhasePointState.at_origin(kappa, B)
    if abs(st.vbar) >= 1.0:
        raise DomainError(f"inextensional slope limit exceeded: |vbar| = {abs(st.vbar):.6g} >= 1")
    E, rho = p.material.E, p.material.rho
    A, J, Jf = p.section.A, p.section.J, p.J_f
    v, vz, vzz = st.vbar, st.vbar_z, st.vbar_zz
    k = kappa
    w = 1.0 - v * v

    c_vp = (
        -(J + k**2 * Jf * (1.0 + 2.0 * v * v) * vz**2 / (2.0 * w)) * E * k**2 * v * vz**2 / w**2
        - (J + 3.0 * k**2 * Jf * vz**2 / (2.0 * w)) * E * k**2 * v * v * vzz / w
    )
    dC_dv = E * Jf * k**3 * vz**3 * v / w**2
    dC_dvz = E * k * (J + 1.5 * Jf * k**2 * vz**2 / w)
    c_vpp_z = dC_dv * vz + dC_dvz * vzz

    divisor = 1.0 if p.rotary_divisor == "unity" else w
    w2 = omega * omega
    return (
        -rho * A * w2 * v
        + rho * J * k**2 * w2 * st.alpha_zz / divisor
        + k**2 * c_vp
        - k**3 * c_vpp_z
    )


_RESIDUALS = {
    Model.CONVENTIONAL: residual_conventional,
    Model.INEXTENSIONAL: residual_inextensional,
}


def _beam_model(model) -> Model:
    model = Model.parse(model)
    if model not in _RESIDUALS:
        raise ValueError(f"{model.value!r} is not a beam model")
    return model


def beam_omega_inf(kappa: float, c0: float = 1.0, r0: float = 0.05) -> float:
    """Linear (infinitesimal-strain) flexural frequency with rotary inertia."""
    for name, x in (("kappa", kappa), ("c0", c0), ("r0", r0)):
        if not math.isfinite(x):
            raise ValueError(f"{name} must be finite, got {x!r}")
    if c0 <= 0 or r0 <= 0:
        raise ValueError("c0 and r0 must be > 0")
    rk = r0 * kappa
    return c0 * r0 * kappa * kappa / math.sqrt(1.0 + rk * rk)


def normalized_residual(model, omega, kappa, B, params: BeamParams | None = None) -> float:
    """Residual scaled by ``rho*A*B*kappa*max(omega**2, 1)``."""
    p = params or BeamParams()
    res = _RESIDUALS[_beam_model(model)](omega, kappa, B, p)
    return res / (p.material.rho * p.section.A * B * kappa * max(omega * omega, 1.0))


def beam_omega(
    model,
    kappa: float,
    B: float,
    params: BeamParams | None = None,
    rtol: float = 1e-12,
) -> float:
    """Smallest finite-strain frequency at or above the linear branch."""
    model = _beam_model(model)
    p = params or BeamParams()
    _check_inputs(0.0, kappa, B)
    w_inf = beam_omega_inf(kappa, p.material.c0, p.section.r0)
    # the amplitude correction is quadratic in B; this far down it is invisible
    # in double precision and the residual itself would underflow
    if B * kappa < 1e-150:
        return w_inf
    if model is Model.INEXTENSIONAL and B * kappa >= 1.0:
        raise DomainError(f"inextensional slope limit exceeded: B*kappa = {B * kappa:.6g} >= 1")

    f = lambda w: normalized_residual(model, w, kappa, B, p)
    lo, hi = bracket_upward(f, w_inf * (1.0 - 1e-9), factor=1.5, max_expansions=60)
    if lo == hi:
        return lo
    return brentq(f, lo, hi, rtol=rtol)


def group_velocity_fd(
    model,
    kappa: float,
    B: float,
    params: BeamParams | None = None,
    h: float | None = None,
) -> float:
    """Central-difference d(omega)/d(kappa) along a fixed-amplitude branch."""
    if h is None:
        h = 1e-6 * max(1.0, kappa)
    if not kappa > 2 * h:
        raise ValueError(f"kappa must exceed twice the step ({2 * h:.3g})")
    # root noise divided by 2h must stay far below the FD truncation error
    plus = beam_omega(model, kappa + h, B, params, rtol=4 * 2.2e-16)
    minus = beam_omega(model, kappa - h, B, params, rtol=4 * 2.2e-16)
    return (plus - minus) / (2.0 * h)


def beam_group_velocity_inf(kappa: float, c0: float = 1.0, r0: float = 0.05) -> float:
    """Analytic derivative of :func:`beam_omega_inf`."""
    rk2 = (r0 * kappa) ** 2
    return c0 * r0 * kappa * (2.0 + rk2) / (1.0 + rk2) ** 1.5


def jf_omission_error(
    a_over_B: float,
    model,
    kappa: float = math.pi,
    B: float = 0.1,
    material: MaterialSpec | None = None,
) -> float:
    """Percent change in frequency when every J_f term is dropped.

    The section radius is ``a = a_over_B * B`` with ``B`` held fixed.
    """
    if not (math.isfinite(a_over_B) and a_over_B > 0):
        raise ValueError("a_over_B must be finite and > 0")
    section = circular_section(a_over_B * B)
    m = material or MaterialSpec()
    with_jf = beam_omega(model, kappa, B, BeamParams(m, section, include_jf=True))
    without = beam_omega(model, kappa, B, BeamParams(m, section, include_jf=False))
    return 100.0 * abs(with_jf - without) / with_jf
