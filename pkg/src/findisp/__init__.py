"""Finite-strain dispersion relations and static deflection of elastic rods and beams."""

from __future__ import annotations

__version__ = "0.1.0"

from .beam import (
    BeamParams,
    PhasePointState,
    beam_group_velocity_inf,
    beam_omega,
    beam_omega_inf,
    group_velocity_fd,
    jf_omission_error,
    residual_conventional,
    residual_inextensional,
)
from .core import (
    DispersionCurve,
    MaterialSpec,
    Model,
    SectionProps,
    WaveSample,
    bar_wave_speed,
    circular_section,
)
from .errors import (
    AssemblyError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ExtractionError,
    FindispError,
)
from .rod import (
    deviation_percent,
    rod_group_velocity,
    rod_kappa,
    rod_omega,
    rod_omega_inf,
    rod_strain_amplitude,
)
from .statics import StaticCase, StaticSolution, section_loads, solve_static
