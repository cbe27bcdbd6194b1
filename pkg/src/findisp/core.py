"""Material and cross-section data shared by every solver.

Units are SI throughout, but nothing depends on that: the defaults
(E = rho = 1, so c0 = 1) are the normalized setting used in tests and
figure presets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Model(str, Enum):
    ROD = "rod"
    CONVENTIONAL = "conventional"
    INEXTENSIONAL = "inextensional"

    @classmethod
    def parse(cls, value: "str | Model") -> "Model":
        if isinstance(value, Model):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown model {value!r}; valid models: {valid}") from None


def _require_finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class MaterialSpec:
    """Linear elastic material with zero Poisson ratio."""

    E: float = 1.0
    rho: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        _require_finite_positive("E", self.E)
        _require_finite_positive("rho", self.rho)
        if self.nu != 0.0:
            raise ValueError(f"Poisson ratio must be exactly 0, got {self.nu!r}")

    @property
    def c0(self) -> float:
        return bar_wave_speed(self)


@dataclass(frozen=True)
class SectionProps:
    """Cross-section constants.

    ``J`` is the second area moment, ``J_f`` the fourth moment and ``J_c``
    the mixed product of y^2 z^2 over the area.  Use :func:`circular_section`
    for a solid circle; the raw constructor accepts any positive set.
    """

    a: float
    A: float
    J: float
    J_f: float
    J_c: float

    def __post_init__(self):
        for name in ("a", "A", "J", "J_f", "J_c"):
            _require_finite_positive(name, getattr(self, name))

    @property
    def r0(self) -> float:
        """Radius of gyration sqrt(J/A)."""
        return math.sqrt(self.J / self.A)

    @property
    def r_f(self) -> float:
        return math.sqrt(self.J_f / self.A)


def circular_section(a: float) -> SectionProps:
    """Section constants of a solid circle of radius ``a``."""
    a = _require_finite_positive("a", a)
    return SectionProps(
        a=a,
        A=math.pi * a**2,
        J=math.pi * a**4 / 4.0,
        J_f=math.pi * a**6 / 8.0,
        J_c=math.pi * a**6 / 24.0,
    )


def bar_wave_speed(m: MaterialSpec) -> float:
    return math.sqrt(m.E / m.rho)


@dataclass(frozen=True)
class WaveSample:
    kappa: float
    B: float
    omega: float
    model: Model


@dataclass
class DispersionCurve:
    """Ordered samples of one amplitude-dependent dispersion branch.

    All arrays share the length of ``kappa``; ``c_g`` and ``deviation_pct``
    may be NaN where they are undefined (e.g. at kappa = 0).
    """

    model: Model
    B: float
    kappa: np.ndarray
    omega: np.ndarray
    omega_inf: np.ndarray
    c_g: np.ndarray
    deviation_pct: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.kappa)

    def samples(self) -> list[WaveSample]:
        return [
            WaveSample(float(k), self.B, float(w), self.model)
            for k, w in zip(self.kappa, self.omega)
        ]
