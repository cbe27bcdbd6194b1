import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from findisp.core import DispersionCurve, MaterialSpec, Model, SectionProps, circular_section


def test_model_parse_accepts_names_and_members():
    assert Model.parse("rod") is Model.ROD
    assert Model.parse("Inextensional") is Model.INEXTENSIONAL
    assert Model.parse(Model.CONVENTIONAL) is Model.CONVENTIONAL


def test_model_parse_lists_valid_models():
    with pytest.raises(ValueError, match="rod, conventional, inextensional"):
        Model.parse("extensional")


def test_material_defaults_give_unit_wave_speed():
    m = MaterialSpec()
    assert m.c0 == 1.0
    assert MaterialSpec(E=4.0, rho=1.0).c0 == 2.0


@pytest.mark.parametrize("kw", [{"E": 0.0}, {"rho": -1.0}, {"E": math.nan}, {"nu": 0.3}])
def test_material_validation(kw):
    with pytest.raises(ValueError):
        MaterialSpec(**kw)


def test_circular_section_constants():
    s = circular_section(0.1)
    assert s.A == pytest.approx(math.pi * 1e-2, rel=1e-15)
    assert s.J == pytest.approx(math.pi * 1e-4 / 4, rel=1e-15)
    assert s.J_f == pytest.approx(math.pi * 1e-6 / 8, rel=1e-15)
    assert s.J_c == pytest.approx(math.pi * 1e-6 / 24, rel=1e-15)
    assert s.r0 == pytest.approx(0.05, rel=1e-15)
    assert s.r_f == pytest.approx(math.sqrt(1e-4 / 8), rel=1e-15)


def test_section_moments_by_quadrature():
    # J = int y^2 dA, J_f = int y^4 dA, J_c = int y^2 z^2 dA over the disk
    a = 0.3
    r = np.linspace(0, a, 801)
    th = np.linspace(0, 2 * np.pi, 801)
    R, T = np.meshgrid(r, th, indexing="ij")
    y, z = R * np.cos(T), R * np.sin(T)

    def integrate(f):
        return trapezoid(trapezoid(f * R, th, axis=1), r)

    s = circular_section(a)
    assert integrate(y**2) == pytest.approx(s.J, rel=1e-5)
    assert integrate(y**4) == pytest.approx(s.J_f, rel=1e-5)
    assert integrate(y**2 * z**2) == pytest.approx(s.J_c, rel=1e-5)


@pytest.mark.parametrize("a", [0.0, -0.1, math.inf])
def test_section_rejects_bad_radius(a):
    with pytest.raises(ValueError):
        circular_section(a)


def test_section_rejects_nonpositive_moments():
    with pytest.raises(ValueError):
        SectionProps(a=1, A=1, J=0, J_f=1, J_c=1)


def test_curve_samples():
    k = np.array([1.0, 2.0])
    c = DispersionCurve(Model.ROD, 0.1, k, 2 * k, k, k, k)
    assert len(c) == 2
    s = c.samples()
    assert s[1].omega == 4.0 and s[1].model is Model.ROD and s[0].B == 0.1
