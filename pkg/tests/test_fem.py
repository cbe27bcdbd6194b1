import json
import math

import numpy as np
import pytest
from scipy.optimize import curve_fit

from findisp.core import MaterialSpec, circular_section
from findisp.errors import AssemblyError, ExtractionError
from findisp.fem import (
    ExcitationProtocol,
    InitialField,
    RodMesh,
    TipSinusoid,
    assemble,
    axial_force,
    default_length,
    extract_frequency_from_trace,
    extract_wavelength,
    extract_wavelength_from_profile,
    run_initial_case,
    run_tip_case,
    simulate,
)
from findisp.rod import rod_kappa, rod_omega

MAT = MaterialSpec()
SEC = circular_section(0.1)


def test_mesh_layout():
    m = RodMesh(2.0, 8)
    assert m.le == 0.25 and m.n_dof == 18 and m.dofs_per_node == 2
    np.testing.assert_allclose(m.nodes, np.linspace(0, 2, 9))
    assert m.dof_map.shape == (8, 4)
    np.testing.assert_array_equal(m.u_dofs(), np.arange(0, 18, 2))
    lin = RodMesh(2.0, 8, "linear")
    assert lin.n_dof == 9 and lin.dof_map.shape == (8, 2)


@pytest.mark.parametrize("kw", [dict(n_elem=3), dict(L=0.0), dict(element="quadratic")])
def test_mesh_validation(kw):
    args = dict(L=1.0, n_elem=10) | kw
    with pytest.raises(ValueError):
        RodMesh(**args)


@pytest.mark.parametrize("element", ["hermite", "linear"])
def test_mass_matrix_carries_total_mass(element):
    mesh = RodMesh(3.0, 12, element)
    sys_ = assemble(mesh, MAT, SEC)
    rigid = np.zeros(mesh.n_dof)
    rigid[mesh.u_dofs()] = 1.0
    # rigid translation: kinetic energy 0.5 * m_total * 1**2
    assert sys_.kinetic_energy(rigid) == pytest.approx(0.5 * MAT.rho * SEC.A * 3.0, rel=1e-13)
    np.testing.assert_allclose(sys_.M, sys_.M.T, rtol=0, atol=1e-18)


def test_zero_field_has_no_force():
    sys_ = assemble(RodMesh(1.0, 10), MAT, SEC)
    assert np.all(sys_.internal_force(np.zeros(sys_.mesh.n_dof)) == 0)


def test_uniform_strain_gives_pointwise_axial_force():
    mesh = RodMesh(1.0, 10)
    sys_ = assemble(mesh, MAT, SEC)
    eps = 0.2
    U = np.zeros(mesh.n_dof)
    U[mesh.u_dofs()] = eps * mesh.nodes
    U[mesh.u_dofs() + 1] = eps
    np.testing.assert_allclose(sys_.element_strains(U), eps, rtol=1e-13)
    f = sys_.internal_force(U)
    # interior nodes are in equilibrium; the end reactions equal the axial force
    N = axial_force(1 + eps, MAT.E * SEC.A)
    assert f[mesh.u_dofs()[-1]] == pytest.approx(N, rel=1e-12)
    assert f[0] == pytest.approx(-N, rel=1e-12)
    np.testing.assert_allclose(f[mesh.u_dofs()[1:-1]], 0, atol=1e-12 * N)


def _independent_linear_stiffness(mesh, EA):
    """Hermite bar stiffness from the closed-form element matrix."""
    le = mesh.le
    ke = EA / (30 * le) * np.array(
        [
            [36, 3 * le, -36, 3 * le],
            [3 * le, 4 * le**2, -3 * le, -le**2],
            [-36, -3 * le, 36, -3 * le],
            [3 * le, -le**2, -3 * le, 4 * le**2],
        ]
    )
    K = np.zeros((mesh.n_dof, mesh.n_dof))
    for e in range(mesh.n_elem):
        ix = np.arange(2 * e, 2 * e + 4)
        K[np.ix_(ix, ix)] += ke
    return K


def test_internal_force_linearizes_to_independent_stiffness():
    mesh = RodMesh(2.0, 7)
    sys_ = assemble(mesh, MAT, SEC)
    K = _independent_linear_stiffness(mesh, MAT.E * SEC.A)
    np.testing.assert_allclose(sys_.K_lin, K, rtol=1e-12, atol=1e-15)
    rng = np.random.default_rng(0)
    U0 = rng.standard_normal(mesh.n_dof)
    for scale in (1e-3, 1e-4):
        U = scale * U0
        err = np.linalg.norm(sys_.internal_force(U) - K @ U)
        assert err < 10 * np.linalg.norm(K @ U0) * scale**2


def test_internal_force_is_gradient_of_strain_energy():
    mesh = RodMesh(1.0, 6)
    sys_ = assemble(mesh, MAT, SEC)
    rng = np.random.default_rng(1)
    U = 0.05 * rng.standard_normal(mesh.n_dof)
    h = 1e-6
    grad = np.array(
        [
            (sys_.strain_energy(U + h * e) - sys_.strain_energy(U - h * e)) / (2 * h)
            for e in np.eye(mesh.n_dof)
        ]
    )
    np.testing.assert_allclose(sys_.internal_force(U), grad, rtol=1e-6, atol=1e-12)


def test_assembly_rejects_ill_conditioned_mass():
    with pytest.raises(AssemblyError):
        assemble(RodMesh(1e-4, 20), MAT, SEC)


def test_protocol_validation():
    with pytest.raises(ValueError):
        ExcitationProtocol(TipSinusoid(-0.1, 1.0), 10.0)
    with pytest.raises(ValueError):
        ExcitationProtocol(TipSinusoid(0.1, 0.0), 10.0)
    with pytest.raises(ValueError, match="one excitation period"):
        ExcitationProtocol(TipSinusoid(0.1, 1.0), 1.0)
    with pytest.raises(ValueError):
        ExcitationProtocol(InitialField(0.1, 1.0), 1.0, stride=0.0)


def test_zero_amplitude_gives_zero_fields():
    proto = ExcitationProtocol(TipSinusoid(0.0, math.pi), 2.0, stride=0.01)
    rec = simulate(RodMesh(3.0, 10), MAT, SEC, proto)
    assert rec.displacement.shape == (201, 11)
    assert not rec.displacement.any() and not rec.velocity.any()


def test_snapshot_count():
    proto = ExcitationProtocol(InitialField(1e-3, math.pi), 0.2051, stride=0.01)
    rec = simulate(RodMesh(4.0, 10), MAT, SEC, proto)
    assert len(rec.times) == 21
    assert rec.displacement.shape == rec.velocity.shape == (21, 11)


def test_record_io_and_profile(tmp_path):
    proto = ExcitationProtocol(TipSinusoid(1e-3, math.pi), 2.0, stride=0.05)
    rec = simulate(RodMesh(6.0, 12), MAT, SEC, proto)
    sidecar = rec.write(tmp_path / "sim.csv")
    lines = (tmp_path / "sim.csv").read_text().splitlines()
    assert lines[0] == "t," + ",".join(f"s_{i}" for i in range(13))
    assert len(lines) == 1 + len(rec.times)
    info = json.loads(sidecar.read_text())
    assert info["protocol"]["kind"] == "tip" and len(info["energy"]["kinetic"]) == len(rec.times)
    # tip follows the prescription exactly
    np.testing.assert_allclose(rec.displacement[:, -1], 1e-3 * np.sin(math.pi * rec.times), atol=1e-18)
    mid = rec.profile_at(0.125)
    np.testing.assert_allclose(mid, 0.5 * (rec.displacement[2] + rec.displacement[3]))
    with pytest.raises(ExtractionError):
        rec.profile_at(3.0)


def test_extract_wavelength_manufactured_profile():
    L = 2.0
    s = np.linspace(0, L, 2001)
    u = np.sin(2 * np.pi * (L - s) / 0.4)
    d = (L - s)[::-1]
    k = extract_wavelength_from_profile(d, u[::-1], method="half-wave")
    assert k == pytest.approx(15.70796, rel=1e-5)


def test_extract_wavelength_front_method():
    d = np.linspace(0, 3, 3001)
    u = np.where(d < 1.25, np.sin(2 * np.pi * d / 1.25), 0.0)
    # the flank fit is a secant of a curved lobe, worth a few parts per thousand
    assert extract_wavelength_from_profile(d, u, "front") == pytest.approx(2 * np.pi / 1.25, rel=3e-3)
    with pytest.raises(ExtractionError, match="far end"):
        extract_wavelength_from_profile(d, np.sin(d), "front")
    with pytest.raises(ExtractionError):
        extract_wavelength_from_profile(d, np.zeros_like(d), "front")
    with pytest.raises(ValueError):
        extract_wavelength_from_profile(d, u, "peak")


def test_extract_wavelength_needs_two_crossings():
    d = np.linspace(0, 1, 101)
    with pytest.raises(ExtractionError, match="zero crossing"):
        extract_wavelength_from_profile(d, np.sin(d), "half-wave")


def test_extract_frequency_manufactured_trace():
    t = np.arange(0, 3.0, 1e-3)
    assert extract_frequency_from_trace(t, np.cos(3 * t)) == pytest.approx(3.0, abs=1e-3)
    with pytest.raises(ExtractionError):
        extract_frequency_from_trace(t[:100], np.cos(3 * t[:100]))


def test_default_length_covers_three_group_lengths():
    ex = TipSinusoid(0.1, math.pi)
    assert default_length(ex) > 3 * 2.0 * 1.0
    assert default_length(InitialField(0.1, math.pi)) == pytest.approx(4.0)


# ------------------------------------------------------------ simulations


def test_linear_tip_wave():
    _, k = run_tip_case(1e-6, math.pi)
    assert k == pytest.approx(math.pi, rel=0.01)


def test_linear_initial_field_oscillates_at_bar_frequency():
    L = 4.0
    k = 2 * np.pi / L * 2
    rec, w = run_initial_case(1e-6, k, L=L)
    assert w == pytest.approx(k, rel=0.005)
    _, w = run_initial_case(1e-6, math.pi)
    assert w == pytest.approx(math.pi, rel=0.01)


def test_initial_field_conserves_energy():
    rec, _ = run_initial_case(0.1, math.pi)
    E = rec.total_energy
    assert np.max(np.abs(E - E[0])) / E[0] < 1e-3


def test_finite_amplitude_tip_wave_matches_inversion():
    _, k = run_tip_case(0.1, math.pi)
    assert k == pytest.approx(2.628, rel=0.03)


def test_mesh_convergence():
    _, k60 = run_tip_case(0.1, math.pi, n_elem=60)
    _, k120 = run_tip_case(0.1, math.pi, n_elem=120)
    assert abs(k120 - k60) / k60 < 0.005


def test_half_wave_method_runs_on_linear_case():
    _, k = run_tip_case(1e-6, math.pi, method="half-wave")
    assert k == pytest.approx(math.pi, rel=0.01)


def test_linear_element_option():
    _, k = run_tip_case(1e-6, math.pi, element="linear", n_elem=120)
    assert k == pytest.approx(math.pi, rel=0.02)


def _near_tip_fit(B):
    rec, k = run_tip_case(B, math.pi)
    L = rec.nodes[-1]
    d = (L - rec.nodes)[::-1]
    u = rec.profile_at(2.0)[::-1]
    m = d <= math.pi / k
    f = lambda x, a, kk, ph: a * np.sin(kk * x + ph)
    p, _ = curve_fit(f, d[m], u[m], p0=[-B, k, 0.0])
    return 1 - np.sum((u[m] - f(d[m], *p)) ** 2) / np.sum((u[m] - u[m].mean()) ** 2)


def test_near_tip_waveform_is_harmonic_at_moderate_amplitude():
    assert _near_tip_fit(0.05) > 0.98


@pytest.mark.xfail(
    strict=True,
    reason="the compressive half-wave next to the tip steepens at B = 0.1; "
    "tangent wave speed drops under compression in this rod model",
)
def test_near_tip_waveform_is_harmonic_at_large_amplitude():
    assert _near_tip_fit(0.1) > 0.95


@pytest.mark.xfail(
    strict=True,
    reason="a released standing field oscillates near the linear frequency; "
    "the closed form describes a travelling wave with the strain amplitude pinned at the phase origin",
)
def test_initial_field_frequency_matches_closed_form():
    _, w = run_initial_case(0.1, math.pi)
    assert w == pytest.approx(rod_omega(math.pi, 0.1), rel=0.03)


def test_extract_wavelength_requires_tip_record():
    rec, _ = run_initial_case(1e-3, math.pi, stride=1e-2)
    with pytest.raises(ExtractionError):
        extract_wavelength(rec)
