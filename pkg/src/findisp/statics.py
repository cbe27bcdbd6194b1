"""Static finite-deformation deflection of rods and clamped-free beams.

Rod: the axial force balance integrates once in s, leaving the cubic
``h**3 - h = 2*N(s)/EA`` for the stretch at every point.

Beams: the inertia-free fourth-order equations are discretized by
second-order central differences with two ghost nodes past the free end
and one mirrored behind the clamp, and solved by damped Newton iteration under
load continuation.  The Jacobian is assembled from pointwise partial
derivatives obtained by complex-step differentiation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix, diags, vstack
from scipy.sparse.linalg import spsolve

from .core import MaterialSpec, Model, SectionProps, circular_section
from .errors import ConvergenceError, DomainError

# smallest admissible 2N/EA: the minimum of h**3 - h on h > 0
_CUBIC_MIN = -2.0 / (3.0 * math.sqrt(3.0))
# halvings of a failed load increment before giving up
_MAX_BISECTIONS = 8


@dataclass(frozen=True)
class StaticCase:
    """One static problem.

    ``load`` is normalized: ``q_u*L/EA`` (rod, distributed), ``P/EA`` (rod,
    ``rod_load="tip"``) or ``q_v*L**3/(8*EJ)`` (beams).  Gravity enters as an
    extra distributed load ``-rho*A*g`` (beam) or ``rho*A*g`` (rod, along +s).
    """

    model: Model
    load: float
    L: float = 1.0
    material: MaterialSpec = field(default_factory=MaterialSpec)
    section: SectionProps = field(default_factory=lambda: circular_section(0.1))
    g: float = 0.0
    n_points: int = 200
    rod_load: str = "distributed"
    include_jf: bool = True
    # conventional beam: drop the EA term of C_vp
    drop_ea: bool = False
    # inextensional bending moment denominator: "printed" (1 - v')**2 or "corrected" (1 - v'**2)
    moment_denominator: str = "printed"
    continuation_steps: int = 20
    max_iter: int = 100
    # relative size of the final Newton update
    tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError("L must be finite and > 0")
        if not math.isfinite(self.load):
            raise ValueError("load must be finite")
        if self.n_points < 50:
            raise ValueError("n_points must be >= 50")
        if self.rod_load not in ("distributed", "tip"):
            raise ValueError("rod_load must be 'distributed' or 'tip'")
        if self.moment_denominator not in ("printed", "corrected"):
            raise ValueError("moment_denominator must be 'printed' or 'corrected'")


@dataclass
class StaticSolution:
    s_over_L: np.ndarray
    u_over_L: np.ndarray
    v_over_L: np.ndarray | None
    iterations: int = 0
    residual_norm: float = 0.0
    case: StaticCase | None = None
    # beams: (v', v'', v''') at the free end and the scaled free-end load residual
    end_derivatives: tuple[float, float, float] | None = None
    bc_residual: float = 0.0
    # rods: stretch h = 1 + u' on the grid
    stretch: np.ndarray | None = None

    @property
    def tip_u(self) -> float:
        return float(self.u_over_L[-1])

    @property
    def tip_v(self) -> float:
        return float(self.v_over_L[-1]) if self.v_over_L is not None else 0.0

    def write(self, csv_path: str | Path) -> Path:
        """CSV ``s_over_L,u_over_L,v_over_L`` plus a JSON convergence sidecar."""
        csv_path = Path(csv_path)
        v = self.v_over_L if self.v_over_L is not None else np.zeros_like(self.s_over_L)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s_over_L", "u_over_L", "v_over_L"])
            for row in zip(self.s_over_L, self.u_over_L, v):
                w.writerow([f"{x:.17g}" for x in row])
        sidecar = csv_path.with_suffix(".json")
        info = {
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "bc_residual": self.bc_residual,
            "end_derivatives": self.end_derivatives,
        }
        if self.case is not None:
            c = asdict(self.case)
            c["model"] = self.case.model.value
            info["case"] = c
        sidecar.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
        return sidecar


# --------------------------------------------------------------------- rod


def strain_from_force(c):
    """Axial strain ``e = h - 1`` on the branch of ``h**3 - h = c`` through h = 1.

    The trigonometric root is polished by Newton steps on
    ``e**3 + 3*e**2 + 2*e = c`` so that small strains keep full relative
    precision.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < _CUBIC_MIN * (1 + 1e-12)):
        raise DomainError(
            "compressive load beyond the limit point: N/EA must be >= "
            f"{_CUBIC_MIN / 2:.6f}"
        )
    x = np.clip(1.5 * math.sqrt(3.0) * c, -1.0, None)
    lo = x <= 1.0
    h = np.empty_like(x)
    h[lo] = 2.0 / math.sqrt(3.0) * np.cos(np.arccos(x[lo]) / 3.0)
    h[~lo] = 2.0 / math.sqrt(3.0) * np.cosh(np.arccosh(x[~lo]) / 3.0)
    e = h - 1.0
    for _ in range(2):
        g = e * (e * (e + 3.0) + 2.0) - c
        dg = e * (3.0 * e + 6.0) + 2.0
        # dg vanishes only at the limit point, where the trig root is already exact
        e = np.where(np.abs(dg) > 1e-8, e - g / np.where(dg == 0, 1.0, dg), e)
    return e if e.ndim else float(e)


def stretch_from_force(c):
    """Largest real root of ``h**3 - h = c`` (the branch through h = 1 at c = 0)."""
    return 1.0 + strain_from_force(c)


def solve_rod_static(case: StaticCase) -> StaticSolution:
    """Fixed-free rod under an end force or a uniform axial load."""
    if case.model is not Model.ROD:
        raise ValueError("solve_rod_static needs a rod case")
    EA = case.material.E * case.section.A
    L = case.L
    s = np.linspace(0.0, L, case.n_points)
    q = case.material.rho * case.section.A * case.g
    if case.rod_load == "tip":
        P = case.load * EA
    else:
        P = 0.0
        q += case.load * EA / L
    N = P + q * (L - s)
    e = strain_from_force(2.0 * N / EA)
    # trapezoidal integration of u' = h - 1
    u = np.concatenate([[0.0], np.cumsum(0.5 * (e[1:] + e[:-1]) * np.diff(s))])
    return StaticSolution(s / L, u / L, None, case=case, stretch=1.0 + e)


# ------------------------------------------------------------------- beams


def conventional_coefficients(v1, v2, E, A, J, Jf, drop_ea=False):
    """(C_vp, C_vpp) of the conventional beam."""
    r2 = 1.0 + v1 * v1
    ea = 0.0 if drop_ea else 0.5 * E * A * v1**3
    c_vp = ea + E * J * (2.0 - 3.0 * r2) * v1 * v2**2 / (2.0 * r2**3) - E * Jf * v1 * v2**4 / r2**5
    c_vpp = E * Jf * v2**3 / (2.0 * r2**4) - E * J * (1.0 - 3.0 * r2) * v2 / (2.0 * r2**2)
    return c_vp, c_vpp


def _conventional_cvpp_s(v1, v2, v3, E, J, Jf):
    r2 = 1.0 + v1 * v1
    d_v1 = -4.0 * E * Jf * v1 * v2**3 / r2**5 - E * J * v2 * v1 * (3.0 * r2 - 2.0) / r2**3
    d_v2 = 1.5 * E * Jf * v2**2 / r2**4 - E * J * (1.0 - 3.0 * r2) / (2.0 * r2**2)
    return d_v1 * v2 + d_v2 * v3


def conventional_static_residual(v1, v2, v3, v4, q, E, A, J, Jf, drop_ea=False):
    """Left side of the inertia-free conventional beam equation (zero at equilibrium)."""
    r2 = 1.0 + v1 * v1
    ea = 0.0 if drop_ea else 1.5 * E * A * v1**2 * v2
    return (
        q
        + ea
        + 2.0 * E * J * v1 * (1.0 + 3.0 * v1**2) * v2 * v3 / r2**3
        - E * J * (2.0 + 3.0 * v1**2) * v4 / (2.0 * r2**2)
        + E * J * (1.0 + 4.0 * v1**2 - 9.0 * v1**4) * v2**3 / (2.0 * r2**4)
        - 3.0 * E * Jf * v2**2 * v4 / (2.0 * r2**4)
        + 24.0 * E * Jf * v1 * v2**3 * v3 / r2**5
        + 3.0 * E * Jf * (1.0 - 9.0 * v1**2) * v2**5 / r2**6
        - 3.0 * E * Jf * v2 * v3**2 / r2**4
    )


def inextensional_static_residual(v1, v2, v3, v4, q, E, J, Jf):
    """Left side of the inertia-free inextensional beam equation.

    The axial-inertia integral term vanishes in statics without axial load.
    """
    w = 1.0 - v1 * v1
    return (
        q
        - E * J * v4 / w
        - 4.0 * E * J * v1 * v2 * v3 / w**2
        - E * J * (1.0 + 3.0 * v1**2) * v2**3 / w**3
        - 3.0 * E * Jf * v2**2 * v4 / (2.0 * w**2)
        - 12.0 * E * Jf * v1 * v2**3 * v3 / w**3
        - 3.0 * E * Jf * (1.0 + 5.0 * v1**2) * v2**5 / (2.0 * w**4)
        - 3.0 * E * Jf * v2 * v3**2 / w**2
    )


def section_loads(
    model,
    v1,
    v2,
    v3,
    material: MaterialSpec | None = None,
    section: SectionProps | None = None,
    include_jf: bool = True,
    drop_ea: bool = False,
    moment_denominator: str = "printed",
):
    """Static shear-like load B2 and bending moment B2bar at a section.

    Takes the slope ``v1``, curvature-like ``v2`` and ``v3`` derivatives of v.
    """
    model = Model.parse(model)
    m = material or MaterialSpec()
    sec = section or circular_section(0.1)
    E, A, J = m.E, sec.A, sec.J
    Jf = sec.J_f if include_jf else 0.0
    if model is Model.CONVENTIONAL:
        c_vp, c_vpp = conventional_coefficients(v1, v2, E, A, J, Jf, drop_ea)
        return c_vp - _conventional_cvpp_s(v1, v2, v3, E, J, Jf), c_vpp
    if model is Model.INEXTENSIONAL:
        if np.any(np.abs(np.real(v1)) >= 1.0):
            raise DomainError("inextensional slope limit exceeded: |v'| >= 1")
        w = 1.0 - v1 * v1
        b2 = (
            -E * J * v1 * v2**2 / w**2
            - E * J * v3 / w
            - 3.0 * E * Jf * v2**2 * v3 / (2.0 * w)
            - 3.0 * E * Jf * v1 * v2**4 / (2.0 * w**3)
        )
        den = (1.0 - v1) ** 2 if moment_denominator == "printed" else w
        b2bar = E * J * v2 + E * Jf * v2**3 / (2.0 * den)
        return b2, b2bar
    raise ValueError("section loads are defined for beam models only")


def _difference_operators(n: int, ds: float):
    """Central-difference rows for grid nodes 1..n acting on v[-1..n+2].

    Returns (D1, D2, D3, D4), each of shape (n, n+4).
    """
    stencils = (
        ({-1: -0.5, 1: 0.5}, ds),
        ({-1: 1.0, 0: -2.0, 1: 1.0}, ds**2),
        ({-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}, ds**3),
        ({-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0}, ds**4),
    )
    ops = []
    for st, scale in stencils:
        D = np.zeros((n, n + 4))
        for node in range(1, n + 1):
            for off, c in st.items():
                D[node - 1, node + off + 1] = c / scale
        ops.append(D)
    return ops


def _extension_matrix(n: int) -> np.ndarray:
    """Map unknowns v[1..n+2] to v[-1..n+2] under the clamp (v0 = 0, v[-1] = v[1])."""
    P = np.zeros((n + 4, n + 2))
    P[0, 0] = 1.0
    for k in range(n + 2):
        P[k + 2, k] = 1.0
    return P


def _complex_partials(fun, args, h=1e-30):
    """Partial derivatives of an elementwise analytic function by complex step."""
    parts = []
    for k in range(len(args)):
        shifted = [a.astype(complex) for a in args]
        shifted[k] = shifted[k] + 1j * h
        parts.append(np.imag(fun(*shifted)) / h)
    return parts


def solve_beam_static(case: StaticCase) -> StaticSolution:
    """Clamped-free beam under uniform transverse load."""
    if case.model not in (Model.CONVENTIONAL, Model.INEXTENSIONAL):
        raise ValueError("solve_beam_static needs a beam case")
    m, sec = case.material, case.section
    E, A, J = m.E, sec.A, sec.J
    Jf = sec.J_f if case.include_jf else 0.0
    L = case.L
    n = case.n_points - 1  # last grid index; grid nodes 0..n
    ds = L / n
    D = [Dk @ _extension_matrix(n) for Dk in _difference_operators(n, ds)]
    # rows for the free-end node only
    end = [Dk[-1:] for Dk in D]
    q_target = 8.0 * E * J * case.load / L**3
    q_grav = -m.rho * A * case.g

    inext = case.model is Model.INEXTENSIONAL

    def ode(v1, v2, v3, v4, q):
        if inext:
            return inextensional_static_residual(v1, v2, v3, v4, q, E, J, Jf)
        return conventional_static_residual(v1, v2, v3, v4, q, E, A, J, Jf, case.drop_ea)

    def loads(v1, v2, v3):
        return section_loads(
            case.model, v1, v2, v3, m, sec, case.include_jf, case.drop_ea, case.moment_denominator
        )

    scale_ode = L**3 / (E * J)
    scale_b2 = L**2 / (E * J)
    scale_b2bar = L / (E * J)

    def system(x, q):
        d = [Dk @ x for Dk in D]
        if inext and np.any(np.abs(d[0]) >= 1.0):
            raise DomainError("inextensional slope limit exceeded: |v'| reached 1")
        F_ode = ode(*d, q) * scale_ode
        e = [Ek @ x for Ek in end[:3]]
        b2, b2bar = loads(*e)
        F = np.concatenate([F_ode, np.atleast_1d(b2bar) * scale_b2bar, np.atleast_1d(b2) * scale_b2])
        return F, d, e

    def jacobian(x, q, d, e):
        pd = _complex_partials(lambda a, b, c, dd: ode(a, b, c, dd, q), d)
        J_ode = sum(diags(p * scale_ode) @ csr_matrix(Dk) for p, Dk in zip(pd, D))
        pb = _complex_partials(lambda a, b, c: loads(a, b, c)[0], e)
        pbar = _complex_partials(lambda a, b, c: loads(a, b, c)[1], e)
        row_b2 = sum(p[0] * Ek for p, Ek in zip(pb, end[:3])) * scale_b2
        row_bar = sum(p[0] * Ek for p, Ek in zip(pbar, end[:3])) * scale_b2bar
        return vstack([J_ode, csr_matrix(row_bar), csr_matrix(row_b2)], format="csr")

    def newton(x, q):
        """Return (x, iterations, residual norm); raise on failure."""
        F, d, e = system(x, q)
        res_norm = np.max(np.abs(F))
        for it in range(1, case.max_iter + 1):
            Jm = jacobian(x, q, d, e)
            # row equilibration: stencil rows scale like ds**-4, boundary rows do not
            r = 1.0 / abs(Jm).max(axis=1).toarray().ravel()
            dx = spsolve(diags(r) @ Jm, -r * F)
            step_rel = np.max(np.abs(dx)) / max(np.max(np.abs(x)), 1e-300)
            lam = 1.0
            # tiny updates are taken whole: the residual there is roundoff
            while step_rel > 1e-7:
                try:
                    F_new, d_new, e_new = system(x + lam * dx, q)
                    new_norm = np.max(np.abs(F_new))
                except DomainError:
                    new_norm = np.inf
                # near convergence the residual sits at roundoff and need not drop
                if new_norm <= max(res_norm, 1e-6) or lam < 1e-4:
                    break
                lam *= 0.5
            if step_rel <= 1e-7:
                F_new, d_new, e_new = system(x + dx, q)
                new_norm = np.max(np.abs(F_new))
            if not np.isfinite(new_norm):
                raise DomainError("inextensional slope limit exceeded during Newton iteration")
            x = x + lam * dx
            prev_norm = res_norm
            F, d, e, res_norm = F_new, d_new, e_new, new_norm
            # the 1/ds**4 stencil puts a roundoff floor under the residual, so
            # a stagnating residual with a tiny step also counts as converged
            if lam == 1.0 and (
                step_rel <= case.tol or (step_rel <= 1e-7 and res_norm >= 0.5 * prev_norm)
            ):
                return x, it, res_norm
        raise ConvergenceError(
            f"Newton did not converge in {case.max_iter} iterations (residual {res_norm:.3e})"
        )

    # load continuation in equal increments; a failed increment is bisected
    x = np.zeros(n + 2)
    q_total = q_grav + q_target
    total_iter = 0
    res_norm = 0.0
    done = 0.0
    inc = 1.0 / max(1, case.continuation_steps)
    bisections = 0
    while done < 1.0:
        target = min(1.0, done + inc)
        try:
            x, it, res_norm = newton(x, q_total * target)
        except (ConvergenceError, DomainError) as exc:
            if bisections >= _MAX_BISECTIONS:
                raise type(exc)(f"{exc} at load fraction {target:.4g}") from None
            bisections += 1
            inc *= 0.5
            continue
        total_iter += it
        done = target

    v = np.concatenate([[0.0], x[:n]])
    s = np.linspace(0.0, L, n + 1)
    slope = np.concatenate([[0.0], (D[0] @ x)])
    if inext:
        du = np.sqrt(1.0 - slope**2) - 1.0
        u = np.concatenate([[0.0], np.cumsum(0.5 * (du[1:] + du[:-1]) * ds)])
    else:
        u = np.zeros_like(s)
    end_state = tuple(float((Ek @ x)[0]) for Ek in end[:3])
    b2, b2bar = loads(*end_state)
    bc = max(abs(b2) * scale_b2, abs(b2bar) * scale_b2bar)
    return StaticSolution(
        s / L, u / L, v / L, total_iter, float(res_norm), case, end_state, float(bc)
    )


def solve_static(case: StaticCase) -> StaticSolution:
    if case.model is Model.ROD:
        return solve_rod_static(case)
    return solve_beam_static(case)
