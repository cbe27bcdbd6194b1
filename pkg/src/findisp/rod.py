"""Closed-form finite-strain dispersion for longitudinal waves in a rod.

With strain amplitude ``B*|kappa|`` imposed at the wave-phase origin the
rod relation is explicit:

    omega**2 = c0**2 * kappa**2 * (2 + 3*B*|kappa| + (B*kappa)**2) / 2

Functions accept floats or numpy arrays and broadcast.
"""

from __future__ import annotations

import numpy as np

from .roots import brentq


def _finite(**arrays):
    out = []
    for name, x in arrays.items():
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{name} must be finite")
        out.append(x)
    return out


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_c0_B(c0, B):
    if np.any(c0 <= 0):
        raise ValueError("c0 must be > 0")
    if np.any(B < 0):
        raise ValueError("amplitude B must be >= 0")


def rod_omega(kappa, B, c0=1.0):
    """Amplitude-dependent angular frequency; even in ``kappa``."""
    kappa, B, c0 = _finite(kappa=kappa, B=B, c0=c0)
    _check_c0_B(c0, B)
    k = np.abs(kappa)
    bk = B * k
    return _scalar(np.sqrt((2.0 + 3.0 * bk + bk * bk) / 2.0) * c0 * k)


def rod_omega_inf(kappa, c0=1.0):
    kappa, c0 = _finite(kappa=kappa, c0=c0)
    if np.any(c0 <= 0):
        raise ValueError("c0 must be > 0")
    return _scalar(c0 * np.abs(kappa))


def rod_group_velocity(kappa, B, c0=1.0):
    """Analytic d(omega)/d(kappa) on the ``kappa > 0`` branch."""
    kappa, B, c0 = _finite(kappa=kappa, B=B, c0=c0)
    _check_c0_B(c0, B)
    if np.any(kappa <= 0):
        raise ValueError("group velocity is defined for kappa > 0; map negative kappa by evenness")
    w = np.asarray(rod_omega(kappa, B, c0))
    num = 2.0 * kappa + 4.5 * B * kappa**2 + 2.0 * B**2 * kappa**3
    return _scalar(c0**2 * num / (2.0 * w))


def rod_strain_amplitude(kappa, omega, c0=1.0):
    """Positive root of the z=0 strain balance.

    Physical queries have ``omega >= c0*|kappa|``; below that the value is
    negative and carries no meaning, but it is returned unchanged.
    """
    kappa, omega, c0 = _finite(kappa=kappa, omega=omega, c0=c0)
    if np.any(kappa == 0):
        raise ValueError("kappa must be nonzero")
    if np.any(c0 <= 0):
        raise ValueError("c0 must be > 0")
    ratio = omega**2 / (c0**2 * kappa**2)
    return _scalar((-3.0 + np.sqrt(1.0 + 8.0 * ratio)) / 2.0)


def deviation_percent(omega_fin, omega_inf):
    """Relative shift of a finite-strain frequency above the linear one, in percent."""
    omega_fin, omega_inf = _finite(omega_fin=omega_fin, omega_inf=omega_inf)
    if np.any(omega_inf <= 0):
        raise ValueError("omega_inf must be > 0")
    return _scalar(100.0 * (omega_fin - omega_inf) / omega_inf)


def rod_kappa(omega: float, B: float, c0: float = 1.0) -> float:
    """Invert the rod relation: the positive wavenumber with ``rod_omega == omega``.

    ``rod_omega`` is strictly increasing on ``kappa > 0`` so the root is unique.
    """
    if not omega > 0:
        raise ValueError("omega must be > 0")
    k_lin = omega / c0
    if B == 0:
        return k_lin
    # rod_omega >= c0*kappa, so the root sits in (0, k_lin]
    return brentq(lambda k: rod_omega(k, B, c0) - omega, 0.0, k_lin, rtol=1e-14)
