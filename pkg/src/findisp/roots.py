"""Bracketed scalar root finding.

``brentq`` is the classic zeroin scheme: inverse quadratic interpolation or
secant steps, falling back to bisection whenever the interpolated step is
not making enough progress.  The bracket is always maintained.
"""

from __future__ import annotations

import math
import sys
from typing import Callable

from .errors import ConvergenceError

EPS = sys.float_info.epsilon


def brentq(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = 1e-12,
    xtol: float = 0.0,
    maxiter: int = 200,
) -> float:
    """Find a root of ``f`` in ``[a, b]``; ``f(a)`` and ``f(b)`` must differ in sign.

    Terminates when the bracket half-width drops below
    ``2*EPS*|b| + xtol/2 + rtol*|b|/2`` or an exact zero is hit.
    """
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise ConvergenceError("non-finite function value at bracket end", (a, b))
    if (fa > 0.0) == (fb > 0.0):
        raise ConvergenceError("root is not bracketed", (a, b))

    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb

        tol = 2.0 * EPS * abs(b) + 0.5 * xtol + 0.5 * rtol * abs(b)
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b

        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m

        a, fa = b, fb
        b = b + d if abs(d) > tol else b + math.copysign(tol, m)
        fb = f(b)
        if not math.isfinite(fb):
            raise ConvergenceError("non-finite function value inside bracket", (b, c))

    raise ConvergenceError(f"no convergence after {maxiter} iterations", (b, c))


def bracket_upward(
    f: Callable[[float], float],
    x0: float,
    factor: float = 1.5,
    max_expansions: int = 60,
) -> tuple[float, float]:
    """Scan ``x0, x0*factor, x0*factor**2, ...`` for the first sign change of ``f``.

    Returns the bracketing pair ``(lo, hi)``.  ``x0`` must be positive.
    """
    if not x0 > 0.0:
        raise ValueError(f"bracket start must be > 0, got {x0!r}")
    lo, flo = x0, f(x0)
    if flo == 0.0:
        return lo, lo
    hi = lo
    for _ in range(max_expansions):
        hi = lo * factor
        fhi = f(hi)
        if fhi == 0.0 or (fhi > 0.0) != (flo > 0.0):
            return lo, hi
        if not math.isfinite(fhi):
            break
        lo, flo = hi, fhi
    raise ConvergenceError(
        f"no sign change in [{x0:.6g}, {hi:.6g}] after {max_expansions} expansions",
        (x0, hi),
    )
