"""Derivative-free scalar kernels shared by the polar and Mach modules."""
from __future__ import annotations

import math
import sys

from scipy.optimize import bisect as _scipy_bisect

from .errors import NumericalError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a, b, rtol=1e-12, max_iter=400):
    """Maximise a unimodal ``f`` on [a, b]; returns the bracket midpoint."""
    if not b > a:
        raise NumericalError(f"empty golden-section bracket [{a}, {b}]")
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b), 1.0):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def bisect_root(f, a, b, xtol=1e-14, what="root"):
    """Bisection on [a, b] after checking the sign change; exact endpoint zeros are returned as-is."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise NumericalError(f"no sign change bracketing {what} on [{a}, {b}]")
    return _scipy_bisect(f, a, b, xtol=xtol, rtol=4.0 * sys.float_info.epsilon, maxiter=400)
