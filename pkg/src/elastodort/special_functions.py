"""Integer-order Bessel and Hankel functions with first and second derivatives.

Values come from :mod:`scipy.special`; derivatives use the three-term
recurrence and the Bessel ODE, so the three returned numbers are mutually
consistent for the scattering code that consumes them.
"""
from dataclasses import dataclass
from math import gamma, pi

import numpy as np
from scipy import special

__all__ = [
    "BesselEval",
    "bessel_j",
    "hankel1",
    "small_z_series",
    "ode_second_derivative",
    "jn_derivatives",
    "h1_derivatives",
]


@dataclass(frozen=True)
class BesselEval:
    """A cylinder function value with its first two derivatives."""

    order: int
    argument: float
    value: complex
    first_derivative: complex
    second_derivative: complex


def _check_order(n):
    if isinstance(n, (bool, np.bool_)) or int(n) != n:
        raise ValueError(f"order must be an integer, got {n!r}")
    return int(n)


def _check_argument(z, allow_zero):
    z = float(z)
    if not np.isfinite(z):
        raise ValueError(f"argument must be finite, got {z!r}")
    if z < 0 or (z == 0 and not allow_zero):
        raise ValueError(f"argument out of domain: {z!r}")
    return z


def ode_second_derivative(n, z, value, first):
    """C'' from the Bessel equation z^2 C'' + z C' + (z^2 - n^2) C = 0."""
    return -first / z - (1.0 - (n * n) / (z * z)) * value


def bessel_j(n, z):
    """J_n(z) with derivatives for integer ``n`` and real ``z >= 0``."""
    n = _check_order(n)
    z = _check_argument(z, allow_zero=True)
    value = special.jv(n, z)
    first = 0.5 * (special.jv(n - 1, z) - special.jv(n + 1, z))
    if z == 0.0:
        # J_n'' at the origin from the series: nonzero only for |n| in {0, 2}
        second = {0: -0.5, 2: 0.25, -2: 0.25}.get(n, 0.0)
    else:
        second = ode_second_derivative(n, z, value, first)
    return BesselEval(n, z, complex(value), complex(first), complex(second))


def hankel1(n, z):
    """H^(1)_n(z) with derivatives; ``z`` must be strictly positive."""
    n = _check_order(n)
    z = _check_argument(z, allow_zero=False)
    value = special.hankel1(n, z)
    first = 0.5 * (special.hankel1(n - 1, z) - special.hankel1(n + 1, z))
    second = ode_second_derivative(n, z, value, first)
    return BesselEval(n, z, complex(value), complex(first), complex(second))


def small_z_series(n, z, kind):
    """Two-term small-argument forms of J_n and H^(1)_n.

    J_n(z)  ~ (z^n - z^(n+2)/(4n+4)) / (2^n n!)
    H_n(z)  ~ -i 2^n Gamma(n)/pi (z^-n + z^-(n-2)/(4n-4))

    The Hankel form needs ``n >= 2``; for ``n = 0`` the logarithmic
    leading behaviour is returned instead.
    """
    n = _check_order(n)
    if n < 0:
        raise ValueError("small_z_series takes n >= 0; map negative orders by parity")
    kind = str(kind).upper()
    if kind == "J":
        return complex((z**n - z ** (n + 2) / (4 * n + 4)) / (2**n * gamma(n + 1)))
    if kind in ("H1", "H"):
        if z <= 0:
            raise ValueError("Hankel series needs z > 0")
        if n == 0:
            return complex(1.0, 2.0 / pi * (np.log(z / 2) + np.euler_gamma))
        if n == 1:
            return complex(0.0, -2.0 / (pi * z))
        return -1j * 2**n * gamma(n) / pi * (z ** (-n) + z ** (-(n - 2)) / (4 * n - 4))
    raise ValueError(f"unknown kind {kind!r}, expected 'J' or 'H1'")


def jn_derivatives(n, z):
    """Vectorized (J_n, J_n', J_n'') for integer ``n`` and positive array ``z``."""
    z = np.asarray(z, dtype=float)
    value = special.jv(n, z)
    first = 0.5 * (special.jv(n - 1, z) - special.jv(n + 1, z))
    return value, first, ode_second_derivative(n, z, value, first)


def h1_derivatives(n, z):
    """Vectorized (H_n, H_n', H_n'') for integer ``n`` and positive array ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("Hankel functions need strictly positive arguments")
    value = special.hankel1(n, z)
    first = 0.5 * (special.hankel1(n - 1, z) - special.hankel1(n + 1, z))
    return value, first, ode_second_derivative(n, z, value, first)
