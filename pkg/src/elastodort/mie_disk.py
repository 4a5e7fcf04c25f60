"""Exact multipole (Mie) solution for a traction-free circular cavity.

Fields are expanded as ``sum_n a_n grad u_n^kp + b_n perp-grad u_n^ks`` with
``u_n^k = J_n(k r) e^{i n theta}`` for the incoming part and Hankel functions
for the scattered part.  Each angular order decouples into a 2x2 system.
"""
from dataclasses import dataclass
from math import ceil, gamma, pi

import mpmath
import numpy as np
from scipy import special

from .elastic_core import perp, unit_vectors
from .special_functions import h1_derivatives, jn_derivatives

__all__ = [
    "DiskCavity",
    "ScatteringBlock",
    "ModalCoefficients",
    "ResonanceError",
    "truncation_order",
    "scattering_block",
    "herglotz_to_incoming",
    "plane_wave_incoming",
    "far_block",
    "block_eigenvalues",
    "far_block_eigenvalues",
    "small_radius_eigs",
    "modal_coefficients",
    "cylindrical_wave",
    "multipole_field",
    "disk_far_field",
    "disk_kernel_matrix",
]


class ResonanceError(ArithmeticError):
    """Raised when a modal system is numerically singular."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class DiskCavity:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def area(self):
        return pi * self.radius**2


@dataclass(frozen=True)
class ScatteringBlock:
    order: int
    matrix: np.ndarray


@dataclass(frozen=True)
class ModalCoefficients:
    """Incoming (a, b) and outgoing (alpha, beta) coefficients for n in [-N, N]."""

    truncation: int
    incoming: np.ndarray  # shape (2N+1, 2)
    outgoing: np.ndarray  # shape (2N+1, 2)

    @property
    def orders(self):
        return np.arange(-self.truncation, self.truncation + 1)

    def tail_ratio(self):
        mag = np.abs(self.outgoing).max(axis=1)
        top = mag.max()
        return 0.0 if top == 0 else float(max(mag[0], mag[-1]) / top)


CONDITION_LIMIT = 1e13


def truncation_order(medium, radius):
    return max(20, int(ceil(medium.kappa_s * radius)) + 15)


def _system(medium, radius, n, radial):
    lam, mu = medium.lam, medium.mu
    kp, ks = medium.kappa_p, medium.kappa_s
    cp, dcp, ddcp = radial(n, kp * radius)
    cs, dcs, ddcs = radial(n, ks * radius)
    zp, zs = kp * radius, ks * radius
    r2 = radius * radius
    return np.array(
        [
            [2 * mu * kp**2 * ddcp - lam * kp**2 * cp, -2j * mu * n * (zs * dcs - cs) / r2],
            [2j * mu * n * (zp * dcp - cp) / r2, 2 * mu * ks**2 * ddcs + mu * ks**2 * cs],
        ],
        dtype=complex,
    )


def _solve2(d, e):
    """-d^{-1} e by the adjugate formula with a conditioning check."""
    det = d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0]
    cond = np.linalg.cond(d)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT or det == 0:
        raise ResonanceError("modal traction system is singular", cond)
    adj = np.array([[d[1, 1], -d[0, 1]], [-d[1, 0], d[0, 0]]])
    return -(adj @ e) / det


def scattering_block(medium, radius, n):
    """Scattering matrix S_n = -D^{-1} E of order ``n``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = int(n)
    d = _system(medium, radius, n, h1_derivatives)
    e = _system(medium, radius, n, jn_derivatives)
    return ScatteringBlock(n, _solve2(d, e))


def _inc_factors(medium, n):
    n = np.asarray(n)
    base = -2 * pi * (1j ** ((n + 1) % 4)) * np.exp(-0.25j * pi) / np.sqrt(medium.omega)
    return base[..., None] / np.sqrt(medium.wavenumbers)


def _scat_factors(medium, n):
    n = np.asarray(n)
    base = ((-1j) ** (n % 4)) * np.exp(0.25j * pi)
    return base[..., None] * np.sqrt(2 * medium.wavenumbers / pi)


def herglotz_to_incoming(medium, fa, fb, orders):
    """Incoming coefficients of the Herglotz wave with Fourier coefficients ``(fa, fb)``."""
    fac = _inc_factors(medium, orders)
    return fac[..., 0] * np.asarray(fa), fac[..., 1] * np.asarray(fb)


def plane_wave_incoming(medium, wave, orders, center=(0.0, 0.0)):
    """Incoming coefficients of a unit plane wave about ``center``."""
    d = np.asarray(wave.direction, dtype=float)
    phi = np.arctan2(d[1], d[0])
    orders = np.asarray(orders)
    k = medium.kappa_p if wave.mode == "p" else medium.kappa_s
    shift = wave.amplitude * np.exp(1j * k * d @ np.asarray(center, dtype=float))
    coef = shift * (1j ** ((orders - 1) % 4)) * np.exp(-1j * orders * phi) / k
    zero = np.zeros_like(coef)
    return (coef, zero) if wave.mode == "p" else (zero, coef)


def far_block(medium, radius, n):
    """Far-field block ``F_n = D_scat S_n D_inc`` acting on Fourier coefficients of f."""
    s = scattering_block(medium, radius, n).matrix
    return _scat_factors(medium, n)[:, None] * s * _inc_factors(medium, n)[None, :]


def block_eigenvalues(block):
    """Eigenvalues of a 2x2 matrix ordered by decreasing modulus.

    The smaller one is recovered as det/lambda_1 which keeps its relative
    accuracy when the two moduli differ by many orders.
    """
    tr = block[0, 0] + block[1, 1]
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    disc = np.sqrt(tr * tr / 4 - det)
    l1 = tr / 2 + disc if abs(tr / 2 + disc) >= abs(tr / 2 - disc) else tr / 2 - disc
    l2 = det / l1 if l1 != 0 else 0.0
    return complex(l1), complex(l2)


def _mp_radial(n, z, kind):
    f = mpmath.besselj if kind == "J" else mpmath.hankel1
    c = f(n, z)
    dc = (f(n - 1, z) - f(n + 1, z)) / 2
    ddc = -dc / z - (1 - mpmath.mpf(n) ** 2 / z**2) * c
    return c, dc, ddc


def _mp_system(medium, radius, n, kind):
    lam, mu = mpmath.mpf(medium.lam), mpmath.mpf(medium.mu)
    om = mpmath.mpf(medium.omega)
    kp, ks = om / mpmath.sqrt(lam + 2 * mu), om / mpmath.sqrt(mu)
    r = mpmath.mpf(radius)
    cp, dcp, ddcp = _mp_radial(n, kp * r, kind)
    cs, dcs, ddcs = _mp_radial(n, ks * r, kind)
    j = mpmath.mpc(0, 1)
    return mpmath.matrix(
        [
            [2 * mu * kp**2 * ddcp - lam * kp**2 * cp, -2 * j * mu * n * (ks * r * dcs - cs) / r**2],
            [2 * j * mu * n * (kp * r * dcp - cp) / r**2, 2 * mu * ks**2 * ddcs + mu * ks**2 * cs],
        ]
    )


def far_block_eigenvalues(medium, radius, n, dps=60):
    """Eigenvalues of ``F_n`` evaluated with ``dps`` decimal digits.

    Double precision loses the smaller eigenvalue once it falls below about
    ``1e-16`` of the larger one; this path keeps both.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = int(n)
    with mpmath.workdps(dps):
        d = _mp_system(medium, radius, n, "H")
        e = _mp_system(medium, radius, n, "J")
        s = -(mpmath.inverse(d) * e)
        fi = [mpmath.mpc(complex(v)) for v in _inc_factors(medium, n)]
        fs = [mpmath.mpc(complex(v)) for v in _scat_factors(medium, n)]
        f = mpmath.matrix(2, 2)
        for a in range(2):
            for b in range(2):
                f[a, b] = fs[a] * s[a, b] * fi[b]
        tr = f[0, 0] + f[1, 1]
        det = f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]
        disc = mpmath.sqrt(tr**2 / 4 - det)
        l1 = tr / 2 + disc
        if abs(tr / 2 - disc) > abs(l1):
            l1 = tr / 2 - disc
        l2 = det / l1 if l1 != 0 else mpmath.mpc(0)
        return complex(l1), complex(l2)


def small_radius_eigs(medium, radius, n):
    """Leading-order eigenvalues of ``F_n`` for small radius, valid for ``|n| >= 2``."""
    n = abs(int(n))
    if n < 2:
        raise ValueError("closed-form small-radius eigenvalues need |n| >= 2")
    lam, mu, om = medium.lam, medium.mu, medium.omega
    kp, ks = medium.kappa_p, medium.kappa_s
    cn = (pi**2 * kp**n * ks**n) / (
        2 ** (2 * n + 1)
        * mu
        * (ks**2 * mu * n + kp**2 * (lam + mu - lam * n))
        * gamma(n - 1)
        * gamma(n + 2)
    )
    dn = -np.sqrt(8 * pi / om) * 1j
    l1 = (
        -8 * cn * dn * 1j * n * (n + 1) * (n - 1) * mu**2 * (kp**n + ks**n)
        / (pi * kp**n * ks**n)
        * radius ** (2 * n - 2)
    )
    l2 = 2 * cn * dn * 1j * mu**2 * n**2 * kp**n * ks**n / pi * radius ** (2 * n)
    return complex(l1), complex(l2)


def modal_coefficients(medium, radius, incoming_a, incoming_b, truncation=None):
    """Apply the scattering blocks to incoming coefficients over n in [-N, N]."""
    nmax = truncation_order(medium, radius) if truncation is None else int(truncation)
    orders = np.arange(-nmax, nmax + 1)
    inc = np.stack([np.asarray(incoming_a), np.asarray(incoming_b)], axis=1).astype(complex)
    out = np.empty_like(inc)
    for i, n in enumerate(orders):
        out[i] = scattering_block(medium, radius, n).matrix @ inc[i]
    return ModalCoefficients(nmax, inc, out)


def cylindrical_wave(kappa, n, x, kind):
    """Value, gradient and Hessian of ``Z_n(kappa r) e^{i n theta}``.

    Uses the ladder identities (d1 +- i d2) Z_m e^{i m t} = -+kappa Z_{m+-1} e^{i(m+-1)t}.
    """
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    th = np.arctan2(x[..., 1], x[..., 0])
    fn = special.jv if kind == "J" else special.hankel1

    def w(m):
        return fn(m, kappa * r) * np.exp(1j * m * th)

    wm2, wm1, w0, wp1, wp2 = (w(n + k) for k in (-2, -1, 0, 1, 2))
    grad = np.stack([kappa * (wm1 - wp1) / 2, -kappa * (wp1 + wm1) / (2j)], axis=-1)
    k2 = kappa * kappa
    hxx = k2 * (wp2 - 2 * w0 + wm2) / 4
    hyy = -k2 * (wp2 + 2 * w0 + wm2) / 4
    hxy = k2 * (wp2 - wm2) / 4j
    hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
    return w0, grad, hess


def multipole_field(medium, coeff_p, coeff_s, orders, x, kind):
    """Displacement and Jacobian of ``sum a_n grad u_n^kp + b_n perp-grad u_n^ks``."""
    x = np.asarray(x, dtype=float)
    val = np.zeros(x.shape, complex)
    jac = np.zeros(x.shape[:-1] + (2, 2), complex)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    for a, b, n in zip(coeff_p, coeff_s, orders):
        if a != 0:
            _, g, h = cylindrical_wave(medium.kappa_p, n, x, kind)
            val += a * g
            jac += a * h
        if b != 0:
            _, g, h = cylindrical_wave(medium.kappa_s, n, x, kind)
            val += b * perp(g)
            jac += b * np.einsum("ij,...jk->...ik", rot, h)
    return val, jac


def disk_far_field(medium, disk, wave, angles):
    """Far-field pattern (v_p, v_s) of a disk illuminated by a plane wave."""
    nmax = truncation_order(medium, disk.radius)
    orders = np.arange(-nmax, nmax + 1)
    a, b = plane_wave_incoming(medium, wave, orders, disk.center)
    coef = modal_coefficients(medium, disk.radius, a, b, nmax).outgoing
    scat = _scat_factors(medium, orders)
    modes = np.exp(1j * np.outer(angles, orders))
    vp = modes @ (scat[:, 0] * coef[:, 0])
    vs = modes @ (scat[:, 1] * coef[:, 1])
    xhat = unit_vectors(angles)
    c = np.asarray(disk.center)
    vp = vp * np.exp(-1j * medium.kappa_p * xhat @ c)
    vs = vs * np.exp(-1j * medium.kappa_s * xhat @ c)
    return vp, vs


def disk_kernel_matrix(medium, disk, angles_out, angles_in, weights_in, truncation=None):
    """Weighted far-field operator samples of one disk.

    Entry ``[(a, i), (b, j)]`` is ``w_j K_ab(xhat_i, alpha_j)`` with
    ``K(t, s) = (1/2pi) sum_n F_n e^{i n (t - s)}`` translated to the disk center.
    Channels are ordered ``[p; s]``.
    """
    nmax = truncation_order(medium, disk.radius) if truncation is None else truncation
    orders = np.arange(-nmax, nmax + 1)
    blocks = np.array([far_block(medium, disk.radius, n) for n in orders])
    eo = np.exp(1j * np.outer(angles_out, orders))
    ei = np.exp(-1j * np.outer(orders, angles_in)) * np.asarray(weights_in)[None, :]
    k = medium.wavenumbers
    c = np.asarray(disk.center, dtype=float)
    ph_out = [np.exp(-1j * kk * unit_vectors(angles_out) @ c) for kk in k]
    ph_in = [np.exp(1j * kk * unit_vectors(angles_in) @ c) for kk in k]
    n_out, n_in = len(angles_out), len(angles_in)
    mat = np.empty((2 * n_out, 2 * n_in), complex)
    for a in range(2):
        for b in range(2):
            blk = (eo * blocks[:, a, b][None, :]) @ ei / (2 * pi)
            blk *= ph_out[a][:, None] * ph_in[b][None, :]
            mat[a * n_out : (a + 1) * n_out, b * n_in : (b + 1) * n_in] = blk
    return mat
