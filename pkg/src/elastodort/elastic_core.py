"""Elastic medium, Green's tensors, tractions, plane and Herglotz waves.

Conventions used throughout the package:

* ``perp(v)`` rotates a vector counterclockwise by pi/2, ``(-v2, v1)``.
* A Jacobian ``J`` of a displacement ``u`` has ``J[i, k] = d u_i / d x_k``.
* Traction on a surface with unit normal ``nu`` is
  ``lambda * tr(J) * nu + mu * (J + J^T) nu``.
* The mass density is one.
"""
from dataclasses import dataclass, field

from math import gamma as gamma_fn

import numpy as np
from scipy import special

__all__ = [
    "ElasticMedium",
    "IncidentPlaneWave",
    "HerglotzKernel",
    "DisplacementField",
    "make_medium",
    "perp",
    "direction_grid",
    "unit_vectors",
    "fundamental_solution",
    "static_fundamental_solution",
    "isotropic_profiles",
    "isotropic_matrix",
    "isotropic_jacobian",
    "traction",
    "traction_batch",
    "plane_wave_field",
    "herglotz_field",
    "eh_kernels",
]


@dataclass(frozen=True)
class ElasticMedium:
    """Homogeneous isotropic medium with unit density."""

    lam: float
    mu: float
    omega: float

    @property
    def kappa_p(self):
        return self.omega / np.sqrt(self.lam + 2.0 * self.mu)

    @property
    def kappa_s(self):
        return self.omega / np.sqrt(self.mu)

    @property
    def wavenumbers(self):
        return np.array([self.kappa_p, self.kappa_s])

    @property
    def channel_weights(self):
        """omega / kappa factors of the p and s channels in the L2 inner product."""
        return self.omega / self.wavenumbers


def make_medium(lam, mu, omega):
    """Validate Lame constants and frequency and return an :class:`ElasticMedium`."""
    lam, mu, omega = float(lam), float(mu), float(omega)
    if not all(np.isfinite([lam, mu, omega])):
        raise ValueError("medium parameters must be finite")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if lam + mu <= 0:
        raise ValueError(f"lambda + mu must be positive, got {lam + mu}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return ElasticMedium(lam, mu, omega)


def perp(v):
    """Counterclockwise rotation by pi/2 along the last axis."""
    v = np.asarray(v)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def unit_vectors(angles):
    angles = np.asarray(angles, dtype=float)
    return np.stack([np.cos(angles), np.sin(angles)], axis=-1)


def direction_grid(n):
    """Uniform angles ``2 pi j / n`` with equal trapezoid weights."""
    n = int(n)
    if n < 1:
        raise ValueError("direction grid needs at least one point")
    angles = 2.0 * np.pi * np.arange(n) / n
    return angles, np.full(n, 2.0 * np.pi / n)


@dataclass(frozen=True)
class IncidentPlaneWave:
    """Plane wave ``amplitude * d e^{i kp d.x}`` or ``amplitude * perp(d) e^{i ks d.x}``."""

    direction: tuple
    mode: str = "p"
    amplitude: complex = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (2,) or abs(np.linalg.norm(d) - 1.0) > 1e-14:
            raise ValueError("direction must be a unit 2-vector")
        if self.mode not in ("p", "s"):
            raise ValueError("mode must be 'p' (compressional) or 's' (shear)")


@dataclass(frozen=True)
class HerglotzKernel:
    """Kernel pair (f_p, f_s) sampled on a direction grid."""

    angles: np.ndarray
    fp: np.ndarray
    fs: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        fp = np.asarray(self.fp, dtype=complex)
        fs = np.asarray(self.fs, dtype=complex)
        if fp.shape != angles.shape or fs.shape != angles.shape:
            raise ValueError("kernel values must match the direction grid")
        if angles.size == 0:
            raise ValueError("empty direction grid")
        weights = self.weights
        if weights is None:
            weights = np.full(angles.shape, 2.0 * np.pi / angles.size)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "fp", fp)
        object.__setattr__(self, "fs", fs)
        object.__setattr__(self, "weights", np.asarray(weights, dtype=float))

    @classmethod
    def from_vector(cls, vec, angles, weights=None):
        vec = np.asarray(vec)
        n = len(angles)
        return cls(angles, vec[:n], vec[n:], weights)

    @property
    def directions(self):
        return unit_vectors(self.angles)

    def as_vector(self):
        return np.concatenate([self.fp, self.fs])

    def inner(self, other, medium):
        """Weighted L2 inner product with channel factors omega/kappa."""
        cp, cs = medium.channel_weights
        w = self.weights
        return cp * np.sum(w * self.fp * np.conj(other.fp)) + cs * np.sum(
            w * self.fs * np.conj(other.fs)
        )

    def norm(self, medium):
        return float(np.sqrt(abs(self.inner(self, medium))))


@dataclass(frozen=True)
class DisplacementField:
    point: np.ndarray
    value: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))


# ---------------------------------------------------------------------------
# isotropic tensor kernels  Phi = phi1(r) I + phi2(r) rhat rhat^T


def _hankel_chain(kappa, r):
    """Gamma = (i/4) H0(kappa r) and its first three radial derivatives."""
    z = kappa * r
    h0 = special.hankel1(0, z)
    h1 = special.hankel1(1, z)
    h2 = special.hankel1(2, z)
    d1 = 0.5 * (h0 - h2)  # H1'
    d2 = -d1 / z - (1.0 - 1.0 / z**2) * h1  # H1'' from the ODE
    c = 0.25j
    return c * h0, -c * kappa * h1, -c * kappa**2 * d1, -c * kappa**3 * d2


SERIES_THRESHOLD = 1.0
_SERIES_TERMS = 16


class _LogSeries:
    """Radial function sum_p r^p (alpha_p + beta_p ln r) with exact term algebra."""

    def __init__(self, terms=None):
        self.terms = dict(terms or {})

    def __add__(self, other):
        out = dict(self.terms)
        for p, (a, b) in other.terms.items():
            a0, b0 = out.get(p, (0.0, 0.0))
            out[p] = (a0 + a, b0 + b)
        return _LogSeries(out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        return _LogSeries({p: (c * a, c * b) for p, (a, b) in self.terms.items()})

    def deriv(self):
        out = {}
        for p, (a, b) in self.terms.items():
            na, nb = p * a + b, p * b
            if na != 0 or nb != 0:
                out[p - 1] = (na, nb)
        return _LogSeries(out)

    def over_r(self):
        return _LogSeries({p - 1: ab for p, ab in self.terms.items()})

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        out = np.zeros(r.shape, complex)
        for p, (a, b) in sorted(self.terms.items(), reverse=True):
            out += r**p * (a + b * lr)
        return out


def _green_series(kappa, part):
    """Series of (i/4) H0(kappa r) (``part='full'``) or -J0(kappa r)/(4 pi) (``'bessel'``)."""
    q = kappa * kappa / 4.0
    terms = {}
    harmonic = 0.0
    for k in range(_SERIES_TERMS):
        if k > 0:
            harmonic += 1.0 / k
        c = (-q) ** k / gamma_fn(k + 1) ** 2
        if part == "bessel":
            terms[2 * k] = (-c / (4 * np.pi), 0.0)
        else:
            alpha = c * (0.25j - (np.log(kappa / 2) + np.euler_gamma) / (2 * np.pi))
            alpha += c * harmonic / (2 * np.pi)
            terms[2 * k] = (alpha, -c / (2 * np.pi))
    return _LogSeries(terms)


def _series_profiles(medium, part, subtract_static):
    gs = _green_series(medium.kappa_s, part)
    gp = _green_series(medium.kappa_p, part)
    g1 = (gs - gp).deriv()
    g2 = g1.deriv()
    g3 = g2.deriv()
    w2 = medium.omega**2
    phi1 = gs.scale(1 / medium.mu) + g1.over_r().scale(1 / w2)
    phi2 = (g2 - g1.over_r()).scale(1 / w2)
    dphi1 = gs.deriv().scale(1 / medium.mu) + (g2.over_r() - g1.over_r().over_r()).scale(1 / w2)
    dphi2 = (g3 - g2.over_r() + g1.over_r().over_r()).scale(1 / w2)
    if subtract_static:
        a, b = _kelvin_constants(medium)
        phi1 = phi1 + _LogSeries({0: (0.0, a)})
        phi2 = phi2 - _LogSeries({0: (b, 0.0)})
        dphi1 = dphi1 + _LogSeries({-1: (a, 0.0)})
    return phi1, phi2, dphi1, dphi2


def _kelvin_constants(medium):
    lam, mu = medium.lam, medium.mu
    a = (lam + 3 * mu) / (4 * np.pi * mu * (lam + 2 * mu))
    b = (lam + mu) / (4 * np.pi * mu * (lam + 2 * mu))
    return a, b


def _direct_profiles(medium, r, part):
    if part == "full":
        s0, s1, s2, s3 = _hankel_chain(medium.kappa_s, r)
        p0, p1, p2, p3 = _hankel_chain(medium.kappa_p, r)
    else:
        s0, s1, s2, s3 = _bessel_chain(medium.kappa_s, r)
        p0, p1, p2, p3 = _bessel_chain(medium.kappa_p, r)
    g1, g2, g3 = s1 - p1, s2 - p2, s3 - p3
    w2 = medium.omega**2
    phi1 = s0 / medium.mu + g1 / (r * w2)
    phi2 = (g2 - g1 / r) / w2
    dphi1 = s1 / medium.mu + (g2 / r - g1 / r**2) / w2
    dphi2 = (g3 - g2 / r + g1 / r**2) / w2
    return phi1, phi2, dphi1, dphi2


def isotropic_profiles(medium, r, kind="dynamic"):
    """Radial profiles ``(phi1, phi2, dphi1, dphi2)`` of a Green's tensor.

    The tensor is ``phi1(r) I + phi2(r) rhat rhat^T`` and the last two
    entries are radial derivatives.  ``kind`` is one of

    ``"dynamic"``  the time-harmonic tensor,
    ``"static"``   the Kelvin tensor,
    ``"difference"`` dynamic minus Kelvin (bounded at r = 0),
    ``"bessel"``   coefficient of ``ln r^2`` in the dynamic tensor.

    Small ``kappa_s r`` uses exact log-power series so that the cancellation
    between the compressional and shear parts costs no accuracy.
    """
    r = np.asarray(r, dtype=float)
    if kind == "static":
        a, b = _kelvin_constants(medium)
        return -a * np.log(r), np.full(r.shape, b), -a / r, np.zeros(r.shape)
    if kind not in ("dynamic", "difference", "bessel"):
        raise ValueError(f"unknown kernel kind {kind!r}")
    part = "bessel" if kind == "bessel" else "full"
    small = medium.kappa_s * r < SERIES_THRESHOLD
    out = [np.zeros(r.shape, complex) for _ in range(4)]
    if np.any(small):
        ser = _series_profiles(medium, part, kind == "difference")
        rs = r[small]
        for o, f in zip(out, ser):
            o[small] = f(rs)
    if np.any(~small):
        rl = r[~small]
        vals = _direct_profiles(medium, rl, part)
        if kind == "difference":
            stat = isotropic_profiles(medium, rl, "static")
            vals = [v - s for v, s in zip(vals, stat)]
        for o, v in zip(out, vals):
            o[~small] = v
    return tuple(out)


def _bessel_chain(kappa, r):
    """-J0(kappa r)/(4 pi) and its first three radial derivatives."""
    z = kappa * r
    j0, j1, j2 = special.jv(0, z), special.jv(1, z), special.jv(2, z)
    d1 = 0.5 * (j0 - j2)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = np.where(z > 0, -d1 / z - (1.0 - 1.0 / np.where(z > 0, z, 1) ** 2) * j1, 0.0)
    c = -1.0 / (4 * np.pi)
    return c * j0, -c * kappa * j1, -c * kappa**2 * d1, -c * kappa**3 * d2


def isotropic_matrix(phi1, phi2, rhat):
    """``phi1 I + phi2 rhat rhat^T`` broadcast over leading axes."""
    eye = np.eye(2)
    return phi1[..., None, None] * eye + phi2[..., None, None] * (
        rhat[..., :, None] * rhat[..., None, :]
    )


def isotropic_jacobian(phi1, phi2, dphi1, dphi2, r, rhat):
    """Jacobians of the columns of an isotropic kernel.

    Returns ``G[..., i, k, j] = d/dx_k Phi_ij`` with ``rhat = (x - y)/r``.
    """
    eye = np.eye(2)
    e = rhat
    t1 = dphi1[..., None, None, None] * e[..., None, :, None] * eye[:, None, :]
    rrr = e[..., :, None, None] * e[..., None, :, None] * e[..., None, None, :]
    t2 = dphi2[..., None, None, None] * rrr
    q = (phi2 / r)[..., None, None, None]
    t3 = q * (
        eye[:, :, None] * e[..., None, None, :]
        + e[..., :, None, None] * eye[None, :, :]
        - 2.0 * rrr
    )
    return t1 + t2 + t3


def traction_batch(medium, normal, jac):
    """Traction of the columns of a batch of Jacobians ``jac[..., i, k, j]``.

    Returns ``t[..., i, j]``, the traction of column ``j`` with normal ``normal[..., :]``.
    """
    lam, mu = medium.lam, medium.mu
    nu = np.asarray(normal)
    div = np.einsum("...iij->...j", jac)
    sym = np.einsum("...ikj,...k->...ij", jac, nu) + np.einsum("...kij,...k->...ij", jac, nu)
    return lam * nu[..., :, None] * div[..., None, :] + mu * sym


def _pair(medium, x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0):
        raise ValueError("Green's tensor is singular at x = y")
    return d, r


def fundamental_solution(medium, x, y):
    """Time-harmonic Green's tensor Phi(x, y)."""
    d, r = _pair(medium, x, y)
    phi1, phi2, _, _ = isotropic_profiles(medium, r, "dynamic")
    return isotropic_matrix(phi1, phi2, d / r[..., None])


def static_fundamental_solution(medium, x, y):
    """Kelvin tensor Phi_0(x, y)."""
    d, r = _pair(medium, x, y)
    phi1, phi2, _, _ = isotropic_profiles(medium, r, "static")
    return isotropic_matrix(phi1, phi2, d / r[..., None])


def traction(medium, normal, jacobian):
    """Traction ``nu . sigma(u)`` from a single Jacobian ``J[i, k] = du_i/dx_k``."""
    nu = np.asarray(normal, dtype=float)
    jac = np.asarray(jacobian)
    return medium.lam * np.trace(jac) * nu + medium.mu * (jac + jac.T) @ nu


def plane_wave_field(medium, wave, x):
    """Displacement and analytic Jacobian of an incident plane wave."""
    d = np.asarray(wave.direction, dtype=float)
    x = np.asarray(x, dtype=float)
    if wave.mode == "p":
        k, pol = medium.kappa_p, d
    else:
        k, pol = medium.kappa_s, perp(d)
    phase = wave.amplitude * np.exp(1j * k * (x @ d))
    value = phase[..., None] * pol
    jac = (1j * k * phase)[..., None, None] * np.outer(pol, d)
    return value, jac


def herglotz_field(medium, kernel, x):
    """Herglotz wave of ``kernel`` at points ``x[..., 2]`` by grid quadrature."""
    x = np.asarray(x, dtype=float)
    alpha = kernel.directions
    kp, ks, om = medium.kappa_p, medium.kappa_s, medium.omega
    w = kernel.weights
    ep = np.exp(1j * kp * (x @ alpha.T)) * (w * kernel.fp)
    es = np.exp(1j * ks * (x @ alpha.T)) * (w * kernel.fs)
    out = np.sqrt(kp / om) * (ep @ alpha) + np.sqrt(ks / om) * (es @ perp(alpha))
    return np.exp(-0.25j * np.pi) * out


def eh_kernels(medium, x, y):
    """Closed forms of E(kp, x, y) and H(ks, x, y)."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = float(np.hypot(*d))
    q = np.eye(2) if r == 0 else np.array([[d[0], d[1]], [-d[1], d[0]]]) / r

    def e_block(kappa):
        z = kappa * r
        j0, j2 = special.jv(0, z), special.jv(2, z)
        return np.pi * q.T @ np.diag([j0 - j2, j0 + j2]) @ q

    e = e_block(medium.kappa_p)
    h = 2 * np.pi * special.jv(0, medium.kappa_s * r) * np.eye(2) - e_block(medium.kappa_s)
    return e.astype(complex), h.astype(complex)
