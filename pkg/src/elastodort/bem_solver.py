"""Nystrom boundary-integral solver for traction-free smooth cavities.

The scattered field is a single-layer potential ``v = int Phi(x, y) phi(y) ds_y``
with density ``phi = 2 (I - K')^{-1} T_nu u^i`` where
``K' phi(x) = 2 int T_nu(x) Phi(x, y) phi(y) ds_y``.

On a 2n-point periodic grid the kernel is split as

* a Cauchy term ``mu / (pi (lambda + 2 mu)) A0 cot((t - s)/2) / 2`` with
  ``A0 = [[0, 1], [-1, 0]]``, integrated with spectral weights,
* a smooth Kelvin remainder whose diagonal comes from the curvature,
* the dynamic correction ``K1 ln(4 sin^2((t - s)/2)) + K2`` integrated with
  Kress' logarithmic weights.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .elastic_core import (
    isotropic_jacobian,
    isotropic_profiles,
    perp,
    traction_batch,
    unit_vectors,
)

__all__ = [
    "SmoothBoundary",
    "BoundaryDensity",
    "PolarizationTensor",
    "InteriorEigenvalueError",
    "traction_operator",
    "static_traction_operator",
    "plane_wave_traction",
    "solve_density",
    "far_field",
    "plane_wave_far_fields",
    "coupled_plane_wave_far_fields",
    "polarization_tensor",
    "moment_tensor",
    "moment_map",
    "strain_tensor_l",
    "shear_tensor_h",
    "asymptotic_far_field",
]

A0 = np.array([[0.0, 1.0], [-1.0, 0.0]])
CONDITION_LIMIT = 1e12


class InteriorEigenvalueError(ArithmeticError):
    """The boundary system is numerically singular."""


@dataclass(frozen=True)
class SmoothBoundary:
    """Periodic parameterized curve sampled at ``n_points`` equispaced nodes.

    ``curve(t)`` returns ``(x, dx, ddx)`` with shapes ``(len(t), 2)``.
    The curve must run counterclockwise so that ``(x2', -x1')`` points outward.
    """

    curve: object
    n_points: int = 128
    label: str = "curve"
    nodes: np.ndarray = field(init=False, repr=False)
    t: np.ndarray = field(init=False, repr=False)
    d1: np.ndarray = field(init=False, repr=False)
    d2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n_points)
        if n < 4 or n % 2:
            raise ValueError("n_points must be an even integer >= 4")
        t = 2 * np.pi * np.arange(n) / n
        x, dx, ddx = (np.asarray(a, dtype=float) for a in self.curve(t))
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "d1", dx)
        object.__setattr__(self, "d2", ddx)
        if self.signed_area() <= 0:
            raise ValueError("boundary must be oriented counterclockwise")

    # construction helpers
    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0), n_points=128):
        c = np.asarray(center, dtype=float)

        def curve(t):
            e, ep = unit_vectors(t), perp(unit_vectors(t))
            return c + radius * e, radius * ep, -radius * e

        return cls(curve, n_points, "disk")

    @classmethod
    def radial(cls, cos_coeffs, sin_coeffs=(), scale=1.0, center=(0.0, 0.0), n_points=128, label="fourier"):
        """Star-shaped curve ``center + scale * r(t) (cos t, sin t)``.

        ``r(t) = a0 + sum_k a_k cos(k t) + b_k sin(k t)`` with ``cos_coeffs = [a0, a1, ...]``
        and ``sin_coeffs = [b1, b2, ...]``.
        """
        a = np.asarray(cos_coeffs, dtype=float)
        b = np.asarray(sin_coeffs, dtype=float)
        c = np.asarray(center, dtype=float)

        def curve(t):
            ka = np.arange(len(a))
            kb = np.arange(1, len(b) + 1)
            ca, sa = np.cos(np.outer(t, ka)), np.sin(np.outer(t, ka))
            cb, sb = np.cos(np.outer(t, kb)), np.sin(np.outer(t, kb))
            r = ca @ a + sb @ b
            dr = -(sa * ka) @ a + (cb * kb) @ b
            ddr = -(ca * ka**2) @ a - (sb * kb**2) @ b
            if np.any(r <= 0):
                raise ValueError("radial function must stay positive")
            e, ep = unit_vectors(t), perp(unit_vectors(t))
            x = c + scale * r[:, None] * e
            dx = scale * (dr[:, None] * e + r[:, None] * ep)
            ddx = scale * ((ddr - r)[:, None] * e + 2 * dr[:, None] * ep)
            return x, dx, ddx

        return cls(curve, n_points, label)

    @classmethod
    def peanuthull(cls, scale=1.0, center=(0.0, 0.0), n_points=128):
        """``center + scale (2 + sin 2t)(cos t, sin t)``."""
        return cls.radial([2.0], [0.0, 1.0], scale, center, n_points, "peanuthull")

    def transformed(self, scale=1.0, rotation=0.0, shift=(0.0, 0.0), n_points=None):
        """Copy mapped by ``x -> shift + scale Q(rotation) x``."""
        q = np.array([[np.cos(rotation), -np.sin(rotation)], [np.sin(rotation), np.cos(rotation)]])
        s = np.asarray(shift, dtype=float)
        base = self.curve

        def curve(t):
            x, dx, ddx = base(t)
            return s + scale * x @ q.T, scale * dx @ q.T, scale * ddx @ q.T

        return SmoothBoundary(curve, n_points or self.n_points, self.label)

    # geometry
    @property
    def speed(self):
        return np.hypot(self.d1[:, 0], self.d1[:, 1])

    @property
    def tangents(self):
        return self.d1 / self.speed[:, None]

    @property
    def normals(self):
        return -perp(self.tangents)

    @property
    def curvature(self):
        cross = self.d1[:, 0] * self.d2[:, 1] - self.d1[:, 1] * self.d2[:, 0]
        return cross / self.speed**3

    @property
    def weights(self):
        """Arc-length trapezoid weights."""
        return 2 * np.pi / self.n_points * self.speed

    def signed_area(self):
        x, dx = self.nodes, self.d1
        return 0.5 * np.sum(x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]) * 2 * np.pi / self.n_points

    @property
    def area(self):
        return self.signed_area()

    @property
    def centroid(self):
        x, dx = self.nodes, self.d1
        h = 2 * np.pi / self.n_points
        # Green's theorem moments
        mx = np.sum(x[:, 0] ** 2 * dx[:, 1]) * h / 2
        my = -np.sum(x[:, 1] ** 2 * dx[:, 0]) * h / 2
        return np.array([mx, my]) / self.area


@dataclass(frozen=True)
class BoundaryDensity:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(v)):
            raise ValueError("density has non-finite entries")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PolarizationTensor:
    matrix: np.ndarray


# ---------------------------------------------------------------------------
# quadrature weights


def _circulant(first_col):
    n = len(first_col)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return first_col[idx]


def cauchy_weights(n_points):
    """Matrix approximating PV int cot((t_i - s)/2)/2 f(s) ds on the node grid."""
    freq = np.fft.fftfreq(n_points, 1.0 / n_points)
    sym = -1j * np.pi * np.sign(freq)
    sym[n_points // 2] = 0.0
    col = np.fft.ifft(sym)
    return _circulant(col)


def kress_log_weights(n_points):
    """Matrix approximating int ln(4 sin^2((t_i - s)/2)) f(s) ds."""
    n = n_points // 2
    s = np.pi * np.arange(n_points) / n
    m = np.arange(1, n)
    col = -2 * np.pi / n * (np.cos(np.outer(s, m)) / m).sum(axis=1) - np.pi / n**2 * np.cos(n * s)
    return _circulant(col)


# ---------------------------------------------------------------------------
# kernels


def _pairs(bd):
    d = bd.nodes[:, None, :] - bd.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    np.fill_diagonal(r, 1.0)
    return d, r, d / r[..., None]


def _kernel(medium, bd, kind, d, r, rhat):
    """2 |x'(s)| T_nu(x) Phi(x, y) over node pairs, shape (N, N, 2, 2)."""
    prof = isotropic_profiles(medium, r, kind)
    jac = isotropic_jacobian(*prof, r, rhat)
    nu = np.broadcast_to(bd.normals[:, None, :], jac.shape[:2] + (2,))
    t = traction_batch(medium, nu, jac)
    return 2 * bd.speed[None, :, None, None] * t


def _static_parts(medium, bd):
    """Cauchy coefficient and smooth Kelvin remainder with its diagonal."""
    lam, mu = medium.lam, medium.mu
    n = bd.n_points
    d, r, rhat = _pairs(bd)
    k0 = _kernel(medium, bd, "static", d, r, rhat).real
    coef = mu / (np.pi * (lam + 2 * mu))
    tau = bd.tangents
    ds = bd.t[:, None] - bd.t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        half_cot = 0.5 / np.tan(ds / 2)
        smooth = k0 - coef * half_cot[..., None, None] * A0
    # diagonal limits
    kc = bd.curvature
    q = np.einsum("ik,ik->i", bd.d1, bd.d2) / bd.speed**2
    ttT = tau[:, :, None] * tau[:, None, :]
    diag = (
        2 * bd.speed[:, None, None] / (2 * np.pi * (lam + 2 * mu))
        * (-mu * np.eye(2) * (kc / 2)[:, None, None] - 2 * (lam + mu) * ttT * (kc / 2)[:, None, None])
        + coef * (-q / 2)[:, None, None] * A0
    )
    idx = np.arange(n)
    smooth[idx, idx] = diag
    return coef, smooth


def _assemble(blocks):
    n = blocks.shape[0]
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)


def static_traction_operator(medium, bd):
    """Discrete Kelvin operator K~' on interleaved (node, component) unknowns."""
    coef, smooth = _static_parts(medium, bd)
    h = 2 * np.pi / bd.n_points
    blocks = coef * cauchy_weights(bd.n_points)[:, :, None, None] * A0 + h * smooth
    return _assemble(blocks)


def traction_operator(medium, bd):
    """Discrete time-harmonic operator K' on interleaved (node, component) unknowns."""
    n = bd.n_points
    h = 2 * np.pi / n
    d, r, rhat = _pairs(bd)
    coef, smooth = _static_parts(medium, bd)
    kd = _kernel(medium, bd, "difference", d, r, rhat)
    k1 = _kernel(medium, bd, "bessel", d, r, rhat)
    idx = np.arange(n)
    kd[idx, idx] = 0.0
    k1[idx, idx] = 0.0
    ds = bd.t[:, None] - bd.t[None, :]
    with np.errstate(divide="ignore"):
        logs = np.log(4 * np.sin(ds / 2) ** 2)
    logs[idx, idx] = 0.0
    k2 = kd - k1 * logs[..., None, None]
    blocks = (
        coef * cauchy_weights(n)[:, :, None, None] * A0
        + h * smooth
        + kress_log_weights(n)[:, :, None, None] * k1
        + h * k2
    )
    return _assemble(blocks)


# ---------------------------------------------------------------------------
# solves and far fields


def plane_wave_traction(medium, bd, angles, mode):
    """Tractions of unit plane waves at the nodes, shape (N, 2, n_waves)."""
    alpha = unit_vectors(angles)
    nu = bd.normals
    lam, mu = medium.lam, medium.mu
    if mode == "p":
        k = medium.kappa_p
        ph = np.exp(1j * k * bd.nodes @ alpha.T)
        an = nu @ alpha.T
        t = lam * nu[:, :, None] + 2 * mu * an[:, None, :] * alpha.T[None, :, :]
    else:
        k = medium.kappa_s
        ph = np.exp(1j * k * bd.nodes @ alpha.T)
        ap = perp(alpha)
        an, pn = nu @ alpha.T, nu @ ap.T
        t = mu * (an[:, None, :] * ap.T[None, :, :] + pn[:, None, :] * alpha.T[None, :, :])
    return 1j * k * ph[:, None, :] * t


def _factor(medium, bd):
    mat = np.eye(2 * bd.n_points) - traction_operator(medium, bd)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise InteriorEigenvalueError(f"boundary system is singular (condition {cond:.3e})")
    return linalg.lu_factor(mat)


def solve_density(medium, bd, traction_data):
    """Density solving ``(I - K') phi = 2 T_nu u^i`` for node tractions ``(N, 2[, m])``."""
    rhs = np.asarray(traction_data, dtype=complex)
    shape = rhs.shape
    lu = _factor(medium, bd)
    sol = linalg.lu_solve(lu, 2 * rhs.reshape(2 * bd.n_points, -1))
    return BoundaryDensity(sol.reshape(shape))


def _gamma(medium):
    return np.exp(0.25j * np.pi) / (np.sqrt(8 * np.pi) * medium.omega**2)


def far_field(medium, bd, density, angles):
    """Compressional and shear far-field patterns of a single-layer density."""
    phi = density.values if isinstance(density, BoundaryDensity) else np.asarray(density)
    xhat = unit_vectors(angles)
    w = bd.weights
    g = _gamma(medium)
    out = []
    for k, pol in ((medium.kappa_p, xhat), (medium.kappa_s, perp(xhat))):
        e = np.exp(-1j * k * xhat @ bd.nodes.T) * w  # (n_dir, N)
        proj = np.einsum("dk,nk...->dn...", pol, phi)
        out.append(g * k**1.5 * np.einsum("dn,dn...->d...", e, proj))
    return out[0], out[1]


def plane_wave_far_fields(medium, bd, angles_in, angles_out):
    """Far fields for unit p- and s-plane waves from each incident direction.

    Returns an array ``(2, n_out, 2, n_in)``: output channel, direction,
    incident mode, incident direction.
    """
    lu = _factor(medium, bd)
    n = bd.n_points
    out = np.empty((2, len(angles_out), 2, len(angles_in)), complex)
    for m, mode in enumerate(("p", "s")):
        rhs = plane_wave_traction(medium, bd, angles_in, mode)
        phi = linalg.lu_solve(lu, 2 * rhs.reshape(2 * n, -1)).reshape(n, 2, -1)
        vp, vs = far_field(medium, bd, phi, angles_out)
        out[0, :, m, :] = vp
        out[1, :, m, :] = vs
    return out


def _cross_block(medium, target, source):
    """Smooth interaction K' block from ``source`` nodes to ``target`` nodes."""
    d = target.nodes[:, None, :] - source.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    rhat = d / r[..., None]
    prof = isotropic_profiles(medium, r, "dynamic")
    jac = isotropic_jacobian(*prof, r, rhat)
    nu = np.broadcast_to(target.normals[:, None, :], jac.shape[:2] + (2,))
    t = traction_batch(medium, nu, jac)
    blocks = 2 * (2 * np.pi / source.n_points) * source.speed[None, :, None, None] * t
    return blocks.transpose(0, 2, 1, 3).reshape(2 * target.n_points, 2 * source.n_points)


def coupled_plane_wave_far_fields(medium, boundaries, angles_in, angles_out):
    """Far fields of several cavities with full multiple scattering.

    Same layout as ``plane_wave_far_fields``.  Used as the reference for
    the independent-scattering superposition.
    """
    sizes = [2 * b.n_points for b in boundaries]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    mat = np.eye(offs[-1], dtype=complex)
    for a, ba in enumerate(boundaries):
        for b, bb in enumerate(boundaries):
            sl = np.s_[offs[a] : offs[a + 1], offs[b] : offs[b + 1]]
            mat[sl] -= traction_operator(medium, ba) if a == b else _cross_block(medium, ba, bb)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise InteriorEigenvalueError(f"boundary system is singular (condition {cond:.3e})")
    lu = linalg.lu_factor(mat)
    out = np.zeros((2, len(angles_out), 2, len(angles_in)), complex)
    for m, mode in enumerate(("p", "s")):
        rhs = np.concatenate(
            [plane_wave_traction(medium, b, angles_in, mode).reshape(2 * b.n_points, -1) for b in boundaries]
        )
        phi = linalg.lu_solve(lu, 2 * rhs)
        for a, b in enumerate(boundaries):
            vp, vs = far_field(medium, b, phi[offs[a] : offs[a + 1]].reshape(b.n_points, 2, -1), angles_out)
            out[0, :, m, :] += vp
            out[1, :, m, :] += vs
    return out


# ---------------------------------------------------------------------------
# small-cavity asymptotics


def _static_system(medium, bd):
    mat = np.eye(2 * bd.n_points) - static_traction_operator(medium, bd).real
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise InteriorEigenvalueError(f"static boundary system is singular (condition {cond:.3e})")
    return linalg.lu_factor(mat)


def polarization_tensor(medium, bd):
    """``P = -int xi (x) w ds`` where ``(I - K~') w = nu`` with the Kelvin kernel."""
    w = linalg.lu_solve(_static_system(medium, bd), bd.normals.reshape(-1)).reshape(-1, 2)
    p = -np.einsum("ni,nj,n->ij", bd.nodes, w, bd.weights)
    return PolarizationTensor(p)


def moment_tensor(medium, bd, amat):
    """``M = int xi (x) w_A ds`` where ``(I - K~') w_A = A nu``.

    For ``A = I`` this is ``-P``.  The pair ``(x . M)`` replaces ``-(x . P) A``
    when the strain ``A`` does not commute with the static solve.
    """
    rhs = bd.normals @ np.asarray(amat, dtype=float).T
    w = linalg.lu_solve(_static_system(medium, bd), rhs.reshape(-1)).reshape(-1, 2)
    return np.einsum("ni,nj,n->ij", bd.nodes, w, bd.weights)


def moment_map(medium, bd):
    """Callable ``A -> M_A`` sharing one factorization of the static system."""
    lu = _static_system(medium, bd)
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]]),
             np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[0.0, 0.0], [0.0, 1.0]])]
    rhs = np.stack([bd.normals @ b.T for b in basis], axis=-1).reshape(2 * bd.n_points, 4)
    w = linalg.lu_solve(lu, rhs).reshape(-1, 2, 4)
    mk = np.einsum("ni,njk,n->kij", bd.nodes, w, bd.weights)

    def apply(amat):
        return np.einsum("k,kij->ij", np.asarray(amat, dtype=float).reshape(4), mk)

    return apply


def strain_tensor_l(medium, d):
    """``(lambda I + 2 mu d d^T) / (lambda + 2 mu)``."""
    d = np.asarray(d, dtype=float)
    lam, mu = medium.lam, medium.mu
    return (lam * np.eye(2) + 2 * mu * np.outer(d, d)) / (lam + 2 * mu)


def shear_tensor_h(d):
    """``perp(d) d^T + d perp(d)^T``."""
    d = np.asarray(d, dtype=float)
    m = np.outer(perp(d), d)
    return m + m.T


def asymptotic_far_field(medium, cavities, mode, d, xhat, tensor="printed"):
    """Leading-order far fields of small cavities without the ``-rho^2 gamma`` factor.

    ``cavities`` is a sequence of ``(center, area, P)`` in physical units, so
    ``area`` and ``P`` already carry the ``rho^2`` scaling.  Returns the
    compressional (along ``xhat``) and shear (along ``perp(xhat)``) components
    for an incident ``mode`` in ``{"p", "s"}`` with direction ``d``; ``xhat``
    may be a single direction or an array ``(n, 2)``.

    ``tensor="moment"`` uses the strain-resolved moments ``x . M_A`` in place
    of ``-(x . P) A``.  Each cavity then needs a fourth entry: its boundary as
    a ``SmoothBoundary`` in physical units, or a callable ``A -> M_A``.
    """
    if mode not in ("p", "s"):
        raise ValueError("mode must be 'p' or 's'")
    if tensor not in ("printed", "moment"):
        raise ValueError("tensor must be 'printed' or 'moment'")
    d = np.asarray(d, dtype=float)
    xh = np.asarray(xhat, dtype=float)
    single = xh.ndim == 1
    xh = np.atleast_2d(xh)
    lam, mu, om = medium.lam, medium.mu, medium.omega
    kp, ks = medium.kappa_p, medium.kappa_s
    xp = perp(xh)
    if mode == "p":
        amat = strain_tensor_l(medium, d)
        k_in, pol = kp, om**2 * d
        cp, cs = 2 * kp**2 * (lam + 2 * mu), 2 * kp * ks * (lam + 2 * mu)
    else:
        amat = shear_tensor_h(d)
        k_in, pol = ks, om**2 * perp(d)
        cp, cs = 2 * kp * ks * mu, 2 * ks**2 * mu
    vp = np.zeros(len(xh), complex)
    vs = np.zeros(len(xh), complex)
    for cav in cavities:
        s = np.asarray(cav[0], dtype=float)
        area = cav[1]
        if tensor == "printed":
            corr = xh @ np.asarray(cav[2], dtype=float) @ amat  # (x . P) A
        else:
            mom = cav[3](amat) if callable(cav[3]) else moment_tensor(medium, cav[3], amat)
            corr = -xh @ mom
        vp += kp**1.5 * np.exp(1j * (k_in * s @ d - kp * xh @ s)) * np.einsum(
            "ni,ni->n", xh, area * pol[None, :] + cp * corr
        )
        vs += ks**1.5 * np.exp(1j * (k_in * s @ d - ks * xh @ s)) * np.einsum(
            "ni,ni->n", xp, area * pol[None, :] + cs * corr
        )
    if single:
        return complex(vp[0]), complex(vs[0])
    return vp, vs
