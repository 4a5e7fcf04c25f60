"""Limit far-field operator of small, well separated cavities and its eigen-system.

Each cavity enters through its center, unit-scale area ``|D|`` and 2x2
polarization tensor ``P``.  The operator ``F0`` acts on Herglotz kernels
sampled on a direction grid; every integral over the unit circle is a
trapezoid sum on that grid.
"""
from dataclasses import dataclass

import numpy as np

from .elastic_core import HerglotzKernel, perp, unit_vectors

__all__ = [
    "SmallCavityDescriptor",
    "MatrixF",
    "TheoreticalEigenpair",
    "BASIS_A",
    "limit_operator_apply",
    "limit_operator_matrix",
    "matrix_f",
    "a_type_kernel",
    "b_type_kernel",
    "theoretical_eigensystem",
    "residual_check",
]

BASIS_A = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[0.0, 1.0], [-1.0, 0.0]]),
)


@dataclass(frozen=True)
class SmallCavityDescriptor:
    """Center, unit-scale area and polarization tensor, plus the physical scale rho."""

    center: tuple
    area: float
    ptensor: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError("area must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        p = np.asarray(self.ptensor, dtype=float)
        if p.shape != (2, 2) or not np.all(np.isfinite(p)):
            raise ValueError("polarization tensor must be a finite 2x2 matrix")
        object.__setattr__(self, "ptensor", p)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class MatrixF:
    matrix: np.ndarray
    c1: float
    c2: float
    c3: float


@dataclass(frozen=True)
class TheoreticalEigenpair:
    kind: str
    eigenvalue: complex
    kernel: HerglotzKernel
    amatrix: np.ndarray = None
    degenerate: bool = False


def _channel_integrals(medium, s, f, alpha, w):
    kp, ks = medium.kappa_p, medium.kappa_s
    ep = np.exp(1j * kp * alpha @ s) * f.fp * w
    es = np.exp(1j * ks * alpha @ s) * f.fs * w
    ap = perp(alpha)
    i1 = ep @ alpha
    i2 = ep.sum()
    i3 = np.einsum("n,ni,nj->ij", ep, alpha, alpha)
    i4 = es @ ap
    i5 = np.einsum("n,ni,nj->ij", es, ap, alpha)
    i6 = np.einsum("n,ni,nj->ij", es, alpha, ap)
    return i1, i2, i3, i4, i5, i6


def limit_operator_apply(medium, descriptors, f):
    """Evaluate ``F0 f`` on the grid of ``f``."""
    lam, mu, om = medium.lam, medium.mu, medium.omega
    kp, ks = medium.kappa_p, medium.kappa_s
    alpha = f.directions
    w = f.weights
    xhat, xperp = alpha, perp(alpha)
    gp = np.zeros(len(w), complex)
    gs = np.zeros(len(w), complex)
    for desc in descriptors:
        s = np.asarray(desc.center)
        area, pt = desc.area, desc.ptensor
        i1, i2, i3, i4, i5, i6 = _channel_integrals(medium, s, f, alpha, w)
        ptx = xhat @ pt  # rows: P^T xhat for each direction
        base = om**2 * area * (i1 + i4)
        vp = (
            base[None, :]
            + (2 * lam * om**2 / (lam + 2 * mu)) * i2 * ptx
            + (4 * mu * om**2 / (lam + 2 * mu)) * ptx @ i3.T
            + 2 * kp * ks * mu * ptx @ (i5 + i6).T
        )
        vs = (
            base[None, :]
            + 2 * lam * kp * ks * i2 * ptx
            + 4 * mu * kp * ks * ptx @ i3.T
            + 2 * om**2 * ptx @ (i5 + i6).T
        )
        gp += kp**1.5 * np.exp(-1j * kp * xhat @ s) * np.einsum("ni,ni->n", xhat, vp)
        gs += ks**1.5 * np.exp(-1j * ks * xhat @ s) * np.einsum("ni,ni->n", xperp, vs)
    return HerglotzKernel(f.angles, gp, gs, f.weights)


def limit_operator_matrix(medium, descriptors, angles, weights=None):
    """Dense ``2n x 2n`` matrix of ``F0`` acting on sampled kernels."""
    n = len(angles)
    cols = []
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = 1.0
        k = HerglotzKernel.from_vector(e, angles, weights)
        cols.append(limit_operator_apply(medium, descriptors, k).as_vector())
    return np.array(cols).T


def matrix_f(medium, ptensor):
    """The 4x4 matrix of ``F0`` on the span of ``h_1 .. h_4``."""
    lam, mu = medium.lam, medium.mu
    kp, ks = medium.kappa_p, medium.kappa_s
    c1 = 2 * lam * kp**3.5 * np.pi
    c2 = mu * kp**3.5 * np.pi
    c3 = mu * ks**3.5 * np.pi
    p = np.asarray(ptensor, dtype=float)
    p11, p12, p21, p22 = p[0, 0], p[0, 1], p[1, 0], p[1, 1]
    a, b, c = c1 + 3 * c2 + c3, c1 + c2 - c3, c2 + c3
    m = np.array(
        [
            [a * p11, b * p11, 2 * c * p12, 0.0],
            [b * p22, a * p22, 2 * c * p21, 0.0],
            [(a * p21 + b * p12) / 2, (b * p21 + a * p12) / 2, c * (p11 + p22), 0.0],
            [(a * p21 - b * p12) / 2, (b * p21 - a * p12) / 2, c * (p22 - p11), 0.0],
        ]
    )
    return MatrixF(m, c1, c2, c3)


def a_type_kernel(medium, center, c, angles, weights=None):
    """``(kp^1.5 xhat.c e^{-i kp xhat.s}, ks^1.5 perp(xhat).c e^{-i ks xhat.s})``."""
    xhat = unit_vectors(angles)
    s = np.asarray(center, dtype=float)
    kp, ks = medium.kappa_p, medium.kappa_s
    fp = kp**1.5 * (xhat @ c) * np.exp(-1j * kp * xhat @ s)
    fs = ks**1.5 * (perp(xhat) @ c) * np.exp(-1j * ks * xhat @ s)
    return HerglotzKernel(angles, fp, fs, weights)


def b_type_kernel(medium, center, amat, angles, weights=None):
    """``(kp^2.5 xhat.A xhat e^{-i kp xhat.s}, ks^2.5 perp(xhat).A xhat e^{-i ks xhat.s})``."""
    xhat = unit_vectors(angles)
    s = np.asarray(center, dtype=float)
    kp, ks = medium.kappa_p, medium.kappa_s
    ax = xhat @ np.asarray(amat).T
    fp = kp**2.5 * np.einsum("ni,ni->n", xhat, ax) * np.exp(-1j * kp * xhat @ s)
    fs = ks**2.5 * np.einsum("ni,ni->n", perp(xhat), ax) * np.exp(-1j * ks * xhat @ s)
    return HerglotzKernel(angles, fp, fs, weights)


def theoretical_eigensystem(medium, descriptor, angles, weights=None):
    """Two A-type and three B-type approximate eigenpairs of ``F0`` for one cavity."""
    kp, ks, om = medium.kappa_p, medium.kappa_s, medium.omega
    lam_a = np.pi * om**2 * descriptor.area * (kp**1.5 + ks**1.5)
    pairs = [
        TheoreticalEigenpair("A", complex(lam_a), a_type_kernel(medium, descriptor.center, e, angles, weights))
        for e in np.eye(2)
    ]
    mf = matrix_f(medium, descriptor.ptensor).matrix
    vals, vecs = np.linalg.eig(mf[:3, :3])
    order = np.argsort(-np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    rounded = np.round(vals / (np.abs(vals).max() or 1.0), 10)
    degenerate = len(set(rounded.tolist())) < 3
    if degenerate:
        # orthonormal basis of each eigenspace
        for v in np.unique(rounded):
            idx = np.where(rounded == v)[0]
            if len(idx) > 1:
                q, _ = np.linalg.qr(vecs[:, idx])
                vecs[:, idx] = q
    for q in range(3):
        zeta, v3 = vals[q], vecs[:, q]
        v4 = (mf[3, :3] @ v3) / zeta if zeta != 0 else 0.0
        v = np.append(v3, v4)
        amat = sum(vj * aj for vj, aj in zip(v, BASIS_A))
        pairs.append(
            TheoreticalEigenpair(
                "B",
                complex(zeta),
                b_type_kernel(medium, descriptor.center, amat, angles, weights),
                amat,
                degenerate,
            )
        )
    return pairs


def residual_check(medium, descriptors, pair):
    """``||F0 g - lambda g|| / ||lambda g||`` in the weighted kernel norm."""
    g = pair.kernel
    fg = limit_operator_apply(medium, descriptors, g)
    diff = HerglotzKernel(g.angles, fg.fp - pair.eigenvalue * g.fp, fg.fs - pair.eigenvalue * g.fs, g.weights)
    ref = abs(pair.eigenvalue) * g.norm(medium)
    return diff.norm(medium) / ref if ref > 0 else float(diff.norm(medium))
