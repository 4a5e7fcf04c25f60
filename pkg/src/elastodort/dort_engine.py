"""Far-field operator assembly, time-reversal eigen-analysis and Herglotz imaging.

Sampled kernels are vectors ``[f_p(alpha_1..n); f_s(alpha_1..n)]``.  A
``FarFieldMatrix`` entry ``[(a, i), (b, j)]`` is ``w_j K_ab(xhat_i, alpha_j)``
so that ``F @ f`` is the trapezoid rule for the far-field operator.  Kernels
are compared in the weighted norm with weights ``w_j omega / kappa``.
"""
import struct
from dataclasses import dataclass, replace

import numpy as np

from .asymptotic_model import SmallCavityDescriptor
from .bem_solver import (
    SmoothBoundary,
    _gamma,
    asymptotic_far_field,
    moment_map,
    plane_wave_far_fields,
    polarization_tensor,
)
from .elastic_core import HerglotzKernel, direction_grid, perp, unit_vectors
from .mie_disk import DiskCavity, disk_kernel_matrix

__all__ = [
    "Cavity",
    "FarFieldMatrix",
    "TimeReversalEigenSystem",
    "FieldMap",
    "ENGINES",
    "TABLE_SCALE",
    "assemble_operator",
    "add_noise",
    "apply_aperture",
    "eigensystem",
    "operator_eigenvalues",
    "significance_gap",
    "herglotz_image",
    "image_grid",
    "write_eigenvalues_csv",
    "write_field_csv",
    "write_pgm",
    "write_operator",
    "read_operator",
]

ENGINES = ("mie", "bem", "asymptotic")
SHAPES = ("disk", "peanuthull", "fourier")


def TABLE_SCALE(n_directions):
    """Factor mapping eig(F^H F) of the weighted matrix to the tabulated scale."""
    return 64.0 * n_directions**2 / np.pi


@dataclass(frozen=True)
class Cavity:
    """Disk, peanut hull or Fourier star shape ``center + scale * Q(rotation) r(t) e(t)``.

    For a disk ``scale`` is the radius.
    """

    shape: str
    center: tuple = (0.0, 0.0)
    scale: float = 1.0
    rotation: float = 0.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if not self.scale > 0:
            raise ValueError("cavity scale must be positive")
        if self.shape == "fourier" and len(self.cos_coeffs) == 0:
            raise ValueError("fourier cavity needs at least the constant coefficient")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))

    def unit_boundary(self, n_points=128):
        """Reference shape at unit scale centred at the origin."""
        if self.shape == "disk":
            bd = SmoothBoundary.disk(1.0, (0.0, 0.0), n_points)
        elif self.shape == "peanuthull":
            bd = SmoothBoundary.peanuthull(1.0, (0.0, 0.0), n_points)
        else:
            bd = SmoothBoundary.radial(self.cos_coeffs, self.sin_coeffs, 1.0, (0.0, 0.0), n_points)
        return bd.transformed(1.0, self.rotation, (0.0, 0.0)) if self.rotation else bd

    def boundary(self, n_points=128):
        return self.unit_boundary(n_points).transformed(self.scale, 0.0, self.center)

    def as_disk(self):
        if self.shape != "disk":
            raise ValueError("the Mie engine only handles disks")
        return DiskCavity(self.center, self.scale)


@dataclass(frozen=True)
class FarFieldMatrix:
    matrix: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    medium: object
    engine: str = ""
    noise_level: float = 0.0
    full_aperture: bool = True

    def __post_init__(self):
        n = len(self.angles)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2 * n, 2 * n):
            raise ValueError("matrix shape must be (2 n_dir, 2 n_dir)")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @property
    def n_directions(self):
        return len(self.angles)

    @property
    def directions(self):
        return unit_vectors(self.angles)

    @property
    def inner_weights(self):
        """Diagonal of the weighted inner product, ``[w omega/kp; w omega/ks]``."""
        cp, cs = self.medium.channel_weights
        return np.concatenate([self.weights * cp, self.weights * cs])

    def symmetric(self):
        """``W^{1/2} F W^{-1/2}``: the operator in an orthonormal frame."""
        s = np.sqrt(self.inner_weights)
        return s[:, None] * self.matrix / s[None, :]

    def adjoint(self):
        """Matrix of ``F*`` under the weighted inner product."""
        w = self.inner_weights
        return self.matrix.conj().T * w[None, :] / w[:, None]

    def flip(self):
        """Permutation matrix of ``alpha -> -alpha`` acting on both channels."""
        n = self.n_directions
        if n % 2:
            raise ValueError("direction flip needs an even grid")
        idx = (np.arange(n) + n // 2) % n
        r = np.zeros((n, n))
        r[np.arange(n), idx] = 1.0
        z = np.zeros_like(r)
        return np.block([[r, z], [z, r]])

    def normality_residual(self):
        g = self.symmetric()
        gh = g.conj().T
        scale = np.linalg.norm(g) ** 2
        return float(np.linalg.norm(g @ gh - gh @ g) / scale) if scale else 0.0

    def reciprocity_residual(self):
        """``|| F* - conj(R F R) || / || F ||``."""
        r = self.flip()
        diff = self.adjoint() - (r @ self.matrix @ r).conj()
        scale = np.linalg.norm(self.matrix)
        return float(np.linalg.norm(diff) / scale) if scale else 0.0

    def kernel(self, vector):
        return HerglotzKernel.from_vector(vector, self.angles, self.weights)


@dataclass(frozen=True)
class TimeReversalEigenSystem:
    """Eigenvalues of ``T = F* F`` (nonincreasing) and weighted-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    significant_count: int
    gap_ratio: float
    convention: str = "weighted"

    def kernel(self, j):
        return HerglotzKernel.from_vector(self.vectors[:, j], self.angles, self.weights)

    @property
    def kernels(self):
        return [self.kernel(j) for j in range(self.vectors.shape[1])]


@dataclass(frozen=True)
class FieldMap:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (len(ys), len(xs), 2)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (len(self.ys), len(self.xs), 2):
            raise ValueError("field values must have shape (ny, nx, 2)")

    @property
    def magnitude(self):
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=-1))

    def argmax(self):
        mag = self.magnitude
        iy, ix = np.unravel_index(np.argmax(mag), mag.shape)
        return np.array([self.xs[ix], self.ys[iy]])

    def local_maxima(self, count=2):
        """Strict 8-neighbour local maxima ``[(x, y, value), ...]`` by decreasing value."""
        mag = self.magnitude
        pad = np.pad(mag, 1, constant_values=-np.inf)
        core = pad[1:-1, 1:-1]
        is_max = np.ones_like(mag, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx or dy:
                    is_max &= core > pad[1 + dy : pad.shape[0] - 1 + dy, 1 + dx : pad.shape[1] - 1 + dx]
        iy, ix = np.nonzero(is_max)
        order = np.argsort(-mag[iy, ix])[:count]
        return [(self.xs[ix[k]], self.ys[iy[k]], mag[iy[k], ix[k]]) for k in order]


# ---------------------------------------------------------------------------
# assembly


def _input_factors(medium):
    """``e^{-i pi/4} sqrt(kappa/omega)`` for the p and s input channels."""
    return np.exp(-0.25j * np.pi) * np.sqrt(medium.wavenumbers / medium.omega)


def _from_patterns(medium, ff, weights):
    """Operator matrix from plane-wave patterns laid out ``(2, n_out, 2, n_in)``."""
    k = ff * _input_factors(medium)[None, None, :, None] * weights[None, None, None, :]
    n_out, n_in = ff.shape[1], ff.shape[3]
    return k.reshape(2 * n_out, 2 * n_in)


def _bem_points(medium, cavity, n_points):
    if n_points:
        return int(n_points)
    size = cavity.scale * (3.0 if cavity.shape != "disk" else 1.0)
    return int(max(64, 2 * np.ceil(8 * medium.kappa_s * size)))


def _descriptor(medium, cavity, n_points):
    ub = cavity.unit_boundary(n_points)
    return SmallCavityDescriptor(cavity.center, ub.area, polarization_tensor(medium, ub).matrix, cavity.scale), ub


def _asymptotic_matrix(medium, cavities, angles, weights, tensor, n_points):
    xhat = unit_vectors(angles)
    n = len(angles)
    ff = np.zeros((2, n, 2, n), complex)
    entries = []
    for cav in cavities:
        desc, ub = _descriptor(medium, cav, n_points or 128)
        rho = desc.scale
        entry = [desc.center, rho**2 * desc.area, rho**2 * desc.ptensor]
        if tensor == "moment":
            unit_map = moment_map(medium, ub)
            entry.append(lambda a, f=unit_map, r=rho: r**2 * f(a))
        entries.append(tuple(entry))
    if entries:
        for m, mode in enumerate(("p", "s")):
            for j, d in enumerate(xhat):
                vp, vs = asymptotic_far_field(medium, entries, mode, d, xhat, tensor)
                ff[0, :, m, j] = vp
                ff[1, :, m, j] = vs
    return _from_patterns(medium, -_gamma(medium) * ff, weights)


def assemble_operator(engine, medium, cavities, n_directions=360, n_points=None, tensor="printed", truncation=None):
    """Discrete far-field operator of ``cavities`` on a uniform direction grid.

    ``engine`` is one of ``mie`` (disks only), ``bem`` or ``asymptotic``.
    Cavities scatter independently; their contributions are summed.
    ``tensor`` selects the small-cavity correction of the asymptotic engine.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    cavities = list(cavities)
    angles, weights = direction_grid(int(n_directions))
    n = len(angles)
    mat = np.zeros((2 * n, 2 * n), complex)
    if engine == "mie":
        disks = [c.as_disk() if isinstance(c, Cavity) else c for c in cavities]
        for disk in disks:
            mat += disk_kernel_matrix(medium, disk, angles, angles, weights, truncation)
    elif engine == "bem":
        for cav in cavities:
            bd = cav.boundary(_bem_points(medium, cav, n_points))
            mat += _from_patterns(medium, plane_wave_far_fields(medium, bd, angles, angles), weights)
    else:
        if tensor not in ("printed", "moment"):
            raise ValueError("tensor must be 'printed' or 'moment'")
        mat = _asymptotic_matrix(medium, cavities, angles, weights, tensor, n_points)
    return FarFieldMatrix(mat, angles, weights, medium, engine)


def add_noise(ff, level, seed=0):
    """Complex Gaussian noise with standard deviation ``level ||F||_F / dim`` per entry."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return ff
    mat = ff.matrix
    sigma = level * np.linalg.norm(mat) / mat.shape[0]
    rng = np.random.default_rng(seed)
    noise = (rng.standard_normal(mat.shape) + 1j * rng.standard_normal(mat.shape)) * (sigma / np.sqrt(2))
    return replace(ff, matrix=mat + noise, noise_level=ff.noise_level + level)


def _in_arcs(angles, arcs):
    keep = np.zeros(len(angles), dtype=bool)
    for a, b in arcs:
        width = b - a
        if not 0 < width <= 2 * np.pi:
            raise ValueError("each arc needs 0 < b - a <= 2 pi")
        # small shift keeps the lower endpoint and drops the upper one under rounding
        keep |= np.mod(angles - a + 1e-12, 2 * np.pi) < width
    return keep


def apply_aperture(ff, arcs):
    """Keep emitters and receivers in the half-open arcs ``[a, b)``.

    Weights are rescaled so that the retained directions carry the total arc
    measure.
    """
    arcs = [(float(a), float(b)) for a, b in arcs]
    if not arcs:
        raise ValueError("aperture needs at least one arc")
    keep = _in_arcs(ff.angles, arcs)
    if not keep.any():
        raise ValueError("aperture excludes every grid direction")
    if keep.all():
        return ff
    measure = min(sum(b - a for a, b in arcs), 2 * np.pi)
    w_old = ff.weights[keep]
    w_new = w_old * measure / w_old.sum()
    idx = np.concatenate([np.nonzero(keep)[0], ff.n_directions + np.nonzero(keep)[0]])
    mat = ff.matrix[np.ix_(idx, idx)] * np.tile(w_new / w_old, 2)[None, :]
    return FarFieldMatrix(mat, ff.angles[keep], w_new, ff.medium, ff.engine, ff.noise_level, False)


# ---------------------------------------------------------------------------
# eigen-analysis


def significance_gap(eigenvalues, floor=1e-13, max_count=None):
    """Count of significant eigenvalues by the largest consecutive ratio.

    Values that are not positive or fall below ``floor * lambda_1`` are
    ignored.  The bottom quarter of the spectrum is left out of the search
    unless ``max_count`` says otherwise: under noise the smallest eigenvalues
    of T fall towards zero and would otherwise produce a spurious gap at the
    tail.
    Ties go to the smallest index.  Returns ``(count, ratio)``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0 or not lam[0] > 0:
        return 0, 0.0
    lam = lam[(lam > 0) & (lam >= floor * lam[0])]
    if lam.size < 2:
        return int(lam.size), float("inf")
    ratios = lam[:-1] / lam[1:]
    limit = max(1, len(eigenvalues) - len(eigenvalues) // 4) if max_count is None else max(1, int(max_count))
    ratios = ratios[:limit]
    k = int(np.argmax(np.round(ratios, 12)))
    return k + 1, float(ratios[k])


def eigensystem(ff, convention="weighted", floor=1e-13, max_count=None):
    """Hermitian eigen-decomposition of the time-reversal operator.

    ``convention="weighted"`` uses the weighted inner product and returns
    kernels orthonormal in it.  ``"euclidean"`` uses ``F^H F`` of the raw
    matrix; multiplied by ``TABLE_SCALE(n)`` it gives the tabulated scale.
    """
    if convention == "weighted":
        g = ff.symmetric()
        s = np.sqrt(ff.inner_weights)
    elif convention == "euclidean":
        g = ff.matrix
        s = np.ones(g.shape[0])
    else:
        raise ValueError("convention must be 'weighted' or 'euclidean'")
    t = g.conj().T @ g
    vals, vecs = np.linalg.eigh((t + t.conj().T) / 2)
    order = np.argsort(-vals)
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order] / s[:, None]
    count, ratio = significance_gap(vals, floor, max_count) if vals.size and vals[0] > 0 else (0, 0.0)
    return TimeReversalEigenSystem(vals, vecs, ff.angles, ff.weights, count, ratio, convention)


def operator_eigenvalues(ff):
    """Eigenvalues of ``F`` itself, ordered by decreasing modulus (diagnostic)."""
    ev = np.linalg.eigvals(ff.symmetric())
    return ev[np.argsort(-np.abs(ev))]


# ---------------------------------------------------------------------------
# imaging


def image_grid(xmin=-15.0, xmax=15.0, ymin=-15.0, ymax=15.0, step=0.1):
    nx = int(round((xmax - xmin) / step)) + 1
    ny = int(round((ymax - ymin) / step)) + 1
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny)


def herglotz_image(medium, kernel, xs, ys):
    """Herglotz wave of ``kernel`` on the lattice ``xs x ys``.

    The plane-wave phase factorizes over the two coordinates, so each
    component is a product of two small dense matrices.
    """
    alpha = kernel.directions
    w = kernel.weights
    om = medium.omega
    out = np.zeros((len(ys), len(xs), 2), complex)
    for k, f, pol in ((medium.kappa_p, kernel.fp, alpha), (medium.kappa_s, kernel.fs, perp(alpha))):
        ex = np.exp(1j * k * np.outer(xs, alpha[:, 0]))  # (nx, n)
        ey = np.exp(1j * k * np.outer(ys, alpha[:, 1]))  # (ny, n)
        c = np.sqrt(k / om) * w * f
        for comp in range(2):
            out[..., comp] += ey @ ((c * pol[:, comp])[:, None] * ex.T)
    return FieldMap(np.asarray(xs, float), np.asarray(ys, float), np.exp(-0.25j * np.pi) * out)


# ---------------------------------------------------------------------------
# output


def write_eigenvalues_csv(path, values):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(values, start=1):
            fh.write(f"{i},{float(v):.16e}\n")


def write_field_csv(path, fmap):
    xx, yy = np.meshgrid(fmap.xs, fmap.ys)
    u = fmap.values
    cols = np.column_stack(
        [
            xx.ravel(),
            yy.ravel(),
            fmap.magnitude.ravel(),
            u[..., 0].real.ravel(),
            u[..., 0].imag.ravel(),
            u[..., 1].real.ravel(),
            u[..., 1].imag.ravel(),
        ]
    )
    np.savetxt(path, cols, delimiter=",", fmt="%.10e", header="x,y,abs_u,re_u1,im_u1,re_u2,im_u2", comments="")


def write_pgm(path, fmap):
    """8-bit binary PGM normalized to the map maximum, top row at the largest y."""
    mag = fmap.magnitude[::-1]
    peak = mag.max()
    img = np.zeros(mag.shape, np.uint8) if peak == 0 else np.round(255 * mag / peak).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


_MAGIC = b"EDFF"


def write_operator(path, ff):
    """Raw little-endian complex128 matrix after a header ``EDFF, n_dir, 'ps'``."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<I", ff.n_directions) + b"ps")
        fh.write(np.ascontiguousarray(ff.matrix, dtype="<c16").tobytes())


def read_operator(path):
    """Return ``(n_dir, matrix)`` from a file written by :func:`write_operator`."""
    with open(path, "rb") as fh:
        head = fh.read(10)
        if head[:4] != _MAGIC or head[8:10] != b"ps":
            raise ValueError("not an operator snapshot")
        n = struct.unpack("<I", head[4:8])[0]
        mat = np.frombuffer(fh.read(), dtype="<c16").reshape(2 * n, 2 * n)
    return n, mat.copy()
