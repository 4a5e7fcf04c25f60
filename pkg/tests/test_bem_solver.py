import numpy as np
import pytest
from scipy import linalg

from elastodort.bem_solver import (
    BoundaryDensity,
    SmoothBoundary,
    _gamma,
    _static_system,
    asymptotic_far_field,
    coupled_plane_wave_far_fields,
    far_field,
    moment_map,
    moment_tensor,
    plane_wave_far_fields,
    plane_wave_traction,
    polarization_tensor,
    shear_tensor_h,
    solve_density,
    strain_tensor_l,
)
from elastodort.elastic_core import IncidentPlaneWave, direction_grid, plane_wave_field, traction, unit_vectors
from elastodort.mie_disk import DiskCavity, disk_far_field

DISK_P_CONSTANT = -5 * np.pi / 4


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_boundary_invariants():
    for bd in (SmoothBoundary.disk(1.0, (0.3, 0.1)), SmoothBoundary.peanuthull()):
        assert bd.signed_area() > 0
        assert np.allclose(np.hypot(*bd.normals.T), 1, atol=1e-14)
        assert np.all(np.einsum("ni,ni->n", bd.normals, bd.nodes - bd.centroid) > 0)
        x0, d0, _ = (a[0] for a in bd.curve(np.array([0.0])))
        x1, d1, _ = (a[0] for a in bd.curve(np.array([2 * np.pi])))
        assert np.allclose(x0, x1, atol=1e-12) and np.allclose(d0, d1, atol=1e-12)
    assert SmoothBoundary.disk(2.0, n_points=512).area == pytest.approx(4 * np.pi, rel=1e-13)
    assert SmoothBoundary.peanuthull().area == pytest.approx(4.5 * np.pi, rel=1e-13)
    with pytest.raises(ValueError):
        SmoothBoundary.disk(n_points=7)


@pytest.mark.parametrize("mode", ["p", "s"])
def test_disk_matches_mie(medium, mode):
    bd = SmoothBoundary.disk(1.0, n_points=256)
    ang, _ = direction_grid(64)
    ff = plane_wave_far_fields(medium, bd, np.array([0.4]), ang)
    vp, vs = disk_far_field(medium, DiskCavity((0, 0), 1.0), IncidentPlaneWave(unit_vectors(0.4), mode), ang)
    m = 0 if mode == "p" else 1
    assert _rel(ff[0, :, m, 0], vp) < 1e-6
    assert _rel(ff[1, :, m, 0], vs) < 1e-6


def test_peanut_convergence(medium):
    ang, _ = direction_grid(64)
    a = plane_wave_far_fields(medium, SmoothBoundary.peanuthull(0.5, n_points=128), np.array([0.2]), ang)
    b = plane_wave_far_fields(medium, SmoothBoundary.peanuthull(0.5, n_points=256), np.array([0.2]), ang)
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-6


def test_superalgebraic_convergence(medium):
    ang, _ = direction_grid(32)
    ref = plane_wave_far_fields(medium, SmoothBoundary.peanuthull(0.5, n_points=256), np.array([0.2]), ang)
    errs = [
        np.abs(plane_wave_far_fields(medium, SmoothBoundary.peanuthull(0.5, n_points=n), np.array([0.2]), ang) - ref).max()
        for n in (32, 64)
    ]
    assert errs[1] < errs[0] / 1e3


def test_zero_incidence(medium):
    bd = SmoothBoundary.disk(n_points=64)
    phi = solve_density(medium, bd, np.zeros((64, 2)))
    assert isinstance(phi, BoundaryDensity)
    assert np.all(phi.values == 0)


def test_p_channel_projection(medium):
    bd = SmoothBoundary.peanuthull(0.5, n_points=64)
    rhs = plane_wave_traction(medium, bd, np.array([0.3]), "p")[..., 0]
    phi = solve_density(medium, bd, rhs).values
    ang, _ = direction_grid(16)
    xhat = unit_vectors(ang)
    integral = np.einsum("dn,nk->dk", np.exp(-1j * medium.kappa_p * xhat @ bd.nodes.T) * bd.weights, phi)
    vec = np.einsum("di,dj,dj->di", xhat, xhat, integral)
    off = np.einsum("di,di->d", unit_vectors(ang + np.pi / 2), vec)
    assert np.abs(off).max() < 1e-13 * np.abs(integral).max()
    vp, _ = far_field(medium, bd, phi, ang)
    assert np.allclose(vp, _gamma(medium) * medium.kappa_p**1.5 * np.einsum("di,di->d", xhat, integral))


def test_translation_phase(medium):
    ang, _ = direction_grid(32)
    xhat = unit_vectors(ang)
    s = np.array([5.0, 0.0])
    d = unit_vectors(0.7)
    a = plane_wave_far_fields(medium, SmoothBoundary.disk(0.002, n_points=64), np.array([0.7]), ang)
    b = plane_wave_far_fields(medium, SmoothBoundary.disk(0.002, s, n_points=64), np.array([0.7]), ang)
    k = medium.wavenumbers
    for c in range(2):
        for m in range(2):
            phase = np.exp(1j * s @ (k[m] * d) - 1j * k[c] * xhat @ s)
            assert _rel(b[c, :, m, 0], phase * a[c, :, m, 0]) < 1e-8


def test_disk_polarization_tensor(medium):
    p = polarization_tensor(medium, SmoothBoundary.disk(n_points=512)).matrix
    assert np.allclose(p, DISK_P_CONSTANT * np.eye(2), rtol=1e-10, atol=1e-12)


def test_polarization_rotation_covariance(medium):
    theta = 0.7
    q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    base = SmoothBoundary.peanuthull(n_points=256)
    p0 = polarization_tensor(medium, base).matrix
    p1 = polarization_tensor(medium, base.transformed(rotation=theta)).matrix
    assert _rel(p1, q @ p0 @ q.T) < 1e-8


def test_polarization_scale_law(medium):
    base = SmoothBoundary.peanuthull(n_points=256)
    p1 = polarization_tensor(medium, base).matrix
    p2 = polarization_tensor(medium, base.transformed(scale=2.0)).matrix
    assert _rel(p2, 4 * p1) < 1e-8


def test_moment_tensor_identity(medium):
    bd = SmoothBoundary.peanuthull(n_points=128)
    p = polarization_tensor(medium, bd).matrix
    assert np.allclose(moment_tensor(medium, bd, np.eye(2)), -p, rtol=1e-12)
    mm = moment_map(medium, bd)
    a = np.array([[0.3, -1.2], [0.5, 2.0]])
    assert np.allclose(mm(a), moment_tensor(medium, bd, a), rtol=1e-12)


def test_tensor_examples(medium):
    assert np.allclose(shear_tensor_h([1.0, 0.0]), [[0, 1], [1, 0]])
    for t in (0.0, 0.4, 2.5):
        lt = strain_tensor_l(medium, unit_vectors(t))
        assert np.trace(lt) == pytest.approx((2 * medium.lam + 2 * medium.mu) / (medium.lam + 2 * medium.mu))
    with pytest.raises(ValueError):
        asymptotic_far_field(medium, [], "x", [1, 0], [1, 0])


def _asymptotic_errors(medium, bd_unit, rho, tensor):
    ang, _ = direction_grid(32)
    bd = bd_unit.transformed(scale=rho)
    ff = plane_wave_far_fields(medium, bd, np.array([0.0]), ang)
    p = polarization_tensor(medium, bd_unit).matrix
    entry = ((0.0, 0.0), rho**2 * bd_unit.area, rho**2 * p, bd)
    errs = []
    for m, mode in enumerate("ps"):
        vals = asymptotic_far_field(medium, [entry], mode, [1.0, 0.0], unit_vectors(ang), tensor)
        for c in range(2):
            errs.append(_rel(-_gamma(medium) * vals[c], ff[c, :, m, 0]))
    return max(errs)


def test_asymptotic_printed_vs_bem(medium):
    assert _asymptotic_errors(medium, SmoothBoundary.disk(n_points=64), 1e-3, "printed") < 0.02


@pytest.mark.parametrize("shape", ["disk", "peanuthull"])
def test_asymptotic_moment_vs_bem(medium, shape):
    bd = SmoothBoundary.disk(n_points=64) if shape == "disk" else SmoothBoundary.peanuthull(n_points=64)
    assert _asymptotic_errors(medium, bd, 1e-3, "moment") < 0.02


def test_asymptotic_single_direction(medium):
    entry = ((1.0, 2.0), 1e-6, 1e-6 * DISK_P_CONSTANT * np.eye(2))
    one = asymptotic_far_field(medium, [entry], "s", [0.0, 1.0], unit_vectors(0.3))
    many = asymptotic_far_field(medium, [entry], "s", [0.0, 1.0], unit_vectors(np.array([0.3, 1.0])))
    assert isinstance(one[0], complex)
    assert one[0] == pytest.approx(many[0][0]) and one[1] == pytest.approx(many[1][0])


@pytest.mark.parametrize("shape", ["disk", "peanuthull"])
def test_gauss_identity(medium, shape):
    bd = SmoothBoundary.disk(n_points=128) if shape == "disk" else SmoothBoundary.peanuthull(n_points=128)
    rho, z, d = 1e-3, np.array([0.4, -0.3]), unit_vectors(0.6)
    wave = IncidentPlaneWave(d, "p")
    psi = np.array([traction(medium, nu, plane_wave_field(medium, wave, z + rho * x)[1]) for nu, x in zip(bd.normals, bd.nodes)])
    w = linalg.lu_solve(_static_system(medium, bd), psi.reshape(-1)).reshape(-1, 2)
    integral = w.T @ bd.weights
    ref = -rho * medium.omega**2 * d * bd.area * np.exp(1j * medium.kappa_p * z @ d) / 2
    assert _rel(integral, ref) < 0.01


@pytest.mark.slow
def test_superposition_decay(medium):
    ang = np.array([0.3])
    out, _ = direction_grid(64)
    seps = np.array([20.0, 50.0, 100.0, 200.0, 400.0])
    diffs = []
    for sep in seps:
        a = SmoothBoundary.disk(1.0, (0.0, 0.0), n_points=48)
        b = SmoothBoundary.disk(0.7, (sep, 0.0), n_points=48)
        pair = coupled_plane_wave_far_fields(medium, [a, b], ang, out)
        single = plane_wave_far_fields(medium, a, ang, out) + plane_wave_far_fields(medium, b, ang, out)
        diffs.append(np.linalg.norm(pair - single))
    slope = np.polyfit(np.log(seps), np.log(diffs), 1)[0]
    assert abs(slope + 0.5) < 0.15
