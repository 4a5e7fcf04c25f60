"""Command line front end: configuration, experiment pipeline and theory checks.

Configuration is YAML::

    medium: {lambda: 1.0, mu: 2.0, omega: 2.0}
    engine: mie                 # mie | bem | asymptotic
    n_directions: 360
    noise_level: 0.05
    seed: 0
    aperture: [[0.7854, 2.3562], [3.9270, 5.4978]]   # radians, arcs [a, b)
    cavities:
      - {shape: disk, center: [5, 0], radius: 0.002}
      - {shape: peanuthull, center: [5, 0], scale: 0.002, rotation: 0.0}
      - {shape: fourier, center: [0, 0], scale: 0.01, cos: [2.0], sin: [0.0, 1.0]}
    imaging: {xmin: -15, xmax: 15, ymin: -15, ymax: 15, step: 0.1, max_images: null}
    bem_points: null
    tensor: printed             # printed | moment (asymptotic engine)
    max_count: null             # optional cap for the gap rule
    outputs: out
"""
import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .asymptotic_model import (
    BASIS_A,
    SmallCavityDescriptor,
    a_type_kernel,
    b_type_kernel,
    limit_operator_apply,
    residual_check,
    theoretical_eigensystem,
)
from .bem_solver import (
    InteriorEigenvalueError,
    SmoothBoundary,
    _gamma,
    asymptotic_far_field,
    coupled_plane_wave_far_fields,
    plane_wave_far_fields,
    polarization_tensor,
)
from .dort_engine import (
    ENGINES,
    TABLE_SCALE,
    Cavity,
    FarFieldMatrix,
    add_noise,
    apply_aperture,
    assemble_operator,
    eigensystem,
    herglotz_image,
    image_grid,
    read_operator,
    write_eigenvalues_csv,
    write_field_csv,
    write_operator,
    write_pgm,
)
from .elastic_core import direction_grid, herglotz_field, make_medium, unit_vectors
from .mie_disk import ResonanceError, far_block_eigenvalues

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "BUILTIN_SCENES",
    "parse_config",
    "load_config",
    "builtin_config",
    "run_experiment",
    "verify_theory",
    "check_scaling_law",
    "check_superposition",
    "check_limit_residuals",
    "check_asymptotic_vs_bem",
    "check_limit_vs_bem_spectrum",
    "check_focusing_decay",
    "check_operator_identities",
    "main",
]


class ConfigError(ValueError):
    """Invalid configuration text or value."""


@dataclass(frozen=True)
class ImagingSpec:
    xmin: float = -15.0
    xmax: float = 15.0
    ymin: float = -15.0
    ymax: float = 15.0
    step: float = 0.1
    max_images: int = None


@dataclass(frozen=True)
class ExperimentConfig:
    medium: tuple = (1.0, 2.0, 2.0)
    cavities: tuple = ()
    engine: str = "mie"
    n_directions: int = 360
    noise_level: float = 0.05
    seed: int = 0
    aperture: tuple = ()
    imaging: ImagingSpec = field(default_factory=ImagingSpec)
    outputs: str = "out"
    bem_points: int = None
    tensor: str = "printed"
    max_count: int = None
    name: str = "custom"

    def make_medium(self):
        return make_medium(*self.medium)


@dataclass
class RunReport:
    name: str
    eigenvalues_path: str
    significant_count: int
    gap_ratio: float
    top_eigenvalues: list
    image_paths: list
    normality_residual: float
    reciprocity_residual: float
    aperture_mode: bool
    noise_level: float
    noise_model: str
    eigenvalue_scale: str
    timing: dict

    def to_dict(self):
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# configuration

_TOP_KEYS = {
    "medium", "cavities", "engine", "n_directions", "noise_level", "seed", "aperture",
    "imaging", "outputs", "bem_points", "tensor", "max_count", "name",
}
_CAVITY_KEYS = {"shape", "center", "radius", "scale", "rotation", "cos", "sin"}


def _number(value, name, kind=float, positive=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if kind is int and float(value) != int(value):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    out = kind(value)
    if not np.isfinite(out):
        raise ConfigError(f"{name}: must be finite")
    if positive and out <= 0:
        raise ConfigError(f"{name}: must be positive, got {value!r}")
    return out


def _pair(value, name):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name}: expected a pair [x, y], got {value!r}")
    return tuple(_number(v, name) for v in value)


def _cavity(raw, idx):
    where = f"cavities[{idx}]"
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(raw) - _CAVITY_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    shape = raw.get("shape", "disk")
    if shape not in ("disk", "peanuthull", "fourier"):
        raise ConfigError(f"{where}.shape: unknown shape {shape!r}")
    if "radius" in raw and "scale" in raw:
        raise ConfigError(f"{where}: give either radius or scale")
    size = raw.get("radius", raw.get("scale"))
    if size is None:
        raise ConfigError(f"{where}.scale: missing")
    cos = tuple(_number(v, f"{where}.cos") for v in raw.get("cos", ()))
    sin = tuple(_number(v, f"{where}.sin") for v in raw.get("sin", ()))
    if shape == "fourier" and not cos:
        raise ConfigError(f"{where}.cos: fourier shape needs at least one coefficient")
    try:
        return Cavity(
            shape,
            _pair(raw.get("center", (0.0, 0.0)), f"{where}.center"),
            _number(size, f"{where}.scale", positive=True),
            _number(raw.get("rotation", 0.0), f"{where}.rotation"),
            cos,
            sin,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _config_from_mapping(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"top level: unknown field(s) {sorted(unknown)}")
    med = data.get("medium", {})
    if not isinstance(med, dict):
        raise ConfigError("medium: expected a mapping with lambda, mu, omega")
    bad = set(med) - {"lambda", "mu", "omega"}
    if bad:
        raise ConfigError(f"medium: unknown field(s) {sorted(bad)}")
    medium = (
        _number(med.get("lambda", 1.0), "medium.lambda"),
        _number(med.get("mu", 2.0), "medium.mu"),
        _number(med.get("omega", 2.0), "medium.omega"),
    )
    try:
        make_medium(*medium)
    except ValueError as exc:
        raise ConfigError(f"medium: {exc}") from exc
    raw_cav = data.get("cavities", [])
    if not isinstance(raw_cav, list):
        raise ConfigError("cavities: expected a list")
    cavities = tuple(_cavity(c, i) for i, c in enumerate(raw_cav))
    engine = data.get("engine", "mie")
    if engine not in ENGINES:
        raise ConfigError(f"engine: unknown engine {engine!r}; expected one of {list(ENGINES)}")
    if engine == "mie" and any(c.shape != "disk" for c in cavities):
        raise ConfigError("engine: mie requires every cavity to be a disk")
    n_dir = _number(data.get("n_directions", 360), "n_directions", int, positive=True)
    if n_dir < 4 or n_dir % 2:
        raise ConfigError("n_directions: must be an even integer >= 4")
    noise = _number(data.get("noise_level", 0.05), "noise_level")
    if noise < 0:
        raise ConfigError("noise_level: must be non-negative")
    seed = _number(data.get("seed", 0), "seed", int)
    arcs = data.get("aperture") or []
    if not isinstance(arcs, list):
        raise ConfigError("aperture: expected a list of [a, b] arcs")
    aperture = tuple(_pair(a, f"aperture[{i}]") for i, a in enumerate(arcs))
    for i, (a, b) in enumerate(aperture):
        if not 0 < b - a <= 2 * np.pi:
            raise ConfigError(f"aperture[{i}]: need 0 < b - a <= 2 pi")
    img = data.get("imaging", {}) or {}
    if not isinstance(img, dict):
        raise ConfigError("imaging: expected a mapping")
    bad = set(img) - {f.name for f in dataclasses.fields(ImagingSpec)}
    if bad:
        raise ConfigError(f"imaging: unknown field(s) {sorted(bad)}")
    base = ImagingSpec()
    imaging = ImagingSpec(
        *(_number(img.get(k, getattr(base, k)), f"imaging.{k}") for k in ("xmin", "xmax", "ymin", "ymax")),
        _number(img.get("step", base.step), "imaging.step", positive=True),
        _number(img.get("max_images"), "imaging.max_images", int, allow_none=True),
    )
    if imaging.xmax <= imaging.xmin or imaging.ymax <= imaging.ymin:
        raise ConfigError("imaging: empty window")
    tensor = data.get("tensor", "printed")
    if tensor not in ("printed", "moment"):
        raise ConfigError(f"tensor: expected 'printed' or 'moment', got {tensor!r}")
    return ExperimentConfig(
        medium=medium,
        cavities=cavities,
        engine=engine,
        n_directions=n_dir,
        noise_level=noise,
        seed=seed,
        aperture=aperture,
        imaging=imaging,
        outputs=str(data.get("outputs", "out")),
        bem_points=_number(data.get("bem_points"), "bem_points", int, positive=True, allow_none=True),
        tensor=tensor,
        max_count=_number(data.get("max_count"), "max_count", int, positive=True, allow_none=True),
        name=str(data.get("name", "custom")),
    )


def parse_config(text):
    """Parse YAML text into a validated :class:`ExperimentConfig`."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"syntax error at {loc}: {exc.problem or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    return _config_from_mapping(data)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


_NINE_CENTERS = [(-12, 12), (0, 12), (12, 12), (-12, 0), (0, 0), (12, 0), (-12, -12), (0, -12), (12, -12)]
_OPEN_ARCS = [[np.pi / 4, 3 * np.pi / 4], [5 * np.pi / 4, 7 * np.pi / 4]]

BUILTIN_SCENES = {
    "example1-disk": {
        "cavities": [{"shape": "disk", "center": [5, 0], "radius": 0.002}],
        "engine": "mie",
    },
    # scale 0.002/3 reproduces the tabulated peanut eigenvalues; see README
    "example1-peanut": {
        "cavities": [{"shape": "peanuthull", "center": [5, 0], "scale": 0.002 / 3}],
        "engine": "bem",
    },
    "example2": {
        "cavities": [
            {"shape": "disk", "center": [5, 0], "radius": 0.002},
            {"shape": "disk", "center": [-5, 0], "radius": 0.004},
        ],
        "engine": "mie",
    },
    "example2-symmetric": {
        "cavities": [
            {"shape": "disk", "center": [5, 0], "radius": 0.002},
            {"shape": "disk", "center": [-5, 0], "radius": 0.002},
        ],
        "engine": "mie",
    },
    "example3-nine-disks": {
        "cavities": [
            {"shape": "disk", "center": list(c), "radius": 0.01 * (i + 1)} for i, c in enumerate(_NINE_CENTERS)
        ],
        "engine": "mie",
        "imaging": {"xmin": -16, "xmax": 16, "ymin": -16, "ymax": 16, "step": 0.1},
    },
    "example4-open-trm": {
        "cavities": [
            {"shape": "disk", "center": [5, 0], "radius": 0.002},
            {"shape": "disk", "center": [-5, 0], "radius": 0.004},
        ],
        "engine": "mie",
        "aperture": _OPEN_ARCS,
    },
}


def builtin_config(name, **overrides):
    if name not in BUILTIN_SCENES:
        raise ConfigError(f"unknown scene {name!r}; available: {sorted(BUILTIN_SCENES)}")
    data = dict(BUILTIN_SCENES[name], name=name, outputs=f"out/{name}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return _config_from_mapping(data)


# ---------------------------------------------------------------------------
# pipeline


def build_operator(config):
    """Assemble, add noise and restrict the aperture as the config asks."""
    medium = config.make_medium()
    ff = assemble_operator(
        config.engine, medium, config.cavities, config.n_directions, config.bem_points, config.tensor
    )
    ff = add_noise(ff, config.noise_level, config.seed)
    if config.aperture:
        ff = apply_aperture(ff, config.aperture)
    return ff


def analyse_operator(config, ff, out_dir, timing=None):
    """Eigen-analysis, images and report for an assembled operator."""
    timing = dict(timing or {})
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"outputs: cannot create {out}: {exc}") from exc
    medium = ff.medium
    t0 = time.perf_counter()
    es = eigensystem(ff, "weighted", max_count=config.max_count)
    table = eigensystem(ff, "euclidean").eigenvalues * TABLE_SCALE(ff.n_directions)
    timing["eigensystem"] = time.perf_counter() - t0
    eig_path = out / "eigenvalues.csv"
    write_eigenvalues_csv(eig_path, table)
    write_eigenvalues_csv(out / "eigenvalues_weighted.csv", es.eigenvalues)
    t0 = time.perf_counter()
    im = config.imaging
    xs, ys = image_grid(im.xmin, im.xmax, im.ymin, im.ymax, im.step)
    n_img = es.significant_count if im.max_images is None else min(es.significant_count, im.max_images)
    images = []
    for j in range(n_img):
        fmap = herglotz_image(medium, es.kernel(j), xs, ys)
        stem = out / f"eigenvector_{j + 1:03d}"
        write_field_csv(stem.with_suffix(".csv"), fmap)
        write_pgm(stem.with_suffix(".pgm"), fmap)
        images.append(str(stem.with_suffix(".csv")))
    timing["imaging"] = time.perf_counter() - t0
    full = ff.full_aperture and ff.n_directions % 2 == 0
    report = RunReport(
        name=config.name,
        eigenvalues_path=str(eig_path),
        significant_count=int(es.significant_count),
        gap_ratio=float(es.gap_ratio),
        top_eigenvalues=[float(v) for v in table[: max(es.significant_count + 1, 6)]],
        image_paths=images,
        normality_residual=ff.normality_residual(),
        reciprocity_residual=ff.reciprocity_residual() if full else float("nan"),
        aperture_mode=not ff.full_aperture,
        noise_level=ff.noise_level,
        noise_model="complex Gaussian, per-entry std = level * ||F||_F / dim",
        eigenvalue_scale="eig(F^H F) * 64 n^2 / pi (eigenvalues.csv); weighted T (eigenvalues_weighted.csv)",
        timing=timing,
    )
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, default=float)
    return report


def run_experiment(config, out_dir=None):
    """Assemble, perturb, restrict, decompose and image; returns a :class:`RunReport`."""
    t0 = time.perf_counter()
    ff = build_operator(config)
    timing = {"assemble": time.perf_counter() - t0}
    return analyse_operator(config, ff, out_dir or config.outputs, timing)


# ---------------------------------------------------------------------------
# theory checks


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def check_scaling_law(medium, orders=(2, 3, 4, 5), radii=None):
    """Log-log slopes of the two eigenvalues of ``F_n`` against the radius."""
    radii = np.geomspace(1e-4, 1e-2, 7) if radii is None else np.asarray(radii)
    rows = []
    for n in orders:
        ev = np.array([far_block_eigenvalues(medium, r, n) for r in radii])
        l1, l2 = np.abs(ev[:, 0]), np.abs(ev[:, 1])
        rows.append(
            {
                "n": int(n),
                "slope_lambda1": _slope(radii, l1),
                "expected_lambda1": 2 * n - 2,
                "slope_ratio": _slope(radii, l2 / l1),
                "expected_ratio": 2,
            }
        )
    return rows


def check_superposition(medium, separations=None, radii=(1.0, 0.7), n_points=48, n_directions=64, incident=0.3):
    """Relative defect of independent superposition against the coupled solve, and its L-exponent."""
    ls = np.geomspace(20, 400, 9) if separations is None else np.asarray(separations, float)
    ang, _ = direction_grid(n_directions)
    ain = np.array([incident])
    defects = []
    for L in ls:
        b1 = SmoothBoundary.disk(radii[0], (-L / 2, 0.0), n_points)
        b2 = SmoothBoundary.disk(radii[1], (L / 2, 0.0), n_points)
        pair = coupled_plane_wave_far_fields(medium, [b1, b2], ain, ang)
        ind = plane_wave_far_fields(medium, b1, ain, ang) + plane_wave_far_fields(medium, b2, ain, ang)
        defects.append(np.linalg.norm(pair - ind) / np.linalg.norm(ind))
    return {"separations": ls.tolist(), "defects": defects, "exponent": _slope(ls, defects)}


def _unit_descriptor(medium, center=(0.0, 0.0), shape="disk", n_points=128):
    cav = Cavity(shape, center, 1.0)
    ub = cav.unit_boundary(n_points)
    return SmallCavityDescriptor(center, ub.area, polarization_tensor(medium, ub).matrix)


def check_limit_residuals(medium, separations=(25.0, 100.0, 400.0), n_directions=None):
    """Template residuals of the limit operator: one origin cavity and a pair sweep.

    The grid must resolve phases ``kappa_s L``; by default it is sized from
    the largest separation.
    """
    ls = np.asarray(separations, float)
    if n_directions is None:
        n_directions = int(max(360, 2 ** np.ceil(np.log2(3 * medium.kappa_s * ls.max()))))
    ang, _ = direction_grid(360)
    d0 = _unit_descriptor(medium)
    single = [residual_check(medium, [d0], p) for p in theoretical_eigensystem(medium, d0, ang)]
    h4 = b_type_zero_residual(medium, d0, ang)
    ang, _ = direction_grid(n_directions)
    pair = []
    for L in ls:
        d2 = _unit_descriptor(medium, (0.6 * L, 0.8 * L))
        pair.append([residual_check(medium, [d0, d2], p) for p in theoretical_eigensystem(medium, d0, ang)])
    pair = np.array(pair)
    rms = np.sqrt((pair**2).mean(axis=1))
    return {
        "single_max": float(max(single)),
        "h4_ratio": h4,
        "separations": ls.tolist(),
        "pair_residuals": pair.tolist(),
        "pair_rms": rms.tolist(),
        "exponent": _slope(ls, rms),
        "n_directions": n_directions,
    }


def b_type_zero_residual(medium, descriptor, angles):
    """``||F0 h_4|| / ||h_4||`` for the skew basis matrix (expected zero)."""
    h4 = b_type_kernel(medium, descriptor.center, BASIS_A[3], angles)
    out = limit_operator_apply(medium, [descriptor], h4)
    return float(out.norm(medium) / h4.norm(medium))


def check_asymptotic_vs_bem(medium, rho=1e-3, shape="disk", n_directions=32, incident=0.0, n_points=64):
    """Relative error of the small-cavity far fields against the boundary solver.

    Returns the largest channel error for the printed tensor form and for
    the strain-resolved moments.
    """
    ang, _ = direction_grid(n_directions)
    cav = Cavity(shape, (0.0, 0.0), rho)
    bd = cav.boundary(n_points)
    ub = cav.unit_boundary(128)
    ptensor = polarization_tensor(medium, ub).matrix
    ff = plane_wave_far_fields(medium, bd, np.array([incident]), ang)
    xhat = unit_vectors(ang)
    d = unit_vectors(incident)
    entry = ((0.0, 0.0), rho**2 * ub.area, rho**2 * ptensor, bd)
    out = {}
    for tensor in ("printed", "moment"):
        errs = []
        for m, mode in enumerate(("p", "s")):
            vals = asymptotic_far_field(medium, [entry], mode, d, xhat, tensor)
            for c in range(2):
                ref = ff[c, :, m, 0]
                approx = -_gamma(medium) * vals[c]
                errs.append(float(np.linalg.norm(approx - ref) / np.linalg.norm(ref)))
        out[tensor] = max(errs)
        out[tensor + "_channels"] = errs
    return out


def check_limit_vs_bem_spectrum(medium, rho=1e-3, center=(5.0, 0.0), n_directions=360):
    """Top-5 time-reversal eigenvalues of the asymptotic and boundary-solver operators."""
    cav = [Cavity("disk", center, rho)]
    ref = eigensystem(assemble_operator("bem", medium, cav, n_directions)).eigenvalues[:5]
    out = {"bem": ref.tolist()}
    for tensor in ("printed", "moment"):
        ev = eigensystem(assemble_operator("asymptotic", medium, cav, n_directions, tensor=tensor)).eigenvalues[:5]
        out[tensor] = ev.tolist()
        out[tensor + "_mismatch"] = float(np.max(np.abs(ev / ref - 1)))
    return out


def check_focusing_decay(medium, center=(5.0, 0.0), direction=(0.6, 0.8), n_directions=360):
    """Exponent of ``|u|`` along a ray from the cavity for an A-type eigen-kernel."""
    ang, _ = direction_grid(n_directions)
    ks = medium.kappa_s
    g = a_type_kernel(medium, center, np.array([1.0, 0.0]), ang)
    r = np.linspace(10 / ks, 200 / ks, 2000)
    x = np.asarray(center) + r[:, None] * np.asarray(direction) / np.hypot(*direction)
    mag = np.linalg.norm(herglotz_field(medium, g, x), axis=1)
    return {"exponent": _slope(r, mag)}


def check_operator_identities(ff):
    """Normality, reciprocity and spectrum consistency of a noiseless full-aperture operator."""
    es = eigensystem(ff)
    ev = np.linalg.eigvals(ff.symmetric())
    mods = np.sort(np.abs(ev) ** 2)[::-1]
    k = max(es.significant_count, 1)
    return {
        "normality": ff.normality_residual(),
        "reciprocity": ff.reciprocity_residual(),
        "spectrum": float(np.max(np.abs(mods[:k] - es.eigenvalues[:k]) / es.eigenvalues[:k])),
    }


def verify_theory(config=None, quick=False):
    """Run the theory checks and return a list of ``{name, value, target, passed}`` entries."""
    config = config or ExperimentConfig(cavities=(Cavity("disk", (5.0, 0.0), 0.002),))
    medium = config.make_medium()
    entries = []

    def add(name, value, target, passed):
        entries.append({"name": name, "value": value, "target": target, "passed": bool(passed)})

    for row in check_scaling_law(medium, (2, 3) if quick else (2, 3, 4, 5)):
        n = row["n"]
        s1 = row["slope_lambda1"]
        add(f"scaling n={n} lambda1 slope", s1, f"{2 * n - 2} +- 5%", abs(s1 / (2 * n - 2) - 1) < 0.05)
        sr = row["slope_ratio"]
        add(f"scaling n={n} lambda2/lambda1 slope", sr, "2 +- 0.1", abs(sr - 2) < 0.1)
    sup = check_superposition(medium, np.geomspace(20, 400, 5 if quick else 9))
    add("superposition defect exponent", sup["exponent"], "-0.5 +- 0.15", abs(sup["exponent"] + 0.5) < 0.15)
    lim = check_limit_residuals(medium)
    add("limit operator single-cavity residual", lim["single_max"], "< 1e-8", lim["single_max"] < 1e-8)
    add("limit operator h4 image", lim["h4_ratio"], "< 1e-10", lim["h4_ratio"] < 1e-10)
    add("limit operator pair residual exponent", lim["exponent"], "-0.5 +- 0.15", abs(lim["exponent"] + 0.5) < 0.15)
    asy = check_asymptotic_vs_bem(medium)
    add("asymptotic far field vs BEM (printed tensor)", asy["printed"], "< 0.02", asy["printed"] < 0.02)
    add("asymptotic far field vs BEM (moment tensor)", asy["moment"], "< 0.02", asy["moment"] < 0.02)
    if not quick:
        spec = check_limit_vs_bem_spectrum(medium)
        add("asymptotic vs BEM top-5 eigenvalues (printed)", spec["printed_mismatch"], "report", True)
        add("asymptotic vs BEM top-5 eigenvalues (moment)", spec["moment_mismatch"], "report", True)
    foc = check_focusing_decay(medium)
    add("focusing decay exponent", foc["exponent"], "-0.5 +- 0.1", abs(foc["exponent"] + 0.5) < 0.1)
    if config.cavities and config.engine in ("mie", "bem"):
        ff = assemble_operator(config.engine, medium, config.cavities, config.n_directions, config.bem_points)
        ids = check_operator_identities(ff)
        add("normality residual", ids["normality"], "< 1e-8", ids["normality"] < 1e-8)
        add("reciprocity residual", ids["reciprocity"], "< 1e-8", ids["reciprocity"] < 1e-8)
        add("eig(T) vs |eig(F)|^2", ids["spectrum"], "< 1e-6", ids["spectrum"] < 1e-6)
    return entries


# ---------------------------------------------------------------------------
# command line


def _parse_arcs(text):
    arcs = []
    try:
        for part in text.split(";"):
            if part.strip():
                a, b = (float(v) for v in part.split(","))
                arcs.append([a, b])
    except ValueError as exc:
        raise ConfigError(f"--aperture: expected 'a,b[;c,d]...', got {text!r}") from exc
    return arcs


def _apply_overrides(config, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.noise is not None:
        if args.noise < 0:
            raise ConfigError("--noise: must be non-negative")
        changes["noise_level"] = args.noise
    if args.directions is not None:
        if args.directions < 4 or args.directions % 2:
            raise ConfigError("--directions: must be an even integer >= 4")
        changes["n_directions"] = args.directions
    if args.engine is not None:
        if args.engine not in ENGINES:
            raise ConfigError(f"--engine: unknown engine {args.engine!r}")
        changes["engine"] = args.engine
    if args.aperture is not None:
        changes["aperture"] = tuple(tuple(a) for a in _parse_arcs(args.aperture))
    if args.out is not None:
        changes["outputs"] = args.out
    config = dataclasses.replace(config, **changes)
    if config.engine == "mie" and any(c.shape != "disk" for c in config.cavities):
        raise ConfigError("engine: mie requires every cavity to be a disk")
    return config


def _build_parser():
    parser = argparse.ArgumentParser(prog="elastodort", description="Elastic time-reversal imaging of small cavities.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", required=need_config, help="YAML experiment file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--noise", type=float)
        p.add_argument("--directions", type=int)
        p.add_argument("--engine", choices=ENGINES)
        p.add_argument("--aperture", help="arcs in radians, 'a,b[;c,d]...'")

    common(sub.add_parser("simulate", help="assemble the far-field operator and save it"))
    p = sub.add_parser("invert", help="eigen-analysis and imaging")
    common(p)
    p.add_argument("--operator", help="operator file written by 'simulate'")
    p = sub.add_parser("verify", help="run theory checks")
    common(p, need_config=False)
    p.add_argument("--quick", action="store_true")
    p = sub.add_parser("replay", help="run a builtin scene")
    p.add_argument("scene", choices=sorted(BUILTIN_SCENES))
    common(p, need_config=False)
    return parser


def _run(args):
    if args.command == "replay":
        config = _apply_overrides(builtin_config(args.scene), args)
    elif args.config:
        config = _apply_overrides(load_config(args.config), args)
    else:
        config = _apply_overrides(ExperimentConfig(cavities=(Cavity("disk", (5.0, 0.0), 0.002),)), args)

    if args.command == "simulate":
        ff = build_operator(config)
        out = Path(config.outputs)
        out.mkdir(parents=True, exist_ok=True)
        write_operator(out / "operator.bin", ff)
        info = {
            "n_directions": ff.n_directions,
            "angles": ff.angles.tolist(),
            "weights": ff.weights.tolist(),
            "engine": ff.engine,
            "noise_level": ff.noise_level,
            "aperture_mode": not ff.full_aperture,
        }
        (out / "operator.json").write_text(json.dumps(info), encoding="utf-8")
        print(f"wrote {out / 'operator.bin'} ({ff.n_directions} directions)")
        return 0
    if args.command == "verify":
        entries = verify_theory(config, quick=args.quick)
        for e in entries:
            print(f"{'PASS' if e['passed'] else 'FAIL'}  {e['name']}: {e['value']} (target {e['target']})")
        out = Path(config.outputs)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(json.dumps(entries, indent=2, default=float), encoding="utf-8")
        return 0
    if args.command == "invert" and args.operator:
        n, mat = read_operator(args.operator)
        meta = Path(args.operator).with_suffix(".json")
        if meta.exists():
            info = json.loads(meta.read_text(encoding="utf-8"))
            angles, weights = np.array(info["angles"]), np.array(info["weights"])
            full = not info.get("aperture_mode", False)
        else:
            angles, weights = direction_grid(n)
            full = True
        ff = FarFieldMatrix(mat, angles, weights, config.make_medium(), "file", full_aperture=full)
        report = analyse_operator(config, ff, config.outputs)
    else:
        report = run_experiment(config)
    print(f"{report.name}: {report.significant_count} significant eigenvalues (gap {report.gap_ratio:.3g})")
    print("top eigenvalues: " + ", ".join(f"{v:.6g}" for v in report.top_eigenvalues))
    print(f"report: {Path(report.eigenvalues_path).parent / 'report.json'}")
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ResonanceError, InteriorEigenvalueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
