"""Time-harmonic elastic scattering by cavities and time-reversal (DORT) imaging in 2D."""
from .dort_engine import (
    Cavity,
    FarFieldMatrix,
    add_noise,
    apply_aperture,
    assemble_operator,
    eigensystem,
    herglotz_image,
)
from .elastic_core import ElasticMedium, HerglotzKernel, make_medium
from .estimator import DORTImager

__all__ = [
    "Cavity",
    "DORTImager",
    "ElasticMedium",
    "FarFieldMatrix",
    "HerglotzKernel",
    "add_noise",
    "apply_aperture",
    "assemble_operator",
    "eigensystem",
    "herglotz_image",
    "make_medium",
]

__version__ = "0.1.0"
