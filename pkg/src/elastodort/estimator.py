"""Estimator-style front end: fit on far-field data, transform to images, predict locations."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dort_engine import FarFieldMatrix, eigensystem, herglotz_image, image_grid
from .elastic_core import direction_grid, make_medium

__all__ = ["DORTImager", "check_far_field"]


def check_far_field(X, medium=None):
    """Return ``X`` as a :class:`FarFieldMatrix`.

    A bare square array is read as samples on a uniform grid of
    ``X.shape[0] // 2`` directions and needs ``medium``.
    """
    if isinstance(X, FarFieldMatrix):
        return X
    mat = np.asarray(X)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
        raise ValueError(f"expected a square (2n, 2n) far-field matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("far-field matrix has non-finite entries")
    if medium is None:
        raise ValueError("a medium is required to interpret a bare matrix")
    angles, weights = direction_grid(mat.shape[0] // 2)
    return FarFieldMatrix(mat, angles, weights, medium)


class DORTImager(BaseEstimator, TransformerMixin):
    """Time-reversal imaging of small cavities.

    ``fit`` eigen-decomposes the time-reversal operator of the far-field data,
    ``transform`` returns the Herglotz magnitude map of each significant
    eigenvector and ``predict`` the map maxima.
    """

    def __init__(self, lam=1.0, mu=2.0, omega=2.0, floor=1e-13, max_count=None, grid=(-15.0, 15.0, -15.0, 15.0, 0.1)):
        self.lam = lam
        self.mu = mu
        self.omega = omega
        self.floor = floor
        self.max_count = max_count
        self.grid = grid

    def fit(self, X, y=None):
        self.medium_ = make_medium(self.lam, self.mu, self.omega)
        ff = check_far_field(X, self.medium_)
        es = eigensystem(ff, "weighted", self.floor, self.max_count)
        self.eigensystem_ = es
        self.eigenvalues_ = es.eigenvalues
        self.n_significant_ = es.significant_count
        self.gap_ratio_ = es.gap_ratio
        self.components_ = es.vectors[:, : es.significant_count].T
        return self

    def _maps(self):
        xs, ys = image_grid(*self.grid)
        es = self.eigensystem_
        return [herglotz_image(self.medium_, es.kernel(j), xs, ys) for j in range(self.n_significant_)]

    def transform(self, X=None):
        """Magnitude maps, shape ``(n_significant, ny, nx)``."""
        check_is_fitted(self, "eigensystem_")
        maps = self._maps()
        if not maps:
            xs, ys = image_grid(*self.grid)
            return np.zeros((0, len(ys), len(xs)))
        return np.stack([m.magnitude for m in maps])

    def predict(self, X=None):
        """Location of the map maximum for each significant eigenvector, shape ``(k, 2)``."""
        check_is_fitted(self, "eigensystem_")
        return np.array([m.argmax() for m in self._maps()]).reshape(-1, 2)
