"""scikit-learn style estimators around the functional API.

Two-sensor estimators follow the ``fit(X, Y)`` convention of
:mod:`sklearn.cross_decomposition`: ``X`` holds sensor-1 samples and ``Y``
the aligned sensor-2 samples.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_paired, check_points
from .diffusion import (_signed_power, ad_embed, ad_spectrum, build_ad, build_lad,
                        diffusion_map, lad_embed, lad_spectrum)
from .exceptions import InvalidArgumentError
from .kernels import KernelConfig, build_affinity
from .landmarks import LandmarkSet, explicit, uniform_subset
from .manifolds import PairedDataset


class AlternatingDiffusion(BaseEstimator):
    """Alternating diffusion embedding on all ``n`` samples (dense n x n EVD).

    Parameters
    ----------
    n_components : int
        Embedding dimension ``q``.
    eps1, eps2 : float or None
        Kernel bandwidths; ``None`` uses the median squared distance.
    diffusion_time : float
    start_sensor : {"sensor2", "sensor1"}
    """

    def __init__(self, n_components=3, eps1=None, eps2=None, diffusion_time=1.0,
                 start_sensor="sensor2"):
        self.n_components = n_components
        self.eps1 = eps1
        self.eps2 = eps2
        self.diffusion_time = diffusion_time
        self.start_sensor = start_sensor

    def fit(self, X, Y):
        X, Y = check_paired(X, Y)
        self.model_ = build_ad((X, Y), KernelConfig(self.eps1), KernelConfig(self.eps2),
                               self.start_sensor)
        q = min(self.n_components, len(X) - 1)
        self.spectrum_ = ad_spectrum(self.model_, q + 1)
        self.embedding_ = ad_embed(self.model_, q, self.diffusion_time,
                                   spectrum=self.spectrum_)
        self.eigenvalues_ = self.embedding_.eigenvalues_used
        return self

    def fit_transform(self, X, Y):
        return np.array(self.fit(X, Y).embedding_.coords)


class LandmarkAlternatingDiffusion(TransformerMixin, BaseEstimator):
    """alpha-normalized landmark alternating diffusion.

    Parameters
    ----------
    n_components : int
    n_landmarks : int
        Size of the uniform landmark subset drawn in :meth:`fit`; ignored
        when ``landmarks`` is given.
    alpha : float in [0, 1]
    eps1, eps2 : float or None
    diffusion_time : float
    start_sensor : {"sensor2", "sensor1"}
    landmarks : LandmarkSet, (points1, points2) or None
    random_state : int or None
        Seed of the landmark subset.

    Attributes
    ----------
    landmarks_ : LandmarkSet
    model_ : LadModel
    spectrum_ : SpectralResult
    embedding_ : Embedding
    eigenvalues_ : ndarray of shape (n_components,)
    """

    def __init__(self, n_components=3, n_landmarks=100, alpha=0.5, eps1=None, eps2=None,
                 diffusion_time=1.0, start_sensor="sensor2", landmarks=None,
                 random_state=None):
        self.n_components = n_components
        self.n_landmarks = n_landmarks
        self.alpha = alpha
        self.eps1 = eps1
        self.eps2 = eps2
        self.diffusion_time = diffusion_time
        self.start_sensor = start_sensor
        self.landmarks = landmarks
        self.random_state = random_state

    def _landmarks(self, X, Y):
        if self.landmarks is None:
            data = PairedDataset(X, Y, np.empty((len(X), 0)))
            return uniform_subset(data, self.n_landmarks, self.random_state)
        if isinstance(self.landmarks, LandmarkSet):
            return self.landmarks
        return explicit(*self.landmarks)

    def fit(self, X, Y):
        X, Y = check_paired(X, Y)
        self.landmarks_ = self._landmarks(X, Y)
        self.model_ = build_lad((X, Y), self.landmarks_, KernelConfig(self.eps1),
                                KernelConfig(self.eps2), self.alpha, self.start_sensor)
        q = min(self.n_components, self.model_.m - 1)
        self.spectrum_ = lad_spectrum(self.model_, q + 1)
        self.embedding_ = lad_embed(self.model_, q, self.diffusion_time,
                                    spectrum=self.spectrum_)
        self.eigenvalues_ = self.embedding_.eigenvalues_used
        return self

    def fit_transform(self, X, Y):
        return np.array(self.fit(X, Y).embedding_.coords)

    def transform(self, X=None, Y=None):
        """Embed new samples through the landmarks.

        Only the ending sensor is needed: ``X`` (sensor 1) for the default
        start on sensor 2, ``Y`` otherwise.  Fitted samples map to their
        fitted coordinates.
        """
        check_is_fitted(self, "model_")
        pts = X if self.start_sensor == "sensor2" else Y
        if pts is None:
            which = "X" if self.start_sensor == "sensor2" else "Y"
            raise InvalidArgumentError(f"transform needs {which}, the ending sensor")
        pts = check_points(pts, "X")
        rows = self.model_.extend(pts)
        q = self.embedding_.q
        U = (rows @ self.spectrum_.landmark_vectors[:, 1:q + 1]).real
        return U * _signed_power(self.eigenvalues_, self.diffusion_time)


class DiffusionMap(TransformerMixin, BaseEstimator):
    """Single-sensor diffusion map from the row-stochastic ``D^-1 W``.

    Parameters
    ----------
    n_components : int
    eps : float or None
        Kernel bandwidth; ``None`` uses the median squared distance.
    diffusion_time : float
    """

    def __init__(self, n_components=3, eps=None, diffusion_time=1.0):
        self.n_components = n_components
        self.eps = eps
        self.diffusion_time = diffusion_time

    def fit(self, X, y=None):
        X = check_points(X, "X", min_rows=2)
        self.embedding_ = diffusion_map(X, KernelConfig(self.eps), self.n_components,
                                        self.diffusion_time)
        self.eigenvalues_ = self.embedding_.eigenvalues_used
        self.epsilon_ = self.embedding_.metadata["eps"]
        self.X_fit_ = X
        return self

    def fit_transform(self, X, y=None):
        return np.array(self.fit(X).embedding_.coords)

    def transform(self, X):
        """Nystrom extension ``u(x) = sum_j M(x, x_j) u_j / l``."""
        check_is_fitted(self, "embedding_")
        X = check_points(X, "X")
        W = build_affinity(X, self.X_fit_, self.epsilon_)
        rows = W / W.sum(axis=1, keepdims=True)
        lam = self.eigenvalues_
        U = self.embedding_.coords / _signed_power(lam, self.diffusion_time)
        return (rows @ U) / lam * _signed_power(lam, self.diffusion_time)
