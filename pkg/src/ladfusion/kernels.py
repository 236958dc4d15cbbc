"""Gaussian affinities between point clouds.

The affinity between two points at squared distance ``d2`` is
``exp(-d2 / epsilon)``.  Multiplicative kernel constants are omitted: every
diffusion matrix built downstream is invariant to positive rescaling of the
affinities.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ._validation import check_points, check_positive_real
from .exceptions import InvalidArgumentError

KERNELS = ("gaussian",)

#: Point sets larger than this are subsampled (evenly spaced rows) when
#: resolving the median bandwidth.
MEDIAN_SUBSAMPLE = 2000


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth and kernel family for one sensor.

    Parameters
    ----------
    epsilon : float or None
        Bandwidth in squared-distance units.  ``None`` defers to the median
        of pairwise squared distances, see :func:`resolve`.
    kernel_id : str
        Kernel family.  Only ``"gaussian"`` is available.
    min_affinity_floor : float
        Entries below this value are set to zero.  The default of 0 keeps
        the matrix dense and strictly positive.
    """

    epsilon: Optional[float] = None
    kernel_id: str = "gaussian"
    min_affinity_floor: float = 0.0

    def __post_init__(self):
        if self.epsilon is not None:
            check_positive_real(self.epsilon, "epsilon")
        if self.kernel_id not in KERNELS:
            raise InvalidArgumentError(f"unknown kernel_id {self.kernel_id!r}")
        if not (0.0 <= self.min_affinity_floor < 1.0):
            raise InvalidArgumentError("min_affinity_floor must lie in [0, 1)")

    def resolve(self, points):
        """Return a config with a concrete epsilon for ``points``."""
        if self.epsilon is not None:
            return self
        return KernelConfig(median_sq_distance(points), self.kernel_id,
                            self.min_affinity_floor)


def as_config(cfg):
    """Accept a KernelConfig, a bare bandwidth, or None."""
    if isinstance(cfg, KernelConfig):
        return cfg
    if cfg is None:
        return KernelConfig()
    return KernelConfig(float(cfg))


def median_sq_distance(points):
    """Median of the pairwise squared Euclidean distances of ``points``."""
    X = check_points(points, "points", min_rows=2)
    if X.shape[0] > MEDIAN_SUBSAMPLE:
        idx = np.linspace(0, X.shape[0] - 1, MEDIAN_SUBSAMPLE).round().astype(int)
        X = X[idx]
    med = float(np.median(pdist(X, "sqeuclidean")))
    if med <= 0:
        raise InvalidArgumentError("all points coincide; cannot pick a bandwidth")
    return med


def kernel_value(d2, cfg):
    """Gaussian affinity ``exp(-d2 / epsilon)`` for a squared distance."""
    cfg = as_config(cfg)
    if cfg.epsilon is None:
        raise InvalidArgumentError("kernel_value needs a resolved epsilon")
    d2 = float(d2)
    if not np.isfinite(d2) or d2 < 0:
        raise InvalidArgumentError(f"squared distance must be finite and >= 0, got {d2}")
    return float(np.exp(-d2 / cfg.epsilon))


def build_affinity(queries, references, cfg):
    """Dense affinity matrix between two point sets.

    Parameters
    ----------
    queries : array-like, shape (n, p)
    references : array-like, shape (m, p)
    cfg : KernelConfig or float
        A ``None`` bandwidth is resolved on ``references``.

    Returns
    -------
    W : ndarray, shape (n, m)
        ``W[i, k] = exp(-||queries[i] - references[k]||^2 / epsilon)``.
    """
    Q = check_points(queries, "queries")
    R = check_points(references, "references")
    if Q.shape[1] != R.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: queries in R^{Q.shape[1]}, references in R^{R.shape[1]}")
    cfg = as_config(cfg)
    if cfg.epsilon is None:
        cfg = cfg.resolve(R)
    W = cdist(Q, R, "sqeuclidean")
    W /= -cfg.epsilon
    np.exp(W, out=W)
    if cfg.min_affinity_floor > 0:
        W[W < cfg.min_affinity_floor] = 0.0
    return W


def load_points_csv(path, header=False):
    """Read one point per row from a comma separated file."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return check_points(data, str(path))
