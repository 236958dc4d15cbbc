"""Landmark selection: uniform subsets, density-weighted draws and
label-stratified subsets."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_paired, check_positive_int
from .exceptions import InvalidArgumentError
from .manifolds import _check_pair, builtin_density, grid_sample, make_generator

PROVENANCES = ("subset_uniform", "subset_stratified", "density_sampled", "explicit")


@dataclass(frozen=True)
class LandmarkSet:
    """``m`` paired landmark points.

    ``indices`` is set when the landmarks are rows of a dataset; the points
    are then copies of those rows.  ``params`` holds latent parameters when
    they are known.
    """

    points1: np.ndarray
    points2: np.ndarray
    provenance: str = "explicit"
    indices: np.ndarray = None
    params: np.ndarray = None
    seed: object = None
    weight_id: str = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidArgumentError(f"unknown provenance {self.provenance!r}")
        if self.points1.shape[0] != self.points2.shape[0] or self.points1.shape[0] < 1:
            raise InvalidArgumentError("landmark sensors must hold the same m >= 1 rows")

    @property
    def m(self):
        return self.points1.shape[0]

    def swapped(self):
        return LandmarkSet(self.points2, self.points1, self.provenance, self.indices,
                           self.params, self.seed, self.weight_id)


def explicit(points1, points2):
    """Wrap user-provided landmark coordinates."""
    A1, A2 = check_paired(points1, points2, min_rows=1)
    return LandmarkSet(A1, A2, "explicit")


def _from_indices(dataset, idx, provenance, seed):
    params = getattr(dataset, "params", None)
    return LandmarkSet(dataset.sensor1[idx], dataset.sensor2[idx], provenance, idx,
                       None if params is None else params[idx], seed)


def uniform_subset(dataset, m, seed=None):
    """``m`` distinct dataset rows drawn uniformly without replacement."""
    m = check_positive_int(m, "m", 1, dataset.sensor1.shape[0])
    rng = np.random.default_rng(seed)
    idx = rng.choice(dataset.sensor1.shape[0], size=m, replace=False)
    return _from_indices(dataset, idx, "subset_uniform", seed)


def stratified_subset(dataset, labels, per_class, seed=None):
    """``per_class`` uniform draws without replacement from every class.

    Classes are visited in sorted label order; one generator serves all of
    them so the result is deterministic for a seed.
    """
    labels = np.asarray(labels)
    n = dataset.sensor1.shape[0]
    if labels.shape != (n,):
        raise InvalidArgumentError(f"labels must have shape ({n},), got {labels.shape}")
    per_class = check_positive_int(per_class, "per_class")
    rng = np.random.default_rng(seed)
    picks = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < per_class:
            raise InvalidArgumentError(
                f"class {cls.item()!r} has {len(members)} members, fewer than per_class={per_class}")
        picks.append(rng.choice(members, size=per_class, replace=False))
    return _from_indices(dataset, np.concatenate(picks), "subset_stratified", seed)


def density_sample(weight_fn, m, seed, generator, cells=None):
    """Draw ``m`` landmarks whose latent parameters follow ``weight_fn``.

    Parameters
    ----------
    weight_fn : callable or str
        Unnormalized weight on the latent domain (taken relative to the
        sensor-2 volume).  Negative values are clamped to zero.
    m : int
    seed : int or None
    generator : (generator1, generator2) or ManifoldGenerator
        The two sensor embeddings.  A single generator is used for both.
    cells : int, optional
        Grid resolution of the inverse CDF.
    """
    m = check_positive_int(m, "m")
    if isinstance(generator, (tuple, list)):
        g1, g2 = (make_generator(g) for g in generator)
    else:
        g1 = g2 = make_generator(generator)
    _check_pair(g1, g2)
    weight_id = weight_fn if isinstance(weight_fn, str) else getattr(weight_fn, "__name__", "custom")
    if isinstance(weight_fn, str):
        weight_fn = builtin_density(weight_fn)
    rng = np.random.default_rng(seed)
    P = grid_sample(weight_fn, g2, m, rng, cells)
    return LandmarkSet(g1.embed(P), g2.embed(P), "density_sampled", None, P, seed, weight_id)
