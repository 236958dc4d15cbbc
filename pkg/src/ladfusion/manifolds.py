"""Synthetic paired-sensor datasets on parametrized manifolds.

Both sensors observe the same latent parameters through two embeddings, so
the diffeomorphism between the two views is realized implicitly by sharing
the latent sample.  Sampling densities are weights on the parameter domain
taken with respect to the Riemannian volume of the *second* sensor.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ClampWarning, InvalidArgumentError

import warnings

TWO_PI = 2.0 * np.pi

# name -> (domain, intrinsic_dim, default params)
_REGISTRY = {
    "circle": ("S1", 1, {"scale": 1.0}),
    "ellipse": ("S1", 1, {"a": 2.0, "b": 1.0}),
    "trefoil": ("S1", 1, {}),
    "torus": ("T2", 2, {"R": 2.5, "r": 1.0}),
    "deformed_torus": ("T2", 2, {"R": 2.5, "r": 1.0, "amp": 0.5, "freq": 4.0}),
    "sphere": ("S2", 2, {"scale": 1.0}),
    "scaled_sphere": ("S2", 2, {"scale": 0.8}),
}

# parameter box per domain: rows are (low, high) per latent coordinate
DOMAINS = {
    "S1": np.array([[-np.pi, np.pi]]),
    "T2": np.array([[0.0, TWO_PI], [0.0, TWO_PI]]),
    "S2": np.array([[0.0, np.pi], [-np.pi, np.pi]]),
}


@dataclass(frozen=True)
class ManifoldGenerator:
    """A closed manifold given by an explicit parametrization.

    Latent coordinates are ``theta`` on ``[-pi, pi)`` for curves, ``(u, v)``
    on ``[0, 2 pi)^2`` for the tori and ``(polar, azimuth)`` for spheres.
    """

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _REGISTRY:
            raise InvalidArgumentError(
                f"unknown manifold {self.name!r}; choose from {sorted(_REGISTRY)}")
        merged = dict(_REGISTRY[self.name][2])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise InvalidArgumentError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "params", merged)
        p = merged
        if "scale" in p and p["scale"] <= 0:
            raise InvalidArgumentError("scale must be > 0")
        if self.name == "ellipse" and (p["a"] <= 0 or p["b"] <= 0):
            raise InvalidArgumentError("ellipse axes must be > 0")
        if self.domain == "T2":
            if not p["R"] > p["r"] > 0:
                raise InvalidArgumentError("torus needs R > r > 0")
            if self.name == "deformed_torus" and not (0 <= p["amp"] < 1):
                raise InvalidArgumentError("deformation amplitude must lie in [0, 1)")
            if self.name == "deformed_torus" and p["R"] <= p["r"] * (1 + p["amp"]):
                raise InvalidArgumentError("deformed tube would self-intersect")

    @property
    def domain(self):
        return _REGISTRY[self.name][0]

    @property
    def intrinsic_dim(self):
        return _REGISTRY[self.name][1]

    @property
    def bounds(self):
        return DOMAINS[self.domain]

    @property
    def rotation_invariant(self):
        """Whether ambient distances depend only on latent differences
        along the periodic coordinate (circles and spheres)."""
        return self.name in ("circle", "sphere", "scaled_sphere")

    def _latent(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.ndim == 1 and self.intrinsic_dim == 1:
            params = params[:, None]
        if params.ndim != 2 or params.shape[1] != self.intrinsic_dim:
            raise InvalidArgumentError(
                f"{self.name} expects latent shape (n, {self.intrinsic_dim}), got {params.shape}")
        return params

    def embed(self, params):
        """Map latent parameters to ambient points."""
        P = self._latent(params)
        p = self.params
        if self.domain == "S1":
            t = P[:, 0]
            if self.name == "circle":
                return p["scale"] * np.column_stack([np.cos(t), np.sin(t)])
            if self.name == "ellipse":
                return np.column_stack([p["a"] * np.cos(t), p["b"] * np.sin(t)])
            return np.column_stack([np.sin(t) + 2 * np.sin(2 * t),
                                    np.cos(t) - 2 * np.cos(2 * t),
                                    -np.sin(3 * t)])
        if self.domain == "T2":
            u, v = P[:, 0], P[:, 1]
            rho = p["r"] * self._tube(u)
            ring = p["R"] + rho * np.cos(v)
            return np.column_stack([ring * np.cos(u), ring * np.sin(u), rho * np.sin(v)])
        th, ph = P[:, 0], P[:, 1]
        s = p["scale"]
        return s * np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def _tube(self, u):
        if self.name == "deformed_torus":
            return 1.0 + self.params["amp"] * np.cos(self.params["freq"] * u)
        return np.ones_like(u)

    def _tube_du(self, u):
        if self.name == "deformed_torus":
            a, f = self.params["amp"], self.params["freq"]
            return -a * f * np.sin(f * u)
        return np.zeros_like(u)

    def volume_element(self, params):
        """Riemannian volume density of the embedding w.r.t. latent measure."""
        P = self._latent(params)
        p = self.params
        if self.domain == "S1":
            t = P[:, 0]
            if self.name == "circle":
                return np.full(len(t), p["scale"])
            if self.name == "ellipse":
                return np.hypot(p["a"] * np.sin(t), p["b"] * np.cos(t))
            d = np.column_stack([np.cos(t) + 4 * np.cos(2 * t),
                                 -np.sin(t) + 4 * np.sin(2 * t),
                                 -3 * np.cos(3 * t)])
            return np.linalg.norm(d, axis=1)
        if self.domain == "S2":
            return p["scale"] ** 2 * np.sin(P[:, 0])
        u, v = P[:, 0], P[:, 1]
        rho = p["r"] * self._tube(u)
        drho = p["r"] * self._tube_du(u)
        ring = p["R"] + rho * np.cos(v)
        Xu = np.column_stack([drho * np.cos(v) * np.cos(u) - ring * np.sin(u),
                              drho * np.cos(v) * np.sin(u) + ring * np.cos(u),
                              drho * np.sin(v)])
        Xv = np.column_stack([-rho * np.sin(v) * np.cos(u),
                              -rho * np.sin(v) * np.sin(u),
                              rho * np.cos(v)])
        return np.linalg.norm(np.cross(Xu, Xv), axis=1)

    def volume_bound(self):
        """Upper bound of :meth:`volume_element` over the domain."""
        p = self.params
        if self.name == "torus":
            return p["r"] * (p["R"] + p["r"])
        if self.domain == "S2":
            return p["scale"] ** 2
        grid = _cell_centers(self.bounds, 256 if self.intrinsic_dim == 2 else 4096)
        return 1.05 * float(self.volume_element(grid).max())


def make_generator(spec):
    """Build a generator from a name, a ``{"name": ..., **params}`` dict or
    pass an existing generator through."""
    if isinstance(spec, ManifoldGenerator):
        return spec
    if isinstance(spec, str):
        return ManifoldGenerator(spec)
    spec = dict(spec)
    name = spec.pop("name")
    return ManifoldGenerator(name, spec.pop("params", spec))


@dataclass(frozen=True)
class PairedDataset:
    """``n`` aligned samples seen by two sensors plus their latent parameters."""

    sensor1: np.ndarray
    sensor2: np.ndarray
    params: np.ndarray
    seed: object = None
    generators: tuple = ()

    def __post_init__(self):
        n = self.sensor1.shape[0]
        if self.sensor2.shape[0] != n or self.params.shape[0] != n:
            raise InvalidArgumentError("sensor rows and latent rows are not aligned")
        if n < 2:
            raise InvalidArgumentError("a paired dataset needs n >= 2")

    @property
    def n(self):
        return self.sensor1.shape[0]

    def swapped(self):
        """The same samples with the sensor roles exchanged."""
        return PairedDataset(self.sensor2, self.sensor1, self.params, self.seed,
                             tuple(reversed(self.generators)))

    def take(self, indices):
        idx = np.asarray(indices, dtype=int)
        return replace(self, sensor1=self.sensor1[idx], sensor2=self.sensor2[idx],
                       params=self.params[idx])


def dataset_from_params(generator_pair, params, seed=None):
    """Evaluate both embeddings on given latent parameters."""
    g1, g2 = (make_generator(g) for g in generator_pair)
    _check_pair(g1, g2)
    P = g2._latent(params)
    return PairedDataset(g1.embed(P), g2.embed(P), P, seed, (g1, g2))


def _check_pair(g1, g2):
    if g1.intrinsic_dim != g2.intrinsic_dim or g1.domain != g2.domain:
        raise InvalidArgumentError(
            f"generators {g1.name} ({g1.domain}) and {g2.name} ({g2.domain}) "
            "do not share a latent domain")


def _cell_centers(bounds, cells):
    axes = [lo + (np.arange(cells) + 0.5) * (hi - lo) / cells for lo, hi in bounds]
    if len(axes) == 1:
        return axes[0][:, None]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def clamp_weights(values, label="weight"):
    """Clamp negative weights to zero, warning with the clamped mass fraction."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"{label} produced non-finite values")
    neg = values < 0
    if neg.any():
        frac = float(-values[neg].sum() / np.abs(values).sum())
        warnings.warn(f"{label}: clamped negative values carrying {frac:.3%} of |mass|",
                      ClampWarning, stacklevel=3)
        values = np.where(neg, 0.0, values)
    return values


def grid_sample(weight_fn, generator, size, rng, cells=None):
    """Draw latent parameters with density proportional to
    ``weight_fn(theta) * volume_element(theta)`` by inverse CDF on a grid.

    Within a cell the draw is uniform.  ``cells`` defaults to 2**16 cells
    for curves and 256 x 256 for surfaces.
    """
    g = generator
    bounds = g.bounds
    if cells is None:
        cells = 2 ** 16 if g.intrinsic_dim == 1 else 256
    centers = _cell_centers(bounds, cells)
    lat = centers[:, 0] if g.intrinsic_dim == 1 else centers
    w = clamp_weights(np.broadcast_to(weight_fn(lat), (len(centers),)),
                      getattr(weight_fn, "__name__", "weight"))
    mass = w * g.volume_element(centers)
    total = mass.sum()
    if not total > 0:
        raise InvalidArgumentError("weight function has zero mass on the domain")
    cdf = np.cumsum(mass)
    u = rng.random(size) * cdf[-1]
    k = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    # skip zero-mass cells hit only through rounding
    frac = np.clip((u - (cdf[k] - mass[k])) / np.where(mass[k] > 0, mass[k], 1.0), 0.0, 1.0)
    widths = (bounds[:, 1] - bounds[:, 0]) / cells
    if g.intrinsic_dim == 1:
        out = bounds[0, 0] + (k + frac) * widths[0]
        return out[:, None]
    i, j = np.divmod(k, cells)
    jitter = rng.random(size)
    return np.column_stack([bounds[0, 0] + (i + frac) * widths[0],
                            bounds[1, 0] + (j + jitter) * widths[1]])


def _uniform_surface(g, size, rng):
    """Area-uniform samples on a surface by rejection against the volume bound."""
    bound = g.volume_bound()
    lo, hi = g.bounds[:, 0], g.bounds[:, 1]
    out = np.empty((0, 2))
    while len(out) < size:
        batch = max(64, 2 * (size - len(out)))
        cand = lo + rng.random((batch, 2)) * (hi - lo)
        keep = rng.random(batch) * bound < g.volume_element(cand)
        out = np.vstack([out, cand[keep]])
    return out[:size]


def sample_latent(generator, n, density=None, seed=None):
    """Latent samples following ``density`` w.r.t. the generator's volume."""
    rng = np.random.default_rng(seed)
    g = make_generator(generator)
    if isinstance(density, str):
        density = builtin_density(density)
    if density is None and g.intrinsic_dim == 2:
        return _uniform_surface(g, n, rng)
    if density is None:
        density = builtin_density("uniform")
    return grid_sample(density, g, n, rng)


def sample_pair(generator_pair, n, density=None, seed=None):
    """Sample ``n`` latent points and observe them through both sensors.

    Parameters
    ----------
    generator_pair : (generator1, generator2)
        Names, dicts or :class:`ManifoldGenerator` for sensor 1 and 2.
    n : int
    density : callable, str or None
        Weight on the latent domain, relative to sensor-2 volume.  ``None``
        samples uniformly on the sensor-2 manifold.
    seed : int or None
    """
    g1, g2 = (make_generator(g) for g in generator_pair)
    _check_pair(g1, g2)
    if int(n) < 2:
        raise InvalidArgumentError("n must be >= 2")
    P = sample_latent(g2, int(n), density, seed)
    return PairedDataset(g1.embed(P), g2.embed(P), P, seed, (g1, g2))


def _von_mises_mixture(centers, kappa, floor, name):
    centers = np.asarray(centers, dtype=float)

    def weight(theta):
        theta = np.asarray(theta, dtype=float)
        bumps = np.exp(kappa * (np.cos(theta[..., None] - centers) - 1.0)).sum(axis=-1)
        return floor + bumps

    weight.__name__ = name
    return weight


def _cosine(theta):
    return (58.0 / 50.0) * (0.48 * np.cos(theta) + 0.52)


def _arctan(theta):
    return np.arctan(0.5 * np.tan(theta)) / np.pi


def _uniform(theta):
    theta = np.asarray(theta)
    return np.ones(theta.shape[0] if theta.ndim else ())


def _reciprocal_cube_cosine(theta):
    return _cosine(theta) ** -3


_cosine.__name__ = "cosine"
_arctan.__name__ = "arctan"
_uniform.__name__ = "uniform"
_reciprocal_cube_cosine.__name__ = "reciprocal_cube_cosine"

# Case 1-4 are stand-in landmark weights (smooth bump mixtures); no closed
# forms exist for the original four landmark distributions.
BUILTIN_DENSITIES = {
    "uniform": _uniform,
    "cosine": _cosine,
    "arctan": _arctan,
    "reciprocal_cube_cosine": _reciprocal_cube_cosine,
    "case1": _von_mises_mixture([0.0], 2.0, 0.1, "case1"),
    "case2": _von_mises_mixture([np.pi / 2, -np.pi / 2], 3.0, 0.1, "case2"),
    "case3": _von_mises_mixture([np.pi], 1.0, 0.2, "case3"),
    "case4": _von_mises_mixture([-2.5, 0.3, 2.0], 4.0, 0.05, "case4"),
}


def builtin_density(name):
    """Look up a named weight function on the latent domain.

    ``"cosine"`` is ``(58/50)(0.48 cos t + 0.52)``, ``"arctan"`` is
    ``arctan(tan(t) / 2) / pi`` (negative on half the circle; clamped when
    sampled), ``"reciprocal_cube_cosine"`` is the cosine weight to the power
    -3, and ``"case1"`` .. ``"case4"`` are bump mixtures.  Weights need not be
    normalized.
    """
    try:
        return BUILTIN_DENSITIES[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown density {name!r}; choose from {sorted(BUILTIN_DENSITIES)}") from None
