"""Quadrature realization of the continuous landmark AD operator.

With ``K_l(x, y) = exp(-||i_l(x) - i_l(y)||^2 / eps_l)``, data measure
``nu`` and landmark measure ``nu_Z``::

    K2_lan(z, z') = int K2(z, x) K2(x, z') dnu(x)
    d2_lan(z)     = int K2_lan(z, z') dnu_Z(z')
    K_a(x, y)     = int K1(x, z') K2(z', y) / d2_lan(z')**alpha dnu_Z(z')
    d_a(x)        = int K_a(x, y) dnu(y)
    T_a f(x)      = int K_a(x, y) f(y) dnu(y) / d_a(x)

Every integral is a weighted sum over one latent grid.  Curves use the
periodic trapezoid rule; spheres use Gauss-Legendre nodes in the cosine of
the polar angle times a periodic grid in azimuth; tori use a periodic
tensor grid.  Kernel sums against a grid vector are done by FFT when the
embedding makes the kernel circulant along the periodic coordinate (circles,
spheres) and by blocked dense products otherwise.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_alpha, check_positive_real
from .exceptions import InvalidArgumentError, ResolutionError
from .manifolds import builtin_density, make_generator

DEFAULT_RESOLUTION = {"S1": (2 ** 14,), "S2": (256, 512), "T2": (96, 96)}
NODES_PER_BANDWIDTH = 8
_BLOCK = 1024


@dataclass(frozen=True)
class QuadratureScheme:
    """Latent grid with volume weights and a normalized sampling measure.

    Attributes
    ----------
    nodes : ndarray, shape (N, d)
        Latent parameters of the grid.
    volume_weights : ndarray, shape (N,)
        Quadrature weights for the Riemannian volume of ``generator``;
        they sum to the volume of the manifold.
    weights : ndarray, shape (N,)
        ``volume_weights * density`` normalized to total mass 1.
    resolution : tuple of int
        Nodes per latent coordinate.
    """

    generator: object
    nodes: np.ndarray
    volume_weights: np.ndarray
    weights: np.ndarray
    resolution: tuple
    density_id: str = "uniform"


def _grid(g, resolution):
    if g.domain == "S1":
        (N,) = resolution
        t = -np.pi + 2 * np.pi * np.arange(N) / N
        nodes = t[:, None]
        base = np.full(N, 2 * np.pi / N)
    elif g.domain == "T2":
        Nu, Nv = resolution
        u = 2 * np.pi * np.arange(Nu) / Nu
        v = 2 * np.pi * np.arange(Nv) / Nv
        U, V = np.meshgrid(u, v, indexing="ij")
        nodes = np.column_stack([U.ravel(), V.ravel()])
        base = np.full(len(nodes), 4 * np.pi ** 2 / (Nu * Nv))
    else:
        Nt, Np = resolution
        x, w = np.polynomial.legendre.leggauss(Nt)
        theta = np.arccos(x[::-1])
        w = w[::-1]
        phi = -np.pi + 2 * np.pi * np.arange(Np) / Np
        T, P = np.meshgrid(theta, phi, indexing="ij")
        nodes = np.column_stack([T.ravel(), P.ravel()])
        # d(cos theta) already absorbs sin(theta); divide it back out so that
        # base * volume_element integrates the volume
        base = (np.repeat(w, Np) * 2 * np.pi / Np) / np.sin(nodes[:, 0])
    return nodes, base


def make_scheme(generator, density=None, resolution=None):
    """Quadrature scheme on the latent grid of ``generator``.

    Parameters
    ----------
    generator : ManifoldGenerator or name
        Its volume element defines the reference measure (sensor 2).
    density : callable, str or None
        Unnormalized weight relative to that volume; ``None`` is uniform.
    resolution : tuple of int, optional
    """
    g = make_generator(generator)
    resolution = tuple(resolution or DEFAULT_RESOLUTION[g.domain])
    if len(resolution) != g.intrinsic_dim:
        raise InvalidArgumentError(f"resolution {resolution} does not match {g.domain}")
    nodes, base = _grid(g, resolution)
    lat = nodes[:, 0] if g.intrinsic_dim == 1 else nodes
    vol = base * g.volume_element(nodes)
    if density is None:
        density = "uniform"
    density_id = density if isinstance(density, str) else getattr(density, "__name__", "custom")
    fn = builtin_density(density) if isinstance(density, str) else density
    dens = np.clip(np.broadcast_to(np.asarray(fn(lat), dtype=float), (len(nodes),)), 0, None)
    mass = vol * dens
    if not mass.sum() > 0:
        raise InvalidArgumentError("density has zero mass on the grid")
    return QuadratureScheme(g, nodes, vol, mass / mass.sum(), resolution, density_id)


class _KernelSums:
    """``v -> K v`` for one sensor's Gaussian kernel on a fixed grid."""

    def __init__(self, g, scheme, eps):
        self.g = g
        self.eps = eps
        self.points = g.embed(scheme.nodes)
        self.res = scheme.resolution
        self.mode = "dense"
        if g.rotation_invariant and g.domain == "S1":
            self.mode = "circulant"
            d2 = ((self.points - self.points[0]) ** 2).sum(axis=1)
            self._fhat = np.fft.rfft(np.exp(-d2 / eps))
        elif g.rotation_invariant and g.domain == "S2":
            self.mode = "azimuthal"
            Nt, Np = self.res
            self._theta = scheme.nodes[::Np, 0]
            self._dphi = 2 * np.pi * np.arange(Np) / Np
            self._scale2 = g.params["scale"] ** 2

    def row(self, query_points):
        """Kernel values between arbitrary ambient points and the grid."""
        Q = np.atleast_2d(query_points)
        d2 = ((Q[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-d2 / self.eps)

    def __call__(self, v):
        if self.mode == "circulant":
            # K[i, j] depends on (i - j) mod N and is symmetric
            return np.fft.irfft(self._fhat * np.fft.rfft(v), n=len(v))
        if self.mode == "azimuthal":
            return self._azimuthal(v)
        out = np.empty_like(v)
        for s in range(0, len(v), _BLOCK):
            blk = self.points[s:s + _BLOCK]
            d2 = ((blk[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=-1)
            out[s:s + _BLOCK] = np.exp(-d2 / self.eps) @ v
        return out

    def _azimuthal(self, v):
        Nt, Np = self.res
        V = np.fft.rfft(v.reshape(Nt, Np), axis=1)
        st, ct = np.sin(self._theta), np.cos(self._theta)
        cphi = np.cos(self._dphi)
        out = np.empty((Nt, V.shape[1]), dtype=complex)
        for s in range(0, Nt, 16):
            # chord^2 = 2 s^2 (1 - sin ti sin tj cos dphi - cos ti cos tj)
            inner = (st[s:s + 16, None, None] * st[None, :, None] * cphi[None, None, :]
                     + ct[s:s + 16, None, None] * ct[None, :, None])
            C = np.exp(-2 * self._scale2 * (1 - inner) / self.eps)
            Chat = np.fft.rfft(C, axis=2)
            out[s:s + 16] = np.einsum("ijk,jk->ik", Chat, V)
        return np.fft.irfft(out, n=Np, axis=1).ravel()


def _node_spacing(points, scheme):
    res = scheme.resolution
    P = points.reshape(*res, points.shape[-1])
    gaps = []
    for axis in range(len(res)):
        nxt = np.roll(P, -1, axis=axis)
        d = np.linalg.norm(nxt - P, axis=-1)
        if scheme.generator.domain == "S2" and axis == 0:
            d = d[:-1]  # polar axis is not periodic
        gaps.append(d.max())
    return max(gaps)


def check_resolution(scheme, generator, eps):
    """Raise ResolutionError when fewer than 8 nodes span one bandwidth."""
    h = _node_spacing(generator.embed(scheme.nodes), scheme)
    if np.sqrt(eps) < NODES_PER_BANDWIDTH * h:
        raise ResolutionError(
            f"grid spacing {h:.3g} too coarse for bandwidth sqrt(eps)={np.sqrt(eps):.3g}; "
            f"need at least {NODES_PER_BANDWIDTH} nodes per bandwidth")


class LandmarkOperator:
    """Continuous alpha-LAD objects for one pair of sensors and bandwidths.

    Parameters
    ----------
    generator_pair : (generator1, generator2)
    scheme_data, scheme_lan : QuadratureScheme
        Data and landmark measures.  Both must be built on the same grid.
    eps1 : float
        Sensor-1 bandwidth.
    eps2 : float, optional
        Sensor-2 bandwidth; defaults to ``eps1``.
    """

    def __init__(self, generator_pair, scheme_data, scheme_lan, eps1, eps2=None):
        self.g1, self.g2 = (make_generator(g) for g in generator_pair)
        if self.g1.domain != scheme_data.generator.domain:
            raise InvalidArgumentError("schemes and generators live on different domains")
        if (scheme_data.nodes.shape != scheme_lan.nodes.shape
                or not np.array_equal(scheme_data.nodes, scheme_lan.nodes)):
            raise InvalidArgumentError("data and landmark schemes must share one grid")
        self.eps1 = check_positive_real(eps1, "eps1")
        self.eps2 = self.eps1 if eps2 is None else check_positive_real(eps2, "eps2")
        check_resolution(scheme_data, self.g1, self.eps1)
        check_resolution(scheme_data, self.g2, self.eps2)
        self.data = scheme_data
        self.lan = scheme_lan
        self.K1 = _KernelSums(self.g1, scheme_data, self.eps1)
        self.K2 = _KernelSums(self.g2, scheme_data, self.eps2)
        self._d2 = None
        self._inner = None

    def _inner_mass(self):
        # x -> w(x) * int K2(x, z') dnu_Z(z')
        if self._inner is None:
            self._inner = self.data.weights * self.K2(self.lan.weights)
        return self._inner

    @property
    def landmark_degree_grid(self):
        """``d2_lan`` at every grid node."""
        if self._d2 is None:
            self._d2 = self.K2(self._inner_mass())
        return self._d2

    def landmark_degree(self, z):
        """``d2_lan(z)`` at latent points ``z``."""
        pts = self.g2.embed(self.g2._latent(np.atleast_1d(z) if self.g2.intrinsic_dim == 1
                                            else np.atleast_2d(z)))
        return self.K2.row(pts) @ self._inner_mass()

    def kernel_row(self, x, alpha):
        """``K_a(x, y)`` for every grid node ``y``."""
        alpha = check_alpha(alpha)
        k1 = self.K1.row(self.g1.embed(self._latent(x)))[0]
        g = k1 * self.lan.weights * self.landmark_degree_grid ** -alpha
        return self.K2(g)

    def _latent(self, x):
        x = np.asarray(x, dtype=float)
        return x.reshape(1, self.g1.intrinsic_dim)

    def apply(self, f, x, alpha):
        """``T_a f(x)``.  ``f`` is a callable on latent grids or node values."""
        row = self.kernel_row(x, alpha) * self.data.weights
        fv = self._values(f)
        return float(row @ fv / row.sum())

    def degree(self, x, alpha):
        """``d_a(x)``."""
        return float(self.kernel_row(x, alpha) @ self.data.weights)

    def _values(self, f):
        if callable(f):
            nodes = self.data.nodes
            return np.asarray(f(nodes[:, 0] if self.g1.intrinsic_dim == 1 else nodes), float)
        return np.asarray(f, float)

    def ad_apply(self, f, x):
        """Alternating diffusion operator without landmarks:
        ``int K1(x,z)/d1(x) int K2(z,y)/d_2(z) f(y) dnu(y) dnu(z)``."""
        w = self.data.weights
        fv = self._values(f)
        inner = self.K2(w * fv) / self.K2(w)
        k1 = self.K1.row(self.g1.embed(self._latent(x)))[0] * w
        return float(k1 @ inner / k1.sum())


def landmark_degree(z, scheme_data, scheme_lan, eps, generator_pair=None):
    """Landmark degree ``d2_lan(z)`` by nested quadrature.

    ``generator_pair`` defaults to the scheme generator for both sensors.
    """
    pair = generator_pair or (scheme_data.generator, scheme_data.generator)
    return LandmarkOperator(pair, scheme_data, scheme_lan, eps).landmark_degree(z)


def continuous_operator(f, x, eps, alpha, scheme_data, scheme_lan, generator_pair=None):
    """``T_{lan,eps,alpha} f(x)`` by quadrature."""
    pair = generator_pair or (scheme_data.generator, scheme_data.generator)
    return LandmarkOperator(pair, scheme_data, scheme_lan, eps).apply(f, x, alpha)


def discrete_operator_row(dataset, landmarks, f_values, i, eps, alpha):
    """``[(I - M_alpha) f](i) / eps`` for the landmark AD matrix of the sample."""
    from .diffusion import build_lad

    model = build_lad(dataset, landmarks, eps, eps, alpha)
    row = model.M1bar[i] @ (model.M2bar.T @ f_values)
    return float((f_values[i] - row) / eps)


def discrete_operator_deviation(dataset, landmarks, f, i, eps, alpha, operator):
    """``|discrete row action - (f(x_i) - T f(x_i)) / eps|``.

    Parameters
    ----------
    dataset : PairedDataset
        Must carry latent parameters.
    landmarks : LandmarkSet
    f : callable on latent parameters
    i : int
        Row whose action is compared.
    eps, alpha : float
    operator : LandmarkOperator
        Oracle built for the same bandwidth, generators and measures.
    """
    if dataset.params is None:
        raise InvalidArgumentError("the oracle needs latent parameters")
    lat = dataset.params[:, 0] if dataset.params.shape[1] == 1 else dataset.params
    fv = np.asarray(f(lat), float)
    disc = discrete_operator_row(dataset, landmarks, fv, i, eps, alpha)
    x = dataset.params[i]
    cont = (fv[i] - operator.apply(f, x, alpha)) / eps
    return abs(disc - cont)
