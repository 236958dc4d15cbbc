"""Alternating diffusion and alpha-normalized landmark alternating diffusion.

Conventions
-----------
The default start sensor is sensor 2: the alternating diffusion matrix is
``M = M1 @ M2`` so a mass vector diffuses on sensor 2 first and on sensor 1
last.  Starting on sensor 1 swaps the roles.  Inside :class:`LadModel` the
suffix ``1`` always names the *ending* sensor and ``2`` the *starting*
sensor, so with ``start_sensor="sensor1"`` ``W1bar`` holds sensor-2
affinities.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import (check_alpha, check_paired, check_points,
                          check_positive_int, check_positive_real)
from .exceptions import (ImaginaryPartWarning, InvalidArgumentError,
                         ResidualWarning, SolverError, TruncationWarning)
from .kernels import as_config, build_affinity

RANK_FLOOR = 1e-12
IMAG_TOLERANCE = 1e-6
RESIDUAL_TOLERANCE = 1e-8
START_SENSORS = ("sensor1", "sensor2")


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _sensors(dataset):
    """Pull the two aligned point clouds out of a dataset-like object."""
    if hasattr(dataset, "sensor1"):
        return dataset.sensor1, dataset.sensor2
    if hasattr(dataset, "points1"):
        return dataset.points1, dataset.points2
    X1, X2 = dataset
    return X1, X2


def _check_start(start_sensor):
    if start_sensor not in START_SENSORS:
        raise InvalidArgumentError(
            f"start_sensor must be one of {START_SENSORS}, got {start_sensor!r}")
    return start_sensor


@dataclass(frozen=True)
class AdModel:
    """Row-stochastic matrices of alternating diffusion on ``n`` samples."""

    M1: np.ndarray
    M2: np.ndarray
    M: np.ndarray
    eps1: float
    eps2: float
    start_sensor: str = "sensor2"

    @property
    def n(self):
        return self.M.shape[0]


@dataclass(frozen=True)
class LadModel:
    """Landmark matrices of alpha-LAD for fixed bandwidths and ``alpha``.

    ``D2bar`` and ``D1bar`` hold the diagonals of the degree matrices.
    """

    W1bar: np.ndarray
    W2bar: np.ndarray
    D2bar: np.ndarray
    M2bar: np.ndarray
    D1bar: np.ndarray
    M1bar: np.ndarray
    alpha: float
    eps1: float
    eps2: float
    start_sensor: str = "sensor2"
    ending_landmarks: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.M1bar.shape[0]

    @property
    def m(self):
        return self.M1bar.shape[1]

    def small_matrix(self):
        """The m x m matrix ``M2bar.T @ M1bar`` that is decomposed."""
        return self.M2bar.T @ self.M1bar

    def full_matrix(self):
        """The n x n landmark AD matrix ``M1bar @ M2bar.T``.  O(n^2 m)."""
        return self.M1bar @ self.M2bar.T

    def apply(self, f):
        """Landmark AD matrix times ``f`` in O(nm) without forming it."""
        return self.M1bar @ (self.M2bar.T @ f)

    def extend(self, queries):
        """Rows of ``M1bar`` for new ending-sensor points.

        The starting-sensor side (``M2bar``) stays that of the fitted data.
        """
        W = build_affinity(queries, self.ending_landmarks, self.eps1)
        deg = W @ self.M2bar.sum(axis=0)
        return W / deg[:, None]



@dataclass(frozen=True)
class SpectralResult:
    """Leading eigenpairs of a diffusion matrix.

    Attributes
    ----------
    eigenvalues : ndarray of complex, shape (k,)
        Sorted by descending modulus, then descending real part, then
        solver order.
    eigenvectors : ndarray, shape (n, k)
        Real basis of the right eigenvectors, unit 2-norm, with the entry of
        largest magnitude positive.  Real eigenvalues contribute their
        (real) eigenvector; a conjugate pair contributes the real and
        imaginary parts of one member.
    max_imag_ratio : float
        Largest ``|Im l| / |l|`` among retained eigenvalues.
    rank_hint : int
        Number of eigenvalues with modulus above the rank floor.
    residuals : ndarray, shape (k,)
        ``||A u - l u|| / ||u||`` for every retained pair.
    spectrum : ndarray of complex
        All eigenvalues of the decomposed matrix in sorted order.
    landmark_vectors : ndarray or None, shape (m, k)
        For landmark models, the m x m eigenvectors scaled so that
        ``M1bar @ landmark_vectors`` reproduces ``eigenvectors``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    max_imag_ratio: float
    rank_hint: int
    residuals: np.ndarray
    spectrum: np.ndarray
    landmark_vectors: np.ndarray = None
    warnings: tuple = ()

    @property
    def spectral_gap(self):
        """Distance of the second eigenvalue modulus from 1."""
        if len(self.spectrum) < 2:
            return float("nan")
        return float(1.0 - abs(self.spectrum[1]))


@dataclass(frozen=True)
class Embedding:
    """Diffusion coordinates ``coords[i] = u_i * l**t`` for q nontrivial pairs."""

    coords: np.ndarray
    diffusion_time: float
    eigenvalues_used: np.ndarray
    start_sensor: str
    metadata: dict = field(default_factory=dict)

    @property
    def q(self):
        return self.coords.shape[1]


def _sort_order(vals):
    idx = np.arange(len(vals))
    return np.lexsort((idx, -vals.real, -np.abs(vals)))


def _realify(U, lam):
    """Real basis of the retained eigenvectors.

    A conjugate pair ``(l, conj(l))`` sorts into adjacent columns; it is
    represented by the real and imaginary parts of the first vector, which
    span the same real invariant subspace.  Otherwise real parts are used.
    """
    R = np.array(U.real, copy=True)
    j = 0
    while j < len(lam) - 1:
        if lam[j].imag != 0 and lam[j + 1] == np.conj(lam[j]):
            R[:, j + 1] = U[:, j].imag
            j += 2
        else:
            j += 1
    return R


def _normalize_columns(U):
    """Unit 2-norm columns with the largest-magnitude real entry positive."""
    norms = np.linalg.norm(U, axis=0)
    norms[norms == 0] = 1.0
    scale = 1.0 / norms
    R = U * scale
    pivot = np.argmax(np.abs(R), axis=0)
    signs = np.sign(R[pivot, np.arange(R.shape[1])])
    signs[signs == 0] = 1.0
    return scale * signs


def _eig(A):
    try:
        vals, vecs = scipy.linalg.eig(A, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"dense eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise SolverError("eigensolver returned non-finite eigenvalues")
    return vals, vecs


def _retain(vals, k, rank_floor, notes):
    rank = int(np.sum(np.abs(vals) > rank_floor))
    if k > rank:
        msg = f"requested {k} eigenpairs but only {rank} exceed the rank floor {rank_floor:g}"
        warnings.warn(msg, TruncationWarning, stacklevel=3)
        notes.append(msg)
        k = rank
    return k, rank


def _imag_ratio(vals, imag_tolerance, notes):
    mods = np.abs(vals)
    ratios = np.divide(np.abs(vals.imag), mods, out=np.zeros(len(vals)), where=mods > 0)
    worst = float(ratios.max()) if len(ratios) else 0.0
    if worst > imag_tolerance:
        msg = f"max |Im l|/|l| = {worst:.3g} exceeds imag_tolerance {imag_tolerance:g}"
        warnings.warn(msg, ImaginaryPartWarning, stacklevel=3)
        notes.append(msg)
    return worst


def _check_residuals(res, tol, notes):
    if len(res) and res.max() > tol:
        msg = f"max eigenpair residual {res.max():.3g} exceeds {tol:g}"
        warnings.warn(msg, ResidualWarning, stacklevel=3)
        notes.append(msg)


def _cluster_free(vals, k, tol):
    """True when each of the first ``k`` eigenvalues is isolated."""
    head = vals[:k]
    scale = np.maximum(np.abs(head), 1.0)
    for j, lam in enumerate(head):
        others = np.delete(vals, j)
        if np.any(others == np.conj(lam)) and lam.imag != 0:
            others = others[others != np.conj(lam)]
        if len(others) and np.min(np.abs(others - lam)) < tol * scale[j]:
            return False
    return True


def _inverse_iteration(A, lam, n_iter=3, seed=0):
    """Eigenvectors of ``A`` for known isolated eigenvalues ``lam``.

    One LU factorization of the slightly shifted ``A - l I`` per
    eigenvalue; the second member of a conjugate pair reuses the first.
    """
    n = A.shape[0]
    x0 = np.random.default_rng(seed).standard_normal(n)
    U = np.empty((n, len(lam)), dtype=complex)
    for j, l in enumerate(lam):
        if j and l.imag != 0 and l == np.conj(lam[j - 1]):
            U[:, j] = np.conj(U[:, j - 1])
            continue
        shift = l + 1e-10 * max(abs(l), 1.0)
        B = A.astype(complex if l.imag else float) - shift.real * np.eye(n)
        if l.imag:
            B[np.diag_indices(n)] -= 1j * shift.imag
        lu = scipy.linalg.lu_factor(B, check_finite=False)
        x = x0.astype(B.dtype)
        for _ in range(n_iter):
            x = scipy.linalg.lu_solve(lu, x, check_finite=False)
            x /= np.linalg.norm(x)
        U[:, j] = x
    return U


def dense_spectrum(A, k, rank_floor=RANK_FLOOR, imag_tolerance=IMAG_TOLERANCE,
                   residual_tol=RESIDUAL_TOLERANCE, method="auto"):
    """Leading ``k`` eigenpairs of a dense (nonsymmetric) square matrix.

    Parameters
    ----------
    A : ndarray, shape (n, n)
    k : int
        Number of leading eigenpairs.
    method : {"auto", "full", "inverse"}
        ``"full"`` computes every eigenvector with one dense solve.
        ``"inverse"`` computes all eigenvalues and then only the ``k``
        retained eigenvectors by inverse iteration, which roughly halves
        the cost for large ``n``.  It falls back to ``"full"`` when a
        retained eigenvalue is not isolated or a residual is too large.
        ``"auto"`` uses ``"inverse"`` for ``n > 500`` and ``k <= n / 10``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    k = check_positive_int(k, "k", 1, n)
    if method not in ("auto", "full", "inverse"):
        raise InvalidArgumentError(f"unknown eigensolver method {method!r}")
    if method == "auto":
        method = "inverse" if n > 500 and 10 * k <= n else "full"
    notes = []
    U = None
    if method == "inverse":
        try:
            vals = scipy.linalg.eigvals(A, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"dense eigensolver failed: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise SolverError("eigensolver returned non-finite eigenvalues")
        vals = vals[_sort_order(vals)]
        k, rank = _retain(vals, k, rank_floor, notes)
        lam = vals[:k]
        if _cluster_free(vals, k, 1e-8):
            U = _inverse_iteration(A, lam)
            res = np.linalg.norm(A @ U - U * lam, axis=0)
            if res.max() > residual_tol:
                U = None
    if U is None:
        notes = []
        vals, vecs = _eig(A)
        order = _sort_order(vals)
        vals, vecs = vals[order], vecs[:, order]
        k, rank = _retain(vals, k, rank_floor, notes)
        lam, U = vals[:k], vecs[:, :k]
        res = (np.linalg.norm(A @ U - U * lam, axis=0)
               / np.linalg.norm(U, axis=0))
    _check_residuals(res, residual_tol, notes)
    worst = _imag_ratio(lam, imag_tolerance, notes)
    if not np.any(lam.imag):
        U = U.real
    U = _realify(U, lam)
    U = U * _normalize_columns(U)
    return SpectralResult(_frozen(lam), _frozen(U), worst, rank, _frozen(res),
                          _frozen(vals), warnings=tuple(notes))


def build_ad(dataset, cfg1, cfg2, start_sensor="sensor2"):
    """Alternating diffusion matrix ``M = D1^-1 W1 @ D2^-1 W2``.

    Parameters
    ----------
    dataset : PairedDataset or (sensor1, sensor2)
    cfg1, cfg2 : KernelConfig or float
        Bandwidths; ``None`` resolves to the median squared distance.
    start_sensor : {"sensor2", "sensor1"}
        Sensor whose diffusion is applied first.  ``"sensor1"`` gives
        ``M = M2 @ M1``.
    """
    X1, X2 = check_paired(*_sensors(dataset))
    start_sensor = _check_start(start_sensor)
    cfg1 = as_config(cfg1).resolve(X1)
    cfg2 = as_config(cfg2).resolve(X2)
    W1 = build_affinity(X1, X1, cfg1)
    W2 = build_affinity(X2, X2, cfg2)
    M1 = W1 / W1.sum(axis=1, keepdims=True)
    M2 = W2 / W2.sum(axis=1, keepdims=True)
    M = M1 @ M2 if start_sensor == "sensor2" else M2 @ M1
    return AdModel(_frozen(M1), _frozen(M2), _frozen(M), cfg1.epsilon, cfg2.epsilon,
                   start_sensor)


def ad_spectrum(model, k, **kwargs):
    """Leading ``k`` eigenpairs of the n x n alternating diffusion matrix."""
    return dense_spectrum(model.M, k, **kwargs)


def _signed_power(lam, t):
    return np.sign(lam) * np.abs(lam) ** t


def _embed(spec, q, t, start_sensor, meta):
    t = check_positive_real(t, "t")
    avail = spec.eigenvectors.shape[1] - 1
    if avail < 1:
        raise SolverError("no nontrivial eigenpair above the rank floor")
    q = min(q, avail)
    lam = spec.eigenvalues[1:q + 1].real
    coords = spec.eigenvectors[:, 1:q + 1] * _signed_power(lam, t)
    meta = dict(meta, max_imag_ratio=spec.max_imag_ratio, t=t,
                start_sensor=start_sensor,
                eigenvalues=[complex(v) for v in spec.eigenvalues[:q + 1]],
                spectral_gap=spec.spectral_gap, warnings=list(spec.warnings))
    return Embedding(_frozen(coords), t, _frozen(lam.copy()), start_sensor, meta)


def ad_embed(model, q, t=1.0, imag_tolerance=IMAG_TOLERANCE, spectrum=None):
    """Diffusion embedding from the AD matrix, trivial pair dropped.

    A precomputed ``spectrum`` with at least ``q + 1`` pairs is reused.
    """
    q = check_positive_int(q, "q", 1, model.n - 1)
    spec = spectrum or ad_spectrum(model, q + 1, imag_tolerance=imag_tolerance)
    meta = {"eps1": model.eps1, "eps2": model.eps2, "alpha": None}
    return _embed(spec, q, t, model.start_sensor, meta)


def build_lad(dataset, landmarks, cfg1, cfg2, alpha=0.5, start_sensor="sensor2"):
    """Landmark matrices of alpha-LAD.

    Parameters
    ----------
    dataset : PairedDataset or (sensor1, sensor2)
    landmarks : LandmarkSet or (points1, points2)
        Paired landmarks; ``points1`` live in sensor-1 space.
    cfg1, cfg2 : KernelConfig or float
        Bandwidths of sensor 1 and sensor 2.  ``None`` resolves to the
        median squared distance of the corresponding data sensor.
    alpha : float in [0, 1]
        Exponent applied to the landmark degree of the starting sensor.
    start_sensor : {"sensor2", "sensor1"}

    Returns
    -------
    LadModel
    """
    X1, X2 = check_paired(*_sensors(dataset))
    A1, A2 = check_paired(*_sensors(landmarks), min_rows=1)
    n, m = X1.shape[0], A1.shape[0]
    if m > n:
        raise InvalidArgumentError(f"landmark count m={m} exceeds sample count n={n}")
    alpha = check_alpha(alpha)
    start_sensor = _check_start(start_sensor)
    cfg1 = as_config(cfg1).resolve(X1)
    cfg2 = as_config(cfg2).resolve(X2)
    if start_sensor == "sensor1":
        X1, X2, A1, A2, cfg1, cfg2 = X2, X1, A2, A1, cfg2, cfg1
    W1bar = build_affinity(X1, A1, cfg1)
    W2bar = build_affinity(X2, A2, cfg2)
    return lad_from_affinities(W1bar, W2bar, alpha, cfg1.epsilon, cfg2.epsilon,
                               start_sensor, A1)


def lad_from_affinities(W1bar, W2bar, alpha=0.5, eps1=None, eps2=None,
                        start_sensor="sensor2", ending_landmarks=None):
    """Landmark matrices from precomputed n x m affinities.

    ``W1bar`` belongs to the ending sensor and ``W2bar`` to the starting
    sensor.  Bandwidths and landmarks are only recorded.
    """
    W1bar = np.asarray(W1bar, dtype=np.float64)
    W2bar = np.asarray(W2bar, dtype=np.float64)
    if W1bar.ndim != 2 or W1bar.shape != W2bar.shape:
        raise InvalidArgumentError(f"affinity shapes differ: {W1bar.shape} vs {W2bar.shape}")
    if np.any(W1bar < 0) or np.any(W2bar < 0):
        raise InvalidArgumentError("affinities must be nonnegative")
    alpha = check_alpha(alpha)
    # zero degrees only arise when the kernel underflows for a tiny bandwidth
    D2bar = W2bar.T @ W2bar.sum(axis=1)
    if not np.all(D2bar > 0):
        raise SolverError("a landmark has zero degree; the bandwidth is too small")
    M2bar = W2bar * D2bar ** -alpha
    D1bar = W1bar @ M2bar.sum(axis=0)
    if not np.all(D1bar > 0):
        raise SolverError("a sample has zero degree; the bandwidth is too small")
    M1bar = W1bar / D1bar[:, None]
    if ending_landmarks is not None:
        ending_landmarks = _frozen(ending_landmarks)
    return LadModel(_frozen(W1bar), _frozen(W2bar), _frozen(D2bar), _frozen(M2bar),
                    _frozen(D1bar), _frozen(M1bar), alpha, eps1, eps2,
                    start_sensor, ending_landmarks)


def lad_spectrum(model, k, rank_floor=RANK_FLOOR, imag_tolerance=IMAG_TOLERANCE,
                 residual_tol=RESIDUAL_TOLERANCE):
    """Eigenpairs of the landmark AD matrix via the m x m matrix.

    The m x m matrix ``M2bar.T @ M1bar = V L V^-1`` is decomposed densely and
    its eigenvectors are carried to the samples as ``U = M1bar @ V``; each
    column of ``U`` is a right eigenvector of ``M1bar @ M2bar.T`` with the
    same eigenvalue.
    """
    k = check_positive_int(k, "k", 1, model.m)
    vals, V = _eig(model.small_matrix())
    order = _sort_order(vals)
    vals, V = vals[order], V[:, order]
    notes = []
    k, rank = _retain(vals, k, rank_floor, notes)
    lam, V = vals[:k], V[:, :k]
    U = model.M1bar @ V
    res = (np.linalg.norm(model.apply(U) - U * lam, axis=0)
           / np.linalg.norm(U, axis=0))
    _check_residuals(res, residual_tol, notes)
    worst = _imag_ratio(lam, imag_tolerance, notes)
    U, V = _realify(U, lam), _realify(V, lam)
    scale = _normalize_columns(U)
    U, V = U * scale, V * scale
    return SpectralResult(_frozen(lam), _frozen(U), worst,
                          rank, _frozen(res), _frozen(vals), _frozen(V),
                          warnings=tuple(notes))


def lad_embed(model, q, t=1.0, imag_tolerance=IMAG_TOLERANCE, spectrum=None):
    """alpha-LAD embedding ``e_i^T U_q diag(l_2..l_{q+1})^t``.

    A precomputed ``spectrum`` with at least ``q + 1`` pairs is reused.
    """
    q = check_positive_int(q, "q", 1, model.m - 1)
    spec = spectrum or lad_spectrum(model, q + 1, imag_tolerance=imag_tolerance)
    meta = {"eps1": model.eps1, "eps2": model.eps2, "alpha": model.alpha}
    if model.start_sensor == "sensor1":
        meta["eps1"], meta["eps2"] = model.eps2, model.eps1
    return _embed(spec, q, t, model.start_sensor, meta)


def diffusion_map(points, cfg, q, t=1.0):
    """Single-sensor diffusion map from ``D^-1 W``.

    The row-stochastic matrix is similar to the symmetric
    ``D^-1/2 W D^-1/2``, so the eigenproblem is solved with a symmetric
    solver and mapped back with ``u = D^-1/2 phi``.
    """
    X = check_points(points, "points", min_rows=2)
    q = check_positive_int(q, "q", 1, X.shape[0] - 1)
    cfg = as_config(cfg).resolve(X)
    W = build_affinity(X, X, cfg)
    d = W.sum(axis=1)
    s = 1.0 / np.sqrt(d)
    S = W * s[:, None] * s[None, :]
    try:
        vals, phi = scipy.linalg.eigh(S, subset_by_index=[X.shape[0] - q - 1, X.shape[0] - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"symmetric eigensolver failed: {exc}") from exc
    vals, phi = vals[::-1], phi[:, ::-1]
    U = phi * s[:, None]
    M = W / d[:, None]
    res = np.linalg.norm(M @ U - U * vals, axis=0) / np.linalg.norm(U, axis=0)
    U = U * _normalize_columns(U)
    spec = SpectralResult(_frozen(vals.astype(complex)), _frozen(U), 0.0,
                          int(np.sum(np.abs(vals) > RANK_FLOOR)), _frozen(res),
                          _frozen(vals.astype(complex)))
    return _embed(spec, q, t, "single", {"eps": cfg.epsilon, "alpha": None})
