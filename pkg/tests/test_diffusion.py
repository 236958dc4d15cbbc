import math
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ladfusion.diffusion import (AdModel, ad_embed, ad_spectrum, build_ad, build_lad,
                                 dense_spectrum, diffusion_map, lad_embed,
                                 lad_from_affinities, lad_spectrum)
from ladfusion.exceptions import (ImaginaryPartWarning, InvalidArgumentError, SolverError,
                                  TruncationWarning)
from ladfusion.kernels import build_affinity, median_sq_distance
from ladfusion.landmarks import explicit, uniform_subset
from ladfusion.manifolds import sample_pair
from ladfusion.metrics import eigenvector_alignment, subspace_alignment

from conftest import random_pair

ALPHAS = [0.0, 0.25, 0.5, 0.75, 1.0]


def _circle_r2(coords, theta):
    """Pooled R^2 of the columns against span{1, cos, sin}."""
    B = np.column_stack([np.ones_like(theta), np.cos(theta), np.sin(theta)])
    coef = np.linalg.lstsq(B, coords, rcond=None)[0]
    res = ((coords - B @ coef) ** 2).sum()
    return 1.0 - res / ((coords - coords.mean(axis=0)) ** 2).sum()


def _random_lad(seed, alpha=0.5, n=None, m=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(20, 120))
    m = m or int(rng.integers(2, min(n, 30) + 1))
    X1, X2 = random_pair(rng, n)
    idx = rng.choice(n, m, replace=False)
    eps1 = 0.5 * median_sq_distance(X1)
    eps2 = 0.5 * median_sq_distance(X2)
    return build_lad((X1, X2), (X1[idx], X2[idx]), eps1, eps2, alpha)


# ---------------------------------------------------------------- AD

def test_ad_two_points_hand_product():
    d, eps = 0.7, 0.3
    X = np.array([[0.0], [d]])
    model = build_ad((X, X), eps, eps)
    k = math.exp(-d * d / eps)
    a = (1 + k * k) / (1 + k) ** 2
    np.testing.assert_allclose(model.M, [[a, 1 - a], [1 - a, a]], atol=1e-15)


def test_ad_matches_explicit_product(rng):
    X1, X2 = random_pair(rng, 30)
    model = build_ad((X1, X2), 1.3, 0.4)
    W1 = np.exp(-((X1[:, None] - X1[None]) ** 2).sum(-1) / 1.3)
    W2 = np.exp(-((X2[:, None] - X2[None]) ** 2).sum(-1) / 0.4)
    M = np.diag(1 / W1.sum(1)) @ W1 @ np.diag(1 / W2.sum(1)) @ W2
    np.testing.assert_allclose(model.M, M, atol=1e-14)
    swapped = build_ad((X1, X2), 1.3, 0.4, start_sensor="sensor1")
    np.testing.assert_allclose(swapped.M, model.M2 @ model.M1, atol=1e-15)


@given(st.integers(0, 10_000))
def test_ad_row_stochastic(seed):
    rng = np.random.default_rng(seed)
    X1, X2 = random_pair(rng, int(rng.integers(2, 60)))
    model = build_ad((X1, X2), None, None)
    np.testing.assert_allclose(model.M.sum(axis=1), 1.0, atol=1e-12)


def test_ad_scale_covariance(rng):
    X1, X2 = random_pair(rng, 40)
    a = build_ad((X1, X2), 0.8, 0.5)
    b = build_ad((10 * X1, 10 * X2), 80.0, 50.0)
    np.testing.assert_allclose(a.M, b.M, atol=1e-12)


def test_ad_rejects_nonfinite():
    X = np.array([[0.0], [np.nan]])
    with pytest.raises(InvalidArgumentError):
        build_ad((X, X), 1.0, 1.0)


def test_identity_matrix_degenerate_case():
    I = np.eye(5)
    model = AdModel(I, I, I, 1.0, 1.0)
    spec = ad_spectrum(model, 4)
    np.testing.assert_allclose(spec.eigenvalues, 1.0)
    U = spec.eigenvectors
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-12)
    emb = ad_embed(model, 3)
    np.testing.assert_allclose(emb.coords.T @ emb.coords, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_ad_circle_harmonics(seed):
    d = sample_pair(("circle", "circle"), 64, seed=seed)
    emb = ad_embed(build_ad(d, None, None), 2)
    assert _circle_r2(emb.coords, d.params[:, 0]) >= 0.99


def test_ad_trivial_pair(rng):
    X1, X2 = random_pair(rng, 50)
    spec = ad_spectrum(build_ad((X1, X2), None, None), 3)
    assert spec.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    u = spec.eigenvectors[:, 0]
    assert np.ptp(u) / np.abs(u).mean() <= 1e-8
    assert np.all(np.abs(spec.spectrum) <= 1 + 1e-10)


def test_ad_embedding_scaling(rng):
    X1, X2 = random_pair(rng, 40)
    model = build_ad((X1, X2), None, None)
    spec = ad_spectrum(model, 4)
    emb = ad_embed(model, 3, t=2.0)
    lam = spec.eigenvalues[1:4].real
    np.testing.assert_allclose(emb.coords, spec.eigenvectors[:, 1:4] * lam ** 2, atol=1e-12)
    assert emb.start_sensor == "sensor2"
    assert emb.metadata["alpha"] is None


# ---------------------------------------------------------------- spectrum

@pytest.mark.filterwarnings("ignore::ladfusion.exceptions.ImaginaryPartWarning")
def test_spectrum_sorting_and_normalization(rng):
    A = rng.random((30, 30))
    A /= A.sum(axis=1, keepdims=True)
    spec = dense_spectrum(A, 10)
    mods = np.abs(spec.spectrum)
    assert np.all(np.diff(mods) <= 1e-15)
    U = spec.eigenvectors
    np.testing.assert_allclose(np.linalg.norm(U, axis=0), 1.0)
    pivots = U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])]
    assert np.all(pivots > 0)


def test_spectrum_ties_broken_by_real_part():
    A = np.diag([-0.5, 0.5, 1.0, 0.2])
    spec = dense_spectrum(A, 4)
    np.testing.assert_allclose(spec.eigenvalues.real, [1.0, 0.5, -0.5, 0.2])


def test_conjugate_pair_real_basis():
    c, s = math.cos(0.4), math.sin(0.4)
    A = np.array([[1.0, 0, 0], [0, 0.5 * c, -0.5 * s], [0, 0.5 * s, 0.5 * c]])
    with pytest.warns(ImaginaryPartWarning):
        spec = dense_spectrum(A, 3)
    assert spec.max_imag_ratio == pytest.approx(s, rel=1e-12)
    assert spec.eigenvectors.dtype == np.float64
    # columns 2 and 3 span the rotation plane
    assert subspace_alignment(spec.eigenvectors[:, 1:], np.eye(3)[:, 1:]) == pytest.approx(1.0)


def test_spectrum_truncation_warning():
    A = np.zeros((4, 4))
    A[0, 0] = 1.0
    A[1, 1] = 0.5
    with pytest.warns(TruncationWarning):
        spec = dense_spectrum(A, 3)
    assert spec.rank_hint == 2
    assert len(spec.eigenvalues) == 2


def test_spectrum_nonfinite_is_solver_error():
    A = np.eye(3)
    A[0, 1] = np.nan
    with pytest.raises(SolverError):
        dense_spectrum(A, 2)


def test_spectrum_rejects_nonsquare():
    with pytest.raises(InvalidArgumentError):
        dense_spectrum(np.ones((3, 2)), 1)


def test_inverse_iteration_matches_full_solver():
    d = sample_pair(("ellipse", "circle"), 600, seed=3)
    model = build_ad(d, None, None)
    full = dense_spectrum(model.M, 6, method="full")
    inv = dense_spectrum(model.M, 6, method="inverse")
    np.testing.assert_allclose(inv.eigenvalues, full.eigenvalues, atol=1e-12)
    np.testing.assert_allclose(inv.eigenvectors, full.eigenvectors, atol=1e-8)
    assert inv.residuals.max() <= 1e-8


def test_inverse_iteration_falls_back_on_clusters():
    A = np.diag([1.0, 0.5, 0.5, 0.1] + [0.01] * 6)
    spec = dense_spectrum(A, 3, method="inverse")
    assert spec.residuals.max() <= 1e-12


# ---------------------------------------------------------------- LAD

def _scalar_lad(x, z, eps1, eps2, alpha):
    """Step-by-step scalar transcription on 1-D points, identical sensors."""
    n, m = len(x), len(z)
    W1 = [[math.exp(-(x[i] - z[k]) ** 2 / eps1) for k in range(m)] for i in range(n)]
    W2 = [[math.exp(-(x[i] - z[k]) ** 2 / eps2) for k in range(m)] for i in range(n)]
    row2 = [sum(W2[i]) for i in range(n)]
    D2 = [sum(W2[i][k] * row2[i] for i in range(n)) for k in range(m)]
    M2 = [[W2[i][k] * D2[k] ** (-alpha) for k in range(m)] for i in range(n)]
    col = [sum(M2[i][k] for i in range(n)) for k in range(m)]
    D1 = [sum(W1[i][k] * col[k] for k in range(m)) for i in range(n)]
    M1 = [[W1[i][k] / D1[i] for k in range(m)] for i in range(n)]
    return W1, W2, D2, M2, D1, M1


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_lad_matches_scalar_transcription(alpha):
    x = [0.0, 0.4, 1.1]
    z = [0.2, 0.9]
    X = np.array(x)[:, None]
    Z = np.array(z)[:, None]
    model = build_lad((X, X), (Z, Z), 0.5, 0.3, alpha)
    ref = _scalar_lad(x, z, 0.5, 0.3, alpha)
    got = (model.W1bar, model.W2bar, model.D2bar, model.M2bar, model.D1bar, model.M1bar)
    for a, b in zip(got, ref):
        np.testing.assert_allclose(a, np.array(b), rtol=1e-14, atol=1e-14)


@given(st.integers(0, 10_000), st.sampled_from(ALPHAS))
def test_lad_row_stochastic(seed, alpha):
    model = _random_lad(seed, alpha)
    np.testing.assert_allclose(model.full_matrix().sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(model.apply(np.ones(model.n)), 1.0, atol=1e-12)
    assert np.all(model.D1bar > 0) and np.all(model.D2bar > 0)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("c1, c2", [(1e-3, 1e3), (1e3, 1.0), (1.0, 1e-3), (7.5, 0.2)])
def test_lad_kernel_scale_invariance(alpha, c1, c2):
    base = _random_lad(11, alpha, n=60, m=12)
    scaled = lad_from_affinities(c1 * base.W1bar, c2 * base.W2bar, alpha)
    np.testing.assert_allclose(scaled.full_matrix(), base.full_matrix(), atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_lad_spectrum_transfer(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 201))
    m = int(rng.integers(2, 41))
    alpha = float(rng.choice(ALPHAS))
    model = _random_lad(seed, alpha, n=n, m=m)
    small = np.linalg.eigvals(model.small_matrix())
    big = np.linalg.eigvals(model.full_matrix())
    small = np.sort_complex(small[np.abs(small) > 1e-10])
    big = np.sort_complex(big[np.abs(big) > 1e-10])
    assert len(small) == len(big)
    np.testing.assert_allclose(small, big, rtol=1e-8, atol=1e-10)


@pytest.mark.filterwarnings("ignore::ladfusion.exceptions.ImaginaryPartWarning")
@pytest.mark.parametrize("alpha", ALPHAS)
def test_lad_extrapolated_vectors_are_eigenvectors(alpha):
    model = _random_lad(4, alpha, n=150, m=30)
    spec = lad_spectrum(model, 10)
    A = model.full_matrix()
    lam = spec.eigenvalues
    U = spec.eigenvectors
    real = lam.imag == 0
    res = np.linalg.norm(A @ U[:, real] - U[:, real] * lam[real].real, axis=0)
    assert res.max() <= 1e-8
    assert spec.residuals.max() <= 1e-8
    assert np.all(np.abs(spec.spectrum) <= 1 + 1e-10)
    np.testing.assert_allclose(model.M1bar @ spec.landmark_vectors, U, atol=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_lad_identical_sensors_real_spectrum(alpha):
    d = sample_pair(("circle", "circle"), 150, seed=2)
    lm = uniform_subset(d, 30, seed=5)
    model = build_lad(d, lm, 0.1, 0.1, alpha)
    spec = lad_spectrum(model, 30)
    assert spec.max_imag_ratio <= 1e-10
    assert np.all(spec.spectrum.real >= -1e-10)


def test_lad_trivial_pair():
    model = _random_lad(9, 0.5, n=100, m=20)
    spec = lad_spectrum(model, 3)
    assert spec.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    u = spec.eigenvectors[:, 0]
    assert np.ptp(u) / np.abs(u).mean() <= 1e-8


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_lad_full_landmarks_match_two_step_diffusion(alpha):
    d = sample_pair(("circle", "circle"), 256, seed=2)
    lm = explicit(d.sensor1, d.sensor2)
    lad = lad_spectrum(build_lad(d, lm, None, None, alpha), 4)
    M = build_ad(d, None, None).M1
    two_step = dense_spectrum(M @ M, 4)
    for j in range(1, 4):
        assert eigenvector_alignment(lad.eigenvectors[:, j], two_step.eigenvectors[:, j]) >= 0.99


def test_lad_embed_time_and_q():
    model = _random_lad(3, 0.5, n=80, m=20)
    spec = lad_spectrum(model, 4)
    e1 = lad_embed(model, 3, t=1.0)
    e2 = lad_embed(model, 3, t=2.0)
    lam = spec.eigenvalues[1:4].real
    np.testing.assert_allclose(e2.coords, e1.coords * lam, atol=1e-14)
    for j in range(3):
        if lam[j] > 0:
            np.testing.assert_array_equal(np.argsort(e1.coords[:, j], kind="stable"),
                                          np.argsort(e2.coords[:, j], kind="stable"))
    single = lad_embed(model, 1, t=1.5)
    np.testing.assert_allclose(single.coords[:, 0], spec.eigenvectors[:, 1] * lam[0] ** 1.5,
                               atol=1e-14)
    assert e1.metadata["alpha"] == 0.5


def test_lad_spectrum_reuse():
    model = _random_lad(3, 0.5, n=80, m=20)
    spec = lad_spectrum(model, 6)
    np.testing.assert_array_equal(lad_embed(model, 3, spectrum=spec).coords,
                                  lad_embed(model, 3).coords)


def test_lad_permutation_equivariance(rng):
    X1, X2 = random_pair(rng, 70)
    idx = rng.choice(70, 15, replace=False)
    L = (X1[idx], X2[idx])
    base = lad_embed(build_lad((X1, X2), L, 1.0, 0.5, 0.5), 3).coords
    perm = rng.permutation(70)
    moved = lad_embed(build_lad((X1[perm], X2[perm]), L, 1.0, 0.5, 0.5), 3).coords
    np.testing.assert_allclose(np.abs(moved), np.abs(base[perm]), atol=1e-10)
    lperm = rng.permutation(15)
    L2 = (L[0][lperm], L[1][lperm])
    relabelled = lad_embed(build_lad((X1, X2), L2, 1.0, 0.5, 0.5), 3).coords
    for j in range(3):
        assert eigenvector_alignment(relabelled[:, j], base[:, j]) == pytest.approx(1.0, abs=1e-10)


def test_lad_start_sensor_swaps_roles(rng):
    X1, X2 = random_pair(rng, 50)
    idx = rng.choice(50, 10, replace=False)
    a = build_lad((X1, X2), (X1[idx], X2[idx]), 0.9, 0.4, 0.5, start_sensor="sensor1")
    b = build_lad((X2, X1), (X2[idx], X1[idx]), 0.4, 0.9, 0.5)
    np.testing.assert_allclose(a.full_matrix(), b.full_matrix(), atol=1e-15)
    assert a.start_sensor == "sensor1"


def test_lad_rejects_bad_arguments(rng):
    X1, X2 = random_pair(rng, 10)
    with pytest.raises(InvalidArgumentError):
        build_lad((X1, X2), (X1[:3], X2[:3]), 1.0, 1.0, alpha=1.5)
    with pytest.raises(InvalidArgumentError):
        build_lad((X1[:3], X2[:3]), (X1, X2), 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        lad_from_affinities(np.ones((3, 2)), np.ones((3, 3)))


def test_lad_extend_reproduces_training_rows(rng):
    X1, X2 = random_pair(rng, 60)
    idx = rng.choice(60, 12, replace=False)
    model = build_lad((X1, X2), (X1[idx], X2[idx]), 0.7, 0.7, 0.5)
    np.testing.assert_allclose(model.extend(X1[:5]), model.M1bar[:5], atol=1e-15)


# ---------------------------------------------------------------- DM

@pytest.mark.parametrize("seed", range(5))
def test_diffusion_map_circle_harmonics(seed):
    d = sample_pair(("circle", "circle"), 64, seed=seed)
    emb = diffusion_map(d.sensor1, None, 2)
    assert _circle_r2(emb.coords, d.params[:, 0]) >= 0.99


def test_diffusion_map_squares_to_ad(rng):
    X, _ = random_pair(rng, 60)
    dm = diffusion_map(X, 0.8, 5)
    ad = ad_spectrum(build_ad((X, X), 0.8, 0.8), 6)
    np.testing.assert_allclose(ad.eigenvalues[1:6].real, dm.eigenvalues_used ** 2, atol=1e-12)
    for j in range(5):
        assert eigenvector_alignment(dm.coords[:, j], ad.eigenvectors[:, j + 1]) > 1 - 1e-8


def test_diffusion_map_constant_vector(rng):
    X, _ = random_pair(rng, 40)
    W = build_affinity(X, X, 0.8)
    M = W / W.sum(axis=1, keepdims=True)
    emb = diffusion_map(X, 0.8, 3)
    # coordinates are eigenvectors of D^-1 W, orthogonal to the constant in the D inner product
    d = W.sum(axis=1)
    np.testing.assert_allclose(d @ emb.coords, 0.0, atol=1e-10)
    np.testing.assert_allclose(M @ emb.coords, emb.coords * emb.eigenvalues_used, atol=1e-10)
