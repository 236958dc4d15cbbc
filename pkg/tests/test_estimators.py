import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ladfusion import AlternatingDiffusion, DiffusionMap, LandmarkAlternatingDiffusion
from ladfusion.diffusion import ad_embed, build_ad, build_lad, lad_embed
from ladfusion.exceptions import InvalidArgumentError
from ladfusion.landmarks import uniform_subset
from ladfusion.manifolds import sample_pair


@pytest.fixture(scope="module")
def data():
    return sample_pair(("ellipse", "circle"), 200, seed=0)


@pytest.mark.parametrize("est", [
    AlternatingDiffusion(n_components=2, eps1=0.3),
    LandmarkAlternatingDiffusion(n_components=2, n_landmarks=20, alpha=0.25, random_state=1),
    DiffusionMap(n_components=4, eps=0.1),
])
def test_params_roundtrip(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(n_components=5)
    assert twin.n_components == 5 and est.n_components == params["n_components"]


def test_ad_estimator_matches_functional(data):
    est = AlternatingDiffusion(n_components=3, eps1=0.5, eps2=0.2)
    coords = est.fit_transform(data.sensor1, data.sensor2)
    ref = ad_embed(build_ad(data, 0.5, 0.2), 3)
    np.testing.assert_allclose(coords, ref.coords, atol=1e-12)
    np.testing.assert_allclose(est.eigenvalues_, ref.eigenvalues_used)


def test_lad_estimator_matches_functional(data):
    est = LandmarkAlternatingDiffusion(n_components=3, n_landmarks=40, alpha=0.5,
                                       eps1=0.5, eps2=0.2, random_state=3)
    coords = est.fit_transform(data.sensor1, data.sensor2)
    lm = uniform_subset(data, 40, seed=3)
    np.testing.assert_array_equal(est.landmarks_.indices, lm.indices)
    ref = lad_embed(build_lad(data, lm, 0.5, 0.2, 0.5), 3)
    np.testing.assert_allclose(coords, ref.coords, atol=1e-12)


@pytest.mark.parametrize("start", ["sensor2", "sensor1"])
def test_lad_transform_reproduces_training(data, start):
    est = LandmarkAlternatingDiffusion(n_components=3, n_landmarks=30, start_sensor=start,
                                       random_state=0).fit(data.sensor1, data.sensor2)
    X = data.sensor1[:10] if start == "sensor2" else None
    Y = data.sensor2[:10] if start == "sensor1" else None
    np.testing.assert_allclose(est.transform(X, Y), est.embedding_.coords[:10], atol=1e-10)


def test_lad_transform_needs_ending_sensor(data):
    est = LandmarkAlternatingDiffusion(n_landmarks=30, random_state=0)
    est.fit(data.sensor1, data.sensor2)
    with pytest.raises(InvalidArgumentError):
        est.transform(None, data.sensor2)


def test_lad_explicit_landmarks(data):
    pts = (data.sensor1[:25], data.sensor2[:25])
    est = LandmarkAlternatingDiffusion(n_components=2, landmarks=pts).fit(*pts)
    assert est.landmarks_.provenance == "explicit"
    assert est.embedding_.coords.shape == (25, 2)


def test_n_components_capped(data):
    est = LandmarkAlternatingDiffusion(n_components=10, n_landmarks=5, random_state=0)
    est.fit(data.sensor1, data.sensor2)
    assert est.embedding_.q == 4


def test_diffusion_map_transform(data):
    est = DiffusionMap(n_components=3).fit(data.sensor2)
    np.testing.assert_allclose(est.transform(data.sensor2), est.embedding_.coords, atol=1e-10)
    # new points on the same circle follow the cos/sin harmonics
    t = np.linspace(-3, 3, 7)
    new = est.transform(np.column_stack([np.cos(t), np.sin(t)]))
    assert new.shape == (7, 3)
    assert np.all(np.isfinite(new))


def test_unfitted_transform_raises():
    with pytest.raises(NotFittedError):
        DiffusionMap().transform(np.zeros((3, 2)))


def test_mismatched_rows_rejected(data):
    with pytest.raises(InvalidArgumentError):
        AlternatingDiffusion().fit(data.sensor1, data.sensor2[:-1])
