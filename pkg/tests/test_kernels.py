import numpy as np
import pytest

from mapstory import kernels


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


@pytest.mark.parametrize("shape", [(32, 32), (300, 200), (17, 53), (2, 3), (4, 5)])
def test_image_feature_paths_agree_bitwise(rng, shape):
    img = rng.integers(0, 256, size=(*shape, 3), dtype=np.uint8)
    via_loops = kernels._image_raw_features_loops(img, 8, 6)
    via_numpy = kernels._image_raw_features_numpy(img, 8, 6)
    assert np.array_equal(via_loops, via_numpy)


def test_image_features_shape_and_range(rng):
    img = rng.integers(0, 256, size=(40, 30, 3), dtype=np.uint8)
    feats = kernels.image_raw_features(img, 8, 6)
    assert feats.shape == (3 * 8 + 36,)
    assert np.all(feats >= 0) and np.all(feats <= 1)
    # histogram fractions sum to 1 per channel
    for c in range(3):
        assert feats[c * 8 : (c + 1) * 8].sum() == pytest.approx(1.0, abs=1e-12)


def test_image_features_reject_bad_input():
    with pytest.raises(ValueError):
        kernels.image_raw_features(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        kernels.image_raw_features(np.zeros((4, 4, 3), dtype=np.float32))


def test_ngram_paths_agree_bitwise():
    for text in ("topographic map", "a", "é € mixed unicode", "xx"):
        data = np.frombuffer(text.encode("utf-8"), dtype=np.uint8)
        via_loops = kernels._ngram_counts_loops(data, 1, 3, 256)
        via_numpy = kernels._ngram_counts_numpy(data, 1, 3, 256)
        assert np.array_equal(via_loops, via_numpy), text


def test_ngram_total_count_arithmetic():
    data = np.frombuffer(b"abcdef", dtype=np.uint8)
    counts = kernels.ngram_counts(data, 1, 3, 64)
    # 6 unigrams + 5 bigrams + 4 trigrams
    assert counts.sum() == 15


def test_ngram_shorter_than_n():
    data = np.frombuffer(b"ab", dtype=np.uint8)
    counts = kernels.ngram_counts(data, 1, 3, 64)
    assert counts.sum() == 3  # 2 unigrams + 1 bigram, no trigram


def test_cosine_matrix_matches_brute_force(rng):
    a = rng.standard_normal((9, 24))
    b = rng.standard_normal((6, 24))
    got = kernels.cosine_matrix(a, b)
    for i in range(9):
        for j in range(6):
            expected = float(
                np.dot(a[i], b[j]) / (np.linalg.norm(a[i]) * np.linalg.norm(b[j]))
            )
            assert got[i, j] == pytest.approx(expected, rel=1e-12)


def test_cosine_paths_agree(rng):
    a = rng.standard_normal((8, 16))
    b = rng.standard_normal((5, 16))
    assert np.allclose(
        kernels._cosine_matrix_loops(a, b), kernels._cosine_matrix_numpy(a, b), rtol=1e-12
    )


def test_cosine_dispatch_regimes_agree(rng):
    # one problem under the loop cutoff, one over it
    small = (rng.standard_normal((2, 8)), rng.standard_normal((3, 8)))
    large = (rng.standard_normal((200, 64)), rng.standard_normal((40, 64)))
    for a, b in (small, large):
        assert np.allclose(
            kernels.cosine_matrix(a, b), kernels._cosine_matrix_numpy(a, b), rtol=1e-12
        )


def test_cosine_zero_rows_give_zero_not_nan():
    a = np.zeros((2, 4))
    a[1, 0] = 3.0
    out = kernels.cosine_matrix(a, a)
    assert np.all(np.isfinite(out))
    assert out[0, 0] == 0.0 and out[1, 1] == pytest.approx(1.0)


def test_cosine_shape_validation():
    with pytest.raises(ValueError):
        kernels.cosine_matrix(np.zeros((2, 3)), np.zeros((2, 4)))


def test_backend_reports_active_path():
    assert kernels.backend() in ("numba", "numpy")
