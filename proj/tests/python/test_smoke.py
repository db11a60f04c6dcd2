import numpy as np
import pytest

import ggnn


def clustered(n, m, d, seed, centers=8):
    """Base and query points drawn from one Gaussian mixture."""
    rng = np.random.default_rng(seed)
    mu = rng.normal(scale=10.0, size=(centers, d))
    x = mu[rng.integers(0, centers, size=n + m)] + rng.normal(size=(n + m, d))
    x = x.astype(np.float32)
    return x[:n], x[n:]


def exact(base, queries, k):
    d = ((queries[:, None, :].astype(np.float64) - base[None, :, :]) ** 2).sum(-1)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


@pytest.fixture(scope="module")
def data():
    return clustered(2000, 50, 16, 1)


@pytest.fixture(scope="module")
def index(data):
    return ggnn.Index.build(data[0], threads=1)


def test_build_shape(index, data):
    assert len(index) == 2000
    assert index.dim == 16
    assert index.layer_sizes[0] == 2000
    assert index.mean_sym_usage < 24 / 4


def test_search_against_numpy(index, data):
    base, queries = data
    ids, dists = index.search(queries, k=10, tau=0.6)
    assert ids.shape == (50, 10) and dists.shape == (50, 10)
    assert np.all(np.diff(dists, axis=1) >= 0)
    recomputed = ((queries[:, None, :].astype(np.float64) - base[ids]) ** 2).sum(-1)
    np.testing.assert_allclose(dists, recomputed, rtol=1e-5)
    truth = exact(base, queries, 10)
    assert ggnn.recall_at(ids, truth, 1) >= 0.95


def test_points_find_themselves(index, data):
    base, _ = data
    ids, dists = index.search(base[:100], k=1)
    assert np.all(dists[:, 0] == 0)
    np.testing.assert_array_equal(ids[:, 0], np.arange(100))


def test_brute_force_matches_numpy(data):
    base, queries = data
    ids, _ = ggnn.brute_force(base, queries, 5)
    np.testing.assert_array_equal(ids, exact(base, queries, 5))
    assert ggnn.recall_at(ids, ids, 1) == 1.0
    assert ggnn.k_recall_at_k(ids, ids, 5) == 1.0


def test_deterministic_and_reloadable(index, data, tmp_path):
    base, queries = data
    again = ggnn.Index.build(base, threads=1)
    assert again.to_bytes() == index.to_bytes()
    path = tmp_path / "idx.ggnn"
    index.save(path)
    loaded = ggnn.Index.load(path, base)
    np.testing.assert_array_equal(loaded.search(queries)[0], index.search(queries)[0])


def test_sharded(data, tmp_path):
    base, queries = data
    si = ggnn.ShardedIndex.build(base, shard_size=1000, threads=1)
    assert si.shard_count == 2
    ids, _ = si.search(queries, k=10)
    assert ggnn.recall_at(ids, exact(base, queries, 10), 1) >= 0.95
    si.save(tmp_path / "sh")
    back = ggnn.ShardedIndex.load(tmp_path / "sh", base)
    np.testing.assert_array_equal(back.search(queries, k=10)[0], ids)


def test_vecs_round_trip(data, tmp_path):
    base, _ = data
    ggnn.write_vectors(tmp_path / "b.fvecs", base)
    np.testing.assert_array_equal(ggnn.load_vectors(tmp_path / "b.fvecs"), base)


def test_errors(data):
    base, _ = data
    with pytest.raises(ggnn.ConfigError):
        ggnn.Index.build(base, k=24, k_nn=8)
    with pytest.raises(ggnn.IoError):
        ggnn.load_vectors("/nonexistent/file.fvecs")
    with pytest.raises(ValueError):
        ggnn.Index.build(base[0])
