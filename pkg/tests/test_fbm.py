import numpy as np
import pytest

from roughtaylor.fbm import (
    FbmConfig,
    NotPositiveDefiniteError,
    SamplePath,
    cholesky,
    covariance_matrix,
    dump_path_csv,
    restrict,
    sample_fbm,
)
from roughtaylor.grids import make_grid


class TestCovariance:
    def test_brownian_entry(self):
        # H = 1/2 reduces to min(s, t)
        C = covariance_matrix(0.5, make_grid(1.0, 4))
        assert C[0, 1] == pytest.approx(0.25)
        assert np.allclose(C, np.minimum.outer([0.25, 0.5, 0.75, 1.0], [0.25, 0.5, 0.75, 1.0]))

    def test_diagonal(self):
        C = covariance_matrix(0.75, make_grid(1.0, 2))
        assert C[0, 0] == pytest.approx(0.5**1.5)
        assert C[1, 1] == pytest.approx(1.0)

    def test_full_brownian_matrix(self):
        C = covariance_matrix(0.5, make_grid(1.0, 2))
        assert np.allclose(C, [[0.5, 0.5], [0.5, 1.0]])

    @pytest.mark.parametrize("H", [0.1, 0.33, 0.5, 0.9])
    def test_symmetric_with_power_diagonal(self, H):
        g = make_grid(1.0, 16)
        C = covariance_matrix(H, g)
        assert np.array_equal(C, C.T)
        assert np.allclose(np.diag(C), g.nodes[1:] ** (2 * H))

    @pytest.mark.parametrize("H", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_hurst(self, H):
        with pytest.raises(ValueError):
            covariance_matrix(H, make_grid(1.0, 4))


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_hand_factorization(self):
        L = cholesky([[4.0, 2.0], [2.0, 5.0]])
        assert np.allclose(L, [[2.0, 0.0], [1.0, 2.0]])
        assert np.allclose(L @ L.T, [[4.0, 2.0], [2.0, 5.0]])

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((40, 40))
        M = A @ A.T + 40 * np.eye(40)
        L = cholesky(M)
        assert np.max(np.abs(L @ L.T - M)) <= 1e-8 * np.max(np.abs(M))

    def test_indefinite_reports_index(self):
        with pytest.raises(NotPositiveDefiniteError) as exc:
            cholesky([[1.0, 0.0], [0.0, -1.0]])
        assert exc.value.index == 2

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            cholesky([[1.0, 0.5], [0.0, 1.0]])


class TestSampling:
    def test_starts_at_zero(self):
        cfg = FbmConfig((0.4,), 1, make_grid(1.0, 32), seed=5)
        assert sample_fbm(cfg).values[0, 0] == 0.0

    def test_seed_determinism(self):
        cfg = FbmConfig((0.3, 0.7), 2, make_grid(1.0, 64), seed=9)
        a = sample_fbm(cfg)
        b = sample_fbm(cfg)
        assert np.array_equal(a.values, b.values)

    def test_seed_override_changes_path(self):
        cfg = FbmConfig((0.5,), 1, make_grid(1.0, 32), seed=0)
        assert not np.array_equal(sample_fbm(cfg).values, sample_fbm(cfg, seed=1).values)

    def test_scalar_hurst_broadcast(self):
        cfg = FbmConfig(0.5, 3, make_grid(1.0, 8), seed=0)
        assert cfg.hurst == (0.5, 0.5, 0.5)
        assert sample_fbm(cfg).values.shape == (9, 3)

    def test_dense_cap(self):
        cfg = FbmConfig((0.5,), 1, make_grid(1.0, 64), seed=0, max_dense_n=32)
        with pytest.raises(ValueError, match="max_dense_n"):
            sample_fbm(cfg)

    @pytest.mark.parametrize("H", [0.3, 0.7])
    def test_stationary_increment_variance(self, H):
        # E|B(t)-B(s)|^2 = |t-s|^(2H), Monte Carlo with ~2% standard error
        grid = make_grid(1.0, 64)
        cfg = FbmConfig((H,), 1, grid, seed=0)
        n = 4000
        pairs = [(0, 32), (16, 48), (8, 40), (0, 64)]
        acc = np.zeros(len(pairs))
        for s in range(n):
            v = sample_fbm(cfg, seed=s).values[:, 0]
            for k, (i, j) in enumerate(pairs):
                acc[k] += (v[j] - v[i]) ** 2
        for k, (i, j) in enumerate(pairs):
            expected = (grid.nodes[j] - grid.nodes[i]) ** (2 * H)
            assert acc[k] / n == pytest.approx(expected, rel=0.10)

    def test_components_uncorrelated(self):
        cfg = FbmConfig((0.5, 0.5), 2, make_grid(1.0, 32), seed=0)
        n = 4000
        ends = np.array([sample_fbm(cfg, seed=s).values[-1] for s in range(n)])
        corr = np.corrcoef(ends.T)[0, 1]
        assert abs(corr) < 0.05


class TestRestrict:
    def _path(self, N=8):
        g = make_grid(1.0, N)
        return SamplePath(g, np.arange(N + 1, dtype=float) ** 2)

    def test_identity(self):
        p = self._path()
        q = restrict(p, 1)
        assert np.array_equal(p.values, q.values) and q.grid == p.grid

    def test_indices(self):
        q = restrict(self._path(8), 4)
        assert q.grid.N == 2
        assert np.array_equal(q.values[:, 0], [0.0, 16.0, 64.0])

    def test_composition(self):
        p = self._path(8)
        a = restrict(restrict(p, 2), 2)
        b = restrict(p, 4)
        assert a.grid == b.grid and np.array_equal(a.values, b.values)

    def test_rejects_non_divisor(self):
        with pytest.raises(ValueError):
            restrict(self._path(8), 3)


def test_dump_path_csv(tmp_path):
    cfg = FbmConfig((0.5,), 1, make_grid(1.0, 4), seed=2)
    p = sample_fbm(cfg)
    target = tmp_path / "path.csv"
    dump_path_csv(p, target)
    lines = target.read_text().strip().splitlines()
    assert lines[0] == "t,x1"
    assert len(lines) == 6
    t0, x0 = lines[1].split(",")
    assert float(t0) == 0.0 and float(x0) == 0.0
