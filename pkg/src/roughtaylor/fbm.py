"""Fractional Brownian motion driver.

Paths are sampled exactly on a fine reference grid by factorizing the fBm
covariance matrix (Cholesky) and multiplying a standard normal vector, then
restricted to coarser grids for convergence studies.  Sampling is
deterministic per (config, seed) and bitwise reproducible.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .grids import Grid

__all__ = [
    "DENSE_GRID_LIMIT",
    "FbmConfig",
    "SamplePath",
    "NotPositiveDefiniteError",
    "covariance_matrix",
    "cholesky",
    "sample_fbm",
    "restrict",
    "dump_path_csv",
]

# Dense Cholesky sampling is O(N^3) time / O(N^2) memory; grids beyond this
# need an explicit opt-in through FbmConfig.max_dense_n.
DENSE_GRID_LIMIT = 4096


class NotPositiveDefiniteError(ValueError):
    """Cholesky pivot failure; ``index`` is the 1-based failing leading minor."""

    def __init__(self, index: int):
        super().__init__(f"matrix is not positive definite (failing pivot {index})")
        self.index = index


@dataclass(frozen=True)
class SamplePath:
    """Discrete m-dimensional path on a grid, one row of ``values`` per node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.N + 1:
            raise ValueError(
                f"values must have one row per node ({self.grid.N + 1}), got shape {v.shape}"
            )
        object.__setattr__(self, "values", np.ascontiguousarray(v))

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FbmConfig:
    """Sampling configuration: Hurst parameter per component, number of
    components, reference grid and base seed."""

    hurst: tuple[float, ...]
    m: int
    grid: Grid
    seed: int
    max_dense_n: int = DENSE_GRID_LIMIT

    def __post_init__(self):
        hs = self.hurst
        if np.isscalar(hs):
            hs = (float(hs),) * self.m
        else:
            hs = tuple(float(H) for H in hs)
        object.__setattr__(self, "hurst", hs)
        if self.m < 1:
            raise ValueError(f"need at least one component, got m={self.m}")
        if len(hs) != self.m:
            raise ValueError(f"{self.m} components but {len(hs)} Hurst parameters")
        for H in hs:
            if not 0.0 < H < 1.0:
                raise ValueError(f"Hurst parameter must lie in (0, 1), got {H}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")


def covariance_matrix(H: float, grid: Grid) -> np.ndarray:
    """fBm covariance 0.5*(|s|^2H + |t|^2H - |t-s|^2H) at the strictly
    positive grid nodes t_1..t_N (the path is pinned to 0 at t_0)."""
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst parameter must lie in (0, 1), got {H}")
    t = grid.nodes[1:]
    two_h = 2.0 * H
    return 0.5 * (
        t[:, None] ** two_h + t[None, :] ** two_h - np.abs(t[:, None] - t[None, :]) ** two_h
    )


def cholesky(M) -> np.ndarray:
    """Lower-triangular L with L @ L.T == M for symmetric positive definite M."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"square matrix required, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-12, atol=1e-12):
        raise ValueError("symmetric matrix required")
    c, info = lapack.dpotrf(M, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(info)
    if info < 0:
        raise ValueError(f"invalid argument {-info} passed to dpotrf")
    return c


# Factor cache: the Cholesky of the covariance is reused across Monte Carlo
# seeds.  Reads are lock-free on the returned (read-only) arrays; writes are
# serialized.
_CHOLESKY_CACHE_SIZE = 2
_chol_cache: OrderedDict[tuple, np.ndarray] = OrderedDict()
_chol_lock = threading.Lock()


def _cholesky_factor(H: float, grid: Grid) -> np.ndarray:
    key = (float(H), float(grid.T), int(grid.N))
    with _chol_lock:
        if key in _chol_cache:
            _chol_cache.move_to_end(key)
            return _chol_cache[key]
    L = cholesky(covariance_matrix(H, grid))
    L.setflags(write=False)
    with _chol_lock:
        _chol_cache[key] = L
        while len(_chol_cache) > _CHOLESKY_CACHE_SIZE:
            _chol_cache.popitem(last=False)
    return L


def sample_fbm(config: FbmConfig, seed: int | None = None) -> SamplePath:
    """Draw one m-dimensional fBm path on ``config.grid``.

    Component i equals L_i @ V where L_i is the Cholesky factor of its
    covariance and V is standard normal from a PCG64 stream keyed by
    (seed, i); the value at t_0 is 0.  Components are independent.

    Parameters
    ----------
    config : FbmConfig
    seed : int, optional
        Overrides ``config.seed``.
    """
    grid = config.grid
    if grid.N > config.max_dense_n:
        raise ValueError(
            f"grid has N={grid.N} > max_dense_n={config.max_dense_n}; dense Cholesky "
            "sampling at this size is expensive, raise FbmConfig.max_dense_n to allow it"
        )
    s = config.seed if seed is None else seed
    if int(s) != s or s < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {s}")
    values = np.zeros((grid.N + 1, config.m))
    for comp in range(config.m):
        L = _cholesky_factor(config.hurst[comp], grid)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(s), comp))))
        values[1:, comp] = L @ rng.standard_normal(grid.N)
    return SamplePath(grid, values)


def restrict(path: SamplePath, factor: int) -> SamplePath:
    """Subsample to the coarser grid keeping every factor-th node."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if path.grid.N % factor != 0:
        raise ValueError(f"factor {factor} does not divide N={path.grid.N}")
    coarse = Grid(path.grid.T, path.grid.N // factor)
    return SamplePath(coarse, path.values[::factor].copy())


def dump_path_csv(path: SamplePath, target) -> None:
    """Write one row per node with columns t, x1..xm (17 significant digits)."""
    header = "t," + ",".join(f"x{i + 1}" for i in range(path.m))
    lines = [header]
    for t, row in zip(path.grid.nodes, path.values):
        lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
    with open(target, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
