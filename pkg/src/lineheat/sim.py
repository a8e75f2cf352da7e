"""Synthetic intensities and point patterns.

Planar scalar fields are simulated on the unit square (log-Gaussian fields
with exponential covariance, or Gaussian mixtures), restricted to the network
by evaluating them at the lattice nodes, and point patterns are drawn from the
resulting intensity with an exact inhomogeneous-Poisson sampler on the node
cells.  Everything is seeded and reproducible.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CholeskyFailure, OutOfDomain
from .lattice import Lattice, LatticeFunction
from .network import LinearNetwork, NetworkLocation, PointPattern


@dataclass(frozen=True)
class ExpCovSpec:
    """Stationary exponential covariance: variance * exp(-distance / scale).

    ``mean_offset`` is the base log-intensity level; pipelines that target an
    expected point count compute their own calibrated offset instead.
    """

    variance: float
    scale: float
    mean_offset: float = 0.0

    def __post_init__(self):
        if self.variance <= 0 or self.scale <= 0:
            raise ValueError("variance and scale must be positive")


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted planar Gaussian mixture evaluated as an intensity surface."""

    weights: tuple
    means: tuple
    covariances: tuple
    scale: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if not (len(self.weights) == len(self.means) == len(self.covariances)):
            raise ValueError("weights, means, covariances must have equal length")
        for c in self.covariances:
            np.linalg.cholesky(np.asarray(c, dtype=float))  # PD check


#: The five manually assigned covariance matrices of the 5-component preset.
GM5_COVARIANCES = (
    ((0.01, -0.01), (-0.01, 0.02)),
    ((0.016, 0.02), (0.02, 0.05)),
    ((0.01, 0.01), (0.01, 0.03)),
    ((0.02, -0.01), (-0.01, 0.05)),
    ((0.01, 0.001), (0.001, 0.005)),
)


def gm5_mixture(seed, scale: float = 1.0) -> MixtureSpec:
    """Five-component preset: fixed covariances, uniform weights, seeded means."""
    rng = np.random.default_rng(seed)
    means = tuple(tuple(m) for m in rng.uniform(0.0, 1.0, size=(5, 2)))
    return MixtureSpec(weights=(0.2,) * 5, means=means, covariances=GM5_COVARIANCES, scale=scale)


@functools.lru_cache(maxsize=2)
def _field_cholesky(res: int, variance: float, scale: float) -> np.ndarray:
    from scipy.spatial.distance import cdist

    ax = np.linspace(0.0, 1.0, res)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    cov = cdist(pts, pts)
    np.multiply(cov, -1.0 / scale, out=cov)
    np.exp(cov, out=cov)
    np.multiply(cov, variance, out=cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov[np.diag_indices_from(cov)] += 1e-10
        try:
            return np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise CholeskyFailure("covariance not positive definite after jitter") from exc


def sample_gaussian_field(res: int, spec: ExpCovSpec, seed) -> np.ndarray:
    """Zero-mean stationary Gaussian field on a res x res unit-square grid.

    Grid points are linspace(0, 1, res) per axis, axis 0 = x.  Dense Cholesky
    of the full covariance; meant for desk-scale resolutions (res <= 128).
    """
    if res < 2:
        raise ValueError("resolution must be at least 2")
    chol = _field_cholesky(res, spec.variance, spec.scale)
    z = np.random.default_rng(seed).standard_normal(res * res)
    return (chol @ z).reshape(res, res)


@dataclass(frozen=True)
class UnitSquareMap:
    """Similarity transform taking network coordinates into the unit square."""

    scale: float
    offset_x: float
    offset_y: float

    def apply(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        out = np.empty_like(xy)
        out[..., 0] = (xy[..., 0] - self.offset_x) * self.scale
        out[..., 1] = (xy[..., 1] - self.offset_y) * self.scale
        return out


def unit_square_map(net: LinearNetwork) -> UnitSquareMap:
    """Fit the network bounding box inside [0,1]^2, preserving aspect ratio."""
    xmin, ymin = net.vertex_xy.min(axis=0)
    xmax, ymax = net.vertex_xy.max(axis=0)
    extent = max(xmax - xmin, ymax - ymin)
    if extent == 0:
        raise ValueError("degenerate network bounding box")
    s = 1.0 / extent
    # center the short dimension
    ox = xmin - 0.5 * (extent - (xmax - xmin))
    oy = ymin - 0.5 * (extent - (ymax - ymin))
    return UnitSquareMap(scale=s, offset_x=ox, offset_y=oy)


def _node_unit_coords(lattice: Lattice, transform: UnitSquareMap | None):
    xy = lattice.node_xy
    if transform is not None:
        xy = transform.apply(xy)
    if np.any(xy < -1e-9) or np.any(xy > 1 + 1e-9):
        raise OutOfDomain("lattice nodes fall outside the unit square")
    return np.clip(xy, 0.0, 1.0)


def _bilinear_anchors(lattice: Lattice, res: int, transform: UnitSquareMap | None):
    xy = _node_unit_coords(lattice, transform)
    pos = xy * (res - 1)
    i0 = np.minimum(pos.astype(np.int64), res - 2)
    frac = pos - i0
    return i0[:, 0], i0[:, 1], frac[:, 0], frac[:, 1]


def field_to_network_intensity(
    grid: np.ndarray,
    lattice: Lattice,
    mu,
    transform: UnitSquareMap | None = None,
) -> LatticeFunction:
    """Intensity exp(mu + Z) at the lattice nodes, Z bilinearly interpolated.

    ``mu`` may be a scalar or a per-node array (e.g. the exact lognormal
    offset from :func:`interpolated_variance`).
    """
    res = grid.shape[0]
    if grid.shape != (res, res):
        raise ValueError("field grid must be square")
    ix, iy, fx, fy = _bilinear_anchors(lattice, res, transform)
    z = (
        grid[ix, iy] * (1 - fx) * (1 - fy)
        + grid[ix + 1, iy] * fx * (1 - fy)
        + grid[ix, iy + 1] * (1 - fx) * fy
        + grid[ix + 1, iy + 1] * fx * fy
    )
    return LatticeFunction(lattice, np.exp(np.asarray(mu, dtype=float) + z))


def interpolated_variance(
    spec: ExpCovSpec, lattice: Lattice, res: int, transform: UnitSquareMap | None = None
) -> np.ndarray:
    """Marginal variance of the bilinearly interpolated field at each node.

    Interpolation averages correlated grid values, so the node variance is
    below the field variance; the exact value follows from the covariance of
    the four anchor points.  Feeding this into the lognormal mean identity
    makes expected counts exact at any grid resolution.
    """
    _, _, fx, fy = _bilinear_anchors(lattice, res, transform)
    h = 1.0 / (res - 1)
    r_side = math.exp(-h / spec.scale)
    r_diag = math.exp(-h * math.sqrt(2.0) / spec.scale)
    a = (1 - fx) * (1 - fy)
    b = fx * (1 - fy)
    c = (1 - fx) * fy
    d = fx * fy
    quad = (
        a * a + b * b + c * c + d * d
        + 2 * (a * b + c * d) * r_side  # x-neighbors
        + 2 * (a * c + b * d) * r_side  # y-neighbors
        + 2 * (a * d + b * c) * r_diag
    )
    return spec.variance * quad


def lognormal_mean_offset(target_points: float, total_length: float, variance: float) -> float:
    """Field mean mu with E[integral of exp(mu + Z)] = target_points."""
    return math.log(target_points / total_length) - variance / 2.0


def mixture_to_network_intensity(
    spec: MixtureSpec,
    lattice: Lattice,
    transform: UnitSquareMap | None = None,
) -> LatticeFunction:
    """Mixture density at the lattice nodes, times the mixture's scale factor."""
    xy = _node_unit_coords(lattice, transform)
    total = np.zeros(lattice.n_nodes)
    for w, mean, cov in zip(spec.weights, spec.means, spec.covariances):
        cov = np.asarray(cov, dtype=float)
        chol = np.linalg.cholesky(cov)
        diff = xy - np.asarray(mean, dtype=float)
        sol = np.linalg.solve(chol, diff.T)
        q = np.sum(sol * sol, axis=0)
        norm = 2.0 * math.pi * chol[0, 0] * chol[1, 1]
        total += w * np.exp(-0.5 * q) / norm
    return LatticeFunction(lattice, spec.scale * total)


def scale_to_target(intensity: LatticeFunction, target_points: float) -> LatticeFunction:
    """Rescale an intensity so its network integral equals ``target_points``."""
    total = intensity.integral()
    if total <= 0:
        raise ValueError("cannot rescale a zero intensity")
    return LatticeFunction(intensity.lattice, intensity.values * (target_points / total))


def sample_poisson_on_network(intensity: LatticeFunction, seed) -> PointPattern:
    """Inhomogeneous Poisson sample from a lattice intensity.

    The count is Poisson(integral); each point picks a node cell with
    probability proportional to cell length times node value, then lands
    uniformly inside the cell.
    """
    lat = intensity.lattice
    if np.any(intensity.values < 0):
        raise ValueError("intensity must be nonnegative")
    ce, cl, ch, cn = lat.node_cells
    cell_mass = (ch - cl) * intensity.values[cn]
    total = float(cell_mass.sum())
    rng = np.random.default_rng(seed)
    if total <= 0:
        return PointPattern(lat.network, [])
    n = int(rng.poisson(total))
    if n == 0:
        return PointPattern(lat.network, [])
    cells = rng.choice(len(cell_mass), size=n, p=cell_mass / total)
    u = rng.random(n)
    pts = [
        NetworkLocation(int(ce[c]), float(cl[c] + u[k] * (ch[c] - cl[c])))
        for k, c in enumerate(cells)
    ]
    return PointPattern(lat.network, pts)
