"""SU(2) Q function on the Poincare sphere and the degrees of polarization P_s and P_Q."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .operators import CoherentPoint, coherent_state
from .states import DensityState, stokes_parameters

__all__ = [
    "UndefinedDegreeError",
    "GridOrderError",
    "SphereGrid",
    "PolarizationReport",
    "make_grid",
    "coherent_matrix",
    "q_function",
    "q_on_grid",
    "integrate",
    "degree_ps",
    "degree_pq",
]

NEGATIVE_Q_TOL = 1e-13


class UndefinedDegreeError(ValueError):
    """P_s is undefined for a state with no photons."""


class GridOrderError(ValueError):
    """The quadrature grid cannot integrate the requested integrand exactly."""


@dataclass(frozen=True)
class SphereGrid:
    """Product quadrature: Gauss-Legendre in ``cos(theta)``, uniform trapezoid in ``phi``.

    ``degree`` is the largest spherical-polynomial degree integrated exactly.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int

    @property
    def degree(self) -> int:
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    @property
    def size(self) -> int:
        return self.weights.size

    def points(self):
        return [CoherentPoint(t, p) for t, p in zip(self.theta, self.phi)]

    def omegas(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=1)

    def require(self, degree: int) -> None:
        if self.degree < degree:
            raise GridOrderError(f"grid integrates degree <= {self.degree} exactly, integrand needs {degree}")


@lru_cache(maxsize=32)
def _grid(n_theta: int, n_phi: int) -> SphereGrid:
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.repeat(np.arccos(x), n_phi)
    phi = np.tile(phis, n_theta)
    weights = np.repeat(wx, n_phi) * (2 * np.pi / n_phi)
    for arr in (theta, phi, weights):
        arr.setflags(write=False)
    return SphereGrid(theta, phi, weights, n_theta, n_phi)


def make_grid(n_max: int) -> SphereGrid:
    """Grid exact for products of two sector-``n_max`` Q functions (degree ``2*n_max``) and beyond."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    return _grid(2 * n_max + 1, 4 * n_max + 1)


def integrate(grid: SphereGrid, values) -> float:
    # numpy's contiguous sum is pairwise, hence independent of any evaluation order upstream
    return float(np.sum(grid.weights * np.asarray(values)))


def coherent_matrix(n: int, grid: SphereGrid) -> np.ndarray:
    """Rows are ``|n, Omega>`` at every grid node, shape ``(grid.size, n+1)``."""
    return _coherent_matrix(n, grid.n_theta, grid.n_phi)


@lru_cache(maxsize=64)
def _coherent_matrix(n, n_theta, n_phi):
    g = _grid(n_theta, n_phi)
    m = np.arange(n, -1, -1)
    binom = np.sqrt(np.array([comb(n, int(k)) for k in m], dtype=float))
    c = np.cos(g.theta / 2)[:, None]
    s = np.sin(g.theta / 2)[:, None]
    out = binom * s ** (n - m) * c ** m * np.exp(-1j * np.outer(g.phi, m))
    out.setflags(write=False)
    return out


def q_function(rho: DensityState, point: CoherentPoint) -> float:
    total = 0.0
    for n, w, b in rho.items():
        vec = coherent_state(n, point)
        total += w * (n + 1) / (4 * np.pi) * np.vdot(vec, b @ vec).real
    return float(total)


def q_on_grid(rho: DensityState, grid: SphereGrid) -> np.ndarray:
    q = np.zeros(grid.size)
    for n, w, b in rho.items():
        c = coherent_matrix(n, grid)
        q += w * (n + 1) / (4 * np.pi) * np.einsum("ai,ij,aj->a", c.conj(), b, c).real
    return q


def degree_ps(rho: DensityState) -> float:
    sv = stokes_parameters(rho)
    if sv.s0 <= 0:
        raise UndefinedDegreeError("P_s is undefined for the vacuum (s0 = 0)")
    return sv.degree


@dataclass(frozen=True)
class PolarizationReport:
    P_s: float
    D: float
    Sigma: float
    P_Q: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def degree_pq(rho: DensityState, grid: SphereGrid | None = None) -> PolarizationReport:
    """Distance ``D`` to the uniform distribution, effective area and ``P_Q``.

    ``P_s`` is NaN in the report when the state has no photons.
    """
    if grid is None:
        grid = make_grid(rho.max_photon_number)
    grid.require(2 * rho.max_photon_number)
    q = q_on_grid(rho, grid)
    lo = float(q.min())
    if lo < -NEGATIVE_Q_TOL:
        raise ValueError(f"Q function negative ({lo:.3g}); the state is not positive")
    q = np.where(q < 0, 0.0, q)
    q2 = integrate(grid, q * q)
    d = 4 * np.pi * q2 - 1.0
    if -1e-12 < d < 0:  # D >= 0 by Cauchy-Schwarz; only round-off gets here
        d = 0.0
    try:
        ps = degree_ps(rho)
    except UndefinedDegreeError:
        ps = float("nan")
    return PolarizationReport(P_s=ps, D=d, Sigma=4 * np.pi / (1.0 + d), P_Q=d / (1.0 + d))
