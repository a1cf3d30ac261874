"""SU(2)-invariant depolarizing dynamics.

The generator acts on every photon-number sector separately,

    d rho_n / dt = -nu * sum_j [S_j, [S_j, rho_n]],

and is solved two independent ways: a fixed-step RK4 integrator and the
multipole (spherical tensor) expansion, whose operators ``T_kq`` are
eigenoperators with decay rate ``4 k (k+1) nu``. Closed forms for the Stokes
means and covariances, and the non-invariant generator built from ``S_x`` and
``S_y`` only, live here too.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .operators import stokes_operators, stokes_vector_operators
from .states import CovarianceData, DensityState, StokesVector, covariance, mean_casimir, stokes_parameters
from .wigner import wigner_3j

__all__ = [
    "StepSizeError",
    "EvolutionParams",
    "MultipoleCoeffs",
    "STABILITY_LIMIT",
    "decay_rate",
    "default_step",
    "lindblad_rhs",
    "lindblad_rhs_block",
    "evolve_ode",
    "ode_trajectory",
    "multipole_basis",
    "multipole_labels",
    "multipole_decompose",
    "multipole_reconstruct",
    "evolve_multipole",
    "evolve",
    "stokes_decay",
    "variance_evolution",
    "covariance_evolution",
    "alt_generator_rhs",
    "alt_generator_rhs_block",
    "evolve_alt",
]

logger = logging.getLogger(__name__)

# RK4 is stable on the negative real axis for h * |lambda| below ~2.785
STABILITY_LIMIT = 2.78
DEFAULT_STEP_RATIO = 0.01
SYMMETRIZE_LOG_TOL = 1e-10


class StepSizeError(ValueError):
    """The requested integrator step violates the RK4 stability bound."""


@dataclass(frozen=True)
class EvolutionParams:
    nu: float
    t: float
    dt: float | None = None
    method: str = "multipole"
    gamma0: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.method not in ("ode", "multipole", "closed-form"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.gamma0 < 0 or self.gamma < 0:
            raise ValueError("gamma0 and gamma must be non-negative")


def decay_rate(k: int, nu: float) -> float:
    """Decay rate of every rank-``k`` multipole."""
    return 4.0 * k * (k + 1) * nu


def default_step(n: int, nu: float) -> float:
    """Step with ``4 n (n+1) nu dt = 0.01``; infinite when the sector does not evolve."""
    rate = decay_rate(n, nu)
    return math.inf if rate == 0 else DEFAULT_STEP_RATIO / rate


# --- generator --------------------------------------------------------------

def _double_commutator_sum(ops, block):
    out = np.zeros_like(block)
    for s in ops:
        c = s @ block - block @ s
        out += s @ c - c @ s
    return out


def lindblad_rhs_block(block: np.ndarray, nu: float) -> np.ndarray:
    n = block.shape[0] - 1
    return -nu * _double_commutator_sum(stokes_vector_operators(n), block)


def lindblad_rhs(rho: DensityState, nu: float) -> DensityState:
    """Time derivative of every block; the result is traceless and not a valid state."""
    return rho.map_blocks(lambda n, b: lindblad_rhs_block(b, nu), validate=False)


def _superoperator(rhs: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Matrix of a linear block map acting on row-major flattened blocks."""
    cols = []
    for idx in range(dim * dim):
        e = np.zeros(dim * dim, dtype=complex)
        e[idx] = 1.0
        cols.append(rhs(e.reshape(dim, dim)).ravel())
    return np.stack(cols, axis=1)


def _rk4_blocks(rhs: Callable[[np.ndarray], np.ndarray], block: np.ndarray, h: float, steps: int,
                n: int) -> np.ndarray:
    # classic RK4 on a linear autonomous ODE; stages are evaluated through the lifted generator
    dim = block.shape[0]
    gen = _superoperator(rhs, dim)
    y = np.array(block, dtype=complex).ravel()
    for _ in range(steps):
        k1 = gen @ y
        k2 = gen @ (y + 0.5 * h * k1)
        k3 = gen @ (y + 0.5 * h * k2)
        k4 = gen @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        mat = y.reshape(dim, dim)
        sym = 0.5 * (mat + mat.conj().T)
        drift = float(np.max(np.abs(sym - mat)))
        if drift > SYMMETRIZE_LOG_TOL:
            logger.warning("Hermitian drift %.3g corrected in sector %d", drift, n)
        y = (sym / np.trace(sym).real).ravel()
    return y.reshape(dim, dim)


def _plan_steps(t: float, dt: float) -> tuple[int, float]:
    if t == 0:
        return 0, 0.0
    steps = max(1, math.ceil(t / dt - 1e-12))
    return steps, t / steps


def _check_step(n: int, nu: float, dt: float | None) -> float:
    if dt is None:
        return default_step(n, nu)
    if dt <= 0:
        raise StepSizeError("dt must be positive")
    if decay_rate(n, nu) * dt > STABILITY_LIMIT:
        raise StepSizeError(
            f"dt={dt:g} violates the RK4 stability bound in sector {n}: "
            f"4n(n+1)*nu*dt = {decay_rate(n, nu) * dt:.3g} > {STABILITY_LIMIT}")
    return dt


def evolve_ode(rho: DensityState, nu: float, t: float, dt: float | None = None) -> DensityState:
    """Integrate the master equation with classic fixed-step RK4.

    Parameters
    ----------
    rho : DensityState
    nu : float
        Depolarization rate.
    t : float
        Elapsed time.
    dt : float, optional
        Largest step allowed. Defaults per sector to ``0.01 / (4 n (n+1) nu)``;
        the actual step divides ``t`` evenly.

    Raises
    ------
    StepSizeError
        If ``dt`` exceeds the stability bound of any occupied sector.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho

    def step_sector(n, b):
        h_max = _check_step(n, nu, dt)
        if math.isinf(h_max):
            return b
        steps, h = _plan_steps(t, h_max)
        return _rk4_blocks(lambda y: lindblad_rhs_block(y, nu), b, h, steps, n)

    return rho.map_blocks(step_sector)


def ode_trajectory(rho: DensityState, nu: float, times: Sequence[float], dt: float | None = None) -> list[DensityState]:
    """RK4 states at each of the non-decreasing ``times`` (starting from ``t = 0``)."""
    times = [float(x) for x in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    out = []
    current, t_prev = rho, 0.0
    for t in times:
        current = evolve_ode(current, nu, t - t_prev, dt)
        t_prev = t
        out.append(current)
    return out


# --- multipoles ---------------------------------------------------------------

def multipole_labels(n: int) -> list[tuple[int, int]]:
    return [(k, q) for k in range(n + 1) for q in range(-k, k + 1)]


@lru_cache(maxsize=None)
def _multipole_basis(n: int) -> np.ndarray:
    j = n / 2
    ms = [j - i for i in range(n + 1)]  # basis index i <-> m = j - i
    labels = multipole_labels(n)
    basis = np.zeros((len(labels), n + 1, n + 1))
    for a, (k, q) in enumerate(labels):
        pref = math.sqrt(2 * k + 1)
        for r, m in enumerate(ms):
            sign = -1.0 if round(j - m) % 2 else 1.0
            for c, mp in enumerate(ms):
                if round(mp - m + q) != 0:
                    continue
                basis[a, r, c] = sign * pref * wigner_3j(j, k, j, -m, q, mp)
    basis = basis.astype(complex)
    basis.setflags(write=False)
    return basis


def multipole_basis(n: int) -> np.ndarray:
    """All ``T_kq`` on sector ``n`` stacked in :func:`multipole_labels` order, shape ``((n+1)^2, n+1, n+1)``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return _multipole_basis(int(n))


@dataclass(frozen=True)
class MultipoleCoeffs:
    """Coefficients ``c_kq = Tr(T_kq^dag rho)`` in :func:`multipole_labels` order."""

    n: int
    c: np.ndarray

    def __getitem__(self, kq: tuple[int, int]) -> complex:
        k, q = kq
        if not (0 <= k <= self.n and -k <= q <= k):
            raise KeyError(kq)
        return complex(self.c[k * k + k + q])

    def rank(self, k: int) -> np.ndarray:
        return self.c[k * k: (k + 1) * (k + 1)]


def multipole_decompose(block: np.ndarray) -> MultipoleCoeffs:
    block = np.asarray(block, dtype=complex)
    n = block.shape[0] - 1
    t = multipole_basis(n)
    return MultipoleCoeffs(n, np.einsum("aij,ij->a", t.conj(), block))


def multipole_reconstruct(coeffs: MultipoleCoeffs) -> np.ndarray:
    return np.einsum("a,aij->ij", coeffs.c, multipole_basis(coeffs.n))


def _decay_factors(n: int, nu: float, t: float) -> np.ndarray:
    ks = np.array([k for k, _ in multipole_labels(n)], dtype=float)
    return np.exp(-4.0 * ks * (ks + 1) * nu * t)


def evolve_multipole(rho: DensityState, nu: float, t: float) -> DensityState:
    """Exact solution: every ``c_kq`` decays by ``exp(-4 k (k+1) nu t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")

    def step_sector(n, b):
        coeffs = multipole_decompose(b)
        out = multipole_reconstruct(MultipoleCoeffs(n, coeffs.c * _decay_factors(n, nu, t)))
        return 0.5 * (out + out.conj().T)

    return rho.map_blocks(step_sector)


def evolve(rho: DensityState, nu: float, t: float, method: str = "multipole", dt: float | None = None) -> DensityState:
    if method == "multipole":
        return evolve_multipole(rho, nu, t)
    if method == "ode":
        return evolve_ode(rho, nu, t, dt)
    raise ValueError(f"unknown evolution method {method!r}")


# --- closed forms -----------------------------------------------------------

def stokes_decay(stokes: StokesVector, nu: float, t: float) -> StokesVector:
    return StokesVector(stokes.s0, np.exp(-8.0 * nu * t) * np.asarray(stokes.s))


def variance_evolution(rho0: DensityState, m, nu: float, t):
    """Closed-form variance of ``m.S`` at time(s) ``t`` for the initial state ``rho0``."""
    m = np.asarray(m, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > 1e-12:
        raise ValueError("m must be a unit vector")
    t = np.asarray(t, dtype=float)
    var0 = covariance(rho0).variance(m)
    mean0 = float(m @ stokes_parameters(rho0).s)
    cas = mean_casimir(rho0)
    e24 = np.exp(-24.0 * nu * t)
    e16 = np.exp(-16.0 * nu * t)
    out = e24 * var0 + (1.0 - e24) * cas / 3.0 - (e16 - e24) * mean0 ** 2
    return float(out) if out.ndim == 0 else out


def covariance_evolution(second0, outer0, casimir: float, nu: float, t: float) -> CovarianceData:
    e24 = math.exp(-24.0 * nu * t)
    second = e24 * np.asarray(second0) + (1.0 - e24) * casimir / 3.0 * np.eye(3)
    outer = math.exp(-16.0 * nu * t) * np.asarray(outer0)
    return CovarianceData(second, outer)


# --- alternative generator --------------------------------------------------

def _dissipator(a: np.ndarray, block: np.ndarray) -> np.ndarray:
    ad = a.conj().T
    ada = ad @ a
    return 2 * a @ block @ ad - ada @ block - block @ ada


def alt_generator_rhs_block(block: np.ndarray, gamma0: float, gamma: float) -> np.ndarray:
    n = block.shape[0] - 1
    s0, sx, sy, _ = stokes_operators(n)
    return (gamma0 * _dissipator(s0, block)
            + 2 * gamma * _dissipator(sx, block)
            + 2 * gamma * _dissipator(sy, block))


def alt_generator_rhs(rho: DensityState, gamma0: float, gamma: float) -> DensityState:
    """Derivative under the generator built from ``S0``, ``S_x`` and ``S_y`` dissipators."""
    if gamma0 < 0 or gamma < 0:
        raise ValueError("gamma0 and gamma must be non-negative")
    return rho.map_blocks(lambda n, b: alt_generator_rhs_block(b, gamma0, gamma), validate=False)


def evolve_alt(rho: DensityState, gamma0: float, gamma: float, t: float, dt: float | None = None) -> DensityState:
    """RK4 integration of the alternative generator."""
    if t == 0:
        return rho

    def step_sector(n, b):
        # within a sector S0 is a multiple of identity, so only the S_x, S_y terms set the spectral radius
        rate = 2 * decay_rate(n, gamma)
        if rate == 0:
            return b
        h_max = DEFAULT_STEP_RATIO / rate if dt is None else dt
        if rate * h_max > STABILITY_LIMIT:
            raise StepSizeError(f"dt={h_max:g} too large for sector {n}")
        steps, h = _plan_steps(t, h_max)
        return _rk4_blocks(lambda y: alt_generator_rhs_block(y, gamma0, gamma), b, h, steps, n)

    return rho.map_blocks(step_sector)
