"""Stokes operators, SU(2) unitaries and SU(2) coherent states on photon-number sectors.

Every operator here acts on a single sector of fixed total photon number ``n``.
The basis states are ``|m, n-m>`` (``m`` photons in mode 1), ordered with
``m`` descending from ``n`` to ``0``: index 0 holds all photons in mode 1.
Sector operators are plain ``(n+1, n+1)`` complex numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "CoherentPoint",
    "stokes_operators",
    "stokes_vector_operators",
    "commutator_residual",
    "canonical_rotation",
    "su2_unitary",
    "su2_unitaries",
    "rotation_of",
    "coherent_state",
    "rotate_coherent",
    "stokes_square_trace",
]

_LEVI_CIVITA = {(0, 1): (2, 1.0), (1, 2): (0, 1.0), (2, 0): (1, 1.0),
                (1, 0): (2, -1.0), (2, 1): (0, -1.0), (0, 2): (1, -1.0)}


@dataclass(frozen=True)
class CoherentPoint:
    """A point on the Poincare sphere given by polar angle ``theta`` and azimuth ``phi``."""

    theta: float
    phi: float = 0.0

    @property
    def omega(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @classmethod
    def from_vector(cls, omega) -> "CoherentPoint":
        v = np.asarray(omega, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot build a point from the zero vector")
        x, y, z = v / norm
        theta = float(np.arccos(np.clip(z, -1.0, 1.0)))
        phi = float(np.arctan2(y, x)) % (2 * np.pi)
        return cls(theta, phi)


def _check_n(n) -> int:
    if int(n) != n or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n!r}")
    return int(n)


@lru_cache(maxsize=None)
def _stokes_cached(n: int):
    m = np.arange(n, -1, -1)  # photons in mode 1 for each basis index
    s0 = np.diag(np.full(n + 1, float(n))).astype(complex)
    sz = np.diag(2.0 * m - n).astype(complex)
    # <m+1, n-m-1| a1^dag a2 |m, n-m> = sqrt((m+1)(n-m)); index of m+1 is one less than index of m
    raise_amp = np.sqrt((m[1:] + 1.0) * (n - m[1:]))
    a1d_a2 = np.diag(raise_amp, k=1).astype(complex)
    a2d_a1 = a1d_a2.conj().T
    sx = a2d_a1 + a1d_a2
    sy = 1j * (a2d_a1 - a1d_a2)
    ops = (s0, sx, sy, sz)
    for op in ops:
        op.setflags(write=False)
    return ops


def stokes_operators(n: int):
    """Return ``(S0, Sx, Sy, Sz)`` restricted to the ``n``-photon sector.

    The returned arrays are shared and read-only; copy before mutating.
    """
    return _stokes_cached(_check_n(n))


def stokes_vector_operators(n: int) -> np.ndarray:
    """Stack ``(Sx, Sy, Sz)`` into a ``(3, n+1, n+1)`` array."""
    _, sx, sy, sz = stokes_operators(n)
    return np.stack([sx, sy, sz])


def stokes_square_trace(n: int) -> float:
    """``Tr(S_k^2)`` on sector ``n``, identical for ``k = x, y, z``."""
    return n * (n + 1) * (n + 2) / 3.0


def commutator_residual(n: int) -> float:
    """Max-norm deviation of the Stokes operators from ``[S_k, S_l] = 2i eps_klm S_m``."""
    s = stokes_vector_operators(n)
    worst = 0.0
    for (k, l), (m, sign) in _LEVI_CIVITA.items():
        comm = s[k] @ s[l] - s[l] @ s[k]
        worst = max(worst, float(np.max(np.abs(comm - 2j * sign * s[m]))))
    return worst


def canonical_rotation(u) -> np.ndarray:
    """Map ``u`` onto an equivalent vector with ``|u|`` in ``[0, pi]``.

    ``U(u)`` is periodic in ``|u|`` with period ``pi`` up to the global sign
    ``(-1)^n``, so shifting the modulus by multiples of ``pi`` along the axis
    leaves the rotation and the conjugation action unchanged.
    """
    u = np.asarray(u, dtype=float)
    r = np.linalg.norm(u)
    if r <= np.pi:
        return u.copy()
    r_new = np.mod(r, np.pi)
    if r_new == 0.0:
        r_new = np.pi
    return u * (r_new / r)


def su2_unitary(u, n: int) -> np.ndarray:
    """``exp(i u.S)`` on sector ``n`` via eigendecomposition of the Hermitian generator."""
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise ValueError(f"rotation vector must have shape (3,), got {u.shape}")
    return su2_unitaries(u[None, :], n)[0]


def su2_unitaries(us, n: int) -> np.ndarray:
    """Batched ``exp(i u.S)`` for an array of rotation vectors of shape ``(N, 3)``."""
    us = np.asarray(us, dtype=float)
    s = stokes_vector_operators(n)
    gen = np.einsum("ak,kij->aij", us, s)
    w, v = np.linalg.eigh(gen)
    return np.einsum("aij,aj,akj->aik", v, np.exp(1j * w), v.conj())


def rotation_of(u, n: int = 1) -> np.ndarray:
    """The 3x3 rotation ``R`` defined by ``U^dag S_j U = sum_k R_jk S_k``.

    Entries are extracted with the trace inner product on sector ``n``,
    which must be at least 1.
    """
    n = _check_n(n)
    if n == 0:
        raise ValueError("the vacuum sector carries no faithful representation; use n >= 1")
    uop = su2_unitary(u, n)
    s = stokes_vector_operators(n)
    rotated = np.einsum("ji,ajk,kl->ail", uop.conj(), s, uop)
    # Tr(A S_k) for Hermitian S_k is sum(A * S_k^T)
    r = np.einsum("ail,bli->ab", rotated, s).real
    return r / stokes_square_trace(n)


def coherent_state(n: int, point: CoherentPoint) -> np.ndarray:
    """Amplitudes of the SU(2) coherent state ``|n, Omega>`` in the sector basis."""
    n = _check_n(n)
    c = np.cos(point.theta / 2.0)
    s = np.sin(point.theta / 2.0)
    out = np.empty(n + 1, dtype=complex)
    for idx in range(n + 1):
        m = n - idx
        out[idx] = np.sqrt(comb(n, m)) * s ** (n - m) * c ** m * np.exp(-1j * m * point.phi)
    return out


def rotate_coherent(u, n: int, point: CoherentPoint) -> CoherentPoint:
    """Return the point ``Omega' = R(u)^T Omega`` so that ``U^dag(u)|n,Omega> ~ |n,Omega'>``.

    Raises
    ------
    ArithmeticError
        If the overlap between ``U^dag|n,Omega>`` and ``|n,Omega'>`` is not unit modulus.
    """
    r = rotation_of(u, max(n, 1))
    new_point = CoherentPoint.from_vector(r.T @ point.omega)
    if n >= 1:
        moved = su2_unitary(u, n).conj().T @ coherent_state(n, point)
        overlap = abs(np.vdot(coherent_state(n, new_point), moved))
        if abs(overlap - 1.0) > 1e-10:
            raise ArithmeticError(f"coherent state did not map onto a coherent state (|overlap|={overlap})")
    return new_point
