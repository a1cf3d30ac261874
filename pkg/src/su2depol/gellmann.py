"""Generalized Gell-Mann coordinates of sector states.

A block is written ``rho = 1/(n+1) + (1/2) mu . Lambda`` with ``Lambda`` the
``(n+1)^2 - 1`` traceless generators of su(n+1). Under the depolarizing
dynamics ``mu`` obeys ``d mu/dt = -Gamma mu``, and the distance to the
uniform Q function is the quadratic form ``D = mu^T Phi mu``.

Generator ordering: for each column ``c = 1..n`` the symmetric and
antisymmetric pair for every row ``r < c`` (symmetric first), then the
diagonal generator with ``c`` leading ones. For three levels this is the
textbook ``Lambda_1 .. Lambda_8`` order, for two levels the Pauli matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import connected_components

from .operators import stokes_vector_operators
from .polarization import SphereGrid, coherent_matrix, make_grid

__all__ = [
    "NotPositiveError",
    "GellMannCoords",
    "ChannelForm",
    "gellmann_basis",
    "gellmann_labels",
    "to_coords",
    "from_coords",
    "gamma_matrix",
    "invariant_subspaces",
    "phi_matrix",
    "evolve_coords",
    "d_of_t",
    "detect_channel_form",
]


class NotPositiveError(ValueError):
    """Reconstruction from coordinates gave a matrix with a negative eigenvalue."""


def gellmann_labels(n: int) -> list[tuple[str, int, int]]:
    """``(kind, row, col)`` for each generator, ``kind`` in ``{'s', 'a', 'd'}``."""
    labels = []
    for c in range(1, n + 1):
        for r in range(c):
            labels.append(("s", r, c))
            labels.append(("a", r, c))
        labels.append(("d", c, c))
    return labels


@lru_cache(maxsize=None)
def _basis(n: int) -> np.ndarray:
    dim = n + 1
    out = []
    for kind, r, c in gellmann_labels(n):
        m = np.zeros((dim, dim), dtype=complex)
        if kind == "s":
            m[r, c] = m[c, r] = 1.0
        elif kind == "a":
            m[r, c] = -1j
            m[c, r] = 1j
        else:
            m[np.arange(c), np.arange(c)] = 1.0
            m[c, c] = -c
            m *= np.sqrt(2.0 / (c * (c + 1)))
        out.append(m)
    basis = np.stack(out)
    basis.setflags(write=False)
    return basis


def gellmann_basis(n: int) -> np.ndarray:
    """The ``(n+1)^2 - 1`` generators for sector ``n``, shape ``(d, n+1, n+1)``."""
    if n < 1:
        raise ValueError("Gell-Mann parametrization needs n >= 1")
    return _basis(int(n))


@dataclass(frozen=True)
class GellMannCoords:
    n: int
    mu: np.ndarray


def to_coords(block) -> GellMannCoords:
    """``mu_j = Tr(Lambda_j rho)``."""
    block = np.asarray(block, dtype=complex)
    n = block.shape[0] - 1
    lam = gellmann_basis(n)
    return GellMannCoords(n, np.einsum("aij,ji->a", lam, block).real)


def from_coords(mu, n: int | None = None, check_positive: bool = True) -> np.ndarray:
    """Rebuild the block ``1/(n+1) + mu.Lambda/2``.

    Hermiticity and unit trace hold by construction. With ``check_positive``
    a smallest eigenvalue below ``-1e-10`` raises :class:`NotPositiveError`.
    """
    if isinstance(mu, GellMannCoords):
        n, mu = mu.n, mu.mu
    mu = np.asarray(mu, dtype=float)
    if n is None:
        n = int(round(np.sqrt(mu.size + 1))) - 1
    if mu.size != (n + 1) ** 2 - 1:
        raise ValueError(f"expected {(n + 1) ** 2 - 1} coordinates for n={n}, got {mu.size}")
    block = np.eye(n + 1) / (n + 1) + 0.5 * np.einsum("a,aij->ij", mu, gellmann_basis(n))
    if check_positive:
        lo = float(np.linalg.eigvalsh(block)[0])
        if lo < -1e-10:
            raise NotPositiveError(f"coordinates give a non-positive block (smallest eigenvalue {lo:.3g})")
    return block


def gamma_matrix(n: int, nu: float = 1.0) -> np.ndarray:
    """Evolution matrix with ``d mu/dt = -Gamma mu``.

    ``Gamma_jk = -nu sum_l Tr(Lambda_j S_l Lambda_k S_l) + 2 nu n(n+2) delta_jk``.
    """
    lam = gellmann_basis(n)
    s = stokes_vector_operators(n)
    # sum_l Tr(L_j S_l L_k S_l)
    sandwich = np.einsum("lij,bjk,lkm->bim", s, lam, s)
    cross = np.einsum("aij,bji->ab", lam, sandwich).real
    gamma = -nu * cross + 2.0 * nu * n * (n + 2) * np.eye(lam.shape[0])
    return 0.5 * (gamma + gamma.T)


def invariant_subspaces(gamma: np.ndarray, tol: float = 1e-12) -> list[list[int]]:
    """Index blocks (0-based) of the connected components of ``Gamma``'s sparsity graph.

    Blocks are sorted by their smallest index.
    """
    gamma = np.asarray(gamma)
    scale = max(float(np.max(np.abs(gamma))), 1.0)
    adj = np.abs(gamma) > tol * scale
    n_comp, labels = connected_components(adj, directed=False)
    blocks = [sorted(np.flatnonzero(labels == c).tolist()) for c in range(n_comp)]
    return sorted(blocks, key=lambda b: b[0])


def phi_matrix(n: int, grid: SphereGrid | None = None) -> np.ndarray:
    """Quadratic form with ``D = mu^T Phi mu``, integrated on ``grid``.

    ``Phi_jk = (n+1)^2/(16 pi) * integral lambda_j lambda_k`` where
    ``lambda_j(Omega) = <n,Omega|Lambda_j|n,Omega>``.
    """
    grid = make_grid(n) if grid is None else grid
    grid.require(2 * n)
    lam = gellmann_basis(n)
    c = coherent_matrix(n, grid)
    vals = np.einsum("pi,aij,pj->ap", c.conj(), lam, c).real
    phi = (n + 1) ** 2 / (16 * np.pi) * np.einsum("ap,bp,p->ab", vals, vals, grid.weights)
    return 0.5 * (phi + phi.T)


def evolve_coords(mu0, gamma: np.ndarray, t) -> np.ndarray:
    """``exp(-Gamma t) mu0`` via the symmetric eigendecomposition of ``Gamma``.

    ``t`` may be an array; the result then has one row per time.
    """
    w, v = np.linalg.eigh(gamma)
    proj = v.T @ np.asarray(mu0, dtype=float)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-np.multiply.outer(t, w))
    return (decay * proj) @ v.T


def d_of_t(mu0, gamma: np.ndarray, phi: np.ndarray, t):
    mu_t = evolve_coords(mu0, gamma, t)
    d = np.einsum("...i,ij,...j->...", mu_t, phi, mu_t)
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class ChannelForm:
    """``rho(t) = p(t) 1/(n+1) + (1 - p(t)) rho(0)`` with ``p(t) = 1 - exp(-eta t)``."""

    eta: float

    def p(self, t):
        return 1.0 - np.exp(-self.eta * np.asarray(t, dtype=float))


def detect_channel_form(mu0, gamma: np.ndarray, tol: float = 1e-10) -> ChannelForm | None:
    """Return the channel form if ``mu0`` is an eigenvector of ``Gamma``, else ``None``.

    Raises
    ------
    ValueError
        If ``mu0`` is zero (the block is already unpolarized).
    """
    mu0 = np.asarray(mu0.mu if isinstance(mu0, GellMannCoords) else mu0, dtype=float)
    norm = np.linalg.norm(mu0)
    if norm == 0:
        raise ValueError("mu0 = 0: the state is already the unpolarized block")
    g_mu = gamma @ mu0
    eta = float(mu0 @ g_mu / (mu0 @ mu0))
    if np.linalg.norm(g_mu - eta * mu0) <= tol * norm * max(1.0, abs(eta)):
        return ChannelForm(eta)
    return None
