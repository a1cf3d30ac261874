"""Block-diagonal two-mode density states and their Stokes moments.

A :class:`DensityState` is a mixture over photon-number sectors: each sector
``n`` carries a weight ``p_n`` and a unit-trace Hermitian block of dimension
``n+1``. Coherences between different sectors are not stored, since no
function of the Stokes operators can see them.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .operators import CoherentPoint, coherent_state, stokes_operators, stokes_vector_operators

__all__ = [
    "StateValidationError",
    "DensityState",
    "StokesVector",
    "CovarianceData",
    "PrincipalComponents",
    "stokes_parameters",
    "purity",
    "covariance",
    "principal_components",
    "total_variance",
    "mean_casimir",
    "trace_distance",
    "pure_state",
    "coherent",
    "fock",
    "noon",
    "twin",
    "maximally_mixed",
    "random_block",
    "random_state",
    "clip_negative_eigenvalues",
]

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10


class StateValidationError(ValueError):
    """Raised when a density state violates one or more of its invariants.

    ``failures`` lists a human-readable description per violated invariant.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("invalid density state: " + "; ".join(self.failures))


def _block_failures(n, block) -> list[str]:
    failures = []
    if block.shape != (n + 1, n + 1):
        return [f"sector {n}: block shape {block.shape} != {(n + 1, n + 1)}"]
    herm = float(np.max(np.abs(block - block.conj().T)))
    if herm > HERMITIAN_TOL:
        failures.append(f"sector {n}: not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(block)
    if abs(tr - 1.0) > TRACE_TOL:
        failures.append(f"sector {n}: block trace {tr.real:.15g} != 1")
    if herm <= 1e-6:
        lo = float(np.linalg.eigvalsh((block + block.conj().T) / 2)[0])
        if lo < PSD_TOL:
            failures.append(f"sector {n}: smallest eigenvalue {lo:.3g} < {PSD_TOL}")
    return failures


class DensityState:
    """A density state over photon-number sectors.

    Parameters
    ----------
    sectors : mapping of int to (weight, block)
        Photon number ``n`` to a pair of its probability ``p_n`` and the
        normalized ``(n+1, n+1)`` block.
    validate : bool, default=True
        Check all invariants and raise :class:`StateValidationError` listing
        every failure. Turn off only for intermediate algebra (derivatives,
        unnormalized sums).
    """

    __slots__ = ("_weights", "_blocks")

    def __init__(self, sectors: Mapping[int, tuple[float, np.ndarray]], validate: bool = True):
        weights = {}
        blocks = {}
        for n in sorted(sectors):
            w, b = sectors[n]
            if int(n) != n or n < 0:
                raise StateValidationError([f"invalid photon number {n!r}"])
            block = np.array(b, dtype=complex)
            block.setflags(write=False)
            weights[int(n)] = float(w)
            blocks[int(n)] = block
        if not blocks:
            raise StateValidationError(["state has no sectors"])
        self._weights = weights
        self._blocks = blocks
        if validate:
            self.validate()

    def validate(self) -> "DensityState":
        failures = []
        total = sum(self._weights.values())
        if abs(total - 1.0) > WEIGHT_TOL:
            failures.append(f"sector weights sum to {total:.15g}, not 1")
        for n, w in self._weights.items():
            if w < 0:
                failures.append(f"sector {n}: negative weight {w}")
            failures.extend(_block_failures(n, self._blocks[n]))
        if failures:
            raise StateValidationError(failures)
        return self

    @classmethod
    def single(cls, block, validate: bool = True) -> "DensityState":
        """A state living entirely in one sector; ``n`` is inferred from the block size."""
        block = np.asarray(block, dtype=complex)
        return cls({block.shape[0] - 1: (1.0, block)}, validate=validate)

    @property
    def photon_numbers(self) -> tuple[int, ...]:
        return tuple(self._blocks)

    @property
    def max_photon_number(self) -> int:
        return max(self._blocks)

    def weight(self, n: int) -> float:
        return self._weights[n]

    def block(self, n: int) -> np.ndarray:
        return self._blocks[n]

    def items(self):
        """Yield ``(n, weight, block)`` in increasing ``n``."""
        for n, b in self._blocks.items():
            yield n, self._weights[n], b

    def map_blocks(self, fn: Callable[[int, np.ndarray], np.ndarray], validate: bool = True) -> "DensityState":
        """Apply ``fn(n, block)`` to every sector and keep the weights."""
        return DensityState({n: (w, fn(n, b)) for n, w, b in self.items()}, validate=validate)

    def to_dict(self) -> dict:
        return {"sectors": [
            {"n": n, "weight": w, "re": b.real.tolist(), "im": b.imag.tolist()}
            for n, w, b in self.items()
        ]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "DensityState":
        if not isinstance(data, dict) or "sectors" not in data:
            raise StateValidationError(["missing top-level 'sectors' list"])
        sectors = {}
        failures = []
        for i, entry in enumerate(data["sectors"]):
            missing = [k for k in ("n", "weight", "re", "im") if k not in entry]
            if missing:
                failures.append(f"sector entry {i}: missing field(s) {', '.join(missing)}")
                continue
            n = entry["n"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                failures.append(f"sector entry {i}: 'n' must be a non-negative integer")
                continue
            if n in sectors:
                failures.append(f"sector entry {i}: duplicate photon number {n}")
                continue
            try:
                block = np.asarray(entry["re"], dtype=float) + 1j * np.asarray(entry["im"], dtype=float)
            except (TypeError, ValueError):
                failures.append(f"sector entry {i}: 're'/'im' are not numeric matrices")
                continue
            if block.shape != (n + 1, n + 1):
                failures.append(f"sector {n}: block shape {block.shape} != {(n + 1, n + 1)}")
                continue
            sectors[n] = (float(entry["weight"]), block)
        if failures:
            raise StateValidationError(failures)
        return cls(sectors)

    @classmethod
    def from_json(cls, text: str) -> "DensityState":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateValidationError([f"malformed JSON: {exc}"]) from exc
        return cls.from_dict(data)

    def __repr__(self) -> str:
        parts = ", ".join(f"n={n}: p={w:.6g}" for n, w in self._weights.items())
        return f"DensityState({parts})"


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s: np.ndarray

    @property
    def degree(self) -> float:
        return float(np.linalg.norm(self.s) / self.s0)


@dataclass(frozen=True)
class CovarianceData:
    """Symmetrized second moments ``second``, mean outer product ``outer`` and ``M = second - outer``."""

    second: np.ndarray
    outer: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.second - self.outer

    def variance(self, m) -> float:
        m = np.asarray(m, dtype=float)
        return float(m @ self.matrix @ m)


@dataclass(frozen=True)
class PrincipalComponents:
    variances: np.ndarray
    axes: np.ndarray  # columns are unit eigenvectors


def _expect(op, block) -> complex:
    return np.einsum("ij,ji->", op, block)


def stokes_parameters(rho: DensityState) -> StokesVector:
    s0 = 0.0
    s = np.zeros(3)
    for n, w, b in rho.items():
        ops = stokes_vector_operators(n)
        s0 += w * n
        s += w * np.einsum("kij,ji->k", ops, b).real
    return StokesVector(s0, s)


def mean_casimir(rho: DensityState) -> float:
    """``<S0 (S0 + 2)>``, the mean of ``S^2``."""
    return float(sum(w * n * (n + 2) for n, w, _ in rho.items()))


def purity(rho: DensityState) -> float:
    return float(sum(w * w * np.einsum("ij,ji->", b, b).real for _, w, b in rho.items()))


def covariance(rho: DensityState) -> CovarianceData:
    second = np.zeros((3, 3))
    for n, w, b in rho.items():
        ops = stokes_vector_operators(n)
        for i in range(3):
            for j in range(i, 3):
                anti = ops[i] @ ops[j] + ops[j] @ ops[i]
                val = w * 0.5 * _expect(anti, b).real
                second[i, j] += val
                if i != j:
                    second[j, i] += val
    s = stokes_parameters(rho).s
    return CovarianceData(second, np.outer(s, s))


def principal_components(rho: DensityState) -> PrincipalComponents:
    """Eigen-decomposition of the covariance matrix, variances in descending order.

    Each eigenvector's largest-magnitude component is made positive.
    """
    w, v = np.linalg.eigh(covariance(rho).matrix)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    for col in range(3):
        pivot = np.argmax(np.abs(v[:, col]))
        if v[pivot, col] < 0:
            v[:, col] = -v[:, col]
    return PrincipalComponents(w, v)


def total_variance(rho: DensityState) -> float:
    return float(np.trace(covariance(rho).matrix))


def trace_distance(rho: DensityState, sigma: DensityState) -> float:
    """``(1/2) ||rho - sigma||_1`` for block-diagonal states."""
    total = 0.0
    for n in sorted(set(rho.photon_numbers) | set(sigma.photon_numbers)):
        a = rho.weight(n) * rho.block(n) if n in rho.photon_numbers else 0.0
        b = sigma.weight(n) * sigma.block(n) if n in sigma.photon_numbers else 0.0
        diff = np.asarray(a - b, dtype=complex)
        diff = (diff + diff.conj().T) / 2
        total += float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
    return 0.5 * total


# --- constructors -----------------------------------------------------------

def pure_state(vec) -> DensityState:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return DensityState.single(np.outer(vec, vec.conj()))


def coherent(n: int, theta: float = 0.0, phi: float = 0.0) -> DensityState:
    return pure_state(coherent_state(n, CoherentPoint(theta, phi)))


def fock(n: int, m: int) -> DensityState:
    """The number state ``|m, n-m>``."""
    if not 0 <= m <= n:
        raise ValueError(f"fock state needs 0 <= m <= n, got m={m}, n={n}")
    vec = np.zeros(n + 1, dtype=complex)
    vec[n - m] = 1.0
    return pure_state(vec)


def noon(n: int) -> DensityState:
    """``(|n,0> + |0,n>)/sqrt(2)``."""
    if n < 1:
        raise ValueError("NOON state requires n >= 1")
    vec = np.zeros(n + 1, dtype=complex)
    vec[0] = vec[-1] = 1.0
    return pure_state(vec)


def twin(n: int) -> DensityState:
    """The twin-photon state ``|n/2, n/2>``; ``n`` must be even."""
    if n % 2 or n < 0:
        raise ValueError(f"twin state requires an even photon number, got {n}")
    return fock(n, n // 2)


def maximally_mixed(n: int) -> DensityState:
    return DensityState.single(np.eye(n + 1) / (n + 1))


def random_block(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random positive unit-trace block ``G G^dag / Tr`` from complex Gaussian ``G``."""
    rank = n + 1 if rank is None else rank
    g = rng.standard_normal((n + 1, rank)) + 1j * rng.standard_normal((n + 1, rank))
    b = g @ g.conj().T
    b = (b + b.conj().T) / 2
    return b / np.trace(b).real


def random_state(photon_numbers: int | Iterable[int], rng: np.random.Generator | int | None = None,
                 rank: int | None = None) -> DensityState:
    """Random state on one or several sectors, with Dirichlet weights when mixing sectors."""
    rng = np.random.default_rng(rng)
    ns = [photon_numbers] if np.isscalar(photon_numbers) else sorted(set(photon_numbers))
    if not ns:
        raise ValueError("random_state needs at least one photon number")
    if len(ns) == 1:
        weights = [1.0]
    else:
        weights = rng.dirichlet(np.ones(len(ns)))
        weights = weights / weights.sum()
    return DensityState({n: (w, random_block(n, rng, rank)) for n, w in zip(ns, weights)})


def clip_negative_eigenvalues(rho: DensityState) -> DensityState:
    """Project every block to the nearest positive unit-trace matrix; logs the amount clipped."""
    def clip(n, b):
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        if w[0] < 0:
            logger.info("clipping eigenvalue %.3g in sector %d", w[0], n)
        w = np.clip(w, 0.0, None)
        out = (v * w) @ v.conj().T
        return out / np.trace(out).real
    return rho.map_blocks(clip)
