"""Random SU(2) unitary channels estimated by Monte Carlo.

Each sample (trajectory) draws ``steps`` rotation vectors from a radial law,
composes the corresponding SU(2) elements, and conjugates the state with the
product. The averaged state is deterministic for a fixed ``(seed, samples,
steps)``: random numbers come from one stream per fixed-size batch of samples,
and batch sums are reduced in batch order, so ``n_jobs`` never changes the result.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .operators import su2_unitaries
from .states import DensityState, trace_distance

__all__ = [
    "RadialLaw",
    "ChannelRun",
    "ChannelBatches",
    "sample_rotation",
    "sample_rotations",
    "su2_log",
    "channel_batches",
    "apply_channel",
    "compose_small_steps",
    "small_step_law",
    "invariance_check",
    "batch_stderr",
    "run_descriptor",
]

logger = logging.getLogger(__name__)

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


@dataclass(frozen=True)
class RadialLaw:
    """Distribution of rotation vectors ``u`` with isotropic axes.

    ``kind`` is one of ``"delta"`` (``u = 0``), ``"gaussian"`` (independent
    normal components of standard deviation ``sigma``, tails beyond
    ``|u| = pi`` rejected), ``"uniform"`` (``|u|`` uniform on ``[0, u_max]``) or
    ``"table"`` (3-D density ``p(u)`` tabulated at nodes ``table_u`` on
    ``[0, pi]``, linear in between, normalized on construction).

    ``axis`` turns a gaussian law into a deliberately anisotropic one with all
    rotations about that fixed axis. It exists to witness non-invariance.
    """

    kind: str = "gaussian"
    sigma: float = 0.0
    u_max: float = np.pi
    table_u: tuple = ()
    table_p: tuple = ()
    axis: tuple | None = None
    _cdf: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("delta", "gaussian", "uniform", "table"):
            raise ValueError(f"unknown radial law {self.kind!r}")
        if self.kind == "gaussian" and self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "uniform" and not 0 <= self.u_max <= np.pi:
            raise ValueError("u_max must lie in [0, pi]")
        if self.axis is not None:
            if self.kind != "gaussian":
                raise ValueError("a fixed axis is only supported for the gaussian law")
            a = np.asarray(self.axis, dtype=float)
            object.__setattr__(self, "axis", tuple(a / np.linalg.norm(a)))
        if self.kind == "table":
            object.__setattr__(self, "_cdf", self._build_table())

    @property
    def isotropic(self) -> bool:
        return self.axis is None

    def _build_table(self):
        u = np.asarray(self.table_u, dtype=float)
        p = np.asarray(self.table_p, dtype=float)
        if u.ndim != 1 or u.shape != p.shape or u.size < 2:
            raise ValueError("table law needs matching 1-D node and value arrays")
        if u[0] < 0 or u[-1] > np.pi + 1e-12 or np.any(np.diff(u) <= 0):
            raise ValueError("table nodes must increase within [0, pi]")
        if np.any(p < 0):
            raise ValueError("table density must be non-negative")
        # radial density 4 pi u^2 p(u) is cubic on each refined cell, so Simpson is exact there
        fine = np.unique(np.concatenate([np.linspace(a, b, 33) for a, b in zip(u[:-1], u[1:])]))
        f = 4 * np.pi * fine ** 2 * np.interp(fine, u, p)
        mid = 0.5 * (fine[:-1] + fine[1:])
        fm = 4 * np.pi * mid ** 2 * np.interp(mid, u, p)
        cells = np.diff(fine) / 6 * (f[:-1] + 4 * fm + f[1:])
        total = cells.sum()
        if total <= 0:
            raise ValueError("table density integrates to zero")
        cdf = np.concatenate([[0.0], np.cumsum(cells)]) / total
        object.__setattr__(self, "table_p", tuple(p / total))
        return (tuple(fine), tuple(cdf))

    def normalization(self) -> float:
        """``integral d^3u p(u)`` of a table law (1 by construction)."""
        u = np.asarray(self.table_u)
        p = np.asarray(self.table_p)
        fine = np.asarray(self._cdf[0])
        f = 4 * np.pi * fine ** 2 * np.interp(fine, u, p)
        mid = 0.5 * (fine[:-1] + fine[1:])
        fm = 4 * np.pi * mid ** 2 * np.interp(mid, u, p)
        return float(np.sum(np.diff(fine) / 6 * (f[:-1] + 4 * fm + f[1:])))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` rotation vectors, shape ``(size, 3)``."""
        if self.kind == "delta":
            return np.zeros((size, 3))
        if self.kind == "gaussian":
            return self._sample_gaussian(rng, size)
        direction = _uniform_directions(rng, size)
        if self.kind == "uniform":
            radius = rng.uniform(0.0, self.u_max, size)
        else:
            fine, cdf = (np.asarray(x) for x in self._cdf)
            radius = np.interp(rng.uniform(0.0, 1.0, size), cdf, fine)
        return direction * radius[:, None]

    def _sample_gaussian(self, rng, size):
        out = np.empty((size, 3))
        filled = 0
        rejected = 0
        while filled < size:
            need = size - filled
            if self.axis is None:
                draw = rng.normal(0.0, self.sigma, (need, 3))
            else:
                draw = rng.normal(0.0, self.sigma, (need, 1)) * np.asarray(self.axis)
            keep = np.linalg.norm(draw, axis=1) <= np.pi
            kept = draw[keep]
            out[filled:filled + len(kept)] = kept
            filled += len(kept)
            rejected += need - len(kept)
        if rejected:
            logger.debug("rejected %d gaussian draws with |u| > pi", rejected)
        return out

    def to_dict(self) -> dict:
        d = {"law": self.kind}
        if self.kind == "gaussian":
            d["sigma"] = self.sigma
            if self.axis is not None:
                d["axis"] = list(self.axis)
        elif self.kind == "uniform":
            d["u_max"] = self.u_max
        elif self.kind == "table":
            d["table_u"] = list(self.table_u)
            d["table_p"] = list(self.table_p)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RadialLaw":
        kind = d.get("law", "gaussian")
        kwargs = {"kind": kind}
        for key in ("sigma", "u_max"):
            if key in d:
                kwargs[key] = float(d[key])
        if "axis" in d:
            kwargs["axis"] = tuple(d["axis"])
        if kind == "table":
            kwargs["table_u"] = tuple(d["table_u"])
            kwargs["table_p"] = tuple(d["table_p"])
        return cls(**kwargs)


def _uniform_directions(rng, size):
    v = rng.standard_normal((size, 3))
    norm = np.linalg.norm(v, axis=1)
    while np.any(norm == 0):  # measure-zero, but keep the contract
        bad = norm == 0
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norm = np.linalg.norm(v, axis=1)
    return v / norm[:, None]


@dataclass(frozen=True)
class ChannelRun:
    samples: int
    seed: int = 0
    steps: int = 1
    n_jobs: int = 1
    batch_size: int = 4096

    def __post_init__(self):
        if self.samples < 1 or self.steps < 1 or self.batch_size < 1 or self.n_jobs < 1:
            raise ValueError("samples, steps, batch_size and n_jobs must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def batches(self):
        starts = range(0, self.samples, self.batch_size)
        return [(b, min(self.batch_size, self.samples - s)) for b, s in enumerate(starts)]

    def rng(self, batch: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(batch,)))

    def to_dict(self) -> dict:
        return {"samples": self.samples, "steps": self.steps, "seed": self.seed}


def run_descriptor(law: RadialLaw, run: ChannelRun) -> str:
    """JSON description of a Monte Carlo run (law, its parameter, samples, steps, seed)."""
    return json.dumps({**law.to_dict(), **run.to_dict()})


def sample_rotation(law: RadialLaw, rng: np.random.Generator) -> np.ndarray:
    return law.sample(rng, 1)[0]


def sample_rotations(law: RadialLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    return law.sample(rng, size)


def _su2_elements(us):
    r = np.linalg.norm(us, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    axis = us / safe[..., None]
    gen = np.einsum("...k,kij->...ij", axis, _PAULI)
    eye = np.eye(2)
    return np.cos(r)[..., None, None] * eye + 1j * np.sin(r)[..., None, None] * gen


def su2_log(v: np.ndarray) -> np.ndarray:
    """Rotation vectors ``u`` with ``|u|`` in ``[0, pi]`` such that ``exp(i u.sigma) = v``."""
    a = (v - np.conj(np.swapaxes(v, -1, -2))) / 2j
    sin_axis = np.stack([a[..., 1, 0].real, a[..., 1, 0].imag, a[..., 0, 0].real], axis=-1)
    cos_r = 0.5 * np.trace(v, axis1=-2, axis2=-1).real
    s = np.linalg.norm(sin_axis, axis=-1)
    r = np.arctan2(s, cos_r)
    out = sin_axis * np.where(s > 0, r / np.where(s > 0, s, 1.0), 0.0)[..., None]
    # v = -1 has no preferred axis; any axis at |u| = pi is exact
    minus_one = (s == 0) & (cos_r < 0)
    out[minus_one] = np.array([0.0, 0.0, np.pi])
    return out


def _trajectory_rotations(law: RadialLaw, run: ChannelRun, batch: int, size: int) -> np.ndarray:
    rng = run.rng(batch)
    draws = law.sample(rng, size * run.steps).reshape(size, run.steps, 3)
    if run.steps == 1:
        return draws[:, 0]
    total = _su2_elements(draws[:, 0])
    for k in range(1, run.steps):
        total = _su2_elements(draws[:, k]) @ total  # later steps act on the left
    return su2_log(total)


@dataclass(frozen=True)
class ChannelBatches:
    """Per-batch sums of conjugated blocks, kept for batch-means error estimates."""

    weights: dict
    sums: dict  # n -> array (n_batches, n+1, n+1)
    counts: np.ndarray

    def mean_state(self) -> DensityState:
        total = self.counts.sum()
        return DensityState({n: (self.weights[n], _tree_sum(s) / total) for n, s in self.sums.items()},
                            validate=False)

    def batch_states(self) -> list[DensityState]:
        return [DensityState({n: (self.weights[n], s[i] / self.counts[i]) for n, s in self.sums.items()},
                             validate=False)
                for i in range(len(self.counts))]

    def estimate(self) -> DensityState:
        """Mean state, re-symmetrized and trace-normalized."""
        return _finalize(self.mean_state())


def _tree_sum(arr: np.ndarray) -> np.ndarray:
    while arr.shape[0] > 1:
        if arr.shape[0] % 2:
            arr = np.concatenate([arr[:-2], (arr[-2] + arr[-1])[None]])
        arr = arr[0::2] + arr[1::2]
    return arr[0]


def channel_batches(rho: DensityState, law: RadialLaw, run: ChannelRun) -> ChannelBatches:
    def one_batch(spec):
        batch, size = spec
        us = _trajectory_rotations(law, run, batch, size)
        out = {}
        for n, _, b in rho.items():
            if n == 0:
                out[n] = b * size
                continue
            u = su2_unitaries(us, n)
            out[n] = np.einsum("aij,jk,alk->il", u, b, u.conj())
        return out

    specs = run.batches()
    if run.n_jobs == 1:
        results = [one_batch(s) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=run.n_jobs) as pool:
            results = list(pool.map(one_batch, specs))
    sums = {n: np.stack([r[n] for r in results]) for n in rho.photon_numbers}
    return ChannelBatches({n: rho.weight(n) for n in rho.photon_numbers}, sums,
                          np.array([size for _, size in specs], dtype=float))


def _finalize(state: DensityState) -> DensityState:
    return state.map_blocks(lambda n, b: 0.5 * (b + b.conj().T) / np.trace(b).real)


def apply_channel(rho: DensityState, law: RadialLaw, run: ChannelRun) -> DensityState:
    """Average of ``U(u) rho U(u)^dag`` over ``run.samples`` draws of the law."""
    if law.kind == "delta":
        return rho
    return channel_batches(rho, law, run).estimate()


def small_step_law(nu: float, t: float, steps: int) -> RadialLaw:
    """Per-step gaussian whose component variance ``2 nu t / steps`` matches the generator."""
    return RadialLaw("gaussian", sigma=float(np.sqrt(2.0 * nu * t / steps)))


def compose_small_steps(rho: DensityState, nu: float, t: float, steps: int, samples: int, seed: int = 0,
                        n_jobs: int = 1) -> DensityState:
    """Monte Carlo estimate of the semigroup at time ``t`` as ``steps`` small random rotations."""
    if steps < 10:
        raise ValueError("compose_small_steps needs at least 10 steps")
    if t == 0:
        return rho
    run = ChannelRun(samples=samples, seed=seed, steps=steps, n_jobs=n_jobs)
    return apply_channel(rho, small_step_law(nu, t, steps), run)


def invariance_check(law: RadialLaw, v, rho: DensityState, run: ChannelRun) -> float:
    """Trace distance between ``E(V rho V^dag)`` and ``V E(rho) V^dag`` with common random numbers."""
    v = np.asarray(v, dtype=float)
    if law.kind == "delta":
        return 0.0

    def conj(state):
        return state.map_blocks(lambda n, b: (su2_unitaries(v[None], n)[0] @ b
                                              @ su2_unitaries(v[None], n)[0].conj().T))

    left = apply_channel(conj(rho), law, run)
    right = conj(apply_channel(rho, law, run))
    return trace_distance(left, right)


def batch_stderr(batches: ChannelBatches, observable) -> tuple[float, float]:
    """Estimate ``observable(mean state)`` and its batch-means standard error.

    ``observable`` maps a :class:`DensityState` to a float. With a single
    batch the error is reported as NaN.
    """
    value = float(observable(batches.estimate()))
    per_batch = np.array([observable(_finalize(s)) for s in batches.batch_states()], dtype=float)
    k = len(per_batch)
    if k < 2:
        return value, float("nan")
    w = batches.counts / batches.counts.sum()
    mean = np.sum(w * per_batch)
    var = np.sum(w * (per_batch - mean) ** 2) * k / (k - 1)
    return value, float(np.sqrt(var / k))
