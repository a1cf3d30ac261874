"""scikit-learn style wrappers so the dynamics compose with pipelines.

``X`` is always a sequence of states (anything :func:`check_state` accepts).
None of these estimators learn from data; ``fit`` validates the inputs and
records what the transform needs, such as the largest photon number.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .channel import compose_small_steps
from .dynamics import evolve_multipole, evolve_ode
from .gellmann import from_coords, gamma_matrix, evolve_coords, to_coords
from .polarization import GridOrderError, degree_pq, make_grid
from .states import DensityState, purity, stokes_parameters, total_variance
from .validation import check_non_negative, check_positive_int, check_states

__all__ = ["SU2Depolarizer", "PolarizationFeatures", "GellMannTransformer"]

_METHODS = ("multipole", "ode", "gellmann", "mc")


class SU2Depolarizer(TransformerMixin, BaseEstimator):
    """Evolve states under SU(2)-invariant depolarization for a fixed time.

    Parameters
    ----------
    nu : float, default=1.0
        Depolarization rate.
    t : float, default=0.0
        Evolution time.
    method : {"multipole", "ode", "gellmann", "mc"}, default="multipole"
        Solver. ``"gellmann"`` handles each sector through its coordinates
        (the vacuum is left alone); ``"mc"`` composes small random rotations.
    dt : float or None, default=None
        Largest RK4 step for ``method="ode"``.
    samples, steps, seed, n_jobs
        Monte Carlo settings for ``method="mc"``.
    """

    def __init__(self, nu=1.0, t=0.0, method="multipole", dt=None, samples=10000, steps=20, seed=0, n_jobs=1):
        self.nu = nu
        self.t = t
        self.method = method
        self.dt = dt
        self.samples = samples
        self.steps = steps
        self.seed = seed
        self.n_jobs = n_jobs

    def _validate_params(self):
        check_non_negative(self.nu, "nu")
        check_non_negative(self.t, "t")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.method == "mc":
            check_positive_int(self.samples, "samples")
            if check_positive_int(self.steps, "steps") < 10:
                raise ValueError(f"steps must be at least 10 for method='mc', got {self.steps}")

    def fit(self, X, y=None):
        self._validate_params()
        states = check_states(X)
        self.photon_numbers_ = sorted({n for s in states for n in s.photon_numbers})
        self.max_photon_number_ = self.photon_numbers_[-1]
        return self

    def _evolve_one(self, rho: DensityState) -> DensityState:
        if self.method == "multipole":
            return evolve_multipole(rho, self.nu, self.t)
        if self.method == "ode":
            return evolve_ode(rho, self.nu, self.t, self.dt)
        if self.method == "mc":
            return compose_small_steps(rho, self.nu, self.t, self.steps, self.samples, self.seed, self.n_jobs)

        def by_coords(n, b):
            if n == 0:
                return b
            mu = evolve_coords(to_coords(b).mu, gamma_matrix(n, self.nu), self.t)
            return from_coords(mu, n)
        return rho.map_blocks(by_coords)

    def transform(self, X):
        check_is_fitted(self, "photon_numbers_")
        self._validate_params()
        return [self._evolve_one(rho) for rho in check_states(X)]


class PolarizationFeatures(TransformerMixin, BaseEstimator):
    """Map states to a table of polarization observables, one row per state.

    Parameters
    ----------
    features : tuple of str
        Any of ``P_s``, ``P_Q``, ``D``, ``Sigma``, ``purity``,
        ``total_variance``, ``s_x``, ``s_y``, ``s_z``.
    """

    _AVAILABLE = ("P_s", "P_Q", "D", "Sigma", "purity", "total_variance", "s_x", "s_y", "s_z")

    def __init__(self, features=("P_s", "P_Q", "D", "purity", "total_variance")):
        self.features = features

    def fit(self, X, y=None):
        unknown = [f for f in self.features if f not in self._AVAILABLE]
        if unknown:
            raise ValueError(f"unknown feature(s): {unknown}")
        states = check_states(X)
        self.max_photon_number_ = max(s.max_photon_number for s in states)
        self.grid_ = make_grid(self.max_photon_number_)
        self.n_features_out_ = len(self.features)
        return self

    def _row(self, rho):
        report = degree_pq(rho, self.grid_)
        s = stokes_parameters(rho).s
        values = {"P_s": report.P_s, "P_Q": report.P_Q, "D": report.D, "Sigma": report.Sigma,
                  "purity": purity(rho), "total_variance": total_variance(rho),
                  "s_x": s[0], "s_y": s[1], "s_z": s[2]}
        return [values[f] for f in self.features]

    def transform(self, X):
        check_is_fitted(self, "grid_")
        states = check_states(X)
        too_big = [s.max_photon_number for s in states if s.max_photon_number > self.max_photon_number_]
        if too_big:
            raise GridOrderError(f"fitted for n <= {self.max_photon_number_}, got photon number {max(too_big)}")
        return np.array([self._row(rho) for rho in states], dtype=float)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "grid_")
        return np.asarray(self.features, dtype=object)


class GellMannTransformer(TransformerMixin, BaseEstimator):
    """Single-sector states to Gell-Mann coordinate vectors and back.

    The sector is learned in ``fit``; every state must live in it alone.
    """

    def __init__(self, check_positive=True):
        self.check_positive = check_positive

    def fit(self, X, y=None):
        states = check_states(X)
        sectors = {s.photon_numbers for s in states}
        if len(sectors) != 1 or len(next(iter(sectors))) != 1:
            raise ValueError("all states must occupy the same single photon-number sector")
        n = next(iter(sectors))[0]
        if n < 1:
            raise ValueError("the vacuum has no Gell-Mann coordinates")
        self.n_ = n
        self.n_features_out_ = (n + 1) ** 2 - 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_")
        out = []
        for rho in check_states(X):
            if rho.photon_numbers != (self.n_,):
                raise ValueError(f"state occupies sectors {rho.photon_numbers}, expected only {self.n_}")
            out.append(to_coords(rho.block(self.n_)).mu)
        return np.array(out)

    def inverse_transform(self, X):
        check_is_fitted(self, "n_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_out_:
            raise ValueError(f"expected {self.n_features_out_} coordinates per row, got {X.shape[1]}")
        return [DensityState.single(from_coords(mu, self.n_, self.check_positive)) for mu in X]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "n_")
        return np.asarray([f"mu{j + 1}" for j in range(self.n_features_out_)], dtype=object)
