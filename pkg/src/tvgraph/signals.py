"""Smooth graph signals and the mask-plus-noise corruption model."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, InvalidDimensionError, NumericalFailure
from .graphs import read_matrix_csv


@dataclass(frozen=True)
class Observation:
    """Masked noisy samples of one graph's signal matrix.

    ``observed`` holds zeros wherever ``mask`` is zero.
    """

    observed: np.ndarray
    mask: np.ndarray
    noise_std: float

    def __post_init__(self):
        y = np.asarray(self.observed, dtype=float)
        m = np.asarray(self.mask, dtype=float)
        if y.ndim != 2 or y.shape != m.shape:
            raise InvalidDimensionError(f"observed {y.shape} and mask {m.shape} must be equal 2-d shapes")
        if not np.all((m == 0) | (m == 1)):
            raise DataError("mask entries must be exactly 0 or 1")
        if not np.all(np.isfinite(y)):
            raise DataError("observed values must be finite")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        object.__setattr__(self, "observed", y * m)
        object.__setattr__(self, "mask", m)

    @property
    def n_nodes(self):
        return self.observed.shape[0]

    @property
    def n_samples(self):
        return self.observed.shape[1]

    @property
    def empty_columns(self):
        """Indices of columns with no observed entry."""
        return np.flatnonzero(self.mask.sum(axis=0) == 0)


def generate_smooth_signals(L, n_samples, mode="filter", alpha=0.5, rng=None):
    """Draw ``n_samples`` smooth signals on the graph with Laplacian ``L``.

    ``mode="filter"`` returns ``(I + alpha L)^{-1} B`` and ``mode="gmrf"``
    returns ``sqrt(pinv(L)) B``, with ``B`` i.i.d. standard normal of shape
    ``(N, n_samples)``.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if int(n_samples) < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(rng)
    base = rng.standard_normal((n, int(n_samples)))
    if mode == "filter":
        if alpha < 0:
            raise ConfigError(f"filter alpha must be >= 0, got {alpha}")
        try:
            return np.linalg.solve(np.eye(n) + alpha * L, base)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("signal-filter", str(exc)) from exc
    if mode == "gmrf":
        evals, evecs = np.linalg.eigh(0.5 * (L + L.T))
        tol = max(n * np.finfo(float).eps * max(evals[-1], 1.0), 1e-10)
        scale = np.zeros_like(evals)
        keep = evals > tol
        scale[keep] = 1.0 / np.sqrt(evals[keep])
        return (evecs * scale) @ (evecs.T @ base)
    raise ConfigError(f"unknown signal mode {mode!r}; expected 'filter' or 'gmrf'")


def corrupt(X, sampling_rate, noise_std, rng=None):
    """Bernoulli(``sampling_rate``) mask and additive Gaussian noise of std ``noise_std``."""
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DataError("signal matrix has non-finite entries")
    if not 0.0 <= sampling_rate <= 1.0:
        raise ConfigError(f"sampling_rate must lie in [0, 1], got {sampling_rate}")
    if noise_std < 0:
        raise ConfigError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(rng)
    mask = (rng.random(X.shape) < sampling_rate).astype(float)
    noise = noise_std * rng.standard_normal(X.shape)
    return Observation(mask * (X + noise), mask, float(noise_std))


def read_observation_csv(signal_path, mask_path, noise_std):
    y = read_matrix_csv(signal_path)
    m = read_matrix_csv(mask_path)
    if y.shape != m.shape:
        raise DataError(f"signal {y.shape} and mask {m.shape} shapes differ")
    if not np.all((m == 0) | (m == 1)):
        raise DataError(f"{mask_path}: mask entries must be exactly 0 or 1")
    return Observation(y, m, float(noise_std))
