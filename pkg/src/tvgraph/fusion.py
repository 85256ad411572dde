"""Fusion matrices coupling the same edge across the K graphs.

The fusion penalty of a Laplacian sequence is ``sum_{i != j} ||A l_ij||_2``
where ``l_ij`` stacks entry ``(i, j)`` of every graph.
"""
from dataclasses import dataclass

import numpy as np

from .errors import FusionConfigError, InvalidDimensionError
from .graphs import read_matrix_csv

KINDS = ("temporal", "group", "star", "custom")
PD_TOL = 1e-10
DEFAULT_LOADING = 0.1


@dataclass(frozen=True)
class FusionSpec:
    kind: str
    matrix: np.ndarray
    loading: float = 0.0

    @property
    def K(self):
        return self.matrix.shape[0]

    @property
    def gram(self):
        return self.matrix.T @ self.matrix

    @property
    def inverse(self):
        return np.linalg.inv(self.matrix)

    @property
    def sigma_max(self):
        """Largest eigenvalue of the Gram matrix."""
        return float(np.linalg.eigvalsh(self.gram)[-1])


def _check_pd(A, kind):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise FusionConfigError(f"fusion matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise FusionConfigError("fusion matrix has non-finite entries")
    min_eig = float(np.linalg.eigvalsh(A.T @ A)[0])
    if min_eig < PD_TOL:
        raise FusionConfigError(
            f"{kind} fusion Gram matrix is not positive definite (min eigenvalue {min_eig:.3g})"
        )
    return A


def build_fusion_matrix(kind, K, loading=None, matrix=None):
    """Build a square invertible fusion matrix.

    Parameters
    ----------
    kind : {"temporal", "group", "star", "custom"}
        ``temporal`` is the unit lower-bidiagonal difference operator anchored
        on graph 1.  ``group`` is ``loading * I + (I - 11^T / K)``.  ``star``
        is ``loading * I + (I - 1 e_1^T)``, whose rows ``k > 1`` difference
        graph ``k`` against the reference graph 1.  ``custom`` validates the
        caller's ``matrix``.
    K : int
    loading : float, optional
        Diagonal loading.  Defaults to 0 for temporal/custom and 0.1 for
        group/star, which are singular without it.
    """
    if kind not in KINDS:
        raise FusionConfigError(f"unknown fusion kind {kind!r}; expected one of {KINDS}")
    K = int(K)
    if K < 1:
        raise FusionConfigError(f"K must be >= 1, got {K}")
    if loading is None:
        loading = DEFAULT_LOADING if kind in ("group", "star") else 0.0
    if loading < 0:
        raise FusionConfigError(f"loading must be >= 0, got {loading}")

    if kind == "custom":
        if matrix is None:
            raise FusionConfigError("custom fusion needs a matrix")
        A = np.asarray(matrix, dtype=float)
        if A.shape != (K, K):
            raise FusionConfigError(f"custom fusion matrix must be {K}x{K}, got {A.shape}")
        A = A + loading * np.eye(K)
    elif K == 1:
        A = np.ones((1, 1))
    elif kind == "temporal":
        A = np.eye(K) - np.eye(K, k=-1) + loading * np.eye(K)
    elif kind == "group":
        A = (1.0 + loading) * np.eye(K) - np.full((K, K), 1.0 / K)
    else:
        A = (1.0 + loading) * np.eye(K)
        A[:, 0] -= 1.0
    return FusionSpec(kind, _check_pd(A, kind), float(loading))


def stack_groups(laplacians):
    """Stack a sequence of ``K`` ``N x N`` matrices into shape ``(K, N, N)``."""
    L = np.asarray(laplacians, dtype=float)
    if L.ndim != 3 or L.shape[1] != L.shape[2]:
        raise InvalidDimensionError(f"expected K square matrices, got shape {L.shape}")
    return L


def eval_regularizer(laplacians, spec):
    """Fusion penalty ``sum_{i != j} ||A l_ij||_2`` over ordered off-diagonal pairs."""
    L = stack_groups(laplacians)
    if L.shape[0] != spec.K:
        raise InvalidDimensionError(f"{L.shape[0]} graphs but fusion matrix is {spec.K}x{spec.K}")
    AL = np.einsum("ak,kij->aij", spec.matrix, L)
    norms = np.sqrt((AL**2).sum(axis=0))
    np.fill_diagonal(norms, 0.0)
    return float(norms.sum())


def beta_heuristic(spec, n_nodes, n_total, c=2.0):
    """Penalty weight ``c (1 + sigma_max(J) sqrt(K)) (1/N + sqrt(ln N / n))``."""
    return float(
        c * (1.0 + spec.sigma_max * np.sqrt(spec.K)) * (1.0 / n_nodes + np.sqrt(np.log(n_nodes) / n_total))
    )


def read_fusion_csv(path, loading=0.0):
    A = read_matrix_csv(path)
    return build_fusion_matrix("custom", A.shape[0], loading=loading, matrix=A)
