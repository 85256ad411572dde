"""Combinatorial Laplacians, the ones-complement basis and random graph sequences.

A Laplacian here is always the combinatorial one, ``L = diag(W 1) - W`` for a
symmetric nonnegative weight matrix ``W`` with zero diagonal.
"""
from dataclasses import dataclass, field
from math import ceil

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import DataError, GeneratorConfigError, InvalidDimensionError

SYMMETRY_TOL = 1e-10
ROW_SUM_TOL = 1e-8
SIGN_TOL = 1e-10
PSD_TOL = 1e-8

WEIGHT_LOW = 0.1
WEIGHT_HIGH = 2.0

MODELS = ("ER", "BA", "Gaussian", "PA")
_DEFAULT_PARAMS = {
    "ER": {"p": 0.3},
    "BA": {"m": 3},
    "Gaussian": {"threshold": 0.7, "dim": 2},
    "PA": {"m": 3, "exponent": 2.5},
}
_MAX_RESAMPLE = 200


def ones_projector(n_nodes):
    """Return ``Q = (1/N) 1 1^T``."""
    return np.full((n_nodes, n_nodes), 1.0 / n_nodes)


def offdiag_penalty_matrix(n_nodes):
    """Return ``I - 1 1^T``; ``tr(L (I - 11^T))`` is the off-diagonal l1 norm on the cone."""
    return np.eye(n_nodes) - np.ones((n_nodes, n_nodes))


def offdiag_mask(n_nodes):
    """Return ``1 1^T - I``, the 0/1 indicator of off-diagonal entries."""
    return np.ones((n_nodes, n_nodes)) - np.eye(n_nodes)


def build_basis(n_nodes):
    """Orthonormal basis of the orthogonal complement of the ones vector.

    Uses one Householder reflector mapping ``e_1`` onto ``1/sqrt(N)``; the
    remaining ``N - 1`` columns of the reflector span the complement.

    Parameters
    ----------
    n_nodes : int
        Number of nodes ``N >= 2``.

    Returns
    -------
    ndarray, shape (N, N-1)
    """
    n_nodes = int(n_nodes)
    if n_nodes < 2:
        raise InvalidDimensionError(f"basis needs n_nodes >= 2, got {n_nodes}")
    u = np.full(n_nodes, 1.0 / np.sqrt(n_nodes))
    v = -u
    v[0] += 1.0
    reflector = np.eye(n_nodes) - (2.0 / (v @ v)) * np.outer(v, v)
    return reflector[:, 1:].copy()


def _as_square(raw):
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {raw.shape}")
    return raw


@dataclass(frozen=True)
class ProjectionInfo:
    clamp_distance: float
    psd: bool


def project_to_laplacian(raw, return_info=False):
    """Map a square matrix to the nearest-by-construction combinatorial Laplacian.

    Symmetrizes, zeroes positive off-diagonal entries and resets the diagonal
    to the negated off-diagonal row sum.  ``info.clamp_distance`` is the
    Frobenius distance between the symmetrized input and the result, and
    ``info.psd`` reports whether the smallest eigenvalue is above ``-PSD_TOL``.
    """
    raw = _as_square(raw)
    sym = 0.5 * (raw + raw.T)
    out = np.minimum(sym, 0.0)
    np.fill_diagonal(out, 0.0)
    np.fill_diagonal(out, -out.sum(axis=1))
    if not return_info:
        return out
    psd = bool(np.linalg.eigvalsh(out)[0] >= -PSD_TOL) if out.size else True
    return out, ProjectionInfo(float(np.linalg.norm(out - sym)), psd)


def laplacian_violations(L):
    """Return the four invariant violation magnitudes of a candidate Laplacian."""
    L = _as_square(L)
    off = L[~np.eye(L.shape[0], dtype=bool)]
    return {
        "asymmetry": float(np.max(np.abs(L - L.T))),
        "row_sum": float(np.max(np.abs(L.sum(axis=1)))),
        "positive_offdiag": float(off.max()) if off.size else 0.0,
        "negative_eigenvalue": float(-np.linalg.eigvalsh(0.5 * (L + L.T))[0]),
    }


def is_laplacian(L):
    v = laplacian_violations(L)
    return (
        v["asymmetry"] <= SYMMETRY_TOL
        and v["row_sum"] <= ROW_SUM_TOL
        and v["positive_offdiag"] <= SIGN_TOL
        and v["negative_eigenvalue"] <= PSD_TOL
    )


def validate_laplacian(L, name="L"):
    """Raise :class:`DataError` naming the first violated invariant."""
    v = laplacian_violations(L)
    limits = {
        "asymmetry": SYMMETRY_TOL,
        "row_sum": ROW_SUM_TOL,
        "positive_offdiag": SIGN_TOL,
        "negative_eigenvalue": PSD_TOL,
    }
    for key, lim in limits.items():
        if v[key] > lim:
            raise DataError(f"{name} is not a Laplacian: {key} = {v[key]:.3g} > {lim:g}")
    return np.asarray(L, dtype=float)


def laplacian_from_weights(W):
    W = np.asarray(W, dtype=float)
    return np.diag(W.sum(axis=1)) - W


def weights_from_laplacian(L):
    W = -np.asarray(L, dtype=float).copy()
    np.fill_diagonal(W, 0.0)
    return W


def edge_support(L):
    """Boolean adjacency pattern (strictly negative off-diagonals)."""
    W = weights_from_laplacian(L)
    return W > 0


def is_connected(adjacency):
    n_comp, _ = connected_components(np.asarray(adjacency, dtype=bool), directed=False)
    return n_comp == 1


@dataclass(frozen=True)
class GraphGeneratorSpec:
    """Random graph model for the first snapshot plus the temporal flip rate.

    ``params`` keys: ER ``p``; BA ``m``; Gaussian ``threshold`` (and ``dim``);
    PA ``m`` and ``exponent``.  Missing keys take the protocol defaults.
    """

    model: str
    n_nodes: int
    params: dict = field(default_factory=dict)
    perturb_rate: float = 0.1
    seed: int = 0

    def resolved_params(self):
        if self.model not in MODELS:
            raise GeneratorConfigError(f"unknown graph model {self.model!r}; expected one of {MODELS}")
        out = dict(_DEFAULT_PARAMS[self.model])
        unknown = set(self.params) - set(out)
        if unknown:
            raise GeneratorConfigError(f"unknown {self.model} parameters: {sorted(unknown)}")
        out.update(self.params)
        return out

    def validate(self):
        p = self.resolved_params()
        n = self.n_nodes
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise GeneratorConfigError(f"n_nodes must be an integer >= 2, got {n!r}")
        if not 0.0 <= self.perturb_rate <= 1.0:
            raise GeneratorConfigError(f"perturb_rate must lie in [0, 1], got {self.perturb_rate}")
        if self.model == "ER" and not 0.0 < p["p"] <= 1.0:
            raise GeneratorConfigError(f"ER probability must lie in (0, 1], got {p['p']}")
        if self.model in ("BA", "PA") and not 1 <= int(p["m"]) < n:
            raise GeneratorConfigError(f"{self.model} m must satisfy 1 <= m < n_nodes, got {p['m']}")
        if self.model == "PA" and not p["exponent"] > 2.0:
            raise GeneratorConfigError(f"PA exponent must exceed 2, got {p['exponent']}")
        if self.model == "Gaussian":
            if not 0.0 < p["threshold"] < 1.0:
                raise GeneratorConfigError(f"Gaussian threshold must lie in (0, 1), got {p['threshold']}")
            if int(p["dim"]) < 1:
                raise GeneratorConfigError("Gaussian dim must be >= 1")
        return p


def _draw_weights(rng, size):
    # uniform on (0.1, 2]
    return WEIGHT_HIGH - rng.uniform(0.0, WEIGHT_HIGH - WEIGHT_LOW, size=size)


def _er_support(n, p, rng):
    for _ in range(_MAX_RESAMPLE):
        upper = np.triu(rng.random((n, n)) < p, 1)
        adj = upper | upper.T
        if is_connected(adj):
            return adj
    raise GeneratorConfigError(f"ER(p={p}) with n={n} failed to produce a connected graph")


def _gaussian_support(n, threshold, dim, rng):
    iu = np.triu_indices(n, 1)
    for _ in range(_MAX_RESAMPLE):
        coords = rng.standard_normal((n, dim))
        d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)
        s = np.median(np.sqrt(d2[iu]))
        kernel = np.exp(-d2 / (2.0 * s * s))
        adj = kernel > threshold
        np.fill_diagonal(adj, False)
        if is_connected(adj):
            return adj
    raise GeneratorConfigError(f"Gaussian(threshold={threshold}) with n={n} failed to produce a connected graph")


def _ba_support(n, m, rng):
    g = nx.barabasi_albert_graph(n, m, seed=int(rng.integers(2**32)))
    return nx.to_numpy_array(g, nodelist=range(n)) > 0


def _pa_support(n, m, exponent, rng):
    """Shifted linear preferential attachment.

    Attachment probability is proportional to ``degree + a`` with
    ``a = m (exponent - 3)``, which yields a power-law degree tail with the
    requested exponent.
    """
    shift = m * (exponent - 3.0)
    adj = np.zeros((n, n), dtype=bool)
    seed_size = m + 1
    adj[:seed_size, :seed_size] = True
    np.fill_diagonal(adj, False)
    deg = adj.sum(axis=1).astype(float)
    for new in range(seed_size, n):
        attract = np.maximum(deg[:new] + shift, 1e-12)
        targets = rng.choice(new, size=m, replace=False, p=attract / attract.sum())
        adj[new, targets] = adj[targets, new] = True
        deg[targets] += 1
        deg[new] = m
    return adj


def _initial_support(model, n, params, rng):
    if model == "ER":
        return _er_support(n, params["p"], rng)
    if model == "BA":
        return _ba_support(n, int(params["m"]), rng)
    if model == "Gaussian":
        return _gaussian_support(n, params["threshold"], int(params["dim"]), rng)
    return _pa_support(n, int(params["m"]), params["exponent"], rng)


def _perturb(W, rate, rng):
    """Flip ``ceil(rate * |E|)`` distinct edge slots, keeping the graph connected."""
    n = W.shape[0]
    iu = np.triu_indices(n, 1)
    present = W[iu] > 0
    n_flip = int(ceil(rate * present.sum()))
    if n_flip == 0:
        return W.copy()
    edges = np.flatnonzero(present)
    holes = np.flatnonzero(~present)
    for _ in range(_MAX_RESAMPLE):
        n_remove = int(rng.binomial(n_flip, 0.5))
        n_remove = min(n_remove, len(edges))
        n_add = min(n_flip - n_remove, len(holes))
        n_remove = n_flip - n_add
        removed = rng.choice(edges, size=n_remove, replace=False)
        added = rng.choice(holes, size=n_add, replace=False)
        w = W[iu].copy()
        w[removed] = 0.0
        w[added] = _draw_weights(rng, n_add)
        out = np.zeros_like(W)
        out[iu] = w
        out = out + out.T
        if is_connected(out > 0):
            return out
    raise GeneratorConfigError("temporal perturbation kept disconnecting the graph")


def generate_graph_sequence(spec, K):
    """Draw ``K`` connected Laplacians with temporal edge flips between neighbours.

    Returns
    -------
    list of ndarray
        ``K`` Laplacians of shape ``(N, N)``.
    """
    params = spec.validate()
    if int(K) < 1:
        raise GeneratorConfigError(f"K must be >= 1, got {K}")
    rng = np.random.default_rng(spec.seed)
    n = spec.n_nodes
    adj = _initial_support(spec.model, n, params, rng)
    upper = np.triu(adj, 1)
    W = np.zeros((n, n))
    W[upper] = _draw_weights(rng, int(upper.sum()))
    W = W + W.T
    seq = [laplacian_from_weights(W)]
    for _ in range(int(K) - 1):
        W = _perturb(W, spec.perturb_rate, rng)
        seq.append(laplacian_from_weights(W))
    return seq


def read_laplacian_csv(path):
    """Read a headerless ``N x N`` CSV and validate the Laplacian invariants."""
    L = read_matrix_csv(path)
    if L.shape[0] != L.shape[1]:
        raise DataError(f"{path}: Laplacian must be square, got {L.shape}")
    return validate_laplacian(L, name=str(path))


def write_laplacian_csv(path, L):
    write_matrix_csv(path, L)


def read_matrix_csv(path, allow_header=False):
    """Parse a comma-separated numeric matrix, reporting the offending cell on failure.

    With ``allow_header`` a first row that does not parse as numbers is skipped.
    """
    with open(path, newline="") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    rows = []
    for r, line in enumerate(lines):
        cells = line.split(",")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            if r == 0 and allow_header:
                continue
            for c, cell in enumerate(cells):
                try:
                    float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {r + 1}, column {c + 1}: cannot parse {cell!r}") from None
    if not rows:
        raise DataError(f"{path}: no numeric rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows with widths {sorted(widths)}")
    out = np.array(rows, dtype=float)
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))[0]
        raise DataError(f"{path}: row {bad[0] + 1}, column {bad[1] + 1}: non-finite value")
    return out


def write_matrix_csv(path, M):
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)), delimiter=",", fmt="%.17g")
