"""ADMM solver for joint Laplacian-sequence learning and signal imputation.

Problem solved (``n = sum_k n_k``, ``S_k = X_k X_k^T / n_k``)::

    min  (1/n) sum_k [ ||Y_k - M_k * X_k||_F^2 / sigma_k^2
                       + n_k (tr(L_k S_k) - log det(L_k + 11^T/N)) ]
         + (2 alpha / n) sum_k tr(L_k (I - 11^T))
         + beta sum_{i != j} ||A l_ij||_2
    s.t. every L_k is a combinatorial Laplacian.

Each ``L_k`` is parametrised as ``F G_k F^T`` with ``F`` an orthonormal
basis of the ones-complement and ``G_k`` positive definite.  Consensus copies
``C`` (carrying the fusion penalty) and ``D`` (carrying the sign pattern) are
tied to it by the duals ``P`` and ``S``.  One sweep updates, in order, the
signals, the ``G_k``, ``C``, ``D`` and the duals.
"""
import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import nnls

from .errors import (
    ConfigError,
    DomainError,
    InvalidDimensionError,
    NumericalFailure,
    UnobservedColumnError,
)
from .fusion import eval_regularizer
from .graphs import build_basis, project_to_laplacian

LOGDET_FLOOR = 1e-12
G_EIG_FLOOR = 1e-10
_ENUM_MAX_K = 10


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    """Solver weights and stopping rule.

    ``column_ridge`` is only used for signal columns with no observed entry;
    leaving it at zero makes such columns an error.
    """

    alpha: float = 1.0
    beta: float = 0.0
    rho: float = 0.05
    max_iter: int = 2000
    tol_primal: float = 1e-5
    tol_dual: float = 1e-5
    column_ridge: float = 0.0
    workers: int = 1
    trace_path: str = None

    def validate(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta >= 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if not self.rho > 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        if int(self.max_iter) < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ConfigError("tolerances must be > 0")
        if self.column_ridge < 0:
            raise ConfigError(f"column_ridge must be >= 0, got {self.column_ridge}")
        if int(self.workers) < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        return self


@dataclass
class SolverState:
    X: list
    G: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P: np.ndarray
    S: np.ndarray
    D_prev: np.ndarray = None
    iteration: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.D_prev is None:
            self.D_prev = self.D.copy()

    @property
    def K(self):
        return self.G.shape[0]

    @property
    def n_nodes(self):
        return self.D.shape[1]

    def copy(self):
        return SolverState(
            X=[x.copy() for x in self.X],
            G=self.G.copy(),
            C=self.C.copy(),
            D=self.D.copy(),
            P=self.P.copy(),
            S=self.S.copy(),
            D_prev=self.D_prev.copy(),
            iteration=self.iteration,
            history=list(self.history),
        )


@dataclass
class SolveResult:
    laplacians: list
    signals: list
    objective_trace: np.ndarray
    residual_trace: np.ndarray
    status: Status
    iterations: int
    state: SolverState
    clamp_distance: np.ndarray
    consensus_gap: np.ndarray


@lru_cache(maxsize=32)
def _basis(n_nodes):
    F = build_basis(n_nodes)
    F.setflags(write=False)
    return F


def _sym(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _laplacians(G, F):
    return _sym(F @ G @ F.T)


def _pairs(n):
    return np.triu_indices(n, 1)


def _mirror(groups, n, diag=None):
    """Scatter upper-triangle groups ``(K, n_pairs)`` into symmetric ``(K, n, n)``."""
    iu = _pairs(n)
    out = np.zeros((groups.shape[0], n, n))
    out[:, iu[0], iu[1]] = groups
    out[:, iu[1], iu[0]] = groups
    if diag is not None:
        idx = np.arange(n)
        out[:, idx, idx] = diag
    return out


def _diag(M):
    return np.diagonal(M, axis1=-2, axis2=-1)


def _check_obs(obs, spec=None):
    obs = list(obs)
    if not obs:
        raise InvalidDimensionError("need at least one observation block")
    n = obs[0].n_nodes
    if n < 2:
        raise InvalidDimensionError("need at least two nodes")
    for k, o in enumerate(obs):
        if o.n_nodes != n:
            raise InvalidDimensionError(f"graph {k} has {o.n_nodes} nodes, graph 0 has {n}")
    if spec is not None and spec.K != len(obs):
        raise InvalidDimensionError(f"{len(obs)} observation blocks but fusion matrix is {spec.K}x{spec.K}")
    return obs


def initial_state(obs):
    """``X = Y_M``, ``G_k = I``, ``C = D = F F^T`` (already sign-feasible), zero duals."""
    obs = _check_obs(obs)
    n = obs[0].n_nodes
    K = len(obs)
    F = _basis(n)
    FF = F @ F.T
    D = np.repeat(FF[None], K, axis=0)
    return SolverState(
        X=[o.observed.copy() for o in obs],
        G=np.repeat(np.eye(n - 1)[None], K, axis=0),
        C=D.copy(),
        D=D.copy(),
        P=np.zeros_like(D),
        S=np.zeros_like(D),
    )


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _signal_update_k(L, o, n_total, ridge, k):
    N, n_k = o.observed.shape
    m = o.mask
    empty = m.sum(axis=0) == 0
    if ridge == 0 and empty.any():
        raise UnobservedColumnError(k, int(np.flatnonzero(empty)[0]))
    eye = np.eye(N)
    if o.noise_std == 0:
        # observed entries are pinned; unobserved rows satisfy (L x)_j = 0
        mats = (1.0 - m.T)[:, :, None] * L[None] + m.T[:, :, None] * eye
        rhs = m * o.observed
    else:
        w = 1.0 / o.noise_std**2
        mats = L[None] + (w * m.T)[:, :, None] * eye
        rhs = w * o.observed
    if ridge > 0 and empty.any():
        mats[empty] += n_total * ridge * eye
    return np.linalg.solve(mats, rhs.T[:, :, None])[:, :, 0].T


def update_signals(state, obs, cfg):
    """Column-wise closed-form signal update.

    For graph ``k`` and column ``i`` solves
    ``(Diag(m_i) / (n sigma_k^2) + L_k / n) x_i = y_i / (n sigma_k^2)``
    with ``L_k = F G_k F^T``.  ``sigma_k = 0`` pins observed entries to the
    data and harmonically interpolates the rest.
    """
    obs = _check_obs(obs)
    F = _basis(state.n_nodes)
    Ls = _laplacians(state.G, F)
    n_total = sum(o.n_samples for o in obs)
    jobs = list(range(len(obs)))
    return _map(
        lambda k: _signal_update_k(Ls[k], obs[k], n_total, cfg.column_ridge, k),
        jobs,
        int(cfg.workers),
    )


def _graph_update_k(X, G_D, G_P, alpha, rho, n_k, n_total, F):
    w = n_k / n_total
    N1 = F.shape[1]
    B_t = F.T @ (X @ X.T / n_k) @ F + (2.0 * alpha / n_k) * np.eye(N1)
    lin = (w * B_t + F.T @ G_P @ F - rho * (F.T @ G_D @ F)) / rho
    lam, U = np.linalg.eigh(_sym(lin))
    c = w / rho
    root = np.sqrt(lam * lam + 4.0 * c)
    # v solves v^2 + lam v - c = 0; the two forms avoid cancellation
    v = np.where(lam > 0, 2.0 * c / (lam + root), 0.5 * (root - lam))
    return _sym((U * v) @ U.T), v


def update_graphs(state, obs, cfg, return_eigenvalues=False):
    """Per-graph ``G_k`` update by eigendecomposition.

    Minimises ``(n_k/n)(-log det G + tr(B_k G)) + tr(F^T P_k F G)
    + (rho/2)||F G F^T - D_k||_F^2`` with
    ``B_k = F^T (X_k X_k^T + 2 alpha H) F / n_k`` and ``H = I - 11^T``.
    """
    obs = _check_obs(obs)
    F = _basis(state.n_nodes)
    n_total = sum(o.n_samples for o in obs)
    out = _map(
        lambda k: _graph_update_k(
            state.X[k], state.D[k], state.P[k], cfg.alpha, cfg.rho, obs[k].n_samples, n_total, F
        ),
        list(range(len(obs))),
        int(cfg.workers),
    )
    G = np.stack([g for g, _ in out])
    if return_eigenvalues:
        return G, np.stack([v for _, v in out])
    return G


def update_consensus_c(state, spec, cfg):
    """Group shrinkage for the fusion copy.

    For every off-diagonal pair minimises
    ``beta ||A c|| + s^T A c + (rho/2)||A c - A d||^2``, whose solution is
    ``[1 - beta / ||rho A d - s||]_+ (d - A^{-1} s / rho)``.  Diagonal groups
    are copied from ``D``.
    """
    n = state.n_nodes
    iu = _pairs(n)
    d = state.D[:, iu[0], iu[1]]
    s = state.S[:, iu[0], iu[1]]
    A = spec.matrix
    z = cfg.rho * (A @ d) - s
    nz = np.sqrt((z * z).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(nz > 0, np.maximum(0.0, 1.0 - cfg.beta / nz), 0.0)
    c = factor * (d - np.linalg.solve(A, s) / cfg.rho)
    return _mirror(c, n, diag=_diag(state.D))


def _subset_table(K):
    table = []
    for bits in itertools.product((False, True), repeat=K):
        free = np.array(bits, dtype=bool)
        table.append(free)
    return table


@lru_cache(maxsize=64)
def _subset_inverses(H_bytes, K):
    H = np.frombuffer(H_bytes).reshape(K, K)
    out = []
    for free in _subset_table(K):
        if free.any():
            out.append((free, np.linalg.inv(H[np.ix_(free, free)])))
        else:
            out.append((free, None))
    return out


def solve_nonpositive_qp(H, b):
    """Minimise ``0.5 d^T H d - b^T d`` subject to ``d <= 0`` for many right-hand sides.

    ``H`` is ``(K, K)`` positive definite and ``b`` is ``(K, P)``.  For small
    ``K`` every candidate free set is solved on its face and the feasible
    candidate of least objective is kept; this is exact because the optimum is
    the unconstrained face minimiser of its own support.
    """
    H = np.ascontiguousarray(H, dtype=float)
    b = np.asarray(b, dtype=float)
    K, P = b.shape
    if K > _ENUM_MAX_K:
        return _nonpositive_qp_nnls(H, b)
    best = np.zeros((K, P))
    best_val = np.zeros(P)
    for free, inv in _subset_inverses(H.tobytes(), K):
        if inv is None:
            continue
        bf = b[free]
        df = inv @ bf
        feasible = np.all(df <= 0.0, axis=0)
        val = -0.5 * (bf * df).sum(axis=0)
        better = feasible & (val < best_val)
        if better.any():
            best_val = np.where(better, val, best_val)
            cand = np.zeros((K, P))
            cand[free] = df
            best[:, better] = cand[:, better]
    return best


def _nonpositive_qp_nnls(H, b):
    # e = -d >= 0 minimises 0.5 e^T H e + b^T e = 0.5 ||R^T e + R^{-1} b||^2 + const
    R = np.linalg.cholesky(H)
    target = -np.linalg.solve(R, b)
    out = np.empty_like(b)
    for p in range(b.shape[1]):
        e, _ = nnls(R.T, target[:, p])
        out[:, p] = -e
    return out


def update_consensus_d(state, spec, cfg, G=None, C=None):
    """Sign-constrained consensus update.

    Diagonal entries: ``[p_ii / rho + l_ii]_+``.  Off-diagonal groups minimise
    ``-p^T d + (rho/2)||l - d||^2 - s^T A d + (rho/2)||A (c - d)||^2`` over
    ``d <= 0`` exactly, with ``l_ij`` taken from ``F G_k F^T``.
    """
    G = state.G if G is None else G
    C = state.C if C is None else C
    n = state.n_nodes
    rho = cfg.rho
    F = _basis(n)
    L = _laplacians(G, F)
    iu = _pairs(n)
    A = spec.matrix
    J = spec.gram
    p = state.P[:, iu[0], iu[1]]
    s = state.S[:, iu[0], iu[1]]
    l_ = L[:, iu[0], iu[1]]
    c = C[:, iu[0], iu[1]]
    b = p / rho + (A.T @ s) / rho + l_ + J @ c
    d_off = solve_nonpositive_qp(np.eye(spec.K) + J, b)
    d_diag = np.maximum(0.0, _diag(state.P) / rho + _diag(L))
    return _mirror(d_off, n, diag=d_diag)


def update_duals(state, spec, cfg, G=None, C=None, D=None):
    """Dual ascent: ``P_k += rho (F G_k F^T - D_k)``, ``s_ij += rho A (c_ij - d_ij)``."""
    G = state.G if G is None else G
    C = state.C if C is None else C
    D = state.D if D is None else D
    n = state.n_nodes
    F = _basis(n)
    P = state.P + cfg.rho * (_laplacians(G, F) - D)
    iu = _pairs(n)
    s = state.S[:, iu[0], iu[1]] + cfg.rho * (spec.matrix @ (C - D)[:, iu[0], iu[1]])
    return P, _mirror(s, n)


def residuals(state, spec, cfg):
    """Relative primal (graph and fusion consensus) and dual residuals.

    Returns ``(primal_G, primal_C, dual)``; each absolute norm is divided by
    one plus the norm of the matching iterate (``F G F^T``, ``A c``, ``D``).
    """
    n = state.n_nodes
    F = _basis(n)
    L = _laplacians(state.G, F)
    off = ~np.eye(n, dtype=bool)
    AC = np.einsum("ak,kij->aij", spec.matrix, state.C)[:, off]
    AD = np.einsum("ak,kij->aij", spec.matrix, state.D)[:, off]
    r_g = np.linalg.norm(L - state.D) / (1.0 + np.linalg.norm(L))
    r_c = np.linalg.norm(AC - AD) / (1.0 + np.linalg.norm(AC))
    r_d = cfg.rho * np.linalg.norm(state.D - state.D_prev) / (1.0 + np.linalg.norm(state.D))
    return float(r_g), float(r_c), float(r_d)


def _fidelity(X, o):
    resid = o.observed - o.mask * X
    sq = float((resid * resid).sum())
    if o.noise_std == 0:
        scale = 1.0 + float((o.observed**2).sum())
        return 0.0 if sq <= 1e-18 * scale else np.inf
    return sq / o.noise_std**2


def objective(X, laplacians, obs, spec, cfg):
    """Full objective value at signals ``X`` and Laplacians ``laplacians``.

    ``log det(L_k + 11^T/N)`` is evaluated from the symmetric eigenvalues; a
    nonpositive spectrum raises :class:`DomainError`.  Zero-noise blocks
    treat the data term as a hard constraint (0 when met, ``inf`` otherwise).
    """
    obs = _check_obs(obs, spec)
    L = np.asarray(laplacians, dtype=float)
    n = obs[0].n_nodes
    n_total = sum(o.n_samples for o in obs)
    Q = np.full((n, n), 1.0 / n)
    total = 0.0
    for k, o in enumerate(obs):
        ev = np.linalg.eigvalsh(_sym(L[k]) + Q)
        if ev[0] <= LOGDET_FLOOR:
            raise DomainError(f"L_{k} + 11^T/N is not positive definite (min eigenvalue {ev[0]:.3g})")
        logdet = float(np.log(ev).sum())
        quad = float(np.einsum("ij,ij->", L[k], X[k] @ X[k].T))
        total += _fidelity(X[k], o) + quad - o.n_samples * logdet
        total += 2.0 * cfg.alpha * (np.trace(L[k]) - L[k].sum())
    return total / n_total + cfg.beta * eval_regularizer(L, spec)


def _state_objective(state, G_eigs, obs, spec, cfg):
    n = state.n_nodes
    F = _basis(n)
    L = _laplacians(state.G, F)
    n_total = sum(o.n_samples for o in obs)
    total = 0.0
    for k, o in enumerate(obs):
        logdet = float(np.log(np.maximum(G_eigs[k], G_EIG_FLOOR)).sum())
        quad = float(np.einsum("ij,ij->", L[k], state.X[k] @ state.X[k].T))
        total += _fidelity(state.X[k], o) + quad - o.n_samples * logdet
        total += 2.0 * cfg.alpha * (np.trace(L[k]) - L[k].sum())
    return total / n_total + cfg.beta * eval_regularizer(L, spec)


def _guard(block, fn, *args, **kwargs):
    try:
        out = fn(*args, **kwargs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(block, str(exc)) from exc
    arrays = out if isinstance(out, (list, tuple)) else [out]
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalFailure(block, "non-finite values")
    return out


def step(state, obs, spec, cfg):
    """One full sweep; returns a new state and the objective at the new iterate."""
    new = state.copy()
    new.X = _guard("signals", update_signals, state, obs, cfg)
    new.G, G_eigs = _guard("graphs", update_graphs, new, obs, cfg, return_eigenvalues=True)
    new.C = _guard("consensus_c", update_consensus_c, new, spec, cfg)
    new.D_prev = state.D
    new.D = _guard("consensus_d", update_consensus_d, new, spec, cfg)
    new.P, new.S = _guard("duals", update_duals, new, spec, cfg)
    new.iteration = state.iteration + 1
    return new, _state_objective(new, G_eigs, obs, spec, cfg)


def run(obs, spec, cfg, init=None):
    """Run ADMM until both relative residuals drop below tolerance or ``max_iter``.

    Returns a :class:`SolveResult` whose Laplacians are ``F G_k F^T`` mapped
    onto the Laplacian set; ``clamp_distance`` and ``consensus_gap`` report
    how far that matrix was from the set and from ``D_k``.
    """
    cfg.validate()
    obs = _check_obs(obs, spec)
    if cfg.column_ridge == 0:
        for k, o in enumerate(obs):
            empty = o.empty_columns
            if empty.size:
                raise UnobservedColumnError(k, int(empty[0]))
    state = initial_state(obs) if init is None else init.copy()
    if state.K != len(obs) or state.n_nodes != obs[0].n_nodes:
        raise InvalidDimensionError("initial state does not match the observations")

    objectives, resids = [], []
    status = Status.MAX_ITER
    trace = open(cfg.trace_path, "w") if cfg.trace_path else None
    try:
        if trace:
            trace.write("iteration,objective,primal_G,primal_C,dual\n")
        for _ in range(int(cfg.max_iter)):
            state, obj = step(state, obs, spec, cfg)
            r = residuals(state, spec, cfg)
            objectives.append(float(obj))
            resids.append(r)
            if trace:
                trace.write(f"{state.iteration},{float(obj)!r},{r[0]!r},{r[1]!r},{r[2]!r}\n")
            if max(r[0], r[1]) <= cfg.tol_primal and r[2] <= cfg.tol_dual:
                status = Status.CONVERGED
                break
    finally:
        if trace:
            trace.close()
    state.history = resids

    F = _basis(state.n_nodes)
    raw = _laplacians(state.G, F)
    lap, clamp, gap = [], [], []
    for k in range(state.K):
        Lk, info = project_to_laplacian(raw[k], return_info=True)
        lap.append(Lk)
        clamp.append(info.clamp_distance)
        gap.append(float(np.linalg.norm(raw[k] - state.D[k])))
    return SolveResult(
        laplacians=lap,
        signals=[x.copy() for x in state.X],
        objective_trace=np.array(objectives),
        residual_trace=np.array(resids).reshape(-1, 3),
        status=status,
        iterations=state.iteration,
        state=state,
        clamp_distance=np.array(clamp),
        consensus_gap=np.array(gap),
    )


def with_overrides(cfg, **kwargs):
    return replace(cfg, **kwargs)
