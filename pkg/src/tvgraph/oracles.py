"""Generic numeric minimisers for each ADMM block subproblem.

Nothing here calls the closed-form updates in :mod:`tvgraph.admm`.  Each
oracle writes the subproblem objective out directly and hands it to a
general-purpose optimiser, so agreement between the two is evidence that the
closed forms are right.  Also usable from the command line via
``tvgraph oracle``.
"""
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .graphs import build_basis

SOLVER_OPTS = {"gtol": 1e-13, "maxiter": 20000}


def _vec(X):
    return X.reshape(-1, order="F")


def _unvec(x, shape):
    return x.reshape(shape, order="F")


def dense_signal_system(L, mask, observed, noise_std, n_total):
    """The full ``(N n_k) x (N n_k)`` system for the signal block.

    ``T = Diag(vec M) / (n sigma^2) + I_{n_k} kron (L / n)``,
    ``e = vec(Y_M) / (n sigma^2)`` with column-major ``vec``.
    """
    N, n_k = mask.shape
    w = 1.0 / (n_total * noise_std**2)
    T = w * np.diag(_vec(mask)) + np.kron(np.eye(n_k), L / n_total)
    e = w * _vec(observed)
    return T, e


def dense_signal_solve(L, mask, observed, noise_std, n_total):
    T, e = dense_signal_system(L, mask, observed, noise_std, n_total)
    return _unvec(np.linalg.solve(T, e), mask.shape)


def signal_subproblem(X, L, mask, observed, noise_std, n_total):
    r = observed - mask * X
    return float((r * r).sum() / (n_total * noise_std**2) + np.trace(L @ X @ X.T) / n_total)


def minimize_signal(L, mask, observed, noise_std, n_total):
    """BFGS on the signal subproblem with its analytic gradient."""
    shape = mask.shape

    def fun(x):
        X = _unvec(x, shape)
        r = observed - mask * X
        val = (r * r).sum() / noise_std**2 + np.trace(L @ X @ X.T)
        grad = -2.0 * mask * r / noise_std**2 + 2.0 * L @ X
        return val, _vec(grad)

    res = minimize(fun, np.zeros(mask.size), jac=True, method="BFGS", options=SOLVER_OPTS)
    return _unvec(res.x, shape)


def graph_subproblem(G, X, D, P, alpha, rho, n_k, n_total):
    N = D.shape[0]
    F = build_basis(N)
    H = np.eye(N) - np.ones((N, N))
    B = F.T @ (X @ X.T / n_k + (2.0 * alpha / n_k) * H) @ F
    sign, logdet = np.linalg.slogdet(G)
    if sign <= 0:
        return np.inf
    return float(
        (n_k / n_total) * (-logdet + np.trace(B @ G))
        + np.trace(F.T @ P @ F @ G)
        + 0.5 * rho * np.linalg.norm(F @ G @ F.T - D) ** 2
    )


def minimize_graph(X, D, P, alpha, rho, n_k, n_total):
    """BFGS over a lower-triangular factor ``R`` with ``G = R R^T``."""
    N = D.shape[0]
    F = build_basis(N)
    m = N - 1
    H = np.eye(N) - np.ones((N, N))
    B = F.T @ (X @ X.T / n_k + (2.0 * alpha / n_k) * H) @ F
    w = n_k / n_total
    tril = np.tril_indices(m)

    def fun(theta):
        R = np.zeros((m, m))
        R[tril] = theta
        G = R @ R.T
        diag = np.diag(R)
        if np.any(diag == 0):
            return np.inf, np.zeros_like(theta)
        E = F @ G @ F.T - D
        val = (
            w * (-2.0 * np.log(np.abs(diag)).sum() + np.trace(B @ G))
            + np.trace(F.T @ P @ F @ G)
            + 0.5 * rho * (E * E).sum()
        )
        dG = w * B + F.T @ P @ F + rho * (F.T @ E @ F)
        dG = 0.5 * (dG + dG.T)
        dR = 2.0 * dG @ R
        dR -= 2.0 * w * np.diag(1.0 / diag)
        return val, dR[tril]

    theta0 = np.eye(m)[tril]
    res = minimize(fun, theta0, jac=True, method="BFGS", options=SOLVER_OPTS)
    R = np.zeros((m, m))
    R[tril] = res.x
    return R @ R.T


def minimize_consensus_c(d, s, A, beta, rho):
    """Solve ``min_c beta ||A c|| + s^T A c + (rho/2)||A c - A d||^2`` as an SOCP.

    ``d`` and ``s`` are ``(K, P)``; every column is an independent group.
    """
    import cvxpy as cp

    K, P = d.shape
    c = cp.Variable((K, P))
    Ac = A @ c
    obj = beta * cp.sum(cp.norm(Ac, 2, axis=0)) + cp.sum(cp.multiply(s, Ac)) + 0.5 * rho * cp.sum_squares(Ac - A @ d)
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(
        solver=cp.CLARABEL,
        tol_gap_abs=1e-12,
        tol_gap_rel=1e-12,
        tol_feas=1e-12,
        tol_ktratio=1e-10,
        max_iter=500,
    )
    return np.asarray(c.value)


def consensus_d_subproblem(d, p, s, l_, c, A, rho):
    return float(-p @ d + 0.5 * rho * np.sum((l_ - d) ** 2) - s @ (A @ d) + 0.5 * rho * np.sum((A @ (c - d)) ** 2))


def minimize_consensus_d(p, s, l_, c, A, rho):
    """Bound-constrained quasi-Newton on one off-diagonal group, ``d <= 0``."""
    J = A.T @ A
    K = len(p)

    def fun(d):
        r = A @ (c - d)
        val = -p @ d + 0.5 * rho * np.sum((l_ - d) ** 2) - s @ (A @ d) + 0.5 * rho * r @ r
        grad = -p - rho * (l_ - d) - A.T @ s - rho * (J @ (c - d))
        return val, grad

    res = minimize(
        fun,
        np.minimum(l_, 0.0),
        jac=True,
        method="L-BFGS-B",
        bounds=[(None, 0.0)] * K,
        options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 20000, "maxcor": 30},
    )
    return res.x


def minimize_consensus_d_diag(p, l_, rho):
    """Bound-constrained minimiser of ``-p d + (rho/2)(l - d)^2`` over ``d >= 0``, elementwise."""

    def fun(d):
        return float(np.sum(-p * d + 0.5 * rho * (l_ - d) ** 2)), -p - rho * (l_ - d)

    res = minimize(fun, np.maximum(l_, 0.0), jac=True, method="L-BFGS-B",
                   bounds=[(0.0, None)] * len(p), options={"ftol": 1e-16, "gtol": 1e-13})
    return res.x


def rel_diff(a, b):
    """``||a - b|| / max(1, ||b||)``: relative for large references, absolute near zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


@dataclass
class OracleInstance:
    obs: list
    spec: object
    cfg: object
    state: object


def random_instance(rng, max_nodes=6, max_graphs=3, max_samples=8):
    """Random small problem with an arbitrary (non-converged) solver state."""
    from .admm import SolverConfig, SolverState
    from .fusion import build_fusion_matrix
    from .signals import Observation

    N = int(rng.integers(2, max_nodes + 1))
    K = int(rng.integers(1, max_graphs + 1))
    obs = []
    for _ in range(K):
        n_k = int(rng.integers(1, max_samples + 1))
        mask = (rng.random((N, n_k)) < 0.7).astype(float)
        mask[rng.integers(N, size=n_k), np.arange(n_k)] = 1.0
        obs.append(Observation(rng.standard_normal((N, n_k)) * mask, mask, float(rng.uniform(0.1, 1.0))))
    kind = rng.choice(["temporal", "group", "star", "custom"])
    if kind == "custom":
        spec = build_fusion_matrix("custom", K, matrix=np.eye(K) + 0.3 * rng.standard_normal((K, K)), loading=0.5)
    else:
        spec = build_fusion_matrix(kind, K)
    cfg = SolverConfig(
        alpha=float(rng.uniform(0.01, 2.0)),
        beta=float(rng.choice([0.0, rng.uniform(0.01, 3.0)])),
        rho=float(rng.uniform(0.1, 5.0)),
    )

    def sym(k):
        M = rng.standard_normal((k, N, N))
        return 0.5 * (M + np.swapaxes(M, 1, 2))

    R = rng.standard_normal((K, N - 1, N - 1))
    G = R @ np.swapaxes(R, 1, 2) + 0.1 * np.eye(N - 1)
    D = sym(K)
    iu = np.triu_indices(N, 1)
    D[:, iu[0], iu[1]] = -np.abs(D[:, iu[0], iu[1]])
    D[:, iu[1], iu[0]] = D[:, iu[0], iu[1]]
    idx = np.arange(N)
    D[:, idx, idx] = np.abs(D[:, idx, idx])
    S = sym(K)
    S[:, idx, idx] = 0.0
    state = SolverState(
        X=[rng.standard_normal(o.observed.shape) for o in obs],
        G=G, C=sym(K), D=D, P=sym(K), S=S,
    )
    return OracleInstance(obs, spec, cfg, state)


def check_instance(inst):
    """Compare every closed-form block update with its oracle; returns worst relative gaps."""
    from . import admm

    obs, spec, cfg, st = inst.obs, inst.spec, inst.cfg, inst.state
    N = st.n_nodes
    n_total = sum(o.n_samples for o in obs)
    F = build_basis(N)
    out = {}

    X_new = admm.update_signals(st, obs, cfg)
    gap = 0.0
    for k, o in enumerate(obs):
        L = F @ st.G[k] @ F.T
        ref = minimize_signal(L, o.mask, o.observed, o.noise_std, n_total)
        gap = max(gap, rel_diff(X_new[k], ref))
    out["signals"] = gap

    G_new = admm.update_graphs(st, obs, cfg)
    gap = 0.0
    for k, o in enumerate(obs):
        ref = minimize_graph(st.X[k], st.D[k], st.P[k], cfg.alpha, cfg.rho, o.n_samples, n_total)
        gap = max(gap, rel_diff(G_new[k], ref))
    out["graphs"] = gap

    iu = np.triu_indices(N, 1)
    C_new = admm.update_consensus_c(st, spec, cfg)
    if iu[0].size:
        ref = minimize_consensus_c(st.D[:, iu[0], iu[1]], st.S[:, iu[0], iu[1]], spec.matrix, cfg.beta, cfg.rho)
        gap = max(rel_diff(C_new[:, i, j], ref[:, q]) for q, (i, j) in enumerate(zip(*iu)))
    else:
        gap = 0.0
    out["consensus_c"] = gap

    D_new = admm.update_consensus_d(st, spec, cfg)
    Lk = np.stack([F @ g @ F.T for g in st.G])
    gap = 0.0
    for i, j in zip(*iu):
        ref = minimize_consensus_d(st.P[:, i, j], st.S[:, i, j], Lk[:, i, j], st.C[:, i, j], spec.matrix, cfg.rho)
        gap = max(gap, rel_diff(D_new[:, i, j], ref))
    for i in range(N):
        ref = minimize_consensus_d_diag(st.P[:, i, i], Lk[:, i, i], cfg.rho)
        gap = max(gap, rel_diff(D_new[:, i, i], ref))
    out["consensus_d"] = gap
    return out


def run_suite(n_instances=100, seed=0, tol=1e-6, stream=None):
    """Check all block updates on ``n_instances`` random problems.

    Returns ``(passed, worst)`` where ``worst`` maps each block to its largest gap.
    """
    rng = np.random.default_rng(seed)
    worst = {"signals": 0.0, "graphs": 0.0, "consensus_c": 0.0, "consensus_d": 0.0}
    t0 = time.perf_counter()
    for _ in range(n_instances):
        gaps = check_instance(random_instance(rng))
        for k, v in gaps.items():
            worst[k] = max(worst[k], v)
    elapsed = time.perf_counter() - t0
    passed = all(v <= tol for v in worst.values())
    if stream is not None:
        for k, v in worst.items():
            stream.write(f"{'PASS' if v <= tol else 'FAIL'} {k}: worst relative gap {v:.3e} (tol {tol:g})\n")
        stream.write(f"{n_instances} instances in {elapsed:.1f}s\n")
    return passed, worst
