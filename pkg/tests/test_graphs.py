import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvgraph.errors import DataError, GeneratorConfigError, InvalidDimensionError
from tvgraph.graphs import (
    GraphGeneratorSpec,
    build_basis,
    edge_support,
    generate_graph_sequence,
    is_laplacian,
    laplacian_violations,
    offdiag_mask,
    offdiag_penalty_matrix,
    project_to_laplacian,
    read_laplacian_csv,
    write_laplacian_csv,
)


def test_basis_two_nodes():
    F = build_basis(2)
    assert F.shape == (2, 1)
    expected = np.array([[1.0], [-1.0]]) / np.sqrt(2)
    assert min(np.abs(F - expected).max(), np.abs(F + expected).max()) < 1e-15


@pytest.mark.parametrize("n", [2, 3, 4, 7, 20, 101])
def test_basis_invariants(n):
    F = build_basis(n)
    assert F.shape == (n, n - 1)
    assert np.abs(F.T @ F - np.eye(n - 1)).max() <= 1e-12
    assert np.abs(F.T @ np.ones(n)).max() <= 1e-12
    assert np.abs(F @ F.T - (np.eye(n) - np.full((n, n), 1.0 / n))).max() <= 1e-10


def test_basis_deterministic():
    assert np.array_equal(build_basis(13), build_basis(13))


def test_basis_rejects_small():
    with pytest.raises(InvalidDimensionError):
        build_basis(1)


def test_penalty_matrices():
    H = offdiag_penalty_matrix(4)
    L = np.array([[2, -1, -1, 0], [-1, 1, 0, 0], [-1, 0, 2, -1], [0, 0, -1, 1]], float)
    # tr(L (I - 11^T)) is the off-diagonal l1 norm on the cone
    assert np.trace(L @ H) == pytest.approx(np.abs(L[offdiag_mask(4) > 0]).sum())


def _path(n):
    W = np.zeros((n, n))
    for i in range(n - 1):
        W[i, i + 1] = W[i + 1, i] = 1.0 + i
    return np.diag(W.sum(1)) - W


def test_project_idempotent_on_laplacian():
    L = _path(5)
    assert np.abs(project_to_laplacian(L) - L).max() <= 1e-12


def test_project_zero():
    assert np.array_equal(project_to_laplacian(np.zeros((3, 3))), np.zeros((3, 3)))


def test_project_rejects_nonsquare():
    with pytest.raises(InvalidDimensionError):
        project_to_laplacian(np.zeros((2, 3)))


def _independent_check(L):
    n = L.shape[0]
    for i in range(n):
        assert abs(sum(L[i, j] for j in range(n))) <= 1e-12
        for j in range(n):
            assert L[i, j] == L[j, i]
            if i != j:
                assert L[i, j] <= 0.0


def test_project_random_4x4():
    raw = np.random.default_rng(3).standard_normal((4, 4))
    L, info = project_to_laplacian(raw, return_info=True)
    _independent_check(L)
    assert info.psd
    sym = 0.5 * (raw + raw.T)
    assert info.clamp_distance == pytest.approx(np.linalg.norm(L - sym))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_project_always_laplacian(n, seed):
    raw = np.random.default_rng(seed).standard_normal((n, n)) * 3
    assert is_laplacian(project_to_laplacian(raw))


@pytest.mark.parametrize("model", ["ER", "BA", "Gaussian", "PA"])
def test_generated_sequences_valid(model):
    seq = generate_graph_sequence(GraphGeneratorSpec(model, 30, seed=7), 4)
    assert len(seq) == 4
    for L in seq:
        assert is_laplacian(L), laplacian_violations(L)
        assert np.linalg.matrix_rank(L, tol=1e-8) == 29
        w = -L[np.triu_indices(30, 1)]
        w = w[w > 0]
        assert w.min() > 0.1 and w.max() <= 2.0


def test_generator_deterministic():
    spec = GraphGeneratorSpec("PA", 25, seed=11)
    a = generate_graph_sequence(spec, 3)
    b = generate_graph_sequence(spec, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_er_density():
    # Monte Carlo over 100 seeds of the implemented generator
    dens = []
    for seed in range(100):
        L = generate_graph_sequence(GraphGeneratorSpec("ER", 50, {"p": 0.3}, seed=seed), 1)[0]
        dens.append(edge_support(L)[np.triu_indices(50, 1)].mean())
    assert 0.25 <= np.mean(dens) <= 0.35


def test_no_perturbation_keeps_support():
    seq = generate_graph_sequence(GraphGeneratorSpec("ER", 20, perturb_rate=0.0, seed=2), 3)
    assert np.array_equal(edge_support(seq[0]), edge_support(seq[1]))
    assert np.array_equal(edge_support(seq[1]), edge_support(seq[2]))


def test_perturbation_rate():
    iu = np.triu_indices(50, 1)
    fracs = []
    for seed in range(50):
        a, b = generate_graph_sequence(GraphGeneratorSpec("ER", 50, perturb_rate=0.1, seed=seed), 2)
        ea, eb = edge_support(a)[iu], edge_support(b)[iu]
        fracs.append((ea != eb).sum() / ea.sum())
    assert abs(np.mean(fracs) - 0.1) <= 0.03


@pytest.mark.parametrize(
    "spec",
    [
        GraphGeneratorSpec("ER", 10, {"p": 0.0}),
        GraphGeneratorSpec("ER", 10, {"p": 1.5}),
        GraphGeneratorSpec("BA", 10, {"m": 10}),
        GraphGeneratorSpec("PA", 10, {"exponent": 1.5}),
        GraphGeneratorSpec("Gaussian", 10, {"threshold": 1.2}),
        GraphGeneratorSpec("Smallworld", 10),
        GraphGeneratorSpec("ER", 10, perturb_rate=1.5),
        GraphGeneratorSpec("ER", 10, {"q": 0.2}),
    ],
)
def test_generator_rejects_bad_params(spec):
    with pytest.raises(GeneratorConfigError):
        generate_graph_sequence(spec, 2)


def test_csv_roundtrip(tmp_path):
    L = generate_graph_sequence(GraphGeneratorSpec("BA", 8, seed=0), 1)[0]
    path = tmp_path / "L.csv"
    write_laplacian_csv(path, L)
    assert np.array_equal(read_laplacian_csv(path), L)


def test_csv_rejects_non_laplacian(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("-1,1\n1,-1\n")
    with pytest.raises(DataError, match="positive_offdiag"):
        read_laplacian_csv(path)


def test_csv_reports_bad_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,-1\n-1,x\n")
    with pytest.raises(DataError, match="row 2, column 2"):
        read_laplacian_csv(path)
