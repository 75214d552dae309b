import numpy as np
import pytest
from scipy import sparse

from helpers import field_graphs, random_graphs, srmap_from
from srgf.graphs import (EigenBasis, build_graphs, component_order,
                         eigendecompose, fix_signs, gft_forward, gft_inverse)


def path_graph_srmap(length=3):
    # One view, one label strung along a row: a path graph.
    return srmap_from(np.ones((1, 1, 1, length)), [0.0, 0.0])


def test_single_view_block_is_cycle_of_four():
    srmap = srmap_from(np.ones((1, 1, 2, 2)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    assert g.angular.nnz == 0
    assert g.spatial.diagonal().tolist() == [2, 2, 2, 2]
    # 4 spatial edges; eigenvalues of the 4-cycle:
    assert np.allclose(np.linalg.eigvalsh(g.laplacian.toarray()),
                       [0, 2, 2, 4], atol=1e-12)


def test_smallest_angular_graph():
    srmap = srmap_from(np.ones((1, 2, 1, 1)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    assert g.spatial.nnz == 0
    assert np.array_equal(g.laplacian.toarray(), [[1, -1], [-1, 1]])


def test_path_graph_spectrum_closed_form():
    g = build_graphs(path_graph_srmap(3))[0]
    basis = eigendecompose(g.laplacian)
    assert np.allclose(basis.values, [0.0, 1.0, 3.0], atol=1e-12)


def test_single_vertex_graph():
    g = build_graphs(path_graph_srmap(1))[0]
    basis = eigendecompose(g.laplacian)
    assert basis.vectors.tolist() == [[1.0]]
    assert basis.values.tolist() == [0.0]


def test_complete_graph_spectrum():
    # K4 is not reachable through grid adjacency; check the eigensolver on
    # the matrix directly.
    lap = 4 * np.eye(4) - np.ones((4, 4))
    basis = eigendecompose(sparse.csr_matrix(lap))
    assert np.allclose(basis.values, [0, 4, 4, 4], atol=1e-12)


def test_zero_disparity_angular_correspondences_are_identities():
    labels = np.ones((2, 2, 3, 3))
    g = build_graphs(srmap_from(labels, [0.0, 0.0]))[0]
    # 4 adjacent view pairs, 9 identity correspondences each: 36 edges.
    assert g.angular.sum() == 0
    assert g.angular.diagonal().sum() == 2 * 36


def test_shifted_correspondence_drops_out_of_label_targets():
    # Two views in a row, a 3-pixel strip, disparity 1: the rightmost
    # pixel's correspondent leaves the strip, so only 2 angular edges.
    labels = np.zeros((1, 2, 1, 3))
    labels[0, 0, 0, :] = 1
    labels[0, 1, 0, :] = 0
    labels[0, 1, 0, 1:] = 1  # strip sits one pixel right in the next view
    labels[0, 1, 0, 0] = 2   # filler label so the view stays covered
    med = [0.0, 1.0, 0.0]
    graphs = build_graphs(srmap_from(labels, med))
    g = {g.label: g for g in graphs}[1]
    assert g.angular.diagonal().sum() == 2 * 2


def test_vertices_ascend_and_reference_first():
    rng = np.random.default_rng(1)
    for g in field_graphs(rng, (2, 3), (10, 10), 4):
        assert (np.diff(g.vertices) > 0).all()
        views = g.view
        assert (views[:g.n_ref] == 0).all()
        if g.size > g.n_ref:
            assert (views[g.n_ref:] > 0).all()
        # Vertex ids encode (view, row, col) in carry order.
        s, t = g.view_shape
        expect = (views * s + g.srow) * t + g.scol
        assert np.array_equal(g.vertices, expect)


def test_laplacian_is_sum_of_parts_and_well_formed():
    rng = np.random.default_rng(2)
    for g in random_graphs(rng, 25):
        lap = g.laplacian.toarray()
        assert np.array_equal(lap, (g.spatial + g.angular).toarray())
        assert np.array_equal(lap, lap.T)
        assert np.allclose(lap.sum(axis=1), 0)
        off = lap - np.diag(np.diag(lap))
        assert set(np.unique(off)) <= {-1.0, 0.0}


def test_eigenbasis_orthonormal_and_diagonalizing():
    rng = np.random.default_rng(3)
    for g in random_graphs(rng, 15):
        basis = eigendecompose(g.laplacian)
        n = g.size
        assert np.abs(basis.vectors.T @ basis.vectors - np.eye(n)).max() < 1e-10
        recon = basis.vectors @ np.diag(basis.values) @ basis.vectors.T
        assert np.abs(recon - g.laplacian.toarray()).max() < 1e-9


def test_component_blocks_ordered_by_smallest_vertex():
    # Two separate 2-paths: vertices {0,1} and {2,3}, built so the second
    # component's block must come second.
    lap = sparse.csr_matrix(np.array([
        [1, -1, 0, 0],
        [-1, 1, 0, 0],
        [0, 0, 1, -1],
        [0, 0, -1, 1],
    ], dtype=np.float64))
    count, comp = component_order(lap)
    assert count == 2
    assert comp.tolist() == [0, 0, 1, 1]
    basis = eigendecompose(lap)
    assert basis.component.tolist() == [0, 0, 1, 1]
    # Eigenvalues ascend inside each block, not globally.
    assert np.allclose(basis.values, [0, 2, 0, 2], atol=1e-12)
    # Each block's vectors live on its own component.
    assert np.allclose(basis.vectors[2:, :2], 0)
    assert np.allclose(basis.vectors[:2, 2:], 0)


def test_sign_convention_first_large_entry_positive():
    vecs = np.array([[-0.6, 1e-12], [0.8, -1.0]])
    fixed = fix_signs(vecs.copy())
    assert fixed[0, 0] == pytest.approx(0.6)
    # First entry below tolerance: the second row decides the sign.
    assert fixed[1, 1] == pytest.approx(1.0)


def test_constant_signal_is_pure_dc():
    g = build_graphs(srmap_from(np.ones((1, 1, 2, 3)), [0.0, 0.0]))[0]
    basis = eigendecompose(g.laplacian)
    n = g.size
    spectrum = gft_forward(basis, np.full(n, 5.0))
    assert spectrum[0] == pytest.approx(5.0 * np.sqrt(n))
    assert np.abs(spectrum[1:]).max() < 1e-9


def test_zero_signal_zero_spectrum():
    g = build_graphs(path_graph_srmap(4))[0]
    basis = eigendecompose(g.laplacian)
    assert np.abs(gft_forward(basis, np.zeros(4))).max() == 0


def test_parseval_and_round_trip():
    rng = np.random.default_rng(4)
    for g in random_graphs(rng, 10):
        basis = eigendecompose(g.laplacian)
        x = rng.standard_normal(g.size)
        xhat = gft_forward(basis, x)
        assert np.linalg.norm(xhat) == pytest.approx(np.linalg.norm(x),
                                                     rel=1e-9)
        back = gft_inverse(basis, xhat)
        assert np.abs(back - x).max() < 1e-9 * max(1, np.abs(x).max())


def test_eigendecompose_deterministic():
    rng = np.random.default_rng(5)
    g = random_graphs(rng, 1)[0]
    a = eigendecompose(g.laplacian)
    b = eigendecompose(g.laplacian)
    assert np.array_equal(a.vectors, b.vectors)
    assert np.array_equal(a.values, b.values)
