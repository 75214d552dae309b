import itertools

import numpy as np
import pytest

from helpers import field_graphs, random_graphs, srmap_from
from srgf.graphs import EigenBasis, build_graphs, eigendecompose
from srgf.prediction import predict_low_frequencies, reconstruct_signal
from srgf.sampling import (build_correspondence, centroid_seed,
                           naive_log10_condition, place_samples,
                           select_sampling_set)


def path_basis(n):
    lap = (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    lap[0, 0] = lap[-1, -1] = 1
    from scipy import sparse
    return eigendecompose(sparse.csr_matrix(lap))


def subset_cond(basis, subset, count):
    return np.linalg.cond(basis.vectors[np.ix_(sorted(subset),
                                               range(count))])


def test_single_sample_is_the_seed():
    basis = path_basis(4)
    ss = select_sampling_set(basis, 1, 2)
    assert ss.vertices.tolist() == [2]
    assert not ss.warned


def test_two_node_angular_graph_reference_seed():
    srmap = srmap_from(np.ones((1, 2, 1, 1)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    basis = eigendecompose(g.laplacian)
    ss = select_sampling_set(basis, g.n_ref, centroid_seed(g))
    assert ss.vertices.tolist() == [0]
    lead = basis.vectors[0, 0]
    assert abs(abs(lead) - 1 / np.sqrt(2)) < 1e-12
    assert ss.log10_condition == pytest.approx(0.0, abs=1e-12)


def test_greedy_beats_or_matches_naive_on_path():
    basis = path_basis(5)
    ss = select_sampling_set(basis, 3, 0)
    naive = subset_cond(basis, [0, 1, 2], 3)
    assert 10 ** ss.log10_condition <= naive + 1e-9


def test_greedy_within_ten_times_of_exhaustive():
    rng = np.random.default_rng(8)
    for g in random_graphs(rng, 12, max_size=8):
        if g.size < 5:
            continue
        basis = eigendecompose(g.laplacian)
        m = max(2, g.size // 2)
        ss = select_sampling_set(basis, m, 0)
        best = min(subset_cond(basis, s, m)
                   for s in itertools.combinations(range(g.size), m)
                   if 0 in s)
        assert 10 ** ss.log10_condition <= 10 * best + 1e-9


def test_sampled_set_makes_bandlimited_reconstruction_exact():
    rng = np.random.default_rng(9)
    for g in random_graphs(rng, 10, max_size=80):
        basis = eigendecompose(g.laplacian)
        m = max(1, min(g.n_ref, g.size - 1))
        ss = select_sampling_set(basis, m, centroid_seed(g))
        coeffs = rng.standard_normal(m)
        x = basis.vectors[:, :m] @ coeffs  # lives in PW space
        low = predict_low_frequencies(basis, ss.vertices, x[ss.vertices],
                                      np.zeros(g.size - m))
        recon = reconstruct_signal(basis, ss.vertices, x[ss.vertices], low,
                                   np.zeros(g.size - m))
        assert np.abs(recon - x).max() < 1e-8


def test_rank_deficient_step_sets_warning():
    # Seed row is zero in the leading two columns, so the kernel has
    # dimension 2 at the first growth step.
    vectors = np.array([[0.0, 0.0, 1.0],
                        [1.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0]])
    basis = EigenBasis(vectors=vectors, values=np.zeros(3),
                       component=np.zeros(3, dtype=np.int64))
    ss = select_sampling_set(basis, 2, 0)
    assert ss.warned


def test_disconnected_graph_samples_where_the_band_lives():
    # Component-ordered basis: the two leading columns are both supported
    # on the first 2-path, so both samples must land there and the sampled
    # block is perfectly conditioned.
    from scipy import sparse
    lap = sparse.csr_matrix(np.array([
        [1, -1, 0, 0],
        [-1, 1, 0, 0],
        [0, 0, 1, -1],
        [0, 0, -1, 1],
    ], dtype=np.float64))
    basis = eigendecompose(lap)
    ss = select_sampling_set(basis, 2, 0)
    assert sorted(ss.vertices.tolist()) == [0, 1]
    assert ss.log10_condition == pytest.approx(0.0, abs=1e-9)


def test_naive_condition_uses_leading_vertices():
    basis = path_basis(5)
    naive = naive_log10_condition(basis, 3)
    assert naive == pytest.approx(np.log10(subset_cond(basis, [0, 1, 2], 3)))


def test_centroid_seed_center_of_square():
    srmap = srmap_from(np.ones((1, 1, 3, 3)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    assert centroid_seed(g) == 4


def test_centroid_seed_tie_breaks_raster():
    srmap = srmap_from(np.ones((1, 1, 2, 2)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    assert centroid_seed(g) == 0


# --- correspondence chains and sample placement ---------------------------

def test_no_angular_edges_chains_restrict_to_identity():
    srmap = srmap_from(np.ones((1, 1, 2, 2)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    chains = build_correspondence(g)
    E = chains.matrix()
    assert np.array_equal(E[:, :g.n_ref], np.eye(g.n_ref, dtype=bool))


def test_chain_of_four_views_has_four_ones():
    srmap = srmap_from(np.ones((1, 4, 1, 1)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    chains = build_correspondence(g)
    E = chains.matrix()
    assert E.shape == (1, 4)
    assert E.sum() == 4


def test_two_reference_pixels_on_one_chain_share_ones():
    # Disparity walks the second reference pixel onto the first one's
    # track in the next view: both reference rows see the same component.
    labels = np.zeros((1, 2, 1, 3))
    labels[0, 0, 0, :] = 1
    labels[0, 1, 0, :] = 1
    med = [0.0, 1.0]
    g = build_graphs(srmap_from(labels, med))[0]
    chains = build_correspondence(g)
    E = chains.matrix()
    shared = E[0] & E[1] if (chains.chain[0] == chains.chain[1]) else None
    if shared is not None:
        assert np.array_equal(E[0], E[1])
    # Regardless of geometry, every vertex belongs to exactly one chain
    # and each row marks that chain's members.
    for r in range(g.n_ref):
        assert E[r].sum() == (chains.chain == chains.chain[r]).sum()


def test_identity_placement_when_samples_are_reference_pixels():
    srmap = srmap_from(np.ones((2, 2, 3, 3)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    chains = build_correspondence(g)
    samples = np.arange(g.n_ref)
    assert place_samples(chains, samples).tolist() == list(range(g.n_ref))


def test_collision_goes_to_next_free_raster_slot():
    # Two samples on the same chain: the first claims the chain's
    # reference pixel, the second takes the lowest free position.
    srmap = srmap_from(np.ones((1, 2, 1, 2)), [0.0, 0.0])
    g = build_graphs(srmap)[0]
    chains = build_correspondence(g)
    placed = place_samples(chains, np.array([0, 2]))
    assert placed.tolist() == [0, 1]


def test_placement_is_always_a_bijection():
    rng = np.random.default_rng(10)
    for g in field_graphs(rng, (2, 2), (12, 12), 5):
        chains = build_correspondence(g)
        basis = eigendecompose(g.laplacian)
        ss = select_sampling_set(basis, g.n_ref, centroid_seed(g))
        placed = place_samples(chains, ss.vertices)
        assert sorted(placed.tolist()) == list(range(g.n_ref))
