import itertools

import numpy as np
import pytest

from config import MFConfig, Node2VecConfig
from exceptions import ContractError, NumericError
from models import EmbeddingTable, Graph, WalkCorpus
from services.autodiff import Tape, Tensor, backward, finite_difference_check
from services.embeddings.mf import mf_gradient, mf_loss, train_mf
from services.embeddings.node2vec import init_table, node2vec_loss_exact, train_node2vec, use_exact
from services.embeddings.walks import (
    context_pairs, default_walk_length, sample_walks, transition_probabilities, walk_from,
)


def _cliques(count: int, size: int) -> Graph:
    edges = []
    for c in range(count):
        edges += [(c * size + a, c * size + b) for a, b in itertools.combinations(range(size), 2)]
    return Graph.from_edges(count * size, edges, name=f"cliques{count}x{size}")


# ==================== WALKS ====================

def test_single_edge_walk_alternates():
    g = Graph.from_edges(2, [(0, 1)])
    walk = walk_from(g, 0, 4, 1.0, 1.0, np.random.default_rng(0))
    assert walk.tolist() == [0, 1, 0, 1, 0]


def test_isolated_source_gives_singleton_walk():
    g = Graph.from_edges(3, [(0, 1)])
    corpus = sample_walks(g, r=5, walks_per_node=2, seed=0)
    assert [w.tolist() for w in corpus.walks if w[0] == 2] == [[2], [2]]


def test_walks_follow_edges_and_start_at_source(planted):
    corpus = sample_walks(planted, p=0.5, q=2.0, r=6, walks_per_node=3, seed=4)
    assert len(corpus.walks) == 3 * planted.num_nodes
    for i, walk in enumerate(corpus.walks):
        assert walk[0] == i % planted.num_nodes
        assert len(walk) == 7
        for a, b in zip(walk[:-1], walk[1:]):
            assert planted.has_edge(int(a), int(b))


def test_walks_are_deterministic(planted):
    a = sample_walks(planted, r=5, walks_per_node=2, seed=9)
    b = sample_walks(planted, r=5, walks_per_node=2, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a.walks, b.walks))


def test_triangle_transitions_are_uniform(tri):
    assert transition_probabilities(tri, 0, 1, 1.0, 1.0) == {0: 0.5, 2: 0.5}


def test_square_transition_weights(square):
    probs = transition_probabilities(square, 0, 1, 0.25, 4.0)
    assert probs[0] == pytest.approx(16 / 17)
    assert probs[2] == pytest.approx(1 / 17)


def test_square_empirical_return_frequency(square):
    rng = np.random.default_rng(1)
    samples = 20000
    returns = sum(walk_from(square, 0, 2, 0.25, 4.0, rng)[2] == 0 for _ in range(samples))
    assert abs(returns / samples - 16 / 17) < 0.01


def test_empirical_frequencies_match_weights_on_six_nodes():
    # 0-1, 1-2, 1-3, 2-3, 3-4, 1-5: from 1 having come from 2
    g = Graph.from_edges(6, [(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (1, 5)])
    expected = transition_probabilities(g, 2, 1, 0.25, 4.0)
    # weights: back to 2 -> 4, 3 (adjacent to 2) -> 1, 0 and 5 -> 1/4
    assert expected[2] == pytest.approx(4 / 5.5)
    assert expected[3] == pytest.approx(1 / 5.5)

    rng = np.random.default_rng(2)
    counts = dict.fromkeys(expected, 0)
    samples = 20000
    for _ in range(samples):
        walk = walk_from(g, 2, 2, 0.25, 4.0, rng)
        if walk[1] == 1:
            counts[int(walk[2])] += 1
    total = sum(counts.values())
    for node, p in expected.items():
        assert abs(counts[node] / total - p) < 0.015


def test_invalid_walk_parameters(tri):
    with pytest.raises(ContractError):
        sample_walks(tri, p=0.0)
    with pytest.raises(ContractError):
        sample_walks(tri, r=0)


def test_context_pairs_window():
    corpus = WalkCorpus(walks=[np.array([0, 1, 2])], walk_length=2, walks_per_node=1, p=1, q=1, window=1, seed=0)
    pairs = sorted(map(tuple, context_pairs(corpus).tolist()))
    assert pairs == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_default_walk_length():
    assert default_walk_length(10) == 2
    assert default_walk_length(200) == 10
    assert default_walk_length(213) == 11


# ==================== NODE2VEC ====================

@pytest.fixture
def five_node_corpus():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])
    return g, sample_walks(g, r=4, walks_per_node=2, seed=3, window=2)


def test_zero_embeddings_give_uniform_softmax(five_node_corpus):
    g, corpus = five_node_corpus
    c = len(context_pairs(corpus))
    table = EmbeddingTable(vectors=np.zeros((5, 3)), method="node2vec")
    assert node2vec_loss_exact(table, corpus).item() == pytest.approx(c * np.log(5))


def test_doubling_context_pairs_doubles_loss(five_node_corpus, rng):
    g, corpus = five_node_corpus
    doubled = WalkCorpus(walks=corpus.walks * 2, walk_length=corpus.walk_length, walks_per_node=4,
                         p=1.0, q=1.0, window=corpus.window, seed=corpus.seed)
    z = EmbeddingTable(vectors=rng.normal(size=(5, 3)), method="node2vec")
    assert node2vec_loss_exact(z, doubled).item() == pytest.approx(2 * node2vec_loss_exact(z, corpus).item())


def test_exact_loss_gradient(five_node_corpus, rng):
    _, corpus = five_node_corpus
    z = Tensor(0.3 * rng.normal(size=(5, 3)))
    assert finite_difference_check(lambda t: node2vec_loss_exact(t, corpus), z) < 1e-5


def test_zero_epochs_returns_initialization(planted):
    table = train_node2vec(planted, Node2VecConfig(dim=4, epochs=0), seed=3)
    assert np.array_equal(table.vectors, init_table(planted.num_nodes, 4, 3))
    assert np.abs(table.vectors).max() <= 0.5 / 4
    assert table.method == "node2vec"
    assert table.provenance["seed"] == "3"


def test_exact_mode_limit(planted):
    big = _cliques(13, 5)
    with pytest.raises(ContractError):
        use_exact(Node2VecConfig(exact="true"), big.num_nodes)
    assert use_exact(Node2VecConfig(), planted.num_nodes)
    assert not use_exact(Node2VecConfig(), big.num_nodes)
    assert not use_exact(Node2VecConfig(exact="false"), planted.num_nodes)


def test_exact_mode_trace_is_monotone():
    g = Graph.from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (4, 5), (5, 6), (6, 7), (7, 4), (3, 4)])
    trace = []
    cfg = Node2VecConfig(dim=4, walk_length=4, walks_per_node=2, exact="true", exact_steps=60)
    table = train_node2vec(g, cfg, seed=1, trace=trace)
    assert table.provenance["optimizer"] == "exact"
    assert len(trace) > 1
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    assert trace[-1] < trace[0]


def test_exact_mode_separates_cliques():
    g = _cliques(2, 5)
    cfg = Node2VecConfig(dim=8, walk_length=5, walks_per_node=5, exact="true", exact_steps=200)
    z = train_node2vec(g, cfg, seed=0).vectors
    dots = z @ z.T
    block = np.arange(10) // 5
    same = block[:, None] == block[None, :]
    off_diagonal = ~np.eye(10, dtype=bool)
    assert dots[same & off_diagonal].mean() > dots[~same].mean()


@pytest.fixture(scope="module")
def two_cliques_corpus():
    g = _cliques(2, 4)
    return g, sample_walks(g, r=6, walks_per_node=10, seed=5, window=5)


def test_negative_sampling_beats_uniform_baseline(two_cliques_corpus):
    g, corpus = two_cliques_corpus
    cfg = Node2VecConfig(dim=8, walk_length=6, walks_per_node=10, exact="false")
    table = train_node2vec(g, cfg, seed=5, corpus=corpus)
    assert table.provenance["optimizer"] == "negative_sampling"
    assert np.isfinite(table.vectors).all()
    baseline = len(context_pairs(corpus)) * np.log(g.num_nodes)
    assert node2vec_loss_exact(table, corpus).item() < baseline


@pytest.mark.parametrize("lr", [0.025, 0.05])
def test_negative_sampling_stays_close_to_exact_optimum(two_cliques_corpus, lr):
    g, corpus = two_cliques_corpus
    sampled = train_node2vec(g, Node2VecConfig(dim=8, epochs=20, lr=lr, exact="false"), seed=5, corpus=corpus)
    exact = train_node2vec(g, Node2VecConfig(dim=8, exact="true", exact_steps=300), seed=5, corpus=corpus)
    optimum = node2vec_loss_exact(exact, corpus).item()
    assert node2vec_loss_exact(sampled, corpus).item() <= 1.2 * optimum


def test_node2vec_is_deterministic():
    g = _cliques(2, 4)
    cfg = Node2VecConfig(dim=4, walk_length=3, walks_per_node=2, epochs=2, exact="false")
    a, b = train_node2vec(g, cfg, seed=2), train_node2vec(g, cfg, seed=2)
    assert a.vectors.tobytes() == b.vectors.tobytes()


# ==================== MATRIX FACTORIZATION ====================

def test_mf_loss_at_zero_counts_closed_neighborhoods(tri, planted):
    assert mf_loss(EmbeddingTable(np.zeros((3, 2)), "mf"), tri, lam=0.0).item() == 9.0
    zero = EmbeddingTable(np.zeros((planted.num_nodes, 2)), "mf")
    expected = 2 * planted.num_edges + planted.num_nodes
    assert mf_loss(zero, planted, lam=5.0).item() == expected
    assert mf_loss(zero, planted, lam=5.0, include_self=False).item() == 2 * planted.num_edges


def test_mf_gradient_matches_tape_and_finite_differences(rng):
    g = Graph.from_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)])
    z0 = rng.normal(size=(6, 3))
    assert finite_difference_check(lambda t: mf_loss(t, g, 0.1), Tensor(z0.copy())) < 1e-5

    z = Tensor(z0.copy(), requires_grad=True)
    with Tape() as tape:
        loss = mf_loss(z, g, 0.1)
    (g_tape,) = backward(tape, loss, [z])
    assert np.allclose(g_tape, mf_gradient(z0, g, 0.1), atol=1e-10)


def test_mf_strong_regularizer_shrinks_rows(tri):
    table = train_mf(tri, MFConfig(dim=4, lam=1e6, epochs=50), seed=0)
    assert np.linalg.norm(table.vectors, axis=1).max() < 1e-2


def test_mf_fits_single_edge():
    g = Graph.from_edges(2, [(0, 1)])
    table = train_mf(g, MFConfig(dim=2, lam=0.0, epochs=500), seed=0)
    assert mf_loss(table, g, lam=0.0).item() < 0.01


def test_mf_trace_never_increases_with_line_search(planted):
    trace = []
    train_mf(planted, MFConfig(dim=8, epochs=30, lr=0.5), seed=1, trace=trace)
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_mf_is_deterministic(planted):
    cfg = MFConfig(dim=4, epochs=20)
    assert train_mf(planted, cfg, seed=7).vectors.tobytes() == train_mf(planted, cfg, seed=7).vectors.tobytes()


def test_mf_divergence_without_line_search(tri):
    with pytest.raises(NumericError, match="smaller mf_lr"):
        train_mf(tri, MFConfig(dim=4, lr=10.0, epochs=100, line_search=False), seed=0)
