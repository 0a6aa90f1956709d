import networkx as nx
import numpy as np
import pytest

from exceptions import ContractError
from models import Graph
from services.features.assemble import DRNL_PLUS_EMBED, assemble_features, drnl_onehot
from services.features.cache import SubgraphCache
from services.features.drnl import drnl_from_distances, drnl_label
from services.features.featurizer import PairFeaturizer
from services.features.subgraph import extract_enclosing_subgraph, k_hop_nodes
from services.graph.fixtures import path


def _local_edges(sub):
    coo = sub.adjacency.tocoo()
    return {tuple(sorted((int(sub.nodes[r]), int(sub.nodes[c])))) for r, c in zip(coo.row, coo.col)}


# ==================== EXTRACTION ====================

def test_triangle_pair_drops_target_edge(tri):
    sub = extract_enclosing_subgraph(tri, 0, 1, hops=1)
    assert sub.nodes.tolist() == [0, 1, 2]
    assert sub.pair == (0, 1)
    assert _local_edges(sub) == {(0, 2), (1, 2)}
    assert sub.dist_u.tolist() == [0.0, 2.0, 1.0]


def test_path_pair_gives_two_balls():
    sub = extract_enclosing_subgraph(path(5), 0, 4, hops=1)
    assert sub.nodes.tolist() == [0, 4, 1, 3]
    assert _local_edges(sub) == {(0, 1), (3, 4)}
    assert np.isinf(sub.dist_u[1]) and np.isinf(sub.dist_v[0])


def test_rest_ordered_by_distance_then_id():
    g = Graph.from_edges(6, [(0, 1), (0, 5), (1, 3), (5, 2), (3, 4)])
    sub = extract_enclosing_subgraph(g, 0, 1, hops=2)
    # 3 and 5 are one hop from the pair, 2 and 4 two hops
    assert sub.nodes.tolist() == [0, 1, 3, 5, 2, 4]


def test_invalid_pairs(tri):
    with pytest.raises(ContractError):
        extract_enclosing_subgraph(tri, 1, 1)
    with pytest.raises(ContractError):
        extract_enclosing_subgraph(tri, 0, 1, hops=0)
    with pytest.raises(IndexError):
        extract_enclosing_subgraph(tri, 0, 7)


def test_k_hop_nodes_multi_source():
    g = path(7)
    assert k_hop_nodes(g, [0, 6], 1).tolist() == [0, 1, 5, 6]
    assert k_hop_nodes(g, [3], 2).tolist() == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("hops", [1, 2])
def test_distances_match_bfs_oracle(seed, hops):
    nxg = nx.gnp_random_graph(30, 0.1, seed=seed)
    g = Graph.from_edges(30, np.asarray(list(nxg.edges()), dtype=np.int64).reshape(-1, 2))
    rng = np.random.default_rng(seed)
    for _ in range(25):
        u, v = (int(x) for x in rng.choice(30, size=2, replace=False))
        sub = extract_enclosing_subgraph(g, u, v, hops)

        ball = set(nx.ego_graph(nxg, u, radius=hops)) | set(nx.ego_graph(nxg, v, radius=hops))
        assert set(sub.nodes.tolist()) == ball

        local = nxg.subgraph(ball).copy()
        if local.has_edge(u, v):
            local.remove_edge(u, v)
        from_u = nx.single_source_shortest_path_length(local, u)
        from_v = nx.single_source_shortest_path_length(local, v)
        for i, node in enumerate(sub.nodes.tolist()):
            assert sub.dist_u[i] == from_u.get(node, np.inf)
            assert sub.dist_v[i] == from_v.get(node, np.inf)


def test_target_edge_never_leaks(planted_splits):
    splits, train = planted_splits
    for s in splits[:10]:
        for v in s.train_pos:
            sub = extract_enclosing_subgraph(train, s.query, int(v), hops=1)
            assert sub.adjacency[0, 1] == 0 and sub.adjacency[1, 0] == 0


def test_relabeling_preserves_label_multiset(planted, rng):
    perm = rng.permutation(planted.num_nodes)
    edges = planted.edge_array()
    relabeled = Graph.from_edges(planted.num_nodes, perm[edges])
    for u, v in edges[:15]:
        a = extract_enclosing_subgraph(planted, int(u), int(v), hops=1)
        b = extract_enclosing_subgraph(relabeled, int(perm[u]), int(perm[v]), hops=1)
        assert sorted(drnl_label(a).tolist()) == sorted(drnl_label(b).tolist())
        assert a.adjacency.nnz == b.adjacency.nnz
        assert np.array_equal(perm[a.nodes[:2]], b.nodes[:2])


# ==================== DRNL ====================

@pytest.mark.parametrize("du, dv, label", [(1, 1, 2), (1, 2, 3), (2, 1, 3), (2, 2, 5), (1, 3, 4), (3, 3, 10)])
def test_drnl_examples(du, dv, label):
    assert drnl_from_distances([du], [dv]).tolist() == [label]


def test_drnl_is_symmetric_and_injective_on_distance_classes():
    seen = {}
    for du in range(1, 11):
        for dv in range(1, 11):
            label = int(drnl_from_distances([du], [dv])[0])
            assert label == int(drnl_from_distances([dv], [du])[0])
            assert label >= 2
            key = (min(du, dv), du + dv)
            assert seen.setdefault(label, key) == key


def test_unreachable_nodes_get_zero():
    assert drnl_from_distances([np.inf, 1, 2], [1, np.inf, 1]).tolist() == [0, 0, 3]


def test_pair_nodes_get_one(tri):
    sub = extract_enclosing_subgraph(tri, 0, 1)
    assert drnl_label(sub).tolist() == [1, 1, 2]
    far = extract_enclosing_subgraph(path(5), 0, 4)
    assert drnl_label(far).tolist() == [1, 1, 0, 0]


# ==================== FEATURES ====================

def test_onehot_caps_large_labels():
    block = drnl_onehot(np.array([0, 3, 10, 42]), max_label=10)
    assert block.shape == (4, 11)
    assert block.sum(axis=1).tolist() == [1.0] * 4
    assert block[:, 10].tolist() == [0.0, 0.0, 1.0, 1.0]


def test_drnl_only_width(tri):
    sub = extract_enclosing_subgraph(tri, 0, 1)
    feats = assemble_features(sub, drnl_label(sub), max_label=10)
    assert feats.width == 11
    assert feats.mode == "drnl_only"


def test_side_vectors_follow_drnl_block(tri, rng):
    side = rng.normal(size=(3, 128))
    sub = extract_enclosing_subgraph(tri, 2, 0)
    feats = assemble_features(sub, drnl_label(sub), side=side, max_label=10)
    assert feats.width == 139
    assert feats.mode == DRNL_PLUS_EMBED
    assert np.array_equal(feats.values[:, 11:], side[sub.nodes])


def test_missing_side_vector_names_the_node(tri):
    side = np.ones((3, 2))
    side[2] = np.nan
    sub = extract_enclosing_subgraph(tri, 0, 1)
    with pytest.raises(ContractError, match="node 2"):
        assemble_features(sub, drnl_label(sub), side=side)
    with pytest.raises(ContractError, match="node 2"):
        assemble_features(sub, drnl_label(sub), side=np.ones((2, 2)))


def test_featurizer_width_is_constant(planted_splits, rng):
    splits, train = planted_splits
    featurizer = PairFeaturizer(train, hops=1, max_label=6, side=rng.normal(size=(train.num_nodes, 5)))
    assert featurizer.width == 12
    pairs = [(s.query, int(v)) for s in splits[:5] for v in s.train_pos[:3]]
    assert {feats.width for _, feats in featurizer.featurize_many(pairs)} == {12}


# ==================== CACHE ====================

def test_cache_counts_hits(planted):
    cache = SubgraphCache(planted, hops=1)
    first = cache.get(0, 1)
    assert cache.get(0, 1) is first
    assert (cache.hits, cache.misses, len(cache)) == (1, 1, 1)
    assert cache.save() is None


def test_cache_spills_and_reloads(tmp_path, planted):
    cache = SubgraphCache(planted, hops=2, directory=tmp_path)
    originals = {pair: cache.get(*pair) for pair in [(0, 1), (3, 30), (7, 2)]}
    spill = cache.save()
    assert spill.name.startswith("subgraphs_") and spill.name.endswith("_k2.npz")

    reloaded = SubgraphCache(planted, hops=2, directory=tmp_path)
    assert len(reloaded) == 3
    for pair, sub in originals.items():
        again = reloaded.get(*pair)
        assert np.array_equal(again.nodes, sub.nodes)
        assert np.array_equal(again.dist_u, sub.dist_u)
        assert (again.adjacency != sub.adjacency).nnz == 0
    assert reloaded.misses == 0


def test_cache_spill_leaves_no_temporary_files(tmp_path, planted):
    cache = SubgraphCache(planted, hops=1, directory=tmp_path)
    cache.get(0, 1)
    spill = cache.save()
    assert [p.name for p in tmp_path.iterdir()] == [spill.name]


@pytest.mark.parametrize("damage", ["garbage", "truncated"])
def test_unreadable_cache_is_rebuilt(tmp_path, planted, damage):
    cache = SubgraphCache(planted, hops=1, directory=tmp_path)
    expected = cache.get(0, 1)
    spill = cache.save()
    if damage == "garbage":
        spill.write_bytes(b"not a zip archive")
    else:
        spill.write_bytes(spill.read_bytes()[: spill.stat().st_size // 2])

    rebuilt = SubgraphCache(planted, hops=1, directory=tmp_path)
    assert len(rebuilt) == 0
    assert np.array_equal(rebuilt.get(0, 1).nodes, expected.nodes)
    assert rebuilt.misses == 1
    assert rebuilt.save() == spill
    assert len(SubgraphCache(planted, hops=1, directory=tmp_path)) == 1
