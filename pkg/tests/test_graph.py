import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, conv, random_chain
from cprune.graph import (
    GraphError,
    LayerNode,
    ModelGraph,
    PruneError,
    apply_pruning,
    expand_to_groups,
    model_from_dict,
    model_to_dict,
    partition_subgraphs,
    rank_filters_l1,
    validate_graph,
)
from cprune.graph.weights import materialize_weights, splitmix64


def codes(model):
    return [v.code for v in validate_graph(model)]


class TestValidate:
    def test_two_conv_chain_is_valid(self):
        assert validate_graph(chain([3, 64, 64])) == []

    def test_channel_mismatch(self):
        nodes = (LayerNode("x", "input", channels=3, spatial=(8, 8)), conv("a", 3, 64), conv("b", 60, 32))
        m = ModelGraph(nodes, (("x", "a"), ("a", "b")))
        assert codes(m) == ["channel-mismatch"]

    def test_cycle(self):
        nodes = (LayerNode("x", "input", channels=4, spatial=(8, 8)), conv("a", 4, 4), conv("b", 4, 4))
        m = ModelGraph(nodes, (("x", "a"), ("a", "b"), ("b", "a")))
        assert codes(m).count("cycle") == 1

    def test_spatial_mismatch(self):
        nodes = (LayerNode("x", "input", channels=4, spatial=(8, 8)), conv("a", 4, 4, s=2), conv("b", 4, 4, hw=8))
        m = ModelGraph(nodes, (("x", "a"), ("a", "b")))
        assert "spatial-mismatch" in codes(m)

    def test_unknown_node_and_duplicates(self):
        nodes = (LayerNode("x", "input", channels=4, spatial=(8, 8)), conv("a", 4, 4), conv("a", 4, 4))
        assert "duplicate-id" in codes(ModelGraph(nodes, (("x", "a"),)))
        assert "unknown-node" in codes(ModelGraph(nodes[:2], (("x", "a"), ("a", "zz"))))

    def test_group_filter_mismatch(self):
        nodes = (LayerNode("x", "input", channels=4, spatial=(8, 8)), conv("a", 4, 8), conv("b", 4, 16))
        m = ModelGraph(nodes, (("x", "a"), ("x", "b")), (("a", "b"),))
        assert "group-mismatch" in codes(m)

    def test_add_needs_equal_channels(self):
        nodes = (
            LayerNode("x", "input", channels=4, spatial=(8, 8)),
            conv("a", 4, 8),
            conv("b", 4, 16),
            LayerNode("sum", "add"),
        )
        m = ModelGraph(nodes, (("x", "a"), ("x", "b"), ("a", "sum"), ("b", "sum")))
        assert "channel-mismatch" in codes(m)

    def test_fixtures_valid(self, resnet18, residual, toy3):
        for m in (resnet18, residual, toy3):
            assert validate_graph(m) == []


class TestPartition:
    def test_resnet18_one_subgraph_per_conv(self, resnet18):
        # torchvision layout: stem + 16 block convs + 3 downsample convs
        n_conv = sum(n.kind == "conv2d" for n in resnet18.nodes)
        assert n_conv == 20
        sgs = partition_subgraphs(resnet18)
        assert len(sgs) == n_conv
        assert [s.id for s in sgs] == [f"S{i}" for i in range(1, n_conv + 1)]
        order = resnet18.topo_order()
        anchors = [s.anchor_conv for s in sgs]
        assert anchors == [n for n in order if resnet18.node(n).is_conv]

    def test_single_conv_relu(self):
        m = chain([3, 8], ops=("relu",))
        (sg,) = partition_subgraphs(m)
        assert sg.fused_ops.has_relu and not sg.fused_ops.has_bn and not sg.fused_ops.has_add

    def test_conv_bn_relu_conv(self):
        m = chain([3, 8, 8], ops=("batch_norm", "relu"))
        m = ModelGraph(m.nodes[:-2], m.edges[:-2])
        sgs = partition_subgraphs(m)
        assert len(sgs) == 2
        assert sgs[0].fused_ops.has_bn and sgs[0].fused_ops.has_relu
        assert not sgs[1].fused_ops.has_bn

    def test_add_is_fused_into_residual_convs(self, residual):
        fused = {s.anchor_conv: s.fused_ops for s in partition_subgraphs(residual)}
        assert fused["conv_main"].has_add and fused["conv_shortcut"].has_add
        assert not fused["conv_a"].has_add

    def test_invalid_graph_rejected(self):
        nodes = (LayerNode("x", "input", channels=3, spatial=(8, 8)), conv("a", 3, 64), conv("b", 60, 32))
        with pytest.raises(GraphError):
            partition_subgraphs(ModelGraph(nodes, (("x", "a"), ("a", "b"))))


class TestRanking:
    def test_hand_example(self):
        w = np.array([[1, -1], [0.5, 0.5], [2, 0]], dtype=float).reshape(3, 2, 1, 1)
        node = conv("c", 2, 3, k=1, weights=w)
        assert rank_filters_l1(node) == [1, 0, 2]

    def test_all_zero_is_index_order(self):
        node = conv("c", 2, 4, k=1, weights=np.zeros((4, 2, 1, 1)))
        assert rank_filters_l1(node) == [0, 1, 2, 3]

    def test_seeded_64_filters_brute_force(self):
        m = chain([16, 64])
        node = m.node("conv0")
        w = materialize_weights(m.weight_seed, "conv0", (64, 16, 3, 3))
        sums = [sum(abs(float(x)) for x in w[f].ravel()) for f in range(64)]
        expected = sorted(range(64), key=lambda f: (sums[f], f))
        assert rank_filters_l1(node) == expected

    @given(st.integers(0, 2**31), st.integers(1, 24))
    @settings(max_examples=40, deadline=None)
    def test_sign_flip_invariant(self, seed, filters):
        w = materialize_weights(seed, "c", (filters, 3, 3, 3))
        flips = np.where(materialize_weights(seed + 1, "s", (filters, 3, 3, 3)) > 0, 1.0, -1.0)
        assert rank_filters_l1(conv("c", 3, filters, weights=w)) == rank_filters_l1(conv("c", 3, filters, weights=w * flips))

    def test_non_conv_rejected(self):
        with pytest.raises(PruneError):
            rank_filters_l1(LayerNode("r", "relu"))


class TestWeights:
    def test_splitmix_reference_value(self):
        # first output of the reference generator seeded with 0
        assert splitmix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF

    def test_deterministic_and_seed_sensitive(self):
        a = materialize_weights(5, "n", (4, 3, 3, 3))
        assert np.array_equal(a, materialize_weights(5, "n", (4, 3, 3, 3)))
        assert not np.array_equal(a, materialize_weights(6, "n", (4, 3, 3, 3)))
        assert not np.array_equal(a, materialize_weights(5, "m", (4, 3, 3, 3)))

    def test_nonzero_and_distinct_l1(self):
        w = materialize_weights(2022, "c", (64, 16, 3, 3))
        l1 = np.abs(w).reshape(64, -1).sum(axis=1)
        assert (l1 > 0).all() and len(set(l1.tolist())) > 60


class TestPruning:
    def test_count_zero_is_identity(self):
        m = chain([3, 16, 16])
        out = apply_pruning(m, {"conv0"}, 0)
        assert out is m
        assert np.array_equal(out.node("conv0").weights, m.node("conv0").weights)

    def test_propagates_to_next_conv(self):
        m = chain([3, 64, 32])
        out = apply_pruning(m, {"conv0"}, 16)
        assert out.node("conv0").filters == 48
        assert out.node("conv1").input_channels == 48
        assert out.node("conv1").weights.shape == (32, 48, 3, 3)
        assert validate_graph(out) == []

    def test_removes_lowest_l1_filters(self):
        m = chain([3, 16, 8])
        order = rank_filters_l1(m.node("conv0"))
        out = apply_pruning(m, {"conv0"}, 4)
        kept = sorted(order[4:])
        assert np.array_equal(out.node("conv0").weights, m.node("conv0").weights[kept])
        assert np.array_equal(out.node("conv1").weights, m.node("conv1").weights[:, kept])

    def test_residual_group(self, residual):
        group = expand_to_groups(residual, {"conv_main"})
        assert group == {"conv_main", "conv_shortcut"}
        out = apply_pruning(residual, group, 8)
        assert out.node("conv_main").filters == out.node("conv_shortcut").filters == 24
        assert out.node("conv_tail").input_channels == 24
        assert validate_graph(out) == []

    def test_partial_group_rejected(self, residual):
        with pytest.raises(PruneError, match="dependency group"):
            apply_pruning(residual, {"conv_main"}, 8)

    def test_cannot_empty_a_layer(self):
        with pytest.raises(PruneError):
            apply_pruning(chain([3, 8, 8]), {"conv0"}, 8)

    def test_dense_input_features_follow(self, toy3):
        out = apply_pruning(toy3, {"conv3"}, 16)
        assert out.node("fc").input_channels == 48
        assert validate_graph(out) == []

    def test_stem_group_in_resnet18(self, resnet18):
        group = expand_to_groups(resnet18, {"layer1.0.conv2"})
        assert group == {"conv1", "layer1.0.conv2", "layer1.1.conv2"}
        out = apply_pruning(resnet18, group, 8)
        assert validate_graph(out) == []
        assert out.node("layer1.0.conv1").input_channels == 56
        assert out.node("layer2.0.downsample.0").input_channels == 56

    def test_random_chains(self):
        rng = random.Random(11)
        for _ in range(200):
            m = random_chain(rng)
            i = rng.randrange(len(m.conv_ids) - 1)
            a, b = f"conv{i}", f"conv{i + 1}"
            k = rng.randrange(0, m.node(a).filters)
            out = apply_pruning(m, {a}, k)
            assert out.node(b).input_channels == m.node(b).input_channels - k
            assert out.node(a).filters == m.node(a).filters - k
            assert validate_graph(out) == []

    @given(st.integers(0, 10**6), st.data())
    @settings(max_examples=30, deadline=None)
    def test_closed_over_validity(self, seed, data):
        m = random_chain(random.Random(seed), max_convs=5)
        target = data.draw(st.sampled_from(m.conv_ids))
        k = data.draw(st.integers(0, m.node(target).filters - 1))
        assert validate_graph(apply_pruning(m, {target}, k)) == []


class TestSerialization:
    def test_round_trip_pruned(self, residual):
        pruned = apply_pruning(residual, {"conv_main", "conv_shortcut"}, 8)
        back = model_from_dict(model_to_dict(pruned))
        for n in pruned.nodes:
            if n.is_conv:
                assert np.array_equal(back.node(n.id).weights, n.weights)
                assert back.node(n.id).original_l1 == n.original_l1
        assert model_to_dict(back) == model_to_dict(pruned)

    def test_inline_weights(self):
        d = {
            "nodes": [
                {"id": "x", "kind": "input", "channels": 2, "spatial": [4, 4]},
                {"id": "c", "kind": "conv2d", "filters": 2, "input_channels": 2, "kernel": [1, 1], "input_spatial": [4, 4],
                 "weights": [[[[1.0]], [[2.0]]], [[[0.0]], [[-1.0]]]]},
            ],
            "edges": [["x", "c"]],
        }
        m = model_from_dict(d)
        assert m.node("c").original_l1 == 4.0
        assert rank_filters_l1(m.node("c")) == [1, 0]
