"""Regenerate the bundled model fixtures under src/cprune/fixtures/.

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "cprune" / "fixtures"


class Builder:
    def __init__(self, name, seed):
        self.name, self.seed = name, seed
        self.nodes, self.edges, self.groups = [], [], []

    def add(self, node, *inputs):
        self.nodes.append(node)
        self.edges.extend([i, node["id"]] for i in inputs)
        return node["id"]

    def input(self, nid, channels, hw):
        return self.add({"id": nid, "kind": "input", "channels": channels, "spatial": [hw, hw]})

    def conv(self, nid, src, cin, cout, k, s, hw):
        return self.add(
            {"id": nid, "kind": "conv2d", "filters": cout, "input_channels": cin, "kernel": [k, k], "stride": [s, s], "input_spatial": [hw, hw]},
            src,
        )

    def op(self, nid, kind, *srcs, **extra):
        return self.add({"id": nid, "kind": kind, **extra}, *srcs)

    def dump(self, filename):
        doc = {"name": self.name, "weight_seed": self.seed, "nodes": self.nodes, "edges": self.edges, "dependency_groups": self.groups}
        (OUT / filename).write_text(json.dumps(doc, indent=1) + "\n")


def basic_block(b, prefix, src, cin, cout, stride, hw, group):
    c1 = b.conv(f"{prefix}.conv1", src, cin, cout, 3, stride, hw)
    x = b.op(f"{prefix}.bn1", "batch_norm", c1)
    x = b.op(f"{prefix}.relu1", "relu", x)
    hw2 = -(-hw // stride)
    c2 = b.conv(f"{prefix}.conv2", x, cout, cout, 3, 1, hw2)
    y = b.op(f"{prefix}.bn2", "batch_norm", c2)
    group.append(c2)
    shortcut = src
    if stride != 1 or cin != cout:
        ds = b.conv(f"{prefix}.downsample.0", src, cin, cout, 1, stride, hw)
        shortcut = b.op(f"{prefix}.downsample.1", "batch_norm", ds)
        group.append(ds)
    s = b.op(f"{prefix}.add", "add", y, shortcut)
    return b.op(f"{prefix}.relu2", "relu", s), hw2


def resnet18_body(b, x, hw, stem_group):
    cin = 64
    for stage, cout in enumerate((64, 128, 256, 512), start=1):
        group = stem_group if stage == 1 else []
        for blk in range(2):
            stride = 2 if (stage > 1 and blk == 0) else 1
            x, hw = basic_block(b, f"layer{stage}.{blk}", x, cin, cout, stride, hw, group)
            cin = cout
        b.groups.append(group)
    x = b.op("avgpool", "pool", x, **{"global": True})
    return b.op("fc", "dense", x, units=1000, input_features=512)


def resnet18():
    b = Builder("resnet18", 2022)
    x = b.input("data", 3, 224)
    c = b.conv("conv1", x, 3, 64, 7, 2, 224)
    x = b.op("bn1", "batch_norm", c)
    x = b.op("relu", "relu", x)
    x = b.op("maxpool", "pool", x, stride=[2, 2])
    resnet18_body(b, x, 56, ["conv1"])
    b.dump("resnet18.json")


def resnet18_body_only():
    # ResNet-18 minus the stem: subgraphs S10-S14 are the layer3 convs
    b = Builder("resnet18-body", 2022)
    x = b.input("data", 64, 56)
    resnet18_body(b, x, 56, [])
    b.dump("fig4.json")


def toy3():
    b = Builder("toy3", 7)
    x = b.input("data", 16, 32)
    x = b.conv("conv1", x, 16, 32, 3, 1, 32)
    x = b.op("bn1", "batch_norm", x)
    x = b.op("relu1", "relu", x)
    x = b.conv("conv2", x, 32, 64, 3, 2, 32)
    x = b.op("bn2", "batch_norm", x)
    x = b.op("relu2", "relu", x)
    x = b.conv("conv3", x, 64, 64, 3, 1, 16)
    x = b.op("relu3", "relu", x)
    x = b.op("pool", "pool", x, **{"global": True})
    b.op("fc", "dense", x, units=10, input_features=64)
    b.dump("toy3.json")


def residual():
    b = Builder("residual", 11)
    x = b.input("data", 16, 16)
    x = b.conv("stem", x, 16, 32, 3, 1, 16)
    x = b.op("stem_bn", "batch_norm", x)
    stem = b.op("stem_relu", "relu", x)
    a = b.conv("conv_a", stem, 32, 32, 3, 1, 16)
    a = b.op("bn_a", "batch_norm", a)
    a = b.op("relu_a", "relu", a)
    m = b.conv("conv_main", a, 32, 32, 3, 1, 16)
    m = b.op("bn_main", "batch_norm", m)
    s = b.conv("conv_shortcut", stem, 32, 32, 1, 1, 16)
    j = b.op("add", "add", m, s)
    j = b.op("relu_out", "relu", j)
    t = b.conv("conv_tail", j, 32, 48, 3, 1, 16)
    t = b.op("relu_tail", "relu", t)
    t = b.op("pool", "pool", t, **{"global": True})
    b.op("fc", "dense", t, units=10, input_features=48)
    b.groups.append(["conv_main", "conv_shortcut"])
    b.dump("residual.json")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    resnet18()
    resnet18_body_only()
    toy3()
    residual()
