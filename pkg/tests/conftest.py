import random
import sys
from fractions import Fraction

import pytest

from cprune import fixture
from cprune.graph import LayerNode, ModelGraph, load_model
from cprune.tuner import load_profile


@pytest.fixture(scope="session")
def narrow():
    return load_profile(fixture("cpu-narrow.json"))


@pytest.fixture(scope="session")
def wide():
    return load_profile(fixture("cpu-wide.json"))


@pytest.fixture(scope="session")
def resnet18():
    return load_model(fixture("resnet18.json"))


@pytest.fixture(scope="session")
def residual():
    return load_model(fixture("residual.json"))


@pytest.fixture(scope="session")
def toy3():
    return load_model(fixture("toy3.json"))


def conv(nid, cin, cout, k=3, s=1, hw=8, **kw):
    return LayerNode(nid, "conv2d", filters=cout, input_channels=cin, kernel=(k, k), stride=(s, s), input_spatial=(hw, hw), **kw)


def chain(channels, hw=8, seed=0, ops=("batch_norm", "relu"), name="chain"):
    """input -> conv -> ops -> conv -> ... with ``channels[i] -> channels[i+1]``."""
    nodes = [LayerNode("data", "input", channels=channels[0], spatial=(hw, hw))]
    edges, prev = [], "data"
    for i, (cin, cout) in enumerate(zip(channels, channels[1:])):
        nodes.append(conv(f"conv{i}", cin, cout, hw=hw))
        edges.append((prev, f"conv{i}"))
        prev = f"conv{i}"
        for op in ops:
            nodes.append(LayerNode(f"{op}{i}", op))
            edges.append((prev, f"{op}{i}"))
            prev = f"{op}{i}"
    return ModelGraph(tuple(nodes), tuple(edges), (), seed, name)


def random_chain(rng: random.Random, max_convs=4):
    n = rng.randint(2, max_convs)
    chans = [rng.choice([3, 8, 16])] + [rng.choice([8, 12, 16, 24, 32]) for _ in range(n)]
    ops = tuple(op for op in ("batch_norm", "relu") if rng.random() < 0.6)
    return chain(chans, hw=rng.choice([4, 8]), seed=rng.randrange(1 << 30), ops=ops)


def frac(s):
    return Fraction(s)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("]")[1].split(".")[0])):
        terminalreporter.write_line(line)
