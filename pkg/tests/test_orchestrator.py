import json
import sys
import textwrap
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import chain
from cprune import fixture
from cprune.cli.config import load_config
from cprune.graph import apply_pruning, load_model, model_to_dict, rank_filters_l1
from cprune.orchestrator import (
    ACCEPTED,
    EXHAUSTED,
    OUTCOMES,
    REJECTED_ACCURACY,
    REJECTED_LATENCY,
    ExternalOracle,
    OracleError,
    SyntheticOracle,
    build_table,
    initialize,
    run_cprune,
    synthetic_accuracy,
)
from cprune.tasks import order_tasks
from cprune.tuner import model_latency, tune_task

GOLDEN = Path(__file__).parent / "golden" / "resnet18_trace.jsonl"


def run(model, profile, kappa=0.01, a_g=0.5, alpha=0.95, beta=0.97, multiplier=3, baseline=0.94):
    state = initialize(model, a_g, alpha, beta, profile, SyntheticOracle(baseline, kappa), multiplier)
    return state, run_cprune(state)


def check_invariants(result, alpha):
    a_prev, l_prev = result.initial_accuracy, None
    for rec in result.trace:
        assert rec.outcome in OUTCOMES
        if rec.outcome == ACCEPTED:
            assert rec.a_p == a_prev
            assert rec.a_s >= alpha * rec.a_p
            assert rec.l_m < rec.l_t
            assert l_prev is None or rec.l_m < l_prev
            a_prev, l_prev = rec.a_s, rec.l_m


class TestSyntheticAccuracy:
    def test_unpruned_is_baseline(self, resnet18):
        assert synthetic_accuracy(resnet18, 0.94, 0.5) == 0.94

    def test_kappa_zero(self, residual):
        pruned = apply_pruning(residual, {"conv_main", "conv_shortcut"}, 8)
        assert synthetic_accuracy(pruned, 0.9, 0.0) == 0.9

    def test_mass_fraction_brute_force(self):
        m = chain([16, 64, 8], ops=())
        w0 = m.node("conv0").weights
        w1 = m.node("conv1").weights
        drop = rank_filters_l1(m.node("conv0"))[:16]
        pruned = apply_pruning(m, {"conv0"}, 16)
        total0 = sum(abs(float(x)) for x in w0.ravel())
        total1 = sum(abs(float(x)) for x in w1.ravel())
        lost0 = sum(abs(float(x)) for f in drop for x in w0[f].ravel())
        lost1 = sum(abs(float(x)) for c in drop for x in w1[:, c].ravel())
        expected = 0.9 - 0.1 * (lost0 / total0 + lost1 / total1)
        assert synthetic_accuracy(pruned, 0.9, 0.1) == pytest.approx(expected, abs=1e-12)

    def test_clamped(self, residual):
        pruned = apply_pruning(residual, {"conv_main", "conv_shortcut"}, 8)
        assert synthetic_accuracy(pruned, 0.9, 1e9) == 0.0

    def test_oracle_mode_checked(self, toy3):
        with pytest.raises(OracleError):
            SyntheticOracle(0.9, 0.1)(toy3, "long")


class TestInitialize:
    def test_toy3(self, toy3, narrow):
        state = initialize(toy3, 0.8, 0.95, 0.97, narrow, SyntheticOracle(0.94, 0.01))
        assert len(state.table.tasks) == 3
        assert state.ordered_tasks == order_tasks(state.table)
        for t in state.table.tasks:
            assert t.fastest_program == tune_task(t, narrow)
        assert state.l_t == Fraction("0.97") * model_latency(state.table)
        assert state.a_p == 0.94

    @pytest.mark.parametrize("kw", [{"a_g": 1.2}, {"alpha": 0}, {"beta": 1.0}])
    def test_ranges(self, toy3, narrow, kw):
        args = dict(a_g=0.8, alpha=0.95, beta=0.97)
        args.update(kw)
        with pytest.raises(ValueError):
            initialize(toy3, args["a_g"], args["alpha"], args["beta"], narrow, SyntheticOracle(0.9, 0.1))

    def test_goal_above_baseline_skips_loop(self, toy3, narrow):
        state, result = run(toy3, narrow, a_g=0.95, baseline=0.94)
        assert result.trace == []
        assert result.model is toy3
        assert result.stop_reason == "accuracy_goal"
        assert result.final_latency == result.initial_latency

    def test_beta_near_one(self, toy3, narrow):
        state, result = run(toy3, narrow, beta=0.999999, alpha=1.0, kappa=0.0)
        accepted = [r for r in result.trace if r.outcome == ACCEPTED]
        assert accepted and all(r.l_m < float(result.initial_latency) for r in accepted)


class TestLoop:
    def test_zero_penalty_exhausts_every_task(self, residual, narrow):
        state, result = run(residual, narrow, kappa=0.0)
        assert result.stop_reason == "no_tasks"
        assert state.ordered_tasks == []
        assert result.final_latency <= result.initial_latency
        assert REJECTED_ACCURACY not in {r.outcome for r in result.trace}
        exhausted = {a for r in result.trace if r.outcome == EXHAUSTED for a in r.anchors}
        assert exhausted == set(residual.conv_ids)
        check_invariants(result, 0.95)

    def test_infinite_penalty_leaves_model_unchanged(self, resnet18, narrow):
        state, result = run(resnet18, narrow, kappa=1e9, beta=0.999)
        assert result.model is resnet18
        assert state.ordered_tasks == []
        assert {r.outcome for r in result.trace} <= {REJECTED_ACCURACY, REJECTED_LATENCY, EXHAUSTED}
        assert Counter(r.outcome for r in result.trace)[REJECTED_ACCURACY] == len(result.table.tasks)
        assert result.final_latency == result.initial_latency

    def test_stalled_pass_stops(self, toy3, narrow):
        # with beta tiny no candidate meets the latency target
        state, result = run(toy3, narrow, beta=0.01)
        assert result.stop_reason == "no_progress"
        assert {r.outcome for r in result.trace} == {REJECTED_LATENCY}
        assert len(result.trace) == len(state.table.tasks)

    def test_trace_counts_every_attempt(self, resnet18, narrow):
        seen = []
        state = initialize(resnet18, 0.85, 0.95, 0.97, narrow, SyntheticOracle(0.94, 0.01), 3)
        result = run_cprune(state, on_record=seen.append)
        assert seen == result.trace
        check_invariants(result, 0.95)
        assert result.stop_reason == "accuracy_goal"
        assert result.latency_ratio >= 1.3

    def test_committed_model_matches_table(self, residual, narrow):
        state, result = run(residual, narrow, kappa=0.001, a_g=0.9)
        assert model_latency(build_table(result.model, narrow)) == result.final_latency


class TestGolden:
    def test_trace_matches_golden(self, tmp_path):
        cfg = load_config(fixture("resnet18.run.json"))
        model = load_model(cfg.model_path, weight_seed=cfg.seed)
        from cprune.tuner import load_profile

        state = initialize(model, cfg.a_g, cfg.alpha, cfg.beta, load_profile(cfg.profile_path), cfg.oracle.build(), cfg.multiplier)
        lines = []
        run_cprune(state, on_record=lambda r: lines.append(json.dumps(r.as_dict()) + "\n"))
        assert "".join(lines) == GOLDEN.read_text()

    def test_golden_invariants(self):
        recs = [json.loads(line) for line in GOLDEN.read_text().splitlines()]
        acc = [r for r in recs if r["outcome"] == ACCEPTED]
        assert acc
        assert all(b["l_m"] < a["l_m"] for a, b in zip(acc, acc[1:]))
        assert all(r["a_s"] >= 0.95 * r["a_p"] for r in acc)


ORACLE_SCRIPT = textwrap.dedent(
    """
    import json, sys
    req = json.load(sys.stdin)
    convs = [n for n in req["model"]["nodes"] if n["kind"] == "conv2d"]
    total = sum(n["filters"] for n in convs)
    bonus = 0.01 if req["mode"] == "final" else 0.0
    print(json.dumps({"accuracy": min(1.0, total / 1000 + bonus), "epochs": req["epochs"]}))
    """
)


class TestExternalOracle:
    @pytest.fixture
    def script(self, tmp_path):
        p = tmp_path / "oracle.py"
        p.write_text(ORACLE_SCRIPT)
        return p

    def test_round_trip(self, script, toy3):
        oracle = ExternalOracle((sys.executable, str(script)), timeout=60)
        assert oracle(toy3, "short") == pytest.approx(0.16)
        assert oracle(toy3, "final") == pytest.approx(0.17)

    def test_drives_the_loop(self, script, residual, narrow):
        oracle = ExternalOracle((sys.executable, str(script)), timeout=60)
        state = initialize(residual, 0.05, 0.5, 0.97, narrow, oracle, 3)
        result = run_cprune(state)
        assert any(r.outcome == ACCEPTED for r in result.trace)
        check_invariants(result, 0.5)

    @pytest.mark.parametrize(
        "body,match",
        [
            ("import sys; sys.exit(3)", "status 3"),
            ("print('nope')", "accuracy"),
            ("print('{\"accuracy\": 1.5}')", "outside"),
            ("import time; time.sleep(5)", "timed out"),
        ],
    )
    def test_failures(self, tmp_path, toy3, body, match):
        p = tmp_path / "bad.py"
        p.write_text(body)
        with pytest.raises(OracleError, match=match):
            ExternalOracle((sys.executable, str(p)), timeout=0.5)(toy3, "short")

    def test_missing_binary(self, toy3):
        with pytest.raises(OracleError, match="cannot start"):
            ExternalOracle(("/nonexistent/oracle",))(toy3, "short")

    def test_request_payload(self, tmp_path, toy3):
        p = tmp_path / "echo.py"
        out = tmp_path / "req.json"
        p.write_text(f"import sys; open({str(out)!r}, 'w').write(sys.stdin.read()); print('{{\"accuracy\": 0.5}}')")
        ExternalOracle((sys.executable, str(p)), epochs={"short": 2, "final": 9})(toy3, "final")
        req = json.loads(out.read_text())
        assert req["mode"] == "final" and req["epochs"] == 9
        assert req["model"] == model_to_dict(toy3)


def test_weights_never_mutated(resnet18, narrow):
    before = {n.id: n.weights.copy() for n in resnet18.nodes if n.is_conv}
    run(resnet18, narrow, a_g=0.9)
    for nid, w in before.items():
        assert np.array_equal(resnet18.node(nid).weights, w)
