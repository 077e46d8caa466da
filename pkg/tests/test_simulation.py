import json
import socket
import sys
import threading
from pathlib import Path

import pytest

from coedit.analysis import UnitId
from coedit.encoding import (
    EditEntry,
    InputRow,
    InputStream,
    TargetEdit,
    diff_to_target_edit,
    normalize_diff_tail,
)
from coedit.instances import MODIFIED, PriorChange, ProblemInstance, Provenance
from coedit.linediff import LineStatus, line_diff
from coedit.oracles import (
    EchoRetrievalOracle,
    EpisodeView,
    GroundTruthOracle,
    NullOracle,
    Oracle,
    OracleFailure,
    WireOracle,
    resolve_oracle,
)
from coedit.simulation import (
    aggregate,
    match_prediction,
    run_episode,
    run_simulation,
)
from coedit.tokenizers import SimpleTokenizer

E, A, D = LineStatus.EMPTY, LineStatus.ADD, LineStatus.DEL
TOY = str(Path(__file__).parent / "toy_oracle.py")


def make_instance(before, after, priors=()):
    diff = normalize_diff_tail(line_diff(list(before) + [""], list(after) + [""]))
    unit, region, gt = diff_to_target_edit(diff)
    return ProblemInstance(
        query=tuple(unit),
        region=region,
        prior_changes=tuple(priors),
        signature_doc="",
        ground_truth=gt,
        provenance=Provenance("proj", "c1", UnitId("m", "f", "function")),
    )


def prior_replacement(old, new):
    return PriorChange(
        UnitId("m", "other", "function"),
        MODIFIED,
        InputStream(
            (
                InputRow(None, E, "context"),
                InputRow(None, D, old),
                InputRow(None, A, new),
            )
        ),
    )


THREE_CHANGES = make_instance(
    ["a", "b", "c", "keep"], ["a2", "b2", "c2", "keep"]
)  # three replacement groups -> six changed lines


class TestMatchPrediction:
    def test_exact_full_match(self):
        truth = {2: EditEntry(("x", "y"), True)}
        pred = TargetEdit({2: EditEntry(("x", "y"), True)})
        got = match_prediction(pred, truth)
        kinds = {(m.kind, m.placeholder) for m in got}
        assert kinds == {("insert", 2), ("delete", 2)}

    def test_insertion_prefix_only(self):
        truth = {1: EditEntry(("x", "y"), False)}
        pred = TargetEdit({1: EditEntry(("x", "z"), False)})
        (m,) = match_prediction(pred, truth)
        assert m.kind == "insert" and m.lines == ("x",)

    def test_reordered_insertions_rejected(self):
        truth = {1: EditEntry(("x", "y"), False)}
        pred = TargetEdit({1: EditEntry(("y", "x"), False)})
        assert match_prediction(pred, truth) == []

    def test_wrong_placeholder_rejected(self):
        truth = {1: EditEntry((), True)}
        pred = TargetEdit({2: EditEntry((), True)})
        assert match_prediction(pred, truth) == []


class TestPerfectOracle:
    def test_single_round_full_gain(self):
        result = run_episode(THREE_CHANGES, GroundTruthOracle())
        assert result.rounds == 1
        assert result.completed
        assert result.gains.lines == result.ground_truth_cost.lines
        assert result.gains.levenshtein == result.ground_truth_cost.levenshtein
        assert result.gains.keystrokes == result.ground_truth_cost.keystrokes
        assert not any(entry.manual for entry in result.logs)


class TestNullOracle:
    def test_one_manual_change_per_round(self):
        result = run_episode(THREE_CHANGES, NullOracle())
        # six line changes, one manual per round, capped at six rounds
        assert result.rounds == 6
        assert result.gains.lines == 0

    def test_round_limit_residual_charged(self):
        before = [f"x{i}" for i in range(10)]
        after = [f"y{i}" for i in range(10)]
        inst = make_instance(before, after)  # 20 changed lines
        result = run_episode(inst, NullOracle(), max_rounds=6)
        assert result.rounds == 6
        assert not result.completed
        assert result.gains.lines == 0  # residual is charged as manual
        assert result.gains.keystrokes <= 0

    def test_small_instance_completes_under_limit(self):
        inst = make_instance(["a"], ["b"])  # one replacement: 2 line changes
        result = run_episode(inst, NullOracle())
        assert result.rounds == 2
        assert result.completed


class TestPartialOracle:
    class OneOfTwo(Oracle):
        name = "partial"

        def predict(self, view: EpisodeView) -> TargetEdit:
            remaining = view.remaining_truth.entries
            if not remaining:
                return TargetEdit({})
            k = min(remaining)
            e = remaining[k]
            if e.insertions:
                return TargetEdit({k: EditEntry((e.insertions[0],), False)})
            return TargetEdit({k: EditEntry((), e.delete)})

    def test_accepted_round_has_no_manual(self):
        result = run_episode(THREE_CHANGES, self.OneOfTwo())
        assert result.completed
        assert all(entry.manual is None for entry in result.logs if entry.accepted)
        assert result.gains.lines == result.ground_truth_cost.lines

    def test_monotone_residual(self):
        result = run_episode(THREE_CHANGES, self.OneOfTwo())
        assert result.rounds <= 6


class TestEchoOracle:
    def test_gain_strictly_between_zero_and_full(self):
        inst = make_instance(
            ["keep", "old1", "mid", "old2"],
            ["keep", "new1", "mid", "novel"],
            priors=[prior_replacement("old1", "new1")],
        )
        result = run_episode(inst, EchoRetrievalOracle())
        assert result.completed
        assert 0 < result.gains.lines < result.ground_truth_cost.lines

    def test_determinism(self):
        inst = make_instance(
            ["keep", "old1", "mid", "old2"],
            ["keep", "new1", "mid", "novel"],
            priors=[prior_replacement("old1", "new1")],
        )
        a = run_episode(inst, EchoRetrievalOracle())
        b = run_episode(inst, EchoRetrievalOracle())
        assert a == b


class TestAggregate:
    def test_perfect_and_null_mix(self):
        perfect = run_episode(THREE_CHANGES, GroundTruthOracle())
        null = run_episode(THREE_CHANGES, NullOracle())
        summary = aggregate([perfect, null])
        assert summary.episodes == 2
        assert summary.lines_gain_pct == pytest.approx(50.0)
        assert summary.mean_rounds == pytest.approx((1 + 6) / 2)
        assert summary.single_round["lines_gain_pct"] <= summary.lines_gain_pct + 1e-9

    def test_empty(self):
        summary = aggregate([])
        assert summary.episodes == 0

    def test_run_simulation_parallel_order(self):
        instances = [
            make_instance([f"a{i}"], [f"b{i}"]) for i in range(6)
        ]
        seq = run_simulation(instances, GroundTruthOracle(), jobs=1)
        par = run_simulation(instances, GroundTruthOracle(), jobs=4)
        assert seq == par


class TestWireProtocol:
    def spawn(self, mode, timeout=10.0):
        return WireOracle.spawn(
            [sys.executable, TOY, mode], SimpleTokenizer(), timeout=timeout
        )

    def test_noop_acts_like_null(self):
        oracle = self.spawn("noop")
        try:
            result = run_episode(THREE_CHANGES, oracle)
            assert result.gains.lines == 0
        finally:
            oracle.close()

    def test_parrot_replays_context_change(self):
        inst = make_instance(
            ["keep", "old1", "tail"],
            ["keep", "new1", "tail"],
            priors=[prior_replacement("old1", "new1")],
        )
        oracle = self.spawn("parrot")
        try:
            result = run_episode(inst, oracle)
            assert result.completed
            assert result.gains.lines == result.ground_truth_cost.lines
        finally:
            oracle.close()

    def test_error_response_counts_as_no_suggestion(self):
        inst = make_instance(["a"], ["b"])
        oracle = self.spawn("error")
        try:
            result = run_episode(inst, oracle)
            assert result.completed and result.gains.lines == 0
        finally:
            oracle.close()

    def test_garbage_output_counts_as_no_suggestion(self):
        inst = make_instance(["a"], ["b"])
        oracle = self.spawn("garbage")
        try:
            result = run_episode(inst, oracle)
            assert result.completed and result.gains.lines == 0
        finally:
            oracle.close()

    def test_timeout_failure(self):
        inst = make_instance(["a"], ["b"])
        oracle = self.spawn("silent", timeout=1.0)
        try:
            result = run_episode(inst, oracle, max_rounds=1)
            assert result.gains.lines == 0
        finally:
            oracle.close()

    def test_bad_id_rejected(self):
        oracle = self.spawn("badid")
        try:
            view = EpisodeView(THREE_CHANGES, THREE_CHANGES.ground_truth)
            with pytest.raises(OracleFailure):
                oracle.predict(view)
        finally:
            oracle.close()

    def test_resolve_builtins(self):
        assert resolve_oracle("null", SimpleTokenizer()).name == "null"
        assert resolve_oracle("truth", SimpleTokenizer()).name == "truth"
        assert resolve_oracle("echo", SimpleTokenizer()).name == "echo"
        with pytest.raises(ValueError):
            resolve_oracle("nonsense", SimpleTokenizer())


class TestTcpOracle:
    def test_tcp_roundtrip(self):
        server = socket.create_server(("127.0.0.1", 0))
        port = server.getsockname()[1]

        def serve():
            conn, _ = server.accept()
            with conn, conn.makefile("rw", encoding="utf-8") as stream:
                stream.write(
                    json.dumps({"proto": "coedit-oracle/1", "max_concurrency": 2}) + "\n"
                )
                stream.flush()
                for raw in stream:
                    req = json.loads(raw)
                    stream.write(json.dumps({"id": req["id"], "output": ""}) + "\n")
                    stream.flush()

        thread = threading.Thread(target=serve, daemon=True)
        thread.start()
        oracle = WireOracle.connect(f"127.0.0.1:{port}", SimpleTokenizer(), timeout=10.0)
        try:
            assert oracle.max_concurrency == 2
            inst = make_instance(["a"], ["b"])
            result = run_episode(inst, oracle)
            assert result.completed
        finally:
            oracle.close()
            server.close()
