"""Acceptance suite: one test per criterion, each printing a PASS line
with its elapsed time (run with `pytest tests/test_acceptance.py -v -s`).
"""

import random
import time

from coedit.assembly import QueryOverflow, admit_references, assemble, segment_references
from coedit.encoding import (
    EditEntry,
    EditRegion,
    InputRow,
    InputStream,
    TargetEdit,
    apply_edit,
    diff_to_target_edit,
    enc_output,
    normalize_diff_tail,
    parse_output,
)
from coedit.analysis import ImportGraph, UnitId, normalize_code
from coedit.instances import MODIFIED, PriorChange, ProblemInstance, Provenance
from coedit.linediff import LineDiff, LineStatus, StatusedLine, line_diff
from coedit.metrics import KeystrokeParams, keystroke_cost, levenshtein
from coedit.mining import UnitChange, dataset_stats, mine_repo, order_changes
from coedit.oracles import EchoRetrievalOracle, GroundTruthOracle, NullOracle
from coedit.simulation import run_episode
from coedit.tokenizers import SimpleTokenizer

from fixture_repo import build_fixture_repo
from keystroke_oracle import keystroke_search
from test_metrics import textbook_levenshtein

E, A, D = LineStatus.EMPTY, LineStatus.ADD, LineStatus.DEL


def report(name: str, started: float, budget: float):
    elapsed = time.monotonic() - started
    assert elapsed < budget, f"{name} took {elapsed:.1f}s (budget {budget}s)"
    print(f"ACCEPTANCE PASS: {name} ({elapsed:.1f}s)")


def test_encoding_round_trip_suite():
    started = time.monotonic()
    rng = random.Random(2024)
    texts = ["", "x", "y = 1", "  indented", "<add> tricky", "a <2> b", "<esc>"]
    for _ in range(1000):
        m = rng.randrange(1, 10)
        unit = [
            StatusedLine(rng.choice([E, A, D]), rng.choice(texts)) for _ in range(m)
        ]
        a = rng.randrange(1, m + 1)
        n = rng.randrange(0, m - a + 1)
        region = EditRegion(a, n)
        entries = {}
        for k in range(1, region.placeholder_count + 1):
            if rng.random() < 0.5:
                continue
            ins = tuple(rng.choice(texts) for _ in range(rng.randrange(0, 3)))
            dele = unit[region.line_of(k) - 1].status is not A and rng.random() < 0.4
            if ins or dele:
                entries[k] = EditEntry(ins, dele)
        edit = TargetEdit(entries)
        statuses = [sl.status for sl in unit]

        # decode(encode(edit)) identity
        decoded = parse_output(enc_output(edit, region).render(), statuses, region)
        assert decoded == edit

        # reconstruction: applying the edit keeps the before-projection
        applied = apply_edit(unit, region, edit)
        assert applied.before() == [sl.text for sl in unit if sl.status is not A]

        # substitution: splicing each placeholder's output group into the
        # input rows yields the same final text as apply_edit
        substituted = []
        for i, sl in enumerate(unit, start=1):
            if region.a <= i <= region.a + region.n:
                entry = edit.entries.get(i - region.a + 1, EditEntry())
                substituted.extend(StatusedLine(A, t) for t in entry.insertions)
                if entry.delete and sl.status is E:
                    sl = StatusedLine(D, sl.text)
            substituted.append(sl)
        assert LineDiff(substituted).after() == applied.after()
    report("encoding round-trip suite (1000 randomized units/edits)", started, 30.0)


def test_keystroke_dp_vs_exhaustive_oracle():
    started = time.monotonic()
    assert keystroke_cost("hello world", "hello", KeystrokeParams(4, 0)) == 6
    assert keystroke_cost("", "ab", KeystrokeParams(4, 0)) == 2
    assert keystroke_cost("same text!", "same text!", KeystrokeParams(4, 0)) == 0

    rng = random.Random(77)
    strings = [
        "".join(rng.choice("abc") for _ in range(rng.randrange(0, 9)))
        for _ in range(4000)
    ]
    checked = 0
    for _ in range(100_000):
        a = rng.choice(strings)
        b = rng.choice(strings)
        init = rng.choice((0, 4))
        expected = keystroke_search(a, b, 4, init)
        got = keystroke_cost(a, b, KeystrokeParams(4, init))
        assert got == expected, (a, b, init, got, expected)
        checked += 1
    assert checked == 100_000
    report("keystroke DP vs exhaustive oracle (100k sampled pairs)", started, 120.0)


def test_levenshtein_vs_textbook_dp():
    started = time.monotonic()
    rng = random.Random(88)
    for _ in range(10_000):
        a = "".join(rng.choice("abcdxyz") for _ in range(rng.randrange(0, 24)))
        b = "".join(rng.choice("abcdxyz") for _ in range(rng.randrange(0, 24)))
        assert levenshtein(a, b) == textbook_levenshtein(a, b)
    report("levenshtein vs textbook DP (10k random pairs)", started, 10.0)


def _snippet_corpus(count: int) -> list[str]:
    rng = random.Random(99)
    names = ["alpha", "beta", "gamma", "delta", "eps"]
    corpus = []
    while len(corpus) < count:
        kind = rng.randrange(5)
        kwargs = rng.sample(names, rng.randrange(2, 5))
        call = f"run({', '.join(f'{k}={i}' for i, k in enumerate(kwargs))})"
        if kind == 0:
            corpus.append(f"x = {call}  # trailing comment")
        elif kind == 1:
            corpus.append(
                f"def f(a, b=1):\n    \"\"\"doc {len(corpus)}\"\"\"\n    return {call}"
            )
        elif kind == 2:
            corpus.append(
                f"class C{len(corpus)}:\n    '''doc'''\n    attr = {rng.randrange(9)}\n"
                f"    def m(self):\n        return {call}"
            )
        elif kind == 3:
            corpus.append(f"items = [i for i in range({rng.randrange(3, 9)}) if i]\n{call}")
        else:
            corpus.append(f"# leading comment\nwhile {rng.randrange(2)}:\n    {call}\n    break")
    return corpus


def test_normalization_idempotent_and_keyword_invariant():
    started = time.monotonic()
    assert normalize_code("f(b=1,a=2)")[0] == normalize_code("f(a=2,b=1)")[0]
    rng = random.Random(100)
    for snippet in _snippet_corpus(500):
        once, ok = normalize_code(snippet)
        assert ok, snippet
        twice, ok2 = normalize_code(once)
        assert ok2 and twice == once, snippet
        assert "#" not in twice.replace("'#'", "")

        # shuffle keyword arguments anywhere a call appears
        import ast

        tree = ast.parse(snippet)
        for node in ast.walk(tree):
            if isinstance(node, ast.Call) and len(node.keywords) > 1:
                rng.shuffle(node.keywords)
        ast.fix_missing_locations(tree)
        shuffled = ast.unparse(tree)
        assert normalize_code(shuffled)[0] == once
    report("normalization idempotence + keyword invariance (500 snippets)", started, 30.0)


def test_miner_fixture_ledger_and_reconstruction(tmp_path):
    started = time.monotonic()
    repo = tmp_path / "fixture"
    ledger = build_fixture_repo(repo)
    result = mine_repo(repo, "fixture")
    stats = dataset_stats(result.instances, SimpleTokenizer(), result.changes)
    assert stats.commits == ledger["commits"] == 10
    assert stats.instances == ledger["instances"]
    assert stats.modified_functions == ledger["modified_functions"]
    assert stats.modified_files == ledger["modified_files"]
    assert stats.modified_lines == ledger["modified_lines"]
    assert stats.added_units == ledger["added_units"]
    assert stats.deleted_units == ledger["deleted_units"]
    for inst in result.instances:
        applied = apply_edit(inst.query, inst.region, inst.ground_truth)
        assert applied.before() == [sl.text for sl in inst.query]
        assert "\n".join(applied.after()).rstrip("\n") == inst.final_text().rstrip("\n")
    report("miner fixture ledger + reconstruction", started, 60.0)


def test_ordering_fixture_and_random_dags(tmp_path):
    started = time.monotonic()
    repo = tmp_path / "fixture"
    build_fixture_repo(repo)
    result = mine_repo(repo, "fixture")
    by_commit: dict = {}
    for project, commit, change in result.changes:
        by_commit.setdefault(commit, []).append(change)
    saw_cross_module = False
    for changes in by_commit.values():
        per_module: dict = {}
        for c in changes:
            per_module.setdefault(c.unit.module, []).append(c.anchor_line())
        for lines in per_module.values():
            assert lines == sorted(lines)  # top to bottom within a file
        modules = [c.unit.module for c in changes]
        if {"util", "app"} <= set(modules):
            saw_cross_module = True
            assert modules.index("util") < modules.index("app")  # imported first
    assert saw_cross_module

    rng = random.Random(7)
    for _ in range(200):
        n = rng.randrange(2, 10)
        mods = [f"m{i}" for i in range(n)]
        edges = {
            (mods[j], mods[i])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.35
        }
        graph = ImportGraph(frozenset(mods), frozenset(edges))
        changes = [UnitChange(MODIFIED, UnitId(m, "f", "function")) for m in mods]
        rng.shuffle(changes)
        pos = {
            c.unit.module: i for i, c in enumerate(order_changes(changes, graph))
        }
        for importer, imported in edges:
            assert pos[imported] < pos[importer]
    report("ordering: fixture line/import order + random-DAG topology", started, 30.0)


def _instance_from_lines(before, after, priors=()):
    diff = normalize_diff_tail(line_diff(list(before) + [""], list(after) + [""]))
    unit, region, gt = diff_to_target_edit(diff)
    return ProblemInstance(
        query=tuple(unit),
        region=region,
        prior_changes=tuple(priors),
        signature_doc="",
        ground_truth=gt,
        provenance=Provenance("fixture", "c", UnitId("m", "f", "function")),
    )


def test_harness_bounds(tmp_path):
    started = time.monotonic()
    repo = tmp_path / "fixture"
    build_fixture_repo(repo)
    instances = mine_repo(repo, "fixture").instances
    assert instances

    for inst in instances:
        perfect = run_episode(inst, GroundTruthOracle())
        assert perfect.rounds == 1
        assert perfect.completed
        assert perfect.gains.lines == perfect.ground_truth_cost.lines  # 100%

        null = run_episode(inst, NullOracle())
        assert null.gains.lines == 0
        changes = inst.ground_truth.line_change_count()
        assert null.rounds == min(6, changes)

        again = run_episode(inst, NullOracle())
        assert again == null  # determinism

    echo_inst = _instance_from_lines(
        ["keep", "copyable_old", "mid", "novel_old"],
        ["keep", "copyable_new", "mid", "novel_new"],
        priors=[
            PriorChange(
                UnitId("m", "other", "function"),
                MODIFIED,
                InputStream(
                    (
                        InputRow(None, E, "ctx"),
                        InputRow(None, D, "copyable_old"),
                        InputRow(None, A, "copyable_new"),
                    )
                ),
            )
        ],
    )
    echoed = run_episode(echo_inst, EchoRetrievalOracle())
    assert echoed.completed
    assert 0 < echoed.gains.lines < echoed.ground_truth_cost.lines
    assert run_episode(echo_inst, EchoRetrievalOracle()) == echoed
    report("harness bounds: truth/null/echo oracles + determinism", started, 60.0)


def test_assembler_caps_and_admission_invariance():
    started = time.monotonic()
    tok = SimpleTokenizer()
    rng = random.Random(404)

    def words(n, seed):
        r = random.Random(seed)
        return " ".join(f"w{r.randrange(50)}" for _ in range(n))

    for trial in range(150):
        q_rows = [
            StatusedLine(E, words(rng.randrange(0, 60), trial * 997 + i))
            for i in range(rng.randrange(1, 40))
        ]
        a = rng.randrange(1, len(q_rows) + 1)
        n = rng.randrange(0, len(q_rows) - a + 1)
        priors = tuple(
            PriorChange(
                UnitId("m", f"u{j}", "function"),
                MODIFIED,
                InputStream(
                    tuple(
                        InputRow(None, rng.choice([E, A, D]), words(rng.randrange(0, 700), j * 31 + r))
                        for r in range(rng.randrange(1, 10))
                    )
                ),
            )
            for j in range(rng.randrange(0, 8))
        )
        sig = "\n".join(f"def s{i}(): ..." for i in range(rng.randrange(0, 40)))
        inst = ProblemInstance(
            query=tuple(q_rows),
            region=EditRegion(a, n),
            prior_changes=priors,
            signature_doc=sig,
            ground_truth=TargetEdit({}),
            provenance=Provenance("p", "c", UnitId("m", "f", "function")),
        )
        try:
            ctx = assemble(inst, tok)
        except QueryOverflow:
            continue
        assert ctx.query.token_count <= 1024
        assert ctx.reference_total() <= 16384
        for block in ctx.references:
            assert block.token_count <= 512

        blocks = segment_references(priors, sig, tok)
        budget = rng.randrange(600, 4000)
        baseline = {b.origin for b in admit_references(blocks, budget)[0]}
        for _ in range(3):
            shuffled = blocks[:]
            rng.shuffle(shuffled)
            assert {b.origin for b in admit_references(shuffled, budget)[0]} == baseline
    report("assembler caps + admitted-set permutation invariance", started, 60.0)
