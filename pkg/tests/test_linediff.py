import random

from hypothesis import given, settings
from hypothesis import strategies as st

from coedit.linediff import (
    LineDiff,
    LineStatus,
    StatusedLine,
    change_groups,
    line_diff,
    split_lines,
)

E, A, D = LineStatus.EMPTY, LineStatus.ADD, LineStatus.DEL


def lcs_length(a, b):
    """Independent textbook LCS oracle (forward DP)."""
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            if a[i] == b[j]:
                table[i + 1][j + 1] = table[i][j] + 1
            else:
                table[i + 1][j + 1] = max(table[i][j + 1], table[i + 1][j])
    return table[m][n]


def test_identity():
    assert line_diff(["a = 1"], ["a = 1"]).lines == (StatusedLine(E, "a = 1"),)


def test_replacement():
    got = line_diff(["a", "b"], ["a", "c"])
    assert got.lines == (StatusedLine(E, "a"), StatusedLine(D, "b"), StatusedLine(A, "c"))


def test_pure_insertion():
    assert line_diff([], ["x"]).lines == (StatusedLine(A, "x"),)


def test_projections_exact():
    before = ["def f():", "    return 1", "", "x = f()"]
    after = ["def f(y):", "    return y", "", "x = f(2)", "print(x)"]
    d = line_diff(before, after)
    assert d.before() == before
    assert d.after() == after


def test_diff_is_lcs_optimal():
    rng = random.Random(7)
    for _ in range(300):
        before = [str(rng.randrange(6)) for _ in range(rng.randrange(12))]
        after = [str(rng.randrange(6)) for _ in range(rng.randrange(12))]
        d = line_diff(before, after)
        assert d.before() == before
        assert d.after() == after
        changed = d.changed_line_count()
        assert changed == len(before) + len(after) - 2 * lcs_length(before, after)


def test_leftmost_match():
    d = line_diff(["x"], ["x", "x"])
    assert [sl.status for sl in d] == [E, A]


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.sampled_from(["a", "b", "c", "dd", ""]), max_size=20),
    st.lists(st.sampled_from(["a", "b", "c", "dd", ""]), max_size=20),
)
def test_roundtrip_property(before, after):
    d = line_diff(before, after)
    assert d.before() == before
    assert d.after() == after


def test_split_lines():
    assert split_lines("a\nb\n") == ["a", "b"]
    assert split_lines("a\nb") == ["a", "b"]
    assert split_lines("") == []
    assert split_lines("\n") == [""]


def test_change_groups_pairing():
    d = LineDiff(
        [
            StatusedLine(E, "k"),
            StatusedLine(D, "a1"),
            StatusedLine(D, "a2"),
            StatusedLine(A, "b1"),
            StatusedLine(E, "k2"),
            StatusedLine(A, "c"),
        ]
    )
    groups = change_groups(d)
    assert groups == [[1, 3], [2], [5]]


def test_change_groups_cover_all_changes():
    rng = random.Random(3)
    for _ in range(100):
        before = [str(rng.randrange(5)) for _ in range(rng.randrange(10))]
        after = [str(rng.randrange(5)) for _ in range(rng.randrange(10))]
        d = line_diff(before, after)
        seen = sorted(i for g in change_groups(d) for i in g)
        expected = [
            i for i, sl in enumerate(d.lines) if sl.status is not E
        ]
        assert seen == expected
