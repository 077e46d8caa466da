import random
import time

import pytest

from coedit.linediff import LineStatus, line_diff
from coedit.metrics import (
    EditCostReport,
    GainReport,
    KeystrokeParams,
    exact_match,
    keystroke_cost,
    levenshtein,
    lines_cost,
    total_gain,
    _keystroke_dp,
)

from keystroke_oracle import keystroke_search

E, A, D = LineStatus.EMPTY, LineStatus.ADD, LineStatus.DEL


def textbook_levenshtein(a, b):
    """Full-matrix reference implementation."""
    m, n = len(a), len(b)
    t = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        t[i][0] = i
    for j in range(n + 1):
        t[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            t[i][j] = min(
                t[i - 1][j] + 1,
                t[i][j - 1] + 1,
                t[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return t[m][n]


class TestLinesCost:
    def test_identity(self):
        assert lines_cost(line_diff(["a"], ["a"])) == 0

    def test_replacement_counts_two(self):
        assert lines_cost(line_diff(["b"], ["c"])) == 2

    def test_pure_additions(self):
        assert lines_cost(line_diff([], ["x", "y", "z"])) == 3


class TestLevenshtein:
    def test_insertion(self):
        assert levenshtein("", "abc") == 3

    def test_equal(self):
        assert levenshtein("same", "same") == 0

    def test_kitten(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_symmetry(self):
        assert levenshtein("abcdef", "azced") == levenshtein("azced", "abcdef")

    def test_matches_textbook(self):
        rng = random.Random(11)
        for _ in range(1000):
            a = "".join(rng.choice("abcd") for _ in range(rng.randrange(12)))
            b = "".join(rng.choice("abcd") for _ in range(rng.randrange(12)))
            assert levenshtein(a, b) == textbook_levenshtein(a, b)


class TestKeystrokeAnchors:
    def test_identical_is_free(self):
        p = KeystrokeParams(4, 0)
        assert keystroke_cost("whatever text", "whatever text", p) == 0

    def test_two_additions(self):
        assert keystroke_cost("", "ab", KeystrokeParams(4, 0)) == 2

    def test_truncate_sentence(self):
        # 5 matches, a capped cursor jump, then one batch deletion
        assert keystroke_cost("hello world", "hello", KeystrokeParams(4, 0)) == 6

    def test_batch_delete_suffix(self):
        p = KeystrokeParams(4, 0)
        assert keystroke_cost("abcdef", "", p) == 2  # S, 6xK, E

    def test_init_cursor_charged(self):
        # cursor must travel before the single deletion
        assert keystroke_cost("ab", "a", KeystrokeParams(4, 4)) == 5


class TestKeystrokeProperties:
    def test_matches_search_oracle(self):
        rng = random.Random(13)
        for _ in range(400):
            a = "".join(rng.choice("abc") for _ in range(rng.randrange(9)))
            b = "".join(rng.choice("abc") for _ in range(rng.randrange(9)))
            for init in (0, 4):
                p = KeystrokeParams(4, init)
                assert keystroke_cost(a, b, p) == keystroke_search(a, b, 4, init), (
                    a,
                    b,
                    init,
                )

    def test_odd_params_match_oracle(self):
        rng = random.Random(14)
        for jump, init in [(0, 0), (1, 3), (2, 0), (4, 7), (3, 3)]:
            for _ in range(60):
                a = "".join(rng.choice("ab") for _ in range(rng.randrange(7)))
                b = "".join(rng.choice("ab") for _ in range(rng.randrange(7)))
                got = keystroke_cost(a, b, KeystrokeParams(jump, init))
                assert got == keystroke_search(a, b, jump, init), (a, b, jump, init)

    def test_stripping_agrees_with_plain_dp(self):
        rng = random.Random(15)
        for _ in range(300):
            a = "".join(rng.choice("ab") for _ in range(rng.randrange(8)))
            b = "".join(rng.choice("ab") for _ in range(rng.randrange(8)))
            for init in (0, 4):
                got = keystroke_cost(a, b, KeystrokeParams(4, init))
                assert got == _keystroke_dp(a, b, 4, min(init, 4))

    def test_batch_deletion_cost_independent_of_length(self):
        p = KeystrokeParams(4, 0)
        costs = {
            n: keystroke_cost("keep" + "x" * n, "keep", p) for n in (1, 2, 5, 50, 500)
        }
        # batch runs: start + end plus the jump there, regardless of length
        assert costs[2] == costs[5] == costs[50] == costs[500]
        assert all(c <= 2 + p.cursor_jump_cost for c in costs.values())

    def test_large_inputs_complete(self):
        # the state space is (input+1) x (output+1) x (jump+1) x 2
        rng = random.Random(16)
        a = "".join(rng.choice("abcdef") for _ in range(300))
        b = "".join(rng.choice("abcdef") for _ in range(300))
        t0 = time.monotonic()
        _keystroke_dp(a, b, 4, 4)
        assert time.monotonic() - t0 < 10.0

    def test_params_validated(self):
        with pytest.raises(ValueError):
            KeystrokeParams(-1, 0)


class TestExactMatch:
    def test_identical(self):
        assert exact_match("x = 1", "x = 1")

    def test_keyword_order_ignored(self):
        assert exact_match("f(b=1, a=2)", "f(a=2, b=1)")

    def test_different_values(self):
        assert not exact_match("x = 1", "x = 2")

    def test_comment_ignored(self):
        assert exact_match("x = 1  # note", "x = 1")

    def test_unparseable_falls_back_to_raw(self):
        assert exact_match("def broken(", "def broken(")
        assert not exact_match("def broken(", "def broken((")


class TestTotalGain:
    gt = EditCostReport(lines=4, levenshtein=40, keystrokes=30)

    def test_fully_automated(self):
        assert total_gain(self.gt, []) == GainReport(4, 40, 30)

    def test_zero_gain(self):
        assert total_gain(self.gt, [self.gt]) == GainReport(0, 0, 0)

    def test_negative_keystroke_gain(self):
        manual = [EditCostReport(1, 15, 20), EditCostReport(3, 30, 25)]
        got = total_gain(self.gt, manual)
        assert got == GainReport(0, -5, -15)
