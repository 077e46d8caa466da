"""Editing-cost metrics: changed lines, Levenshtein, and keystroke distance."""

from __future__ import annotations

from dataclasses import dataclass

from .linediff import LineDiff, LineStatus

_INF = 1 << 60


@dataclass(frozen=True)
class KeystrokeParams:
    """Cursor model for the keystroke metric.

    cursor_jump_cost caps what a cursor move can cost; init_cursor_dis is
    the distance the cursor starts at (the default assumes each edit
    requires navigating to its location first).
    """

    cursor_jump_cost: int = 4
    init_cursor_dis: int = 4

    def __post_init__(self):
        if self.cursor_jump_cost < 0 or self.init_cursor_dis < 0:
            raise ValueError("keystroke params must be non-negative")


@dataclass(frozen=True)
class EditCostReport:
    lines: int
    levenshtein: int
    keystrokes: int

    def __add__(self, other: "EditCostReport") -> "EditCostReport":
        return EditCostReport(
            self.lines + other.lines,
            self.levenshtein + other.levenshtein,
            self.keystrokes + other.keystrokes,
        )

    @staticmethod
    def zero() -> "EditCostReport":
        return EditCostReport(0, 0, 0)


@dataclass(frozen=True)
class GainReport:
    """Ground-truth cost minus accumulated manual cost, per metric.

    Levenshtein and keystroke gains can be negative: performing changes
    one line at a time can cost more than the direct transformation.
    """

    lines: int
    levenshtein: int
    keystrokes: int


def lines_cost(diff: LineDiff) -> int:
    """Number of changed lines: additions plus deletions."""
    return sum(1 for sl in diff if sl.status is not LineStatus.EMPTY)


def levenshtein(a: str, b: str) -> int:
    """Minimal character additions, deletions, and substitutions."""
    pre = 0
    limit = min(len(a), len(b))
    while pre < limit and a[pre] == b[pre]:
        pre += 1
    post = 0
    while post < limit - pre and a[len(a) - 1 - post] == b[len(b) - 1 - post]:
        post += 1
    a = a[pre : len(a) - post]
    b = b[pre : len(b) - post]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) < len(a):
        a, b = b, a
    prev = list(range(len(a) + 1))
    cur = [0] * (len(a) + 1)
    for j in range(1, len(b) + 1):
        cur[0] = j
        bj = b[j - 1]
        for i in range(1, len(a) + 1):
            cost = 0 if a[i - 1] == bj else 1
            cur[i] = min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + cost)
        prev, cur = cur, prev
    return prev[len(a)]


def keystroke_cost(
    input_text: str, output_text: str, params: KeystrokeParams = KeystrokeParams()
) -> int:
    """Minimum keystrokes to turn input_text into output_text.

    Operations: match a character for free (the cursor drifts one further
    away), add or delete single characters at the cursor, batch-delete a
    run (begin/continue/end), and jump the cursor for
    min(cursor_dis, cursor_jump_cost). Solved by dynamic programming over
    (input position, output position, clamped cursor distance, deleting).
    """
    jump = params.cursor_jump_cost
    init = params.init_cursor_dis

    # A shared suffix is always matched by some optimal solution: matching
    # is free and nothing after it cares about the cursor. Strip it.
    post = 0
    limit = min(len(input_text), len(output_text))
    while (
        post < limit
        and input_text[len(input_text) - 1 - post] == output_text[len(output_text) - 1 - post]
    ):
        post += 1
    a = input_text[: len(input_text) - post]
    b = output_text[: len(output_text) - post]

    # A shared prefix may only be stripped when the cursor already starts
    # at or beyond the jump cap: matching it then cannot change any later
    # jump cost. With a nearer cursor, skipping a match can genuinely win.
    if init >= jump:
        pre = 0
        limit = min(len(a), len(b))
        while pre < limit and a[pre] == b[pre]:
            pre += 1
        a = a[pre:]
        b = b[pre:]

    return _keystroke_dp(a, b, jump, init)


def _keystroke_dp(a: str, b: str, jump: int, init: int) -> int:
    """Backward induction over (consumed input, consumed output) cells.

    Cursor distance is clamped at cursor_jump_cost since larger distances
    are cost-equivalent (a jump costs min(cursor_dis, jump)). Each cell
    holds jump+1 not-deleting values plus one deleting value; while
    deleting the cursor distance stays 0, so one value suffices.
    """
    n, m = len(a), len(b)
    width = jump + 1

    # Row p = n: only additions (and useless delete brackets) remain.
    nxt_f = [[0] * width for _ in range(m + 1)]
    nxt_t = [0] * (m + 1)
    nxt_t[m] = 1
    for q in range(m - 1, -1, -1):
        f0 = 1 + nxt_f[q + 1][0]
        row = nxt_f[q]
        row[0] = f0
        for d in range(1, width):
            row[d] = d + f0
        nxt_t[q] = 1 + f0

    for p in range(n - 1, -1, -1):
        cur_f = [[0] * width for _ in range(m + 1)]
        cur_t = [0] * (m + 1)
        ap = a[p]
        for q in range(m, -1, -1):
            match = q < m and ap == b[q]
            x = nxt_t[q]  # K: consume an input char while deleting
            y0 = 1 + nxt_f[q][0]  # D
            if q < m:
                add = 1 + cur_f[q + 1][0]  # A
                if add < y0:
                    y0 = add
            if match:
                mres = nxt_f[q + 1][1 if jump else 0]
                if mres < y0:
                    y0 = mres
            f0 = min(y0, 1 + x)  # direct edit, or S into a delete run
            cur_t[q] = min(x, 1 + f0)
            row = cur_f[q]
            row[0] = f0
            for d in range(1, width):
                v = d + f0  # C to the edit point, then proceed
                if match:
                    mres = nxt_f[q + 1][min(d + 1, jump)]
                    if mres < v:
                        v = mres
                row[d] = v
        nxt_f, nxt_t = cur_f, cur_t

    return nxt_f[0][min(init, jump)]


def exact_match(pred: str, truth: str) -> bool:
    """String equality after semantic-preserving normalization.

    Falls back to raw comparison when either side fails to parse.
    """
    from .analysis import normalize_code

    norm_pred, ok_pred = normalize_code(pred)
    norm_truth, ok_truth = normalize_code(truth)
    if ok_pred and ok_truth:
        return norm_pred == norm_truth
    return pred == truth


def total_gain(
    ground_truth_cost: EditCostReport, manual_costs: list[EditCostReport]
) -> GainReport:
    """Ground-truth editing cost minus the summed manual editing costs."""
    spent = EditCostReport.zero()
    for c in manual_costs:
        spent = spent + c
    return GainReport(
        lines=ground_truth_cost.lines - spent.lines,
        levenshtein=ground_truth_cost.levenshtein - spent.levenshtein,
        keystrokes=ground_truth_cost.keystrokes - spent.keystrokes,
    )
