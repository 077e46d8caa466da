"""Line-level diffs: kept/added/deleted lines with exact projections."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class LineStatus(Enum):
    """Change status of a single line. EMPTY renders as no token."""

    EMPTY = ""
    ADD = "<add>"
    DEL = "<del>"

    @property
    def token(self) -> str:
        return self.value


@dataclass(frozen=True)
class StatusedLine:
    status: LineStatus
    text: str

    def __post_init__(self):
        if "\n" in self.text or "\r" in self.text:
            raise ValueError(f"line text must not contain newlines: {self.text!r}")


def line(status: LineStatus, text: str) -> StatusedLine:
    return StatusedLine(status, text)


@dataclass(frozen=True)
class LineDiff:
    """An edit as a sequence of statused lines.

    Dropping ADD lines yields the before-version; dropping DEL lines
    yields the after-version.
    """

    lines: tuple[StatusedLine, ...]

    def __init__(self, lines: Iterable[StatusedLine]):
        object.__setattr__(self, "lines", tuple(lines))

    def __iter__(self):
        return iter(self.lines)

    def __len__(self) -> int:
        return len(self.lines)

    def before(self) -> list[str]:
        return [sl.text for sl in self.lines if sl.status is not LineStatus.ADD]

    def after(self) -> list[str]:
        return [sl.text for sl in self.lines if sl.status is not LineStatus.DEL]

    def is_identity(self) -> bool:
        return all(sl.status is LineStatus.EMPTY for sl in self.lines)

    def changed_line_count(self) -> int:
        return sum(1 for sl in self.lines if sl.status is not LineStatus.EMPTY)


def line_diff(before: Sequence[str], after: Sequence[str]) -> LineDiff:
    """Diff two line lists into a LineDiff.

    Matches a longest common subsequence of whole lines, pairing the
    leftmost occurrences on ties; within an unmatched gap, deletions
    come before additions.
    """
    pre = 0
    limit = min(len(before), len(after))
    while pre < limit and before[pre] == after[pre]:
        pre += 1
    post = 0
    while (
        post < limit - pre and before[len(before) - 1 - post] == after[len(after) - 1 - post]
    ):
        post += 1

    a = before[pre : len(before) - post]
    b = after[pre : len(after) - post]

    out: list[StatusedLine] = [StatusedLine(LineStatus.EMPTY, t) for t in before[:pre]]
    out.extend(_diff_core(a, b))
    out.extend(StatusedLine(LineStatus.EMPTY, t) for t in before[len(before) - post :])
    return LineDiff(out)


def _diff_core(a: Sequence[str], b: Sequence[str]) -> list[StatusedLine]:
    n, m = len(a), len(b)
    if n == 0:
        return [StatusedLine(LineStatus.ADD, t) for t in b]
    if m == 0:
        return [StatusedLine(LineStatus.DEL, t) for t in a]

    # lcs[i][j] = LCS length of a[i:], b[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = lcs[i], lcs[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]

    out: list[StatusedLine] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and lcs[i][j] == lcs[i + 1][j + 1] + 1:
            out.append(StatusedLine(LineStatus.EMPTY, a[i]))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            out.append(StatusedLine(LineStatus.DEL, a[i]))
            i += 1
        else:
            out.append(StatusedLine(LineStatus.ADD, b[j]))
            j += 1
    out.extend(StatusedLine(LineStatus.DEL, t) for t in a[i:])
    out.extend(StatusedLine(LineStatus.ADD, t) for t in b[j:])
    return out


def split_lines(text: str) -> list[str]:
    """Split text into lines, normalizing away a single trailing newline."""
    if text == "":
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def change_groups(diff: LineDiff) -> list[list[int]]:
    """Partition the diff's changed rows into independently applicable groups.

    Within each maximal run of changed rows (DELs followed by ADDs under
    LCS ordering), the i-th DEL pairs with the i-th ADD as one replacement
    group; leftover DELs or ADDs form singleton groups. Returned groups
    hold row indices into ``diff.lines`` and are ordered by first row.
    """
    groups: list[list[int]] = []
    rows = diff.lines
    i = 0
    while i < len(rows):
        if rows[i].status is LineStatus.EMPTY:
            i += 1
            continue
        start = i
        while i < len(rows) and rows[i].status is not LineStatus.EMPTY:
            i += 1
        dels = [k for k in range(start, i) if rows[k].status is LineStatus.DEL]
        adds = [k for k in range(start, i) if rows[k].status is LineStatus.ADD]
        paired = min(len(dels), len(adds))
        for k in range(paired):
            groups.append([dels[k], adds[k]])
        for k in dels[paired:]:
            groups.append([k])
        for k in adds[paired:]:
            groups.append([k])
    groups.sort(key=lambda g: g[0])
    return groups
