"""Placeholder-based encoding of edit regions and target edits.

An editable unit is shown to a predictor as statused lines with numbered
placeholders ``<1>..<n+1>`` marking the lines of the edit region; the
predicted change comes back as per-placeholder insertions and deletion
flags. Both directions have a canonical text rendering (one row per
line) that round-trips exactly, used in dataset files and on the oracle
wire.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .linediff import LineDiff, LineStatus, StatusedLine

ADD_TOKEN = "<add>"
DEL_TOKEN = "<del>"
ESC_TOKEN = "<esc>"

_SPECIAL_WORD = re.compile(r"<(?:add|del|esc|\d+)>\Z")
_PLACEHOLDER = re.compile(r"<(\d+)>\Z")


class EncodingError(Exception):
    pass


class RegionOutOfBounds(EncodingError):
    pass


class InvalidDelete(EncodingError):
    """A deletion targets a line that is itself a fresh addition."""


class MalformedOutput(EncodingError):
    pass


@dataclass(frozen=True)
class EditRegion:
    """Line span [a, a+n] of a unit that carries placeholders.

    The region covers n+1 lines; placeholder k (1-based) is attached to
    line a+k-1. Insertions for a placeholder go before its line.
    """

    a: int
    n: int

    def __post_init__(self):
        if self.a < 1 or self.n < 0:
            raise RegionOutOfBounds(f"invalid region a={self.a}, n={self.n}")

    @property
    def placeholder_count(self) -> int:
        return self.n + 1

    def check(self, unit_len: int) -> None:
        if not (1 <= self.a and self.a + self.n <= unit_len):
            raise RegionOutOfBounds(
                f"region [{self.a}, {self.a + self.n}] not within 1..{unit_len}"
            )

    def line_of(self, k: int) -> int:
        """1-based unit line carrying placeholder k."""
        if not 1 <= k <= self.placeholder_count:
            raise RegionOutOfBounds(f"placeholder {k} outside 1..{self.placeholder_count}")
        return self.a + k - 1

    @staticmethod
    def full(unit_len: int) -> "EditRegion":
        if unit_len < 1:
            raise RegionOutOfBounds("cannot cover an empty unit")
        return EditRegion(1, unit_len - 1)


@dataclass(frozen=True)
class EditEntry:
    insertions: tuple[str, ...] = ()
    delete: bool = False

    def __post_init__(self):
        object.__setattr__(self, "insertions", tuple(self.insertions))
        for t in self.insertions:
            if "\n" in t or "\r" in t:
                raise ValueError("insertion text must not contain newlines")

    @property
    def empty(self) -> bool:
        return not self.insertions and not self.delete

    def line_change_count(self) -> int:
        return len(self.insertions) + (1 if self.delete else 0)


@dataclass(frozen=True)
class TargetEdit:
    """Per-placeholder insertions and deletion flags; empty entries dropped."""

    entries: Mapping[int, EditEntry] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {
            k: e for k, e in sorted(self.entries.items()) if not e.empty
        }
        object.__setattr__(self, "entries", cleaned)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, TargetEdit) and self.entries == other.entries

    def __hash__(self):
        return hash(tuple(self.entries.items()))

    def line_change_count(self) -> int:
        return sum(e.line_change_count() for e in self.entries.values())

    def validate(self, unit: Sequence[StatusedLine], region: EditRegion) -> None:
        region.check(len(unit))
        for k, entry in self.entries.items():
            lineno = region.line_of(k)
            if entry.delete and unit[lineno - 1].status is LineStatus.ADD:
                raise InvalidDelete(
                    f"placeholder {k} deletes line {lineno}, which is a fresh addition"
                )


def target_edit(entries: Mapping[int, tuple[Sequence[str], bool]]) -> TargetEdit:
    """Shorthand constructor from {k: (insertions, delete)}."""
    return TargetEdit({k: EditEntry(tuple(ins), dele) for k, (ins, dele) in entries.items()})


# --- canonical text rendering ------------------------------------------------
#
# Rows are joined by "\n"; within a row, special tokens and the line text
# are joined by single spaces, with the text always last. A text whose
# first space-delimited word would itself read as a special token is
# escaped with a leading "<esc> " so that rendering stays invertible.


def _needs_escape(text: str) -> bool:
    head = text.split(" ", 1)[0]
    return bool(_SPECIAL_WORD.match(head))


def _text_parts(text: str) -> list[str]:
    if _needs_escape(text):
        return [ESC_TOKEN, text]
    return [text] if text else []


def _strip_escape(rest: str) -> str:
    if rest.startswith(ESC_TOKEN + " "):
        return rest[len(ESC_TOKEN) + 1 :]
    return rest


def _take_token(row: str, token: str) -> tuple[bool, str]:
    if row == token:
        return True, ""
    if row.startswith(token + " "):
        return True, row[len(token) + 1 :]
    return False, row


def _take_placeholder(row: str) -> tuple[int | None, str]:
    if not row.startswith("<"):
        return None, row
    head = row.split(" ", 1)[0]
    m = _PLACEHOLDER.match(head)
    if not m:
        return None, row
    rest = row[len(head) + 1 :] if len(row) > len(head) else ""
    return int(m.group(1)), rest


@dataclass(frozen=True)
class InputRow:
    placeholder: int | None
    status: LineStatus
    text: str


@dataclass(frozen=True)
class InputStream:
    rows: tuple[InputRow, ...]

    def render(self) -> str:
        parts = []
        for row in self.rows:
            words: list[str] = []
            if row.placeholder is not None:
                words.append(f"<{row.placeholder}>")
            if row.status is not LineStatus.EMPTY:
                words.append(row.status.token)
            words.extend(_text_parts(row.text))
            parts.append(" ".join(words))
        return "\n".join(parts)

    def token_count(self, tokenizer) -> int:
        """Structural token count: specials and newlines are one token each."""
        total = 0
        for row in self.rows:
            if row.placeholder is not None:
                total += 1
            if row.status is not LineStatus.EMPTY:
                total += 1
            total += tokenizer.count(row.text) + 1
        return total


def parse_input(text: str) -> InputStream:
    """Inverse of InputStream.render for streams with at least one row."""
    rows = []
    last_k = 0
    for raw in text.split("\n"):
        k, rest = _take_placeholder(raw)
        if k is not None:
            if k <= last_k:
                raise MalformedOutput(f"placeholder <{k}> out of order")
            last_k = k
        status = LineStatus.EMPTY
        took, rest2 = _take_token(rest, ADD_TOKEN)
        if took:
            status = LineStatus.ADD
            rest = rest2
        else:
            took, rest2 = _take_token(rest, DEL_TOKEN)
            if took:
                status = LineStatus.DEL
                rest = rest2
        rows.append(InputRow(k, status, _strip_escape(rest)))
    return InputStream(tuple(rows))


@dataclass(frozen=True)
class OutputStream:
    """Placeholder groups of a target edit: (k, insertions, delete)."""

    groups: tuple[tuple[int, tuple[str, ...], bool], ...]

    def render(self) -> str:
        rows = []
        for k, insertions, delete in self.groups:
            first = [f"<{k}>"]
            if insertions:
                first.append(ADD_TOKEN)
                first.extend(_text_parts(insertions[0]))
            elif delete:
                first.append(DEL_TOKEN)
            rows.append(" ".join(first))
            for text in insertions[1:]:
                rows.append(" ".join([ADD_TOKEN, *_text_parts(text)]))
            if delete and insertions:
                rows.append(DEL_TOKEN)
        return "\n".join(rows)

    def token_count(self, tokenizer) -> int:
        total = 0
        for _, insertions, delete in self.groups:
            total += 1 + (1 if delete else 0)
            for text in insertions:
                total += 1 + tokenizer.count(text) + 1
        return total


def enc_input(unit: Sequence[StatusedLine], region: EditRegion) -> InputStream:
    """Render a unit's lines with status tokens and region placeholders."""
    region.check(len(unit))
    rows = []
    for i, sl in enumerate(unit, start=1):
        k = i - region.a + 1 if region.a <= i <= region.a + region.n else None
        rows.append(InputRow(k, sl.status, sl.text))
    return InputStream(tuple(rows))


def enc_context(diff: LineDiff) -> InputStream:
    """Render a contextual change: same format, no edit region."""
    return InputStream(tuple(InputRow(None, sl.status, sl.text) for sl in diff))


def enc_output(
    edit: TargetEdit,
    region: EditRegion,
    statuses: Sequence[LineStatus] | None = None,
) -> OutputStream:
    """Render a target edit, emitting every region placeholder in order.

    When the unit's statuses are supplied, deletion flags on freshly
    added lines are rejected.
    """
    if statuses is not None:
        _check_deletes(edit, region, statuses)
    groups = []
    for k in range(1, region.placeholder_count + 1):
        entry = edit.entries.get(k, EditEntry())
        groups.append((k, entry.insertions, entry.delete))
    return OutputStream(tuple(groups))


def _check_deletes(
    edit: TargetEdit, region: EditRegion, statuses: Sequence[LineStatus]
) -> None:
    for k, entry in edit.entries.items():
        lineno = region.line_of(k)
        if entry.delete and statuses[lineno - 1] is LineStatus.ADD:
            raise InvalidDelete(
                f"placeholder {k} deletes line {lineno}, which is a fresh addition"
            )


def parse_output(
    stream: str | OutputStream,
    input_statuses: Sequence[LineStatus],
    region: EditRegion,
) -> TargetEdit:
    """Decode an output stream into a TargetEdit.

    Tolerates omitted placeholders (they decode to empty entries) and
    blank rows, but rejects out-of-order or out-of-range placeholders,
    stray tokens, and deletions of freshly added lines.
    """
    if isinstance(stream, OutputStream):
        text = stream.render()
    else:
        text = stream
    entries: dict[int, EditEntry] = {}
    current: int | None = None
    insertions: list[str] = []
    delete = False

    def close():
        nonlocal insertions, delete
        if current is not None:
            entries[current] = EditEntry(tuple(insertions), delete)
        insertions = []
        delete = False

    for raw in text.split("\n") if text else []:
        if raw == "":
            continue
        k, rest = _take_placeholder(raw)
        if k is not None:
            if current is not None and k <= current:
                raise MalformedOutput(f"placeholder <{k}> out of order")
            if k > region.placeholder_count:
                raise MalformedOutput(
                    f"placeholder <{k}> outside 1..{region.placeholder_count}"
                )
            close()
            current = k
            if rest == "":
                continue
        elif current is None:
            raise MalformedOutput(f"row before any placeholder: {raw!r}")
        took, rest2 = _take_token(rest, ADD_TOKEN)
        if took:
            insertions.append(_strip_escape(rest2))
            continue
        took, rest2 = _take_token(rest, DEL_TOKEN)
        if took and rest2 == "":
            if delete:
                raise MalformedOutput(f"duplicate {DEL_TOKEN} for placeholder <{current}>")
            delete = True
            continue
        raise MalformedOutput(f"stray tokens in output row: {raw!r}")
    close()

    edit = TargetEdit({k: e for k, e in entries.items()})
    for k, entry in edit.entries.items():
        lineno = region.line_of(k)
        if entry.delete and input_statuses[lineno - 1] is LineStatus.ADD:
            raise InvalidDelete(
                f"placeholder {k} deletes line {lineno}, which is a fresh addition"
            )
    return edit


def apply_edit(
    unit: Sequence[StatusedLine], region: EditRegion, edit: TargetEdit
) -> LineDiff:
    """Substitute each placeholder's insertions/deletion into the unit.

    The result merges the edit with the unit's existing statuses; its
    before-projection equals the unit's before-projection.
    """
    edit.validate(unit, region)
    out: list[StatusedLine] = []
    for i, sl in enumerate(unit, start=1):
        if region.a <= i <= region.a + region.n:
            entry = edit.entries.get(i - region.a + 1, EditEntry())
            out.extend(StatusedLine(LineStatus.ADD, t) for t in entry.insertions)
            if entry.delete and sl.status is LineStatus.EMPTY:
                sl = StatusedLine(LineStatus.DEL, sl.text)
        out.append(sl)
    return LineDiff(out)


def diff_to_target_edit(
    diff: LineDiff, region: EditRegion | None = None
) -> tuple[list[StatusedLine], EditRegion, TargetEdit]:
    """Split a diff into a pre-edit unit and the target edit producing it.

    The unit is the diff's before-lines (all EMPTY); ADD rows become
    insertions attached to the next line's placeholder and DEL rows
    become deletion flags. The diff must not end with ADD rows (pad
    units with a trailing blank line to make trailing appends
    expressible).
    """
    unit = [StatusedLine(LineStatus.EMPTY, t) for t in diff.before()]
    if region is None:
        region = EditRegion.full(max(len(unit), 1))
    entries: dict[int, EditEntry] = {}
    pending: list[str] = []
    lineno = 0
    for sl in diff:
        if sl.status is LineStatus.ADD:
            pending.append(sl.text)
            continue
        lineno += 1
        delete = sl.status is LineStatus.DEL
        if pending or delete:
            k = lineno - region.a + 1
            entries[k] = EditEntry(tuple(pending), delete)
            pending = []
    if pending:
        raise ValueError("diff ends with additions past the last line")
    edit = TargetEdit(entries)
    edit.validate(unit, region)
    return unit, region, edit


def normalize_diff_tail(diff: LineDiff) -> LineDiff:
    """Rewrite a diff so it does not end in ADD rows, preserving projections.

    Only possible when the final added text equals the final before-line
    text (guaranteed when both versions end with the same sentinel line).
    """
    rows = list(diff.lines)
    if not rows or rows[-1].status is not LineStatus.ADD:
        return diff
    j = len(rows) - 1
    while j >= 0 and rows[j].status is LineStatus.ADD:
        j -= 1
    if j < 0:
        raise ValueError("diff has no before-lines to anchor trailing additions")
    anchor = rows[j]
    tail = rows[j + 1 :]
    if tail[-1].text != anchor.text:
        raise ValueError("trailing additions cannot be anchored to the last line")
    if anchor.status is LineStatus.DEL:
        # ... DEL x, ADD t1..tj, ADD x  ->  ... ADD t1..tj, EMPTY x
        new_rows = rows[:j] + tail[:-1] + [StatusedLine(LineStatus.EMPTY, anchor.text)]
    else:
        # ... EMPTY x, ADD t1..tj, ADD x  ->  ... ADD x, ADD t1..tj, EMPTY x
        new_rows = (
            rows[:j]
            + [StatusedLine(LineStatus.ADD, anchor.text)]
            + tail[:-1]
            + [StatusedLine(LineStatus.EMPTY, anchor.text)]
        )
    return LineDiff(new_rows)
