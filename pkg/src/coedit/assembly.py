"""Packing an instance into a bounded query block plus reference blocks.

References (prior changes and signature chunks) are admitted by priority
under a total token budget; the query is truncated by shedding margin
lines around the edit region when it exceeds its own cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .encoding import EditRegion, InputStream, enc_input
from .instances import ProblemInstance
from .linediff import StatusedLine
from .tokenizers import Tokenizer

QUERY_TOKEN_LIMIT = 1024
REFERENCE_BLOCK_LIMIT = 512
REFERENCE_BUDGET = 16384


class QueryOverflow(Exception):
    """The edit region alone does not fit in the query block."""


@dataclass(frozen=True)
class Block:
    role: str  # "query" | "reference"
    payload: str
    token_count: int
    origin: str
    priority: tuple = ()
    truncated_line: bool = False


@dataclass(frozen=True)
class AssembledContext:
    query: Block
    references: tuple[Block, ...]
    dropped: tuple[str, ...]
    query_region: EditRegion
    query_lines: tuple[StatusedLine, ...]
    margin_offset: int = 0  # full-query rows trimmed off the top margin

    def reference_total(self) -> int:
        return sum(b.token_count for b in self.references)


def _row_cost(row, tokenizer: Tokenizer) -> int:
    cost = tokenizer.count(row.text) + 1  # trailing newline token
    if row.placeholder is not None:
        cost += 1
    if row.status.token:
        cost += 1
    return cost


def _chunk_rows(
    rows, tokenizer: Tokenizer, origin: str, priority: tuple, limit: int
) -> list[Block]:
    """Split rows into blocks of at most `limit` tokens at line boundaries."""
    blocks: list[Block] = []
    part: list = []
    part_cost = 0
    part_idx = 0
    truncated = False

    def flush():
        nonlocal part, part_cost, part_idx, truncated
        if part:
            blocks.append(
                Block(
                    "reference",
                    InputStream(tuple(part)).render(),
                    part_cost,
                    f"{origin}[{part_idx}]",
                    priority + (part_idx,),
                    truncated,
                )
            )
            part, part_cost, truncated = [], 0, False
            part_idx += 1

    for row in rows:
        cost = _row_cost(row, tokenizer)
        if cost > limit:
            # single oversized line: keep a truncated prefix of its tokens
            flush()
            kept = _truncate_text(row.text, tokenizer, limit - (cost - tokenizer.count(row.text)))
            row = type(row)(row.placeholder, row.status, kept)
            part = [row]
            part_cost = _row_cost(row, tokenizer)
            truncated = True
            flush()
            continue
        if part_cost + cost > limit:
            flush()
        part.append(row)
        part_cost += cost
    flush()
    return blocks


def _truncate_text(text: str, tokenizer: Tokenizer, max_tokens: int) -> str:
    if max_tokens <= 0:
        return ""
    if tokenizer.count(text) <= max_tokens:
        return text
    # shrink by characters until the token count fits; counts are only
    # near-monotone for BPE, so follow up with a linear safety trim
    lo, hi = 0, len(text)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if tokenizer.count(text[:mid]) <= max_tokens:
            lo = mid
        else:
            hi = mid - 1
    text = text[:lo]
    while text and tokenizer.count(text) > max_tokens:
        text = text[:-1]
    return text


def segment_references(
    prior_changes,
    signature_doc: str,
    tokenizer: Tokenizer,
    block_limit: int = REFERENCE_BLOCK_LIMIT,
) -> list[Block]:
    """One or more reference blocks per signature chunk and prior change.

    Signature chunks sort ahead of changes; changes are keyed by
    proximity, the most recent first.
    """
    blocks: list[Block] = []
    if signature_doc:
        blocks.extend(
            _chunk_rows(_text_rows(signature_doc), tokenizer, "signatures", (0, 0), block_limit)
        )
    total = len(prior_changes)
    for j, change in enumerate(prior_changes, start=1):
        blocks.extend(
            _chunk_rows(
                change.stream.rows,
                tokenizer,
                f"change[{j}]",
                (1, total - j),
                block_limit,
            )
        )
    return blocks


def _text_rows(text: str):
    from .encoding import InputRow
    from .linediff import LineStatus

    return tuple(InputRow(None, LineStatus.EMPTY, t) for t in text.split("\n"))


def _truncate_query(
    query, region: EditRegion, tokenizer: Tokenizer, limit: int
) -> tuple[tuple, EditRegion, int]:
    costs = [_row_cost(r, tokenizer) for r in enc_input(query, region).rows]
    total = sum(costs)
    lo, hi = 0, len(query)  # kept window [lo, hi)
    first, last = region.a - 1, region.a + region.n  # region rows [first, last)
    if sum(costs[first:last]) > limit:
        raise QueryOverflow(
            f"edit region needs {sum(costs[first:last])} tokens, limit is {limit}"
        )
    while total > limit:
        above = first - lo
        below = hi - last
        if above >= below and above > 0:
            total -= costs[lo]
            lo += 1
        elif below > 0:
            total -= costs[hi - 1]
            hi -= 1
        else:
            break
    kept = tuple(query[lo:hi])
    return kept, EditRegion(region.a - lo, region.n), lo


def admit_references(
    blocks: Sequence[Block], budget: int
) -> tuple[tuple[Block, ...], tuple[str, ...]]:
    """Admit blocks in priority order until the first one that no longer
    fits. Admission depends only on each block's priority key, never on
    arrival order."""
    ordered = sorted(blocks, key=lambda b: b.priority)
    admitted: list[Block] = []
    dropped: list[str] = []
    used = 0
    over = False
    for block in ordered:
        if over or used + block.token_count > budget:
            over = True
            dropped.append(block.origin)
        else:
            admitted.append(block)
            used += block.token_count
    return tuple(admitted), tuple(dropped)


def assemble(
    instance: ProblemInstance,
    tokenizer: Tokenizer,
    budget: int = REFERENCE_BUDGET,
    query_limit: int = QUERY_TOKEN_LIMIT,
    block_limit: int = REFERENCE_BLOCK_LIMIT,
) -> AssembledContext:
    """Build the bounded context for one prediction request.

    The query is truncated by dropping margin lines (keeping the sides
    balanced); references are admitted in priority order until the first
    one that no longer fits, and the rest are reported as dropped.
    """
    query_lines, region, margin_offset = _truncate_query(
        instance.query, instance.region, tokenizer, query_limit
    )
    stream = enc_input(query_lines, region)
    query_block = Block(
        "query",
        stream.render(),
        stream.token_count(tokenizer),
        "query",
    )

    candidates = segment_references(
        instance.prior_changes, instance.signature_doc, tokenizer, block_limit
    )
    admitted, dropped = admit_references(candidates, budget)
    return AssembledContext(
        query=query_block,
        references=admitted,
        dropped=dropped,
        query_region=region,
        query_lines=query_lines,
        margin_offset=margin_offset,
    )
