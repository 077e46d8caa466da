"""Mining commit histories into editing problem instances.

Each commit pair is tree-diffed into unit additions, deletions, and
modifications; modifications become instances whose context is every
change ordered before them (top-to-bottom within a file, imported
modules before importers across files).
"""

from __future__ import annotations

import logging
import random
import statistics
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .analysis import (
    FUNCTION,
    CodeUnit,
    ImportGraph,
    ParseError,
    ProjectIndex,
    UnitId,
    build_signature_doc,
    extract_units,
    import_graph,
)
from .encoding import (
    EditEntry,
    EditRegion,
    TargetEdit,
    diff_to_target_edit,
    enc_context,
    normalize_diff_tail,
)
from .instances import (
    ADDED,
    DELETED,
    MODIFIED,
    CompletionInstance,
    PriorChange,
    ProblemInstance,
    Provenance,
)
from .linediff import LineDiff, LineStatus, StatusedLine, line_diff
from .tokenizers import Tokenizer

log = logging.getLogger(__name__)

SENTINEL = ""  # trailing blank line so edits can append past the last line


class NotEligible(Exception):
    """The instance cannot be split for multi-round synthesis."""


@dataclass(frozen=True)
class UnitChange:
    kind: str  # added | deleted | modified
    unit: UnitId
    before: CodeUnit | None = None
    after: CodeUnit | None = None
    diff: LineDiff | None = None

    def anchor_line(self) -> int:
        ref = self.before if self.before is not None else self.after
        return ref.span[0] if ref is not None else 0

    def to_prior(self) -> PriorChange:
        if self.kind == MODIFIED:
            stream = enc_context(self.diff)
        elif self.kind == ADDED:
            stream = enc_context(
                LineDiff(StatusedLine(LineStatus.ADD, t) for t in self.after.lines)
            )
        else:
            stream = enc_context(
                LineDiff(StatusedLine(LineStatus.DEL, t) for t in self.before.lines)
            )
        return PriorChange(self.unit, self.kind, stream)


def path_to_module(path: str) -> str:
    p = Path(path)
    parts = list(p.parts)
    parts[-1] = p.stem
    if parts[-1] == "__init__":
        parts = parts[:-1]
    return ".".join(parts) if parts else "__init__"


def diff_commit(
    before: Mapping[str, str], after: Mapping[str, str]
) -> list[UnitChange]:
    """Tree-difference two snapshots (module name -> source) into unit changes.

    Units are matched by qualified name within their module; renames show
    up as a deletion plus an addition. Files that fail to parse on either
    side are skipped with a warning.
    """
    changes: list[UnitChange] = []
    for module in sorted(set(before) | set(after)):
        try:
            before_units = (
                {u.id: u for u in extract_units(before[module], module)}
                if module in before
                else {}
            )
            after_units = (
                {u.id: u for u in extract_units(after[module], module)}
                if module in after
                else {}
            )
        except ParseError as e:
            log.warning("skipping %s: %s", module, e)
            continue
        for uid in sorted(set(before_units) | set(after_units), key=str):
            b = before_units.get(uid)
            a = after_units.get(uid)
            if b is None:
                changes.append(UnitChange(ADDED, uid, after=a))
            elif a is None:
                changes.append(UnitChange(DELETED, uid, before=b))
            elif b.lines != a.lines:
                d = line_diff(list(b.lines), list(a.lines))
                changes.append(UnitChange(MODIFIED, uid, before=b, after=a, diff=d))
    return changes


def _module_order(modules: Iterable[str], graph: ImportGraph) -> list[str]:
    """Topological order with imported modules first.

    Strongly connected components are collapsed; components and the
    modules inside them break ties lexicographically.
    """
    nodes = sorted(set(modules) | set(graph.nodes))
    deps: dict[str, set[str]] = {m: set() for m in nodes}
    for importer, imported in graph.edges:
        if importer in deps and imported in deps:
            deps[importer].add(imported)

    # iterative Tarjan SCC
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comp_of: dict[str, int] = {}
    comps: list[list[str]] = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(deps[root])))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(deps[nxt]))))
                    advanced = True
                    break
                elif nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                cid = len(comps)
                comps.append(sorted(comp))
                for w in comp:
                    comp_of[w] = cid

    comp_deps: dict[int, set[int]] = {i: set() for i in range(len(comps))}
    for importer, imported in graph.edges:
        if importer in comp_of and imported in comp_of:
            ci, cj = comp_of[importer], comp_of[imported]
            if ci != cj:
                comp_deps[ci].add(cj)

    # Kahn over components, imported-first, smallest representative first
    import heapq

    indeg = {i: 0 for i in comp_deps}
    rev: dict[int, set[int]] = {i: set() for i in comp_deps}
    for ci, targets in comp_deps.items():
        indeg[ci] = len(targets)
        for cj in targets:
            rev[cj].add(ci)
    ready = [(comps[i][0], i) for i, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        _, ci = heapq.heappop(ready)
        order.extend(comps[ci])
        for cj in rev[ci]:
            indeg[cj] -= 1
            if indeg[cj] == 0:
                heapq.heappush(ready, (comps[cj][0], cj))
    return order


def order_changes(
    changes: Sequence[UnitChange], graph: ImportGraph
) -> list[UnitChange]:
    """Order changes by file position and import relation.

    Within a module, changes sort by starting line (top to bottom);
    across modules, changes in imported modules come before those in the
    modules importing them.
    """
    by_module: dict[str, list[UnitChange]] = {}
    for c in changes:
        by_module.setdefault(c.unit.module, []).append(c)
    for group in by_module.values():
        group.sort(key=lambda c: (c.anchor_line(), str(c.unit)))
    ordered: list[UnitChange] = []
    for module in _module_order(by_module, graph):
        ordered.extend(by_module.get(module, []))
    return ordered


def _padded_instance_parts(change: UnitChange):
    before_lines = list(change.before.lines) + [SENTINEL]
    after_lines = list(change.after.lines) + [SENTINEL]
    diff = normalize_diff_tail(line_diff(before_lines, after_lines))
    return diff_to_target_edit(diff)


def make_instances(
    ordered: Sequence[UnitChange],
    before_snapshot: Mapping[str, str],
    project: str,
    commit: str,
) -> list[ProblemInstance]:
    """One instance per modification, with all earlier changes as context.

    Unit additions and deletions never become targets but stay visible as
    context. The edit region covers the whole unit (padded with one
    trailing blank line so appends at the end stay representable).
    """
    index = ProjectIndex(before_snapshot)
    prior: list[PriorChange] = []
    out: list[ProblemInstance] = []
    for change in ordered:
        if change.kind == MODIFIED:
            unit_lines, region, ground_truth = _padded_instance_parts(change)
            doc = build_signature_doc(change.before, index).render()
            out.append(
                ProblemInstance(
                    query=tuple(unit_lines),
                    region=region,
                    prior_changes=tuple(prior),
                    signature_doc=doc,
                    ground_truth=ground_truth,
                    provenance=Provenance(project, commit, change.unit),
                )
            )
        prior.append(change.to_prior())
    return out


# --- multi-round synthesis ----------------------------------------------------


@dataclass(frozen=True)
class _TaggedRow:
    status: LineStatus
    text: str
    from_edit: bool  # introduced by the ground truth (vs already in the query)


def _tagged_rows(instance: ProblemInstance) -> list[_TaggedRow]:
    rows: list[_TaggedRow] = []
    region, edit = instance.region, instance.ground_truth
    for i, sl in enumerate(instance.query, start=1):
        entry = edit.entries.get(i - region.a + 1, EditEntry()) if (
            region.a <= i <= region.a + region.n
        ) else EditEntry()
        rows.extend(_TaggedRow(LineStatus.ADD, t, True) for t in entry.insertions)
        if entry.delete and sl.status is LineStatus.EMPTY:
            rows.append(_TaggedRow(LineStatus.DEL, sl.text, True))
        else:
            rows.append(_TaggedRow(sl.status, sl.text, False))
    return rows


def _edit_groups(rows: list[_TaggedRow]) -> list[list[int]]:
    """Group consecutive edit-introduced rows, pairing each deletion with
    its replacing addition; a replacement never splits across groups."""
    groups: list[list[int]] = []
    i = 0
    while i < len(rows):
        if not rows[i].from_edit:
            i += 1
            continue
        start = i
        while i < len(rows) and rows[i].from_edit:
            i += 1
        dels = [k for k in range(start, i) if rows[k].status is LineStatus.DEL]
        adds = [k for k in range(start, i) if rows[k].status is LineStatus.ADD]
        paired = min(len(dels), len(adds))
        for k in range(paired):
            groups.append(sorted([dels[k], adds[k]]))
        for k in dels[paired:]:
            groups.append([k])
        for k in adds[paired:]:
            groups.append([k])
    groups.sort(key=lambda g: g[0])
    return groups


def _rebuild(rows: list[_TaggedRow], residual: set[int]) -> tuple[list[StatusedLine], TargetEdit]:
    """Inline all edit rows except `residual` into the query; re-key the
    residual rows as the new ground truth."""
    query: list[StatusedLine] = []
    entries: dict[int, EditEntry] = {}
    pending: list[str] = []

    def attach(delete: bool):
        k = len(query)  # placeholder of the row just appended (region starts at 1)
        if pending or delete:
            prev = entries.get(k, EditEntry())
            entries[k] = EditEntry(prev.insertions + tuple(pending), delete or prev.delete)
            pending.clear()

    for idx, row in enumerate(rows):
        if row.from_edit and idx in residual:
            if row.status is LineStatus.ADD:
                pending.append(row.text)
            else:
                query.append(StatusedLine(LineStatus.EMPTY, row.text))
                attach(True)
        else:
            query.append(StatusedLine(row.status, row.text))
            attach(False)
    if pending:
        raise ValueError("residual additions past the last line")
    return query, TargetEdit(entries)


def synthesize_multiround(
    instance: ProblemInstance, rng: random.Random
) -> ProblemInstance:
    """Inline a random subset of the ground-truth changes into the query.

    A uniformly sampled non-empty proper subset of the change groups
    stays as the prediction target; the rest appear in the query as
    already-performed (statused) changes. Deterministic for a given rng
    state.
    """
    if instance.ground_truth.line_change_count() < 2:
        raise NotEligible("needs at least two changed lines")
    rows = _tagged_rows(instance)
    groups = _edit_groups(rows)
    if len(groups) < 2:
        raise NotEligible("needs at least two change groups")
    mask = rng.randrange(1, (1 << len(groups)) - 1)
    residual: set[int] = set()
    for bit, group in enumerate(groups):
        if mask >> bit & 1:
            residual.update(group)
    query, ground_truth = _rebuild(rows, residual)
    return ProblemInstance(
        query=tuple(query),
        region=EditRegion.full(len(query)),
        prior_changes=instance.prior_changes,
        signature_doc=instance.signature_doc,
        ground_truth=ground_truth,
        provenance=instance.provenance,
    )


def make_completion_instances(
    instances: Iterable[ProblemInstance],
) -> list[CompletionInstance]:
    """Turn each instance into a one-line completion problem.

    The last changed line becomes the completion target: for a modified
    line its old version is shown deleted and the new version is the
    target; a trailing deletion discards the instance. All earlier
    changes are inlined into the query, and a plain-text (changes
    applied) form is emitted alongside for change-unaware predictors.
    """
    out: list[CompletionInstance] = []
    for inst in instances:
        rows = _tagged_rows(inst)
        edit_rows = [i for i, r in enumerate(rows) if r.from_edit]
        if not edit_rows:
            continue
        last = edit_rows[-1]
        if rows[last].status is not LineStatus.ADD:
            continue  # a trailing deletion is discarded
        group = next(g for g in _edit_groups(rows) if last in g)
        kind = MODIFIED if len(group) > 1 else ADDED
        query, _ = _rebuild(rows, {last})
        # every row except `last` lands in the rebuilt query in order, so
        # the target inserts before the query row built from rows[last+1]
        insert_at = last + 1
        visible = [sl.text for sl in query if sl.status is not LineStatus.DEL]
        visible_before = [
            sl.text for sl in query[: insert_at - 1] if sl.status is not LineStatus.DEL
        ]
        prefix = "\n".join(visible_before)
        out.append(
            CompletionInstance(
                query=tuple(query),
                region=EditRegion(insert_at, 0),
                target=rows[last].text,
                plain_prefix=prefix + ("\n" if prefix else ""),
                plain_suffix="\n".join(visible[len(visible_before) :]),
                change_kind=kind,
                provenance=inst.provenance,
            )
        )
    return out


# --- dataset statistics --------------------------------------------------------


@dataclass(frozen=True)
class TokenStats:
    median: float
    mean: float
    max: int
    frac_at_cap: float
    cap: int

    @staticmethod
    def of(counts: Sequence[int], cap: int) -> "TokenStats":
        if not counts:
            return TokenStats(0, 0.0, 0, 0.0, cap)
        capped = [min(c, cap) for c in counts]
        return TokenStats(
            median=statistics.median(capped),
            mean=statistics.fmean(capped),
            max=max(capped),
            frac_at_cap=sum(1 for c in counts if c >= cap) / len(counts),
            cap=cap,
        )


@dataclass(frozen=True)
class DatasetStats:
    projects: int
    commits: int
    modified_files: int
    modified_functions: int
    modified_lines: int
    added_units: int
    deleted_units: int
    instances: int
    query_tokens: TokenStats
    output_tokens: TokenStats
    prev_change_tokens: TokenStats
    signature_tokens: TokenStats


QUERY_CAP = 1024
OUTPUT_CAP = 512
PREV_CHANGE_CAP = 16384
SIGNATURE_CAP = 15872


def dataset_stats(
    instances: Sequence[ProblemInstance],
    tokenizer: Tokenizer,
    changes: Sequence[tuple[str, str, UnitChange]] | None = None,
) -> DatasetStats:
    """Corpus counts and token-count distributions.

    Counts come from the full change log when provided (mining keeps it);
    otherwise they are derived from the instances alone and the
    added/deleted unit counts are zero.
    """
    query_counts: list[int] = []
    output_counts: list[int] = []
    prev_counts: list[int] = []
    sig_counts: list[int] = []
    for inst in instances:
        query_counts.append(inst.query_stream().token_count(tokenizer))
        from .encoding import enc_output

        output_counts.append(
            enc_output(inst.ground_truth, inst.region).token_count(tokenizer)
        )
        prev_counts.append(
            sum(pc.stream.token_count(tokenizer) for pc in inst.prior_changes)
        )
        sig_counts.append(
            sum(tokenizer.count(t) + 1 for t in inst.signature_doc.split("\n"))
            if inst.signature_doc
            else 0
        )

    if changes is not None:
        projects = len({p for p, _, _ in changes})
        commits = len({(p, c) for p, c, _ in changes})
        modified = [(p, c, ch) for p, c, ch in changes if ch.kind == MODIFIED]
        modified_files = len({(p, c, ch.unit.module) for p, c, ch in modified})
        modified_functions = sum(1 for _, _, ch in modified if ch.unit.kind == FUNCTION)
        modified_lines = sum(ch.diff.changed_line_count() for _, _, ch in modified)
        added_units = sum(1 for _, _, ch in changes if ch.kind == ADDED)
        deleted_units = sum(1 for _, _, ch in changes if ch.kind == DELETED)
    else:
        projects = len({i.provenance.project for i in instances})
        commits = len({(i.provenance.project, i.provenance.commit) for i in instances})
        modified_files = len(
            {
                (i.provenance.project, i.provenance.commit, i.provenance.unit.module)
                for i in instances
            }
        )
        modified_functions = sum(
            1 for i in instances if i.provenance.unit.kind == FUNCTION
        )
        modified_lines = sum(i.ground_truth.line_change_count() for i in instances)
        added_units = deleted_units = 0

    return DatasetStats(
        projects=projects,
        commits=commits,
        modified_files=modified_files,
        modified_functions=modified_functions,
        modified_lines=modified_lines,
        added_units=added_units,
        deleted_units=deleted_units,
        instances=len(instances),
        query_tokens=TokenStats.of(query_counts, QUERY_CAP),
        output_tokens=TokenStats.of(output_counts, OUTPUT_CAP),
        prev_change_tokens=TokenStats.of(prev_counts, PREV_CHANGE_CAP),
        signature_tokens=TokenStats.of(sig_counts, SIGNATURE_CAP),
    )


# --- git walking ----------------------------------------------------------------


@dataclass
class MiningResult:
    instances: list[ProblemInstance] = field(default_factory=list)
    changes: list[tuple[str, str, UnitChange]] = field(default_factory=list)
    commits_walked: int = 0


def _git(repo: Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
        errors="replace",
        check=True,
    )
    return proc.stdout


def _snapshot(repo: Path, rev: str, blob_cache: dict[str, str]) -> dict[str, str]:
    out: dict[str, str] = {}
    listing = _git(repo, "ls-tree", "-r", rev)
    for row in listing.splitlines():
        meta, path = row.split("\t", 1)
        parts = meta.split()
        if len(parts) != 3 or parts[1] != "blob" or not path.endswith(".py"):
            continue
        sha = parts[2]
        text = blob_cache.get(sha)
        if text is None:
            text = _git(repo, "cat-file", "blob", sha)
            blob_cache[sha] = text
        out[path_to_module(path)] = text
    return out


def mine_repo(
    repo: Path, project: str, max_commits: int = 1000
) -> MiningResult:
    """Walk a repository's first-parent history, newest commits first up
    to the cap, and mine each non-merge commit in chronological order."""
    result = MiningResult()
    revs = _git(repo, "rev-list", "--first-parent", "HEAD").split()
    pairs: list[tuple[str, str]] = []  # (parent, child)
    for child, parent in zip(revs, revs[1:]):
        parent_list = _git(repo, "rev-list", "--parents", "-n", "1", child).split()
        if len(parent_list) != 2:
            continue  # merge or root
        pairs.append((parent, child))
        if len(pairs) >= max_commits:
            break
    pairs.reverse()

    blob_cache: dict[str, str] = {}
    for parent, child in pairs:
        before = _snapshot(repo, parent, blob_cache)
        after = _snapshot(repo, child, blob_cache)
        changes = diff_commit(before, after)
        if not changes:
            continue
        result.commits_walked += 1
        merged = dict(before)
        merged.update(after)
        ordered = order_changes(changes, import_graph(merged))
        result.instances.extend(make_instances(ordered, before, project, child))
        result.changes.extend((project, child, c) for c in ordered)
    return result


def mine_repos(repos_dir: Path, max_commits: int = 1000) -> MiningResult:
    """Mine every git repository directly under repos_dir, in name order."""
    result = MiningResult()
    if (repos_dir / ".git").exists() or (repos_dir / "HEAD").exists():
        repo_paths = [repos_dir]
    else:
        repo_paths = sorted(
            p
            for p in repos_dir.iterdir()
            if p.is_dir() and ((p / ".git").exists() or (p / "HEAD").exists())
        )
    for repo in repo_paths:
        sub = mine_repo(repo, repo.name, max_commits=max_commits)
        result.instances.extend(sub.instances)
        result.changes.extend(sub.changes)
        result.commits_walked += sub.commits_walked
    return result
