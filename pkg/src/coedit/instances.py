"""Problem-instance data model and the line-delimited dataset formats.

Instance files hold one JSON object per line with all token streams in
their canonical text rendering (schema tag "coedit/1"; one-line
completion datasets use "coedit-completion/1").
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .analysis import UnitId
from .encoding import (
    EditRegion,
    InputStream,
    TargetEdit,
    apply_edit,
    enc_input,
    enc_output,
    parse_input,
    parse_output,
)
from .linediff import LineStatus, StatusedLine

SCHEMA = "coedit/1"
COMPLETION_SCHEMA = "coedit-completion/1"

ADDED = "added"
DELETED = "deleted"
MODIFIED = "modified"


class DataError(Exception):
    pass


@dataclass(frozen=True)
class Provenance:
    project: str
    commit: str
    unit: UnitId


@dataclass(frozen=True)
class PriorChange:
    """A contextual change: statused rows of an earlier unit edit."""

    unit: UnitId
    kind: str  # added | deleted | modified
    stream: InputStream


@dataclass(frozen=True)
class ProblemInstance:
    query: tuple[StatusedLine, ...]
    region: EditRegion
    prior_changes: tuple[PriorChange, ...]
    signature_doc: str
    ground_truth: TargetEdit
    provenance: Provenance

    def query_stream(self) -> InputStream:
        return enc_input(self.query, self.region)

    def statuses(self) -> list[LineStatus]:
        return [sl.status for sl in self.query]

    def current_text(self) -> str:
        """The visible (post-inlined-changes) text of the query unit."""
        return "\n".join(
            sl.text for sl in self.query if sl.status is not LineStatus.DEL
        )

    def final_text(self) -> str:
        """Unit text after the ground-truth edit is applied."""
        return "\n".join(apply_edit(self.query, self.region, self.ground_truth).after())


@dataclass(frozen=True)
class CompletionInstance:
    """One-line completion problem derived from an edit instance."""

    query: tuple[StatusedLine, ...]
    region: EditRegion
    target: str
    plain_prefix: str
    plain_suffix: str
    change_kind: str  # added | modified
    provenance: Provenance

    def ground_truth(self) -> TargetEdit:
        from .encoding import EditEntry

        return TargetEdit({1: EditEntry((self.target,), False)})


def _stream_rows(stream: InputStream) -> list[StatusedLine]:
    return [StatusedLine(r.status, r.text) for r in stream.rows]


def instance_to_json(inst: ProblemInstance) -> dict:
    return {
        "schema": SCHEMA,
        "project": inst.provenance.project,
        "commit": inst.provenance.commit,
        "unit": {
            "module": inst.provenance.unit.module,
            "qualname": inst.provenance.unit.qualname,
            "kind": inst.provenance.unit.kind,
        },
        "query": inst.query_stream().render(),
        "region": {"a": inst.region.a, "n": inst.region.n},
        "prior_changes": [
            {
                "unit": {
                    "module": pc.unit.module,
                    "qualname": pc.unit.qualname,
                    "kind": pc.unit.kind,
                },
                "kind": pc.kind,
                "stream": pc.stream.render(),
            }
            for pc in inst.prior_changes
        ],
        "signature_doc": inst.signature_doc,
        "ground_truth": enc_output(inst.ground_truth, inst.region).render(),
    }


def instance_from_json(obj: dict) -> ProblemInstance:
    if obj.get("schema") != SCHEMA:
        raise DataError(f"unsupported schema: {obj.get('schema')!r}")
    region = EditRegion(obj["region"]["a"], obj["region"]["n"])
    query_stream = parse_input(obj["query"])
    query = tuple(_stream_rows(query_stream))
    statuses = [sl.status for sl in query]
    ground_truth = parse_output(obj["ground_truth"], statuses, region)
    priors = tuple(
        PriorChange(
            UnitId(pc["unit"]["module"], pc["unit"]["qualname"], pc["unit"]["kind"]),
            pc["kind"],
            parse_input(pc["stream"]),
        )
        for pc in obj.get("prior_changes", [])
    )
    unit = UnitId(obj["unit"]["module"], obj["unit"]["qualname"], obj["unit"]["kind"])
    return ProblemInstance(
        query=query,
        region=region,
        prior_changes=priors,
        signature_doc=obj.get("signature_doc", ""),
        ground_truth=ground_truth,
        provenance=Provenance(obj.get("project", ""), obj.get("commit", ""), unit),
    )


def completion_to_json(inst: CompletionInstance) -> dict:
    return {
        "schema": COMPLETION_SCHEMA,
        "project": inst.provenance.project,
        "commit": inst.provenance.commit,
        "unit": {
            "module": inst.provenance.unit.module,
            "qualname": inst.provenance.unit.qualname,
            "kind": inst.provenance.unit.kind,
        },
        "query": enc_input(inst.query, inst.region).render(),
        "region": {"a": inst.region.a, "n": inst.region.n},
        "target": inst.target,
        "plain_prefix": inst.plain_prefix,
        "plain_suffix": inst.plain_suffix,
        "change_kind": inst.change_kind,
    }


def completion_from_json(obj: dict) -> CompletionInstance:
    if obj.get("schema") != COMPLETION_SCHEMA:
        raise DataError(f"unsupported schema: {obj.get('schema')!r}")
    region = EditRegion(obj["region"]["a"], obj["region"]["n"])
    query = tuple(_stream_rows(parse_input(obj["query"])))
    unit = UnitId(obj["unit"]["module"], obj["unit"]["qualname"], obj["unit"]["kind"])
    return CompletionInstance(
        query=query,
        region=region,
        target=obj["target"],
        plain_prefix=obj.get("plain_prefix", ""),
        plain_suffix=obj.get("plain_suffix", ""),
        change_kind=obj.get("change_kind", ""),
        provenance=Provenance(obj.get("project", ""), obj.get("commit", ""), unit),
    )


def write_instances(out: TextIO, instances: Iterable[ProblemInstance]) -> int:
    count = 0
    for inst in instances:
        out.write(json.dumps(instance_to_json(inst), ensure_ascii=False) + "\n")
        count += 1
    return count


def read_instances(fp: TextIO) -> Iterator[ProblemInstance]:
    for lineno, raw in enumerate(fp, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            yield instance_from_json(json.loads(raw))
        except (json.JSONDecodeError, KeyError) as e:
            raise DataError(f"line {lineno}: {e}") from e
