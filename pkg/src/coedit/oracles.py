"""Edit-prediction oracles: built-in baselines and the wire protocol client.

An oracle proposes a TargetEdit for the current query each round. Wire
oracles speak line-delimited JSON (protocol "coedit-oracle/1") over a
child process's standard streams or a TCP socket:

    handshake  {"proto": "coedit-oracle/1", "max_concurrency": N}
    request    {"id", "query", "references": [...], "region": {"a", "n"},
                "statuses": ["empty"|"add"|"del", ...]}
    response   {"id", "output": <canonical output text>} or {"id", "error"}
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

from .assembly import AssembledContext, assemble
from .encoding import (
    EditEntry,
    EncodingError,
    TargetEdit,
)
from .instances import ProblemInstance
from .linediff import LineStatus
from .tokenizers import Tokenizer

PROTO = "coedit-oracle/1"
DEFAULT_TIMEOUT = 30.0

_STATUS_NAMES = {LineStatus.EMPTY: "empty", LineStatus.ADD: "add", LineStatus.DEL: "del"}


class OracleFailure(Exception):
    """Malformed, mismatched, or timed-out oracle interaction."""


@dataclass(frozen=True)
class EpisodeView:
    """What an oracle may look at when predicting the next edit."""

    instance: ProblemInstance  # current query/region/context for this round
    remaining_truth: TargetEdit  # only simulation baselines may read this


class Oracle:
    """Base oracle: stateless per round unless a session holds state."""

    name = "oracle"

    def session(self, instance: ProblemInstance) -> "OracleSession":
        return OracleSession(self)

    def predict(self, view: EpisodeView) -> TargetEdit:
        raise NotImplementedError

    def close(self) -> None:
        pass


class OracleSession:
    def __init__(self, oracle: Oracle):
        self._oracle = oracle

    def predict(self, view: EpisodeView) -> TargetEdit:
        return self._oracle.predict(view)

    def close(self) -> None:
        pass


class NullOracle(Oracle):
    """Never suggests anything; a floor for the metrics."""

    name = "null"

    def predict(self, view: EpisodeView) -> TargetEdit:
        return TargetEdit({})


class GroundTruthOracle(Oracle):
    """Suggests exactly the remaining desired changes; an upper bound."""

    name = "truth"

    def predict(self, view: EpisodeView) -> TargetEdit:
        return view.remaining_truth


class EchoRetrievalOracle(Oracle):
    """Change-aware heuristic: re-applies changes seen in the context.

    For every still-unedited query line whose text was changed identically
    in some prior change, suggest that same deletion/replacement here.
    Replacement lines attach to the placeholder after the deleted line,
    mirroring how ground truths encode replacements.
    """

    name = "echo"

    def predict(self, view: EpisodeView) -> TargetEdit:
        recipes: dict[str, tuple[bool, tuple[str, ...]]] = {}
        for pc in view.instance.prior_changes:
            rows = pc.stream.rows
            i = 0
            while i < len(rows):
                if rows[i].status is not LineStatus.DEL:
                    i += 1
                    continue
                del_start = i
                while i < len(rows) and rows[i].status is LineStatus.DEL:
                    i += 1
                add_start = i
                while i < len(rows) and rows[i].status is LineStatus.ADD:
                    i += 1
                dels = rows[del_start:add_start]
                adds = tuple(r.text for r in rows[add_start:i])
                if len(dels) == 1:
                    recipes.setdefault(dels[0].text, (True, adds))
                elif not adds:
                    for r in dels:
                        recipes.setdefault(r.text, (True, ()))

        entries: dict[int, EditEntry] = {}
        region = view.instance.region
        query = view.instance.query
        for i, sl in enumerate(query, start=1):
            if sl.status is not LineStatus.EMPTY:
                continue
            recipe = recipes.get(sl.text)
            if recipe is None:
                continue
            delete, insertions = recipe
            k = i - region.a + 1
            if not 1 <= k <= region.placeholder_count:
                continue
            prev = entries.get(k, EditEntry())
            entries[k] = EditEntry(prev.insertions, delete or prev.delete)
            if insertions and k + 1 <= region.placeholder_count:
                nxt = entries.get(k + 1, EditEntry())
                entries[k + 1] = EditEntry(insertions + nxt.insertions, nxt.delete)
        return TargetEdit(entries)


# --- wire protocol -------------------------------------------------------------


def build_request(request_id: int, ctx: AssembledContext) -> dict:
    return {
        "id": request_id,
        "query": ctx.query.payload,
        "references": [b.payload for b in ctx.references],
        "region": {"a": ctx.query_region.a, "n": ctx.query_region.n},
        "statuses": [_STATUS_NAMES[sl.status] for sl in ctx.query_lines],
    }


class _LineTransport:
    """Blocking line reader/writer pair with per-read timeouts."""

    def __init__(self, write: Callable[[str], None], readline_queue: "queue.Queue[str | None]"):
        self._write = write
        self._lines = readline_queue

    def send(self, obj: dict) -> None:
        self._write(json.dumps(obj, ensure_ascii=False) + "\n")

    def recv(self, timeout: float) -> dict:
        try:
            raw = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise OracleFailure(f"timed out after {timeout}s") from None
        if raw is None:
            raise OracleFailure("oracle closed its output stream")
        try:
            return json.loads(raw)
        except json.JSONDecodeError as e:
            raise OracleFailure(f"bad protocol line: {raw!r}") from e


def _pump(stream, lines: "queue.Queue[str | None]") -> None:
    for raw in stream:
        raw = raw.strip()
        if raw:
            lines.put(raw)
    lines.put(None)


class WireOracle(Oracle):
    """Client side of coedit-oracle/1 over a subprocess or TCP socket."""

    def __init__(
        self,
        transport: _LineTransport,
        tokenizer: Tokenizer,
        budget: int = 16384,
        timeout: float = DEFAULT_TIMEOUT,
        name: str = "wire",
        on_close: Callable[[], None] | None = None,
    ):
        self.name = name
        self._transport = transport
        self._tokenizer = tokenizer
        self._budget = budget
        self._timeout = timeout
        self._on_close = on_close
        self._next_id = 0
        handshake = self._transport.recv(timeout)
        if handshake.get("proto") != PROTO:
            raise OracleFailure(f"unsupported protocol handshake: {handshake!r}")
        self.max_concurrency = int(handshake.get("max_concurrency", 1))
        self._gate = threading.Semaphore(max(1, self.max_concurrency))
        self._lock = threading.Lock()

    @classmethod
    def spawn(
        cls,
        argv: Sequence[str],
        tokenizer: Tokenizer,
        budget: int = 16384,
        timeout: float = DEFAULT_TIMEOUT,
    ) -> "WireOracle":
        proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        lines: queue.Queue[str | None] = queue.Queue()
        threading.Thread(target=_pump, args=(proc.stdout, lines), daemon=True).start()

        def write(text: str) -> None:
            try:
                proc.stdin.write(text)
                proc.stdin.flush()
            except (BrokenPipeError, ValueError) as e:
                raise OracleFailure("oracle process closed stdin") from e

        def on_close() -> None:
            try:
                proc.stdin.close()
            except Exception:
                pass
            proc.terminate()
            proc.wait(timeout=5)

        return cls(
            _LineTransport(write, lines),
            tokenizer,
            budget,
            timeout,
            name=f"cmd:{argv[0]}",
            on_close=on_close,
        )

    @classmethod
    def connect(
        cls,
        address: str,
        tokenizer: Tokenizer,
        budget: int = 16384,
        timeout: float = DEFAULT_TIMEOUT,
    ) -> "WireOracle":
        host, _, port = address.rpartition(":")
        sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=timeout)
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")
        lines: queue.Queue[str | None] = queue.Queue()
        threading.Thread(target=_pump, args=(reader, lines), daemon=True).start()

        def write(text: str) -> None:
            try:
                writer.write(text)
                writer.flush()
            except OSError as e:
                raise OracleFailure("oracle socket closed") from e

        def on_close() -> None:
            try:
                sock.close()
            except OSError:
                pass

        return cls(
            _LineTransport(write, lines),
            tokenizer,
            budget,
            timeout,
            name=f"tcp:{address}",
            on_close=on_close,
        )

    def predict(self, view: EpisodeView) -> TargetEdit:
        from .assembly import QueryOverflow

        try:
            ctx = assemble(view.instance, self._tokenizer, budget=self._budget)
        except QueryOverflow as e:
            raise OracleFailure(str(e)) from e
        with self._lock:
            self._next_id += 1
            request_id = self._next_id
            self._transport.send(build_request(request_id, ctx))
            response = self._transport.recv(self._timeout)
        if response.get("id") != request_id:
            raise OracleFailure(
                f"response id {response.get('id')!r} does not match request {request_id}"
            )
        if "error" in response:
            raise OracleFailure(f"oracle error: {response['error']}")
        output = response.get("output")
        if not isinstance(output, str):
            raise OracleFailure("response lacks an output field")
        statuses = [sl.status for sl in ctx.query_lines]
        try:
            edit = parse_wire_output(output, statuses, ctx)
        except EncodingError as e:
            raise OracleFailure(f"undecodable output: {e}") from e
        return edit

    def close(self) -> None:
        if self._on_close is not None:
            self._on_close()


def parse_wire_output(output: str, statuses, ctx: AssembledContext) -> TargetEdit:
    """Decode a response against the (possibly margin-trimmed) query.

    Placeholder keys are region-relative and margin trimming never drops
    region rows, so the decoded keys already address the full query's
    placeholders."""
    from .encoding import parse_output

    return parse_output(output, statuses, ctx.query_region)


def resolve_oracle(
    spec: str,
    tokenizer: Tokenizer,
    budget: int = 16384,
    timeout: float = DEFAULT_TIMEOUT,
) -> Oracle:
    """Oracle selector: null | truth | echo | cmd:<argv> | tcp:<host:port>."""
    if spec == "null":
        return NullOracle()
    if spec == "truth":
        return GroundTruthOracle()
    if spec == "echo":
        return EchoRetrievalOracle()
    if spec.startswith("cmd:"):
        import shlex

        return WireOracle.spawn(shlex.split(spec[4:]), tokenizer, budget, timeout)
    if spec.startswith("tcp:"):
        return WireOracle.connect(spec[4:], tokenizer, budget, timeout)
    raise ValueError(f"unknown oracle: {spec!r}")
