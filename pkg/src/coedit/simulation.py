"""Multi-round editing simulation driven by ground-truth changes.

Each round the oracle proposes an edit; line changes that exactly match
the remaining ground truth are applied for free, and when nothing
matches the user performs the first remaining change by hand (charged at
its editing cost). Rounds repeat until all changes land or the round
limit is reached; changes left at the limit are charged as manual work.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .encoding import EditEntry, EditRegion, TargetEdit
from .instances import ProblemInstance, Provenance
from .linediff import LineStatus, StatusedLine
from .metrics import (
    EditCostReport,
    GainReport,
    KeystrokeParams,
    keystroke_cost,
    levenshtein,
    total_gain,
)
from .oracles import EpisodeView, Oracle, OracleFailure

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 6


@dataclass(frozen=True)
class AcceptedChange:
    placeholder: int
    kind: str  # "insert" | "delete"
    lines: tuple[str, ...] = ()


@dataclass(frozen=True)
class RoundLog:
    index: int
    suggested: int  # line changes proposed by the oracle
    accepted: tuple[AcceptedChange, ...]
    manual: AcceptedChange | None
    manual_cost: EditCostReport


@dataclass(frozen=True)
class SimulationResult:
    provenance: Provenance
    rounds: int
    logs: tuple[RoundLog, ...]
    completed: bool
    ground_truth_cost: EditCostReport
    gains: GainReport
    single_round_gains: GainReport
    final_text: str


class _State:
    """Mutable episode state: query rows plus remaining per-row changes.

    The edit region always spans every row, so placeholder k is simply
    the 1-based row index.
    """

    def __init__(self, rows: Sequence[StatusedLine], truth: TargetEdit):
        self.rows = list(rows)
        self.truth: dict[int, EditEntry] = dict(truth.entries)

    def clone(self) -> "_State":
        return _State(list(self.rows), TargetEdit(dict(self.truth)))

    def visible_text(self) -> str:
        return "\n".join(
            sl.text for sl in self.rows if sl.status is not LineStatus.DEL
        )

    def remaining(self) -> int:
        return sum(e.line_change_count() for e in self.truth.values())

    def view(self, template: ProblemInstance) -> EpisodeView:
        instance = replace(
            template,
            query=tuple(self.rows),
            region=EditRegion.full(len(self.rows)),
            ground_truth=TargetEdit(dict(self.truth)),
        )
        return EpisodeView(instance=instance, remaining_truth=instance.ground_truth)

    # --- applying changes -----------------------------------------------

    def _shift_keys(self, at: int, by: int) -> None:
        self.truth = {
            (k + by if k >= at else k): e for k, e in self.truth.items()
        }

    def apply_insertions(self, k: int, count: int) -> None:
        entry = self.truth[k]
        texts = entry.insertions[:count]
        rest = entry.insertions[count:]
        for offset, text in enumerate(texts):
            self.rows.insert(k - 1 + offset, StatusedLine(LineStatus.ADD, text))
        remaining = EditEntry(rest, entry.delete)
        del self.truth[k]
        self._shift_keys(k, count)
        if not remaining.empty:
            self.truth[k + count] = remaining

    def apply_deletion(self, k: int) -> None:
        entry = self.truth[k]
        sl = self.rows[k - 1]
        self.rows[k - 1] = StatusedLine(LineStatus.DEL, sl.text)
        remaining = EditEntry(entry.insertions, False)
        del self.truth[k]
        if not remaining.empty:
            self.truth[k] = remaining

    def first_remaining(self) -> AcceptedChange:
        k = min(self.truth)
        entry = self.truth[k]
        if entry.insertions:
            return AcceptedChange(k, "insert", (entry.insertions[0],))
        return AcceptedChange(k, "delete")

    def apply_change(self, change: AcceptedChange) -> None:
        if change.kind == "insert":
            self.apply_insertions(change.placeholder, len(change.lines))
        else:
            self.apply_deletion(change.placeholder)


def match_prediction(
    prediction: TargetEdit, truth: dict[int, EditEntry]
) -> list[AcceptedChange]:
    """Line changes of the prediction that exactly match the ground truth.

    Insertions match by longest common prefix of the per-placeholder
    insertion lists; deletions match by flag. Matches are returned in
    descending placeholder order so they can be applied without
    re-keying each other.
    """
    matches: list[AcceptedChange] = []
    for k, predicted in prediction.entries.items():
        actual = truth.get(k)
        if actual is None:
            continue
        common = 0
        for mine, theirs in zip(predicted.insertions, actual.insertions):
            if mine != theirs:
                break
            common += 1
        if common:
            matches.append(AcceptedChange(k, "insert", actual.insertions[:common]))
        if predicted.delete and actual.delete:
            matches.append(AcceptedChange(k, "delete"))
    matches.sort(key=lambda m: (-m.placeholder, m.kind))
    return matches


def _charged_apply(state: _State, change: AcceptedChange, params: KeystrokeParams) -> EditCostReport:
    before = state.visible_text()
    state.apply_change(change)
    after = state.visible_text()
    return EditCostReport(
        lines=len(change.lines) if change.kind == "insert" else 1,
        levenshtein=levenshtein(before, after),
        keystrokes=keystroke_cost(before, after, params),
    )


def _drain_manually(state: _State, params: KeystrokeParams) -> list[EditCostReport]:
    costs = []
    while state.truth:
        costs.append(_charged_apply(state, state.first_remaining(), params))
    return costs


def run_round(state: _State, session, template: ProblemInstance, index: int,
              params: KeystrokeParams) -> RoundLog:
    """One suggest/accept/manual-fallback round against live state."""
    try:
        prediction = session.predict(state.view(template))
    except OracleFailure as e:
        log.warning("oracle failure in round %d: %s", index, e)
        prediction = TargetEdit({})
    suggested = prediction.line_change_count()
    matches = match_prediction(prediction, state.truth)
    manual = None
    manual_cost = EditCostReport.zero()
    if matches:
        for m in matches:
            state.apply_change(m)
    elif state.truth:
        manual = state.first_remaining()
        manual_cost = _charged_apply(state, manual, params)
    return RoundLog(
        index=index,
        suggested=suggested,
        accepted=tuple(matches),
        manual=manual,
        manual_cost=manual_cost,
    )


def run_episode(
    instance: ProblemInstance,
    oracle: Oracle,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    params: KeystrokeParams = KeystrokeParams(),
) -> SimulationResult:
    """Simulate one instance to completion or the round limit.

    Gains compare the ground truth's one-shot editing cost against the
    summed cost of manual edits; changes still pending at the round
    limit are charged as manual work so truncation cannot inflate gains.
    A single-round summary (round one, then everything else by hand) is
    computed along the way.
    """
    state = _State(instance.query, instance.ground_truth)
    start_text = state.visible_text()
    final_text = instance.final_text()
    gt_cost = EditCostReport(
        lines=instance.ground_truth.line_change_count(),
        levenshtein=levenshtein(start_text, final_text),
        keystrokes=keystroke_cost(start_text, final_text, params),
    )

    session = oracle.session(instance)
    logs: list[RoundLog] = []
    manual_costs: list[EditCostReport] = []
    single_round_costs: list[EditCostReport] | None = None
    try:
        rounds = 0
        while rounds < max_rounds and state.truth:
            rounds += 1
            entry = run_round(state, session, instance, rounds, params)
            logs.append(entry)
            if entry.manual is not None:
                manual_costs.append(entry.manual_cost)
            if rounds == 1:
                probe = state.clone()
                single_round_costs = (
                    [entry.manual_cost] if entry.manual is not None else []
                )
                single_round_costs.extend(_drain_manually(probe, params))
        completed = not state.truth
        if state.truth:
            manual_costs.extend(_drain_manually(state, params))
    finally:
        session.close()

    if state.visible_text() != final_text:
        raise AssertionError(
            f"episode for {instance.provenance} did not reproduce the target text"
        )
    if single_round_costs is None:  # no round ran: everything was residual
        single_round_costs = list(manual_costs)
    return SimulationResult(
        provenance=instance.provenance,
        rounds=rounds,
        logs=tuple(logs),
        completed=completed,
        ground_truth_cost=gt_cost,
        gains=total_gain(gt_cost, manual_costs),
        single_round_gains=total_gain(gt_cost, single_round_costs),
        final_text=final_text,
    )


def run_simulation(
    instances: Sequence[ProblemInstance],
    oracle: Oracle,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    params: KeystrokeParams = KeystrokeParams(),
    jobs: int = 1,
) -> list[SimulationResult]:
    """Run every instance; results come back in instance order."""
    if jobs <= 1:
        return [run_episode(i, oracle, max_rounds, params) for i in instances]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(run_episode, i, oracle, max_rounds, params)
            for i in instances
        ]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class Summary:
    episodes: int
    mean_rounds: float
    completed: int
    lines_gain_pct: float
    levenshtein_gain_pct: float
    keystrokes_gain_pct: float
    single_round: dict

    def to_json(self) -> dict:
        return {
            "episodes": self.episodes,
            "mean_rounds": self.mean_rounds,
            "completed": self.completed,
            "lines_gain_pct": self.lines_gain_pct,
            "levenshtein_gain_pct": self.levenshtein_gain_pct,
            "keystrokes_gain_pct": self.keystrokes_gain_pct,
            "single_round": self.single_round,
        }


def _mean_pct(pairs: Iterable[tuple[int, int]]) -> float:
    pcts = [100.0 * gain / cost for gain, cost in pairs if cost > 0]
    return sum(pcts) / len(pcts) if pcts else 0.0


def aggregate(results: Sequence[SimulationResult]) -> Summary:
    """Average percentage gains per metric plus the mean round count."""
    if not results:
        return Summary(0, 0.0, 0, 0.0, 0.0, 0.0, {
            "lines_gain_pct": 0.0,
            "levenshtein_gain_pct": 0.0,
            "keystrokes_gain_pct": 0.0,
        })
    single = {
        "lines_gain_pct": _mean_pct(
            (r.single_round_gains.lines, r.ground_truth_cost.lines) for r in results
        ),
        "levenshtein_gain_pct": _mean_pct(
            (r.single_round_gains.levenshtein, r.ground_truth_cost.levenshtein)
            for r in results
        ),
        "keystrokes_gain_pct": _mean_pct(
            (r.single_round_gains.keystrokes, r.ground_truth_cost.keystrokes)
            for r in results
        ),
    }
    return Summary(
        episodes=len(results),
        mean_rounds=sum(r.rounds for r in results) / len(results),
        completed=sum(1 for r in results if r.completed),
        lines_gain_pct=_mean_pct(
            (r.gains.lines, r.ground_truth_cost.lines) for r in results
        ),
        levenshtein_gain_pct=_mean_pct(
            (r.gains.levenshtein, r.ground_truth_cost.levenshtein) for r in results
        ),
        keystrokes_gain_pct=_mean_pct(
            (r.gains.keystrokes, r.ground_truth_cost.keystrokes) for r in results
        ),
        single_round=single,
    )


def result_to_json(result: SimulationResult) -> dict:
    return {
        "project": result.provenance.project,
        "commit": result.provenance.commit,
        "unit": str(result.provenance.unit),
        "rounds": result.rounds,
        "completed": result.completed,
        "ground_truth_cost": vars(result.ground_truth_cost),
        "gains": vars(result.gains),
        "single_round_gains": vars(result.single_round_gains),
        "logs": [
            {
                "round": entry.index,
                "suggested": entry.suggested,
                "accepted": [
                    {"placeholder": a.placeholder, "kind": a.kind, "lines": list(a.lines)}
                    for a in entry.accepted
                ],
                "manual": (
                    {
                        "placeholder": entry.manual.placeholder,
                        "kind": entry.manual.kind,
                        "lines": list(entry.manual.lines),
                    }
                    if entry.manual
                    else None
                ),
                "manual_cost": vars(entry.manual_cost),
            }
            for entry in result.logs
        ],
    }
