"""Class-transition analysis: order axioms, unique minimum, level diagram.

Observed transitions generate a step relation over classes; an action on
class x leading to class y is read as "y below x".  The order axioms are
evaluated on the reflexive-transitive closure of the step relation, since
raw step data is never reflexive.  The level diagram roots the normal
class at level 0 and assigns every other class its shortest directed
distance to it.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .core import (
    CarlabError,
    DataFormatError,
    NORMAL_CLASS,
    TraceEvent,
    TraceMap,
    group_traces,
)


@dataclass(frozen=True)
class Transition:
    src: int
    action: str
    dst: int
    count: int = 1

    def __post_init__(self) -> None:
        if self.src == NORMAL_CLASS:
            raise CarlabError("no action leaves the normal class")
        if self.count < 1:
            raise CarlabError("transition count must be >= 1")
        if not self.action:
            raise CarlabError("transition without action label")


@dataclass(frozen=True)
class ClassTransitionGraph:
    """Aggregated class-to-class transitions with action labels and counts.

    The normal class is always a member of ``classes`` even when no
    transition mentions it, so degenerate inputs still validate
    consistently.
    """

    classes: frozenset[int]
    edges: tuple[Transition, ...]

    @staticmethod
    def build(
        edges: Iterable[Transition], classes: Iterable[int] = ()
    ) -> "ClassTransitionGraph":
        edges = tuple(edges)
        members = {NORMAL_CLASS}
        members.update(classes)
        for e in edges:
            members.add(e.src)
            members.add(e.dst)
        return ClassTransitionGraph(classes=frozenset(members), edges=edges)

    def step_pairs(self) -> set[tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges}

    def nondeterministic(self) -> dict[tuple[int, str], tuple[int, ...]]:
        """(class, action) pairs observed with more than one destination."""
        dests: dict[tuple[int, str], set[int]] = {}
        for e in self.edges:
            dests.setdefault((e.src, e.action), set()).add(e.dst)
        return {
            key: tuple(sorted(v)) for key, v in sorted(dests.items()) if len(v) > 1
        }


@dataclass(frozen=True)
class PosetReport:
    reflexive: bool
    antisymmetric: bool
    transitive: bool
    closure_used: bool
    counterexample_cycle: Optional[tuple[int, ...]]

    @property
    def passed(self) -> bool:
        return self.reflexive and self.antisymmetric and self.transitive


@dataclass(frozen=True)
class MinimumReport:
    passed: bool
    minimal: tuple[int, ...]


@dataclass(frozen=True)
class LevelDiagram:
    """Classes leveled by shortest directed distance to the normal class."""

    levels: dict[int, int]
    complete: bool
    height: int
    unleveled: tuple[int, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationVerdict:
    passed: bool
    verdict: str  # "pass" | "pass-with-warnings" | "fail"
    poset: PosetReport
    minimum: MinimumReport
    diagram: LevelDiagram
    nondeterministic: dict[tuple[int, str], tuple[int, ...]]


def extract_relation(traces: Union[TraceMap, Iterable[TraceEvent]]) -> ClassTransitionGraph:
    """Aggregate consecutive trace events into class transitions."""
    grouped = group_traces(traces)
    counts: dict[tuple[int, str, int], int] = {}
    classes: set[int] = set()
    for object_id, events in grouped.items():
        for e in events:
            classes.add(e.assigned_class)
        for prev, nxt in zip(events, events[1:]):
            if prev.assigned_class == NORMAL_CLASS:
                raise CarlabError(
                    f"transition out of the normal class in trace {object_id!r} "
                    f"at step {prev.step}"
                )
            key = (prev.assigned_class, prev.applied_action, nxt.assigned_class)
            counts[key] = counts.get(key, 0) + 1
    edges = tuple(
        Transition(src=s, action=a, dst=d, count=c)
        for (s, a, d), c in sorted(counts.items())
    )
    return ClassTransitionGraph.build(edges, classes=classes)


def load_transition_records(source: Union[str, Path]) -> ClassTransitionGraph:
    """Read a transition CSV with header from_class,action,to_class,count."""
    path = Path(source)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["from_class", "action", "to_class", "count"]:
        raise DataFormatError(f"{path}: bad header")
    counts: dict[tuple[int, str, int], int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise DataFormatError(f"{path}:{lineno}: malformed row")
        try:
            src, dst, count = int(row[0]), int(row[2]), int(row[3])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: bad integer") from None
        key = (src, row[1], dst)
        counts[key] = counts.get(key, 0) + count
    edges = tuple(
        Transition(src=s, action=a, dst=d, count=c)
        for (s, a, d), c in sorted(counts.items())
    )
    return ClassTransitionGraph.build(edges)


def save_transition_records(g: ClassTransitionGraph, dest: Union[str, Path]) -> None:
    with Path(dest).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from_class", "action", "to_class", "count"])
        for e in sorted(g.edges, key=lambda e: (e.src, e.action, e.dst)):
            writer.writerow([e.src, e.action, e.dst, e.count])


def _reachability(g: ClassTransitionGraph) -> dict[int, set[int]]:
    """Reflexive-transitive closure as per-class reachable sets (BFS each)."""
    succ: dict[int, set[int]] = {c: set() for c in g.classes}
    for s, d in g.step_pairs():
        succ[s].add(d)
    reach: dict[int, set[int]] = {}
    for c in g.classes:
        seen = {c}
        queue = deque([c])
        while queue:
            cur = queue.popleft()
            for nxt in succ[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        reach[c] = seen
    return reach


def _find_cycle(g: ClassTransitionGraph, a: int, b: int) -> tuple[int, ...]:
    """A closed walk a -> ... -> b -> ... -> a in the step relation."""
    succ: dict[int, set[int]] = {c: set() for c in g.classes}
    for s, d in g.step_pairs():
        succ[s].add(d)

    def path(src: int, dst: int) -> list[int]:
        parent = {src: None}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            if cur == dst:
                out = [cur]
                while parent[cur] is not None:
                    cur = parent[cur]
                    out.append(cur)
                return out[::-1]
            for nxt in sorted(succ[cur]):
                if nxt not in parent:
                    parent[nxt] = cur
                    queue.append(nxt)
        raise CarlabError("internal: expected path missing")

    forward = path(a, b)
    back = path(b, a)
    return tuple(forward + back[1:])


def check_poset(g: ClassTransitionGraph) -> PosetReport:
    """Evaluate the order axioms on the closed step relation.

    Reflexivity and transitivity hold by closure construction; the
    substantive check is antisymmetry, which fails exactly when two
    distinct classes reach each other.
    """
    reach = _reachability(g)
    reflexive = all(c in reach[c] for c in g.classes)
    counterexample = None
    for a in sorted(g.classes):
        for b in sorted(reach[a]):
            if b != a and a in reach[b]:
                counterexample = _find_cycle(g, a, b)
                break
        if counterexample:
            break
    return PosetReport(
        reflexive=reflexive,
        antisymmetric=counterexample is None,
        transitive=True,
        closure_used=True,
        counterexample_cycle=counterexample,
    )


def has_unique_minimum(g: ClassTransitionGraph) -> MinimumReport:
    """Minimal elements of the closed relation; pass iff exactly the
    normal class.

    A class is minimal when nothing lies strictly below it, i.e. it
    reaches no other class.  Computed without assuming acyclicity so the
    answer matches direct evaluation on the closure for any input.
    """
    reach = _reachability(g)
    minimal = tuple(sorted(c for c in g.classes if reach[c] <= {c}))
    return MinimumReport(passed=minimal == (NORMAL_CLASS,), minimal=minimal)


def build_level_diagram(g: ClassTransitionGraph) -> LevelDiagram:
    """Level every class by shortest directed distance to the normal class.

    Produces warnings for edges that do not step exactly one level down;
    such edges break the strict level-by-level shape without making the
    leveling itself wrong.
    """
    pred: dict[int, set[int]] = {c: set() for c in g.classes}
    for s, d in g.step_pairs():
        pred[d].add(s)
    levels: dict[int, int] = {NORMAL_CLASS: 0}
    queue = deque([NORMAL_CLASS])
    while queue:
        cur = queue.popleft()
        for up in sorted(pred.get(cur, ())):
            if up not in levels:
                levels[up] = levels[cur] + 1
                queue.append(up)
    unleveled = tuple(sorted(c for c in g.classes if c not in levels))
    warnings = []
    for s, d in sorted(g.step_pairs()):
        if s in levels and d in levels and levels[s] - levels[d] != 1:
            warnings.append(
                f"edge {s}->{d} spans levels {levels[s]}->{levels[d]}"
            )
    return LevelDiagram(
        levels=levels,
        complete=not unleveled,
        height=max(levels.values(), default=0),
        unleveled=unleveled,
        warnings=tuple(warnings),
    )


def validate_to_normal(g: ClassTransitionGraph) -> ValidationVerdict:
    """Combined verdict: order axioms, unique normal minimum, complete
    diagram.  Nondeterministic (class, action) pairs downgrade a pass to
    pass-with-warnings and point at the stochastic workflow."""
    poset = check_poset(g)
    minimum = has_unique_minimum(g)
    diagram = build_level_diagram(g)
    nondet = g.nondeterministic()
    passed = poset.passed and minimum.passed and diagram.complete
    if not passed:
        verdict = "fail"
    elif nondet or diagram.warnings:
        verdict = "pass-with-warnings"
    else:
        verdict = "pass"
    return ValidationVerdict(
        passed=passed,
        verdict=verdict,
        poset=poset,
        minimum=minimum,
        diagram=diagram,
        nondeterministic=nondet,
    )


def distance_to_normal(diagram: LevelDiagram, class_index: int) -> int:
    if class_index not in diagram.levels:
        raise CarlabError(f"class {class_index} is not leveled")
    return diagram.levels[class_index]


def neighborhood(
    g: ClassTransitionGraph, depth: int, link_threshold: float = 0.0
) -> set[int]:
    """Accumulated neighborhood of the normal class up to ``depth``.

    A class joins layer d when it has at least one edge into the previous
    neighborhood (plus the normal class) and the share of its outgoing
    transition counts landing there is at least ``link_threshold``.
    Threshold 0 reduces to plain BFS layers.
    """
    if depth < 1:
        raise CarlabError("depth must be >= 1")
    if not 0.0 <= link_threshold <= 1.0:
        raise CarlabError("link_threshold must lie in [0, 1]")
    out_total: dict[int, int] = {}
    out_counts: dict[int, dict[int, int]] = {}
    for e in g.edges:
        out_total[e.src] = out_total.get(e.src, 0) + e.count
        out_counts.setdefault(e.src, {})[e.dst] = (
            out_counts.get(e.src, {}).get(e.dst, 0) + e.count
        )
    members: set[int] = set()
    for _ in range(depth):
        target = members | {NORMAL_CLASS}
        added = set()
        for c in sorted(g.classes - target):
            into = sum(cnt for d, cnt in out_counts.get(c, {}).items() if d in target)
            if into == 0:
                continue
            if out_total.get(c, 0) and into / out_total[c] >= link_threshold:
                added.add(c)
        if not added:
            break
        members |= added
    return members


def diagram_to_json(diagram: LevelDiagram) -> dict:
    return {
        "levels": {str(c): lvl for c, lvl in sorted(diagram.levels.items())},
        "complete": diagram.complete,
        "height": diagram.height,
        "unleveled": list(diagram.unleveled),
        "warnings": list(diagram.warnings),
    }


def diagram_from_json(data: dict) -> LevelDiagram:
    return LevelDiagram(
        levels={int(c): int(lvl) for c, lvl in data["levels"].items()},
        complete=bool(data["complete"]),
        height=int(data["height"]),
        unleveled=tuple(int(c) for c in data.get("unleveled", ())),
        warnings=tuple(data.get("warnings", ())),
    )


def verdict_to_json(v: ValidationVerdict) -> dict:
    cycle = v.poset.counterexample_cycle
    return {
        "passed": v.passed,
        "verdict": v.verdict,
        "poset": {
            "reflexive": v.poset.reflexive,
            "antisymmetric": v.poset.antisymmetric,
            "transitive": v.poset.transitive,
            "closure_used": v.poset.closure_used,
            "counterexample_cycle": None if cycle is None else list(cycle),
        },
        "minimum": {
            "passed": v.minimum.passed,
            "minimal": list(v.minimum.minimal),
        },
        "diagram": diagram_to_json(v.diagram),
        "nondeterministic": {
            f"{s}:{a}": list(dsts) for (s, a), dsts in v.nondeterministic.items()
        },
    }


def counter_class(diagram: LevelDiagram, fraction: float) -> frozenset[int]:
    """Classes at level >= ceil(fraction * height); the far half of the
    diagram when fraction is 1/2."""
    if not diagram.complete:
        raise CarlabError("counter_class requires a complete diagram")
    if diagram.height < 1:
        raise CarlabError("counter_class requires height >= 1")
    if not 0.0 < fraction <= 1.0:
        raise CarlabError("fraction must lie in (0, 1]")
    threshold = math.ceil(fraction * diagram.height - 1e-9)
    return frozenset(c for c, lvl in diagram.levels.items() if lvl >= threshold)
