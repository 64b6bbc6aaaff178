"""Core data model: learning sets, trace logs, and the linkage graph.

File formats
------------
Dataset CSV      header ``id,f1,...,fn,class``; ``class`` is an integer
                 class index and 0 is the normal class.
Trace log CSV    header ``id,step,timestamp,f1,...,fn,class,action``; the
                 ``action`` field is empty exactly when ``class`` is 0.

All values are immutable after construction; every function here is pure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

NORMAL_CLASS = 0

FeatureVector = tuple[float, ...]


class CarlabError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(CarlabError):
    """An input file violates the documented format or an invariant."""


@dataclass(frozen=True)
class LearningSample:
    """One labeled object: opaque id, feature vector, class index."""

    object_id: str
    features: FeatureVector
    label: int

    def __post_init__(self) -> None:
        if not self.object_id:
            raise DataFormatError("object_id must be nonempty")
        if self.label < 0:
            raise DataFormatError(f"negative class index {self.label}")


@dataclass(frozen=True)
class LearningSet:
    """A labeled sample collection with n features.

    Labels run from 0 (the designated normal class) through
    ``deviated_count``; every class share must be nonempty.
    """

    samples: tuple[LearningSample, ...]
    n: int
    deviated_count: int
    mode: str  # "real" | "boolean"

    @property
    def m(self) -> int:
        return len(self.samples)

    def class_share(self, index: int) -> tuple[LearningSample, ...]:
        return tuple(s for s in self.samples if s.label == index)

    @staticmethod
    def build(samples: Sequence[LearningSample], mode: str = "real") -> "LearningSet":
        """Validate samples and derive the feature and class counts.

        Raises DataFormatError on inconsistent feature counts, empty class
        shares, or non-Boolean values in boolean mode.
        """
        mode = mode.lower()
        if mode not in ("real", "boolean"):
            raise DataFormatError(f"unknown mode {mode!r}")
        samples = tuple(samples)
        if not samples:
            raise DataFormatError("learning set has no samples")
        n = len(samples[0].features)
        if n == 0:
            raise DataFormatError("feature count must be positive")
        for s in samples:
            if len(s.features) != n:
                raise DataFormatError(
                    f"inconsistent feature count for {s.object_id!r}: "
                    f"expected {n}, got {len(s.features)}"
                )
            if mode == "boolean":
                for v in s.features:
                    if v not in (0.0, 1.0):
                        raise DataFormatError(
                            f"non-Boolean value {v!r} for {s.object_id!r}"
                        )
        deviated_count = max(s.label for s in samples)
        present = {s.label for s in samples}
        for i in range(deviated_count + 1):
            if i not in present:
                raise DataFormatError(f"empty class share {i}")
        return LearningSet(samples=samples, n=n, deviated_count=deviated_count, mode=mode)


@dataclass(frozen=True)
class TraceEvent:
    """One observation of an object: state, assigned class, applied action.

    ``applied_action`` is present exactly when the assigned class is
    deviated; no action follows a normal classification.
    """

    object_id: str
    step: int
    timestamp: float
    state: FeatureVector
    assigned_class: int
    applied_action: Optional[str] = None

    def __post_init__(self) -> None:
        if self.step < 0:
            raise DataFormatError("step must be nonnegative")
        if self.timestamp < 0:
            raise DataFormatError("timestamp must be nonnegative")
        if self.assigned_class == NORMAL_CLASS and self.applied_action is not None:
            raise DataFormatError(
                f"action present on a normal-class event ({self.object_id!r}, "
                f"step {self.step})"
            )
        if self.assigned_class != NORMAL_CLASS and self.applied_action is None:
            raise DataFormatError(
                f"missing action on deviated-class event ({self.object_id!r}, "
                f"step {self.step})"
            )


TraceMap = dict[str, tuple[TraceEvent, ...]]


@dataclass(frozen=True)
class GraphEdge:
    src: tuple[str, int]
    dst: tuple[str, int]
    action: str
    weight: Optional[float] = None


@dataclass(frozen=True)
class LinkageGraph:
    """Directed graph of object states with action-labeled edges.

    Vertices are keyed by (object_id, step) so equal states observed at
    different steps never alias.
    """

    vertices: Mapping[tuple[str, int], FeatureVector]
    edges: tuple[GraphEdge, ...]

    def __post_init__(self) -> None:
        for e in self.edges:
            if e.src not in self.vertices or e.dst not in self.vertices:
                raise DataFormatError(f"edge endpoint missing from vertex set: {e}")
            if not e.action:
                raise DataFormatError(f"edge without action label: {e}")


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"{where}: bad numeric value {text!r}") from None


def _parse_int(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataFormatError(f"{where}: bad integer value {text!r}") from None


def _check_feature_header(fields: Sequence[str]) -> int:
    n = len(fields)
    expected = [f"f{j}" for j in range(1, n + 1)]
    if list(fields) != expected:
        raise DataFormatError(f"bad feature columns {list(fields)!r}")
    return n


def load_learning_set(source: Union[str, Path], mode: str = "real") -> LearningSet:
    """Read a dataset CSV into a validated LearningSet."""
    path = Path(source)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 3 or header[0] != "id" or header[-1] != "class":
        raise DataFormatError(f"{path}: bad header {header!r}")
    n = _check_feature_header(header[1:-1])
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        where = f"{path}:{lineno}"
        if len(row) != n + 2:
            raise DataFormatError(f"{where}: malformed row, expected {n + 2} fields")
        feats = tuple(_parse_float(v, where) for v in row[1:-1])
        label = _parse_int(row[-1], where)
        samples.append(LearningSample(object_id=row[0], features=feats, label=label))
    return LearningSet.build(samples, mode=mode)


def save_learning_set(ls: LearningSet, dest: Union[str, Path]) -> None:
    """Write a dataset CSV that round-trips through load_learning_set."""
    path = Path(dest)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"f{j}" for j in range(1, ls.n + 1)] + ["class"])
        for s in ls.samples:
            writer.writerow([s.object_id] + [repr(v) for v in s.features] + [s.label])


def load_trace_log(source: Union[str, Path]) -> TraceMap:
    """Read a trace log CSV, grouped per object id.

    Within each object the events are sorted by step; steps must be
    consecutive from 0 and timestamps strictly increasing.
    """
    path = Path(source)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    if (
        len(header) < 6
        or header[:3] != ["id", "step", "timestamp"]
        or header[-2:] != ["class", "action"]
    ):
        raise DataFormatError(f"{path}: bad header {header!r}")
    n = _check_feature_header(header[3:-2])
    by_object: dict[str, list[TraceEvent]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        where = f"{path}:{lineno}"
        if len(row) != n + 5:
            raise DataFormatError(f"{where}: malformed row, expected {n + 5} fields")
        event = TraceEvent(
            object_id=row[0],
            step=_parse_int(row[1], where),
            timestamp=_parse_float(row[2], where),
            state=tuple(_parse_float(v, where) for v in row[3:-2]),
            assigned_class=_parse_int(row[-2], where),
            applied_action=row[-1] or None,
        )
        by_object.setdefault(event.object_id, []).append(event)
    traces: TraceMap = {}
    for object_id, events in by_object.items():
        events.sort(key=lambda e: e.step)
        for k, event in enumerate(events):
            if event.step != k:
                raise DataFormatError(
                    f"{path}: gap in step numbering for {object_id!r} "
                    f"(expected step {k}, got {event.step})"
                )
            if k > 0 and event.timestamp <= events[k - 1].timestamp:
                raise DataFormatError(
                    f"{path}: non-increasing timestamp for {object_id!r} at step {k}"
                )
        traces[object_id] = tuple(events)
    return traces


def save_trace_log(traces: Union[TraceMap, Iterable[TraceEvent]], dest: Union[str, Path]) -> None:
    """Write a trace log CSV that round-trips through load_trace_log."""
    grouped = group_traces(traces)
    n = None
    for events in grouped.values():
        for e in events:
            n = len(e.state)
            break
        if n is not None:
            break
    if n is None:
        raise DataFormatError("cannot save an empty trace log")
    path = Path(dest)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "step", "timestamp"]
            + [f"f{j}" for j in range(1, n + 1)]
            + ["class", "action"]
        )
        for object_id in sorted(grouped):
            for e in grouped[object_id]:
                writer.writerow(
                    [e.object_id, e.step, repr(e.timestamp)]
                    + [repr(v) for v in e.state]
                    + [e.assigned_class, e.applied_action or ""]
                )


def group_traces(traces: Union[TraceMap, Iterable[TraceEvent]]) -> TraceMap:
    """Normalize flat event iterables or per-object maps into a TraceMap."""
    if isinstance(traces, Mapping):
        return {k: tuple(v) for k, v in traces.items()}
    by_object: dict[str, list[TraceEvent]] = {}
    for event in traces:
        by_object.setdefault(event.object_id, []).append(event)
    return {k: tuple(sorted(v, key=lambda e: e.step)) for k, v in by_object.items()}


def build_linkage_graph(traces: Union[TraceMap, Iterable[TraceEvent]]) -> LinkageGraph:
    """Build the linkage graph: one vertex per (object, step) state, one
    action-labeled edge per consecutive event pair."""
    grouped = group_traces(traces)
    vertices: dict[tuple[str, int], FeatureVector] = {}
    edges: list[GraphEdge] = []
    for object_id in grouped:
        events = grouped[object_id]
        for e in events:
            vertices[(object_id, e.step)] = e.state
        for prev, nxt in zip(events, events[1:]):
            if prev.applied_action is None:
                raise DataFormatError(
                    f"no action recorded at non-terminal event "
                    f"({object_id!r}, step {prev.step})"
                )
            edges.append(
                GraphEdge(
                    src=(object_id, prev.step),
                    dst=(object_id, nxt.step),
                    action=prev.applied_action,
                )
            )
    return LinkageGraph(vertices=vertices, edges=tuple(edges))
