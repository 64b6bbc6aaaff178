"""Forward classification-action recursion over a population of objects.

Each object is classified, then updated by the action bound to its
assigned class, until it reaches the normal class, stalls on an
indeterminate classification, revisits a (state, class) pair (a provable
cycle under deterministic dynamics), or exhausts the step budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from .boolcube import BooleanAction, vector_to_vertex, vertex_to_vector
from .core import (
    CarlabError,
    FeatureVector,
    LearningSample,
    NORMAL_CLASS,
    TraceEvent,
)
from .lcpr import ClassifyOutcome

Classifier = Callable[[FeatureVector], ClassifyOutcome]


@dataclass(frozen=True)
class ActionSpec:
    """Declarative binding of one action to one deviated class.

    Kinds: "affine" (per-coordinate x -> alpha * x + beta, alpha > 0),
    "table" and "rule" (Boolean-domain actions).
    """

    action_id: str
    class_index: int
    kind: str
    alpha: Optional[tuple[float, ...]] = None
    beta: Optional[tuple[float, ...]] = None
    n: Optional[int] = None
    table: Optional[dict[str, str]] = None
    exprs: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if self.class_index == NORMAL_CLASS:
            raise CarlabError("no action may be bound to the normal class")
        if self.kind == "affine":
            if self.alpha is None or self.beta is None:
                raise CarlabError("affine action needs alpha and beta")
            if len(self.alpha) != len(self.beta):
                raise CarlabError("alpha/beta length mismatch")
            for a in self.alpha:
                if a <= 0:
                    raise CarlabError(
                        "non-invertible affine component (slope must be positive)"
                    )
        elif self.kind in ("table", "rule"):
            if self.n is None:
                raise CarlabError(f"{self.kind} action needs n")
        else:
            raise CarlabError(f"unknown action kind {self.kind!r}")


@dataclass(frozen=True)
class CompiledAction:
    action_id: str
    fn: Callable[[FeatureVector], FeatureVector]


ActionTable = dict[int, CompiledAction]


@dataclass(frozen=True)
class StallInfo:
    kind: str  # "indeterminate" | "cycle" | "exhausted"
    step: int


@dataclass(frozen=True)
class CarRunReport:
    max_steps: int
    traces: dict[str, tuple[TraceEvent, ...]]
    converged: dict[str, bool]
    steps_to_normal: dict[str, Optional[int]]
    stalls: dict[str, StallInfo]
    fraction_normal_within: tuple[float, ...]
    mean_steps: Optional[float]


def compile_action(spec: ActionSpec) -> CompiledAction:
    if spec.kind == "affine":
        alpha, beta = spec.alpha, spec.beta

        def affine(x: FeatureVector) -> FeatureVector:
            if len(x) != len(alpha):
                raise CarlabError("affine action dimension mismatch")
            return tuple(a * v + b for a, v, b in zip(alpha, x, beta))

        return CompiledAction(action_id=spec.action_id, fn=affine)
    boolean = BooleanAction(
        action_id=spec.action_id, n=spec.n, table=spec.table, exprs=spec.exprs
    )

    def boolean_fn(x: FeatureVector) -> FeatureVector:
        return vertex_to_vector(boolean.apply(vector_to_vertex(x)))

    return CompiledAction(action_id=spec.action_id, fn=boolean_fn)


def register_actions(specs: Sequence[ActionSpec], deviated_count: int) -> ActionTable:
    """Validate that exactly one action binds each deviated class, then compile."""
    table: ActionTable = {}
    for spec in specs:
        if spec.class_index in table:
            raise CarlabError(f"duplicate action binding for class {spec.class_index}")
        table[spec.class_index] = compile_action(spec)
    missing = [i for i in range(1, deviated_count + 1) if i not in table]
    if missing:
        raise CarlabError(f"missing action binding for classes {missing}")
    extra = [i for i in table if not 1 <= i <= deviated_count]
    if extra:
        raise CarlabError(f"action bound to unknown classes {sorted(extra)}")
    return table


def _population_items(
    population: Iterable[Union[LearningSample, Sequence[float]]]
) -> list[tuple[str, FeatureVector]]:
    items = []
    for k, obj in enumerate(population):
        if isinstance(obj, LearningSample):
            items.append((obj.object_id, tuple(obj.features)))
        else:
            items.append((f"v{k:04d}", tuple(float(v) for v in obj)))
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        raise CarlabError("population object ids must be unique")
    return items


def run_car(
    population: Iterable[Union[LearningSample, Sequence[float]]],
    classifier: Classifier,
    actions: ActionTable,
    max_steps: int,
) -> CarRunReport:
    """Drive every object through at most ``max_steps`` classify-act
    rounds, recording a trace with synthetic timestamps t_k = k.

    Convergence at step k means the k-th classification (after k applied
    actions) is the normal class.  Stalls are data, not errors.
    """
    if max_steps < 0:
        raise CarlabError("max_steps must be >= 0")
    items = _population_items(population)
    traces: dict[str, tuple[TraceEvent, ...]] = {}
    converged: dict[str, bool] = {}
    steps_to_normal: dict[str, Optional[int]] = {}
    stalls: dict[str, StallInfo] = {}
    for object_id, start in sorted(items):
        state = start
        events: list[TraceEvent] = []
        seen: set[tuple[FeatureVector, int]] = set()
        done = False
        for step in range(max_steps + 1):
            outcome = classifier(state)
            if outcome.label is None:
                stalls[object_id] = StallInfo(kind="indeterminate", step=step)
                done = True
                break
            label = outcome.label
            if label == NORMAL_CLASS:
                events.append(
                    TraceEvent(object_id, step, float(step), state, label, None)
                )
                converged[object_id] = True
                steps_to_normal[object_id] = step
                done = True
                break
            action = actions.get(label)
            if action is None:
                raise CarlabError(f"no action bound to class {label}")
            events.append(
                TraceEvent(object_id, step, float(step), state, label, action.action_id)
            )
            key = (state, label)
            if key in seen:
                stalls[object_id] = StallInfo(kind="cycle", step=step)
                done = True
                break
            seen.add(key)
            if step < max_steps:
                state = action.fn(state)
        if not done:
            stalls[object_id] = StallInfo(kind="exhausted", step=max_steps)
        converged.setdefault(object_id, False)
        steps_to_normal.setdefault(object_id, None)
        traces[object_id] = tuple(events)
    total = len(items)
    curve = []
    if total:
        for k in range(max_steps + 1):
            hit = sum(
                1 for s in steps_to_normal.values() if s is not None and s <= k
            )
            curve.append(hit / total)
    reached = [s for s in steps_to_normal.values() if s is not None]
    return CarRunReport(
        max_steps=max_steps,
        traces=traces,
        converged=converged,
        steps_to_normal=steps_to_normal,
        stalls=stalls,
        fraction_normal_within=tuple(curve),
        mean_steps=sum(reached) / len(reached) if reached else None,
    )


def _percentile(sorted_values: list, q: float) -> float:
    if not sorted_values:
        raise CarlabError("no values")
    pos = q * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def convergence_metrics(report: CarRunReport) -> dict:
    """Aggregate summary of one run; everything here can be recomputed
    from the raw traces."""
    reached = sorted(s for s in report.steps_to_normal.values() if s is not None)
    stall_census = {"indeterminate": 0, "cycle": 0, "exhausted": 0}
    for info in report.stalls.values():
        stall_census[info.kind] += 1
    total = len(report.steps_to_normal)
    return {
        "population": total,
        "converged": len(reached),
        "terminal_fraction": (len(reached) / total) if total else None,
        "fraction_normal_within": list(report.fraction_normal_within),
        "mean_steps": report.mean_steps,
        "median_steps": _percentile(reached, 0.5) if reached else None,
        "p90_steps": _percentile(reached, 0.9) if reached else None,
        "max_steps_observed": reached[-1] if reached else None,
        "stalls": stall_census,
    }


def actions_to_json(specs: Sequence[ActionSpec]) -> list[dict]:
    out = []
    for spec in sorted(specs, key=lambda s: s.class_index):
        entry: dict = {
            "action": spec.action_id,
            "class": spec.class_index,
            "kind": spec.kind,
        }
        if spec.kind == "affine":
            entry["alpha"] = list(spec.alpha)
            entry["beta"] = list(spec.beta)
        elif spec.kind == "table":
            entry["n"] = spec.n
            entry["map"] = dict(sorted(spec.table.items()))
        else:
            entry["n"] = spec.n
            entry["exprs"] = list(spec.exprs)
        out.append(entry)
    return out


def actions_from_json(data: list[dict]) -> list[ActionSpec]:
    specs = []
    for entry in data:
        kind = entry["kind"]
        if kind == "affine":
            specs.append(
                ActionSpec(
                    action_id=entry["action"],
                    class_index=int(entry["class"]),
                    kind=kind,
                    alpha=tuple(float(v) for v in entry["alpha"]),
                    beta=tuple(float(v) for v in entry["beta"]),
                )
            )
        elif kind == "table":
            specs.append(
                ActionSpec(
                    action_id=entry["action"],
                    class_index=int(entry["class"]),
                    kind=kind,
                    n=int(entry["n"]),
                    table=dict(entry["map"]),
                )
            )
        elif kind == "rule":
            specs.append(
                ActionSpec(
                    action_id=entry["action"],
                    class_index=int(entry["class"]),
                    kind=kind,
                    n=int(entry["n"]),
                    exprs=tuple(entry["exprs"]),
                )
            )
        else:
            raise CarlabError(f"unknown action kind {kind!r}")
    return specs


def save_actions(specs: Sequence[ActionSpec], dest: Union[str, Path]) -> None:
    Path(dest).write_text(
        json.dumps(actions_to_json(specs), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_actions(source: Union[str, Path]) -> list[ActionSpec]:
    return actions_from_json(json.loads(Path(source).read_text(encoding="utf-8")))


def report_to_json(report: CarRunReport) -> dict:
    objects = {}
    for object_id in sorted(report.traces):
        stall = report.stalls.get(object_id)
        objects[object_id] = {
            "converged": report.converged[object_id],
            "steps_to_normal": report.steps_to_normal[object_id],
            "stall": None if stall is None else {"kind": stall.kind, "step": stall.step},
        }
    return {
        "max_steps": report.max_steps,
        "objects": objects,
        "fraction_normal_within": list(report.fraction_normal_within),
        "mean_steps": report.mean_steps,
        "metrics": convergence_metrics(report),
    }
