"""Seeded generators for synthetic datasets, traces, graphs, and MDPs.

Used by the demo scripts and the test suite.  When no seed is given, the
CARLAB_SEED environment variable (default 0) fixes all randomness so
repeated runs reproduce byte-identical artifacts.
"""

from __future__ import annotations

import os
import random
from typing import Optional, Sequence

from .boolcube import BooleanAction
from .carsim import ActionSpec
from .core import LearningSample, LearningSet, TraceEvent, TraceMap
from .mdp import STAY_ACTION, MDPModel
from .poset import ClassTransitionGraph, Transition

ENV_SEED = "CARLAB_SEED"


def default_rng(seed: Optional[int] = None) -> random.Random:
    if seed is None:
        seed = int(os.environ.get(ENV_SEED, "0"))
    return random.Random(seed)


def random_learning_set(
    rng: random.Random,
    n: Optional[int] = None,
    classes: Optional[int] = None,
    m: Optional[int] = None,
    grid: Sequence[float] = tuple(float(v) for v in range(10)),
) -> LearningSet:
    """Random real-mode dataset without cross-class duplicate points.

    Duplicates across classes would make seeds unseparable; rejection
    sampling keeps every training point coverable.
    """
    n = n if n is not None else rng.randint(1, 6)
    classes = classes if classes is not None else rng.randint(2, 4)
    m = m if m is not None else rng.randint(classes, 60)
    labels = list(range(classes)) + [rng.randrange(classes) for _ in range(m - classes)]
    rng.shuffle(labels)
    taken: dict[tuple[float, ...], int] = {}
    owned: dict[int, list[tuple[float, ...]]] = {c: [] for c in range(classes)}
    samples = []
    for k, label in enumerate(labels):
        point = None
        for _ in range(200):
            candidate = tuple(rng.choice(grid) for _ in range(n))
            owner = taken.get(candidate)
            if owner is None or owner == label:
                point = candidate
                break
        if point is None:
            if owned[label]:
                point = rng.choice(owned[label])
            else:
                # tiny grids only: deterministic scan for any free cell
                from itertools import product

                for candidate in product(grid, repeat=n):
                    if candidate not in taken:
                        point = candidate
                        break
                if point is None:
                    raise ValueError("grid too small for disjoint class shares")
        taken[point] = label
        owned[label].append(point)
        samples.append(LearningSample(object_id=f"s{k:03d}", features=point, label=label))
    return LearningSet.build(samples, mode="real")


def random_boolean_learning_set(
    rng: random.Random, n: int, classes: int, per_class: int
) -> LearningSet:
    """Random Boolean dataset with disjoint class shares."""
    universe = list(range(2 ** n))
    rng.shuffle(universe)
    need = classes * per_class
    if need > len(universe):
        raise ValueError("not enough vertices for disjoint class shares")
    samples = []
    k = 0
    for label in range(classes):
        for _ in range(per_class):
            code = universe[k]
            point = tuple(float((code >> (n - 1 - j)) & 1) for j in range(n))
            samples.append(
                LearningSample(object_id=f"b{k:03d}", features=point, label=label)
            )
            k += 1
    return LearningSet.build(samples, mode="boolean")


def random_partial_boolean_function(
    rng: random.Random, n: int, positives: int, negatives: int
):
    """Disjoint random positive/negative vertex sets as binary words."""
    from .boolcube import PartialBooleanFunction

    universe = list(range(2 ** n))
    rng.shuffle(universe)
    pos = universe[:positives]
    neg = universe[positives : positives + negatives]
    as_word = lambda code: format(code, f"0{n}b")
    return PartialBooleanFunction(
        n=n,
        positives=frozenset(as_word(c) for c in pos),
        negatives=frozenset(as_word(c) for c in neg),
    )


def random_boolean_action(rng: random.Random, action_id: str, n: int) -> BooleanAction:
    """Random total update: half the time a substitution rule, else a table."""
    if rng.random() < 0.5:
        tokens = []
        for _ in range(n):
            kind = rng.randrange(4)
            if kind == 0:
                tokens.append("0")
            elif kind == 1:
                tokens.append("1")
            elif kind == 2:
                tokens.append(f"x{rng.randint(1, n)}")
            else:
                tokens.append(f"~x{rng.randint(1, n)}")
        return BooleanAction(action_id=action_id, n=n, exprs=tuple(tokens))
    table = {}
    for code in range(2 ** n):
        word = format(code, f"0{n}b")
        table[word] = format(rng.randrange(2 ** n), f"0{n}b")
    return BooleanAction(action_id=action_id, n=n, table=table)


def random_transition_graph(
    rng: random.Random, max_classes: int = 50, edge_prob: float = 0.15
) -> ClassTransitionGraph:
    """Random digraph over classes 0..c-1; edges never leave class 0."""
    c = rng.randint(2, max_classes)
    edges = []
    for src in range(1, c):
        for dst in range(c):
            if src != dst and rng.random() < edge_prob:
                edges.append(
                    Transition(src=src, action=f"a{src}", dst=dst, count=rng.randint(1, 5))
                )
    return ClassTransitionGraph.build(edges, classes=range(c))


def random_mdp(
    rng: random.Random,
    max_states: int = 6,
    max_actions: int = 3,
    gamma: float = 0.9,
) -> MDPModel:
    """Random model with the normal class absorbing and dense random rows
    elsewhere."""
    size = rng.randint(2, max_states)
    states = tuple(range(size))
    transitions = {0: {STAY_ACTION: ((0, 1.0, 0.0),)}}
    for s in states[1:]:
        rows = {}
        for k in range(rng.randint(1, max_actions)):
            weights = [rng.random() + 1e-3 for _ in states]
            total = sum(weights)
            rows[f"a{k}"] = tuple(
                (dst, w / total, round(rng.uniform(-2.0, 2.0), 3))
                for dst, w in zip(states, weights)
            )
        transitions[s] = rows
    return MDPModel(states=states, gamma=gamma, transitions=transitions)


def random_trace_log(
    rng: random.Random,
    n_objects: int = 20,
    classes: int = 4,
    n_features: int = 2,
    max_len: int = 8,
) -> TraceMap:
    """Random walks over classes; actions are per-class, destinations
    biased one level down so most traces drift toward normal.

    Regenerates until every observed deviated class has at least one
    recorded outgoing transition, so the result is always estimable.
    """
    while True:
        traces: TraceMap = {}
        for k in range(n_objects):
            object_id = f"t{k:03d}"
            current = rng.randint(1, classes - 1)
            events = []
            t = 0.0
            for step in range(max_len):
                t += rng.uniform(0.5, 2.0)
                state = tuple(round(rng.uniform(0, 10), 2) for _ in range(n_features))
                if current == 0:
                    events.append(TraceEvent(object_id, step, t, state, 0, None))
                    break
                events.append(
                    TraceEvent(object_id, step, t, state, current, f"a{current}")
                )
                roll = rng.random()
                if roll < 0.6:
                    current -= 1
                elif roll < 0.8 and current < classes - 1:
                    current += 1
            traces[object_id] = tuple(events)
        observed = set()
        sources = set()
        for events in traces.values():
            observed.update(e.assigned_class for e in events)
            sources.update(e.assigned_class for e in events[:-1])
        if sources and all(c in sources for c in observed if c != 0):
            return traces


def contracting_instance(deviated_count: int) -> tuple[LearningSet, list[ActionSpec], ClassTransitionGraph]:
    """Chain construction where each action drops the class level by one.

    Class i occupies the band f1 = i with two points each; the action for
    class i subtracts 1 from f1, landing exactly in band i-1.  Every
    object therefore reaches the normal class in as many steps as its
    starting level, bounded by the height of the transition diagram.
    """
    samples = []
    for i in range(deviated_count + 1):
        for b, f2 in enumerate((0.0, 1.0)):
            samples.append(
                LearningSample(
                    object_id=f"c{i}_{b}", features=(float(i), f2), label=i
                )
            )
    learning_set = LearningSet.build(samples, mode="real")
    specs = [
        ActionSpec(
            action_id=f"a{i}",
            class_index=i,
            kind="affine",
            alpha=(1.0, 1.0),
            beta=(-1.0, 0.0),
        )
        for i in range(1, deviated_count + 1)
    ]
    edges = [
        Transition(src=i, action=f"a{i}", dst=i - 1, count=2) for i in range(1, deviated_count + 1)
    ]
    graph = ClassTransitionGraph.build(edges)
    return learning_set, specs, graph
