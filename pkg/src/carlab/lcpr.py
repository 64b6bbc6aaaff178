"""Box-rule mining and similarity voting.

A logical dependency (LD) is an axis-aligned box predicate

    P(x) = AND_{j in w1} (lower_j <= x_j)  AND_{j in w2} (x_j <= upper_j)

attached to one class.  An LD is admissible when it covers at least one
training point of its own class and at most ``violation_budget`` points of
the other classes (zero by default).  Mining grows, from every own-class
seed, the admissible box that is maximal on the finite grid of training
feature values: no single bound can be moved to the adjacent grid value,
or removed, without covering counter-class points beyond the budget.

Classification scores an object per class as the fraction of that class's
LDs covering it, then takes the argmax; ties and all-zero score vectors
are reported as indeterminate rather than broken silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .core import CarlabError, LearningSample, LearningSet


class UnseparableSeedError(CarlabError):
    """A seed point coincides with counter-class points beyond the budget."""


@dataclass(frozen=True)
class LogicalDependency:
    """Axis-aligned box predicate for one class.

    ``lower`` and ``upper`` map 1-based feature indices to closed bound
    values; features absent from a mapping are unbounded on that side.
    """

    class_index: int
    lower: dict[int, float]
    upper: dict[int, float]

    def __post_init__(self) -> None:
        for j in self.lower:
            if j < 1:
                raise CarlabError(f"feature index {j} out of range")
        for j in self.upper:
            if j < 1:
                raise CarlabError(f"feature index {j} out of range")
        for j, lo in self.lower.items():
            hi = self.upper.get(j)
            if hi is not None and lo > hi:
                raise CarlabError(f"empty box on feature {j}: [{lo}, {hi}]")

    def key(self) -> tuple:
        """Canonical sort/dedup key."""
        return (
            self.class_index,
            tuple(sorted(self.lower.items())),
            tuple(sorted(self.upper.items())),
        )


@dataclass(frozen=True)
class LDSet:
    """Per-class collections of logical dependencies."""

    by_class: dict[int, tuple[LogicalDependency, ...]]
    warnings: tuple[str, ...] = ()

    def all_lds(self) -> Iterable[LogicalDependency]:
        for index in sorted(self.by_class):
            yield from self.by_class[index]

    def classes(self) -> tuple[int, ...]:
        return tuple(sorted(self.by_class))


@dataclass(frozen=True)
class MiningConfig:
    violation_budget: int = 0
    quality_criterion: str = "coverage"
    seed_strategy: str = "all"  # every own-class sample is a seed

    def __post_init__(self) -> None:
        if self.violation_budget < 0:
            raise CarlabError("violation_budget must be >= 0")
        if self.quality_criterion != "coverage":
            raise CarlabError(
                f"unknown quality criterion {self.quality_criterion!r}"
            )
        if self.seed_strategy != "all":
            raise CarlabError(f"unknown seed strategy {self.seed_strategy!r}")


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    own_covered: int
    counter_covered: int


@dataclass(frozen=True)
class ClassifyOutcome:
    """Result of similarity voting: a class, or an explained abstention."""

    label: Optional[int]
    reason: Optional[str]  # None | "tied" | "all-zero"
    scores: dict[int, float]


def eval_ld(ld: LogicalDependency, x: Sequence[float]) -> int:
    """Evaluate the box predicate on one vector: 1 if covered, else 0."""
    for j, lo in ld.lower.items():
        if j > len(x):
            raise CarlabError(f"feature index {j} out of range for n={len(x)}")
        if x[j - 1] < lo:
            return 0
    for j, hi in ld.upper.items():
        if j > len(x):
            raise CarlabError(f"feature index {j} out of range for n={len(x)}")
        if x[j - 1] > hi:
            return 0
    return 1


def is_admissible(
    ld: LogicalDependency, learning_set: LearningSet, budget: int = 0
) -> Admissibility:
    """Check the coverage/exclusion conditions against a learning set."""
    own = 0
    counter = 0
    for s in learning_set.samples:
        if eval_ld(ld, s.features):
            if s.label == ld.class_index:
                own += 1
            else:
                counter += 1
    return Admissibility(
        admissible=own >= 1 and counter <= budget,
        own_covered=own,
        counter_covered=counter,
    )


def _matrix(learning_set: LearningSet) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features for s in learning_set.samples], dtype=float)
    y = np.array([s.label for s in learning_set.samples], dtype=int)
    return X, y


def _inside(X: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.all((X >= lower) & (X <= upper), axis=1)


def grow_maximal_ld(
    seed: LearningSample,
    learning_set: LearningSet,
    config: Optional[MiningConfig] = None,
) -> LogicalDependency:
    """Grow the maximal admissible box around one seed.

    Starts from the point box at the seed and relaxes bounds greedily:
    features in ascending index, lower bound before upper bound, one
    training-grid value at a time, dropping a bound once it passes the
    grid extreme.  A step is kept while total counter-class coverage
    stays within the budget.  Relaxation only enlarges the box, so a
    blocked step stays blocked and a single sweep yields a box on which
    no single-bound relaxation is admissible.
    """
    config = config or MiningConfig()
    budget = config.violation_budget
    X, y = _matrix(learning_set)
    n = learning_set.n
    counter = y != seed.label
    point = np.asarray(seed.features, dtype=float)

    lower = point.copy()
    upper = point.copy()

    violations = int(np.count_nonzero(_inside(X, lower, upper) & counter))
    if violations > budget:
        raise UnseparableSeedError(
            f"unseparable seed {seed.object_id!r}: coincides with "
            f"{violations} counter-class point(s)"
        )

    neg_inf = np.full(n, -np.inf)
    pos_inf = np.full(n, np.inf)

    for j in range(n):
        grid = np.unique(X[:, j])

        # Lower bound: points blocked only by this bound sit in the slab
        # below it; walk the grid downward, then drop.
        slab_lower = lower.copy()
        slab_lower[j] = -np.inf
        slab = _inside(X, slab_lower, upper)
        blocked_vals = np.sort(X[slab & counter & (X[:, j] < lower[j]), j])[::-1]
        admitted = 0
        dropped = True
        for v in grid[grid < lower[j]][::-1]:
            newly = int(np.count_nonzero(blocked_vals >= v))
            if violations + newly > budget:
                dropped = False
                break
            lower[j] = v
            admitted = newly
        if dropped and violations + len(blocked_vals) <= budget:
            lower[j] = -np.inf
            admitted = len(blocked_vals)
        violations += admitted

        # Upper bound, symmetric.
        slab_upper = upper.copy()
        slab_upper[j] = np.inf
        slab = _inside(X, lower, slab_upper)
        blocked_vals = np.sort(X[slab & counter & (X[:, j] > upper[j]), j])
        admitted = 0
        dropped = True
        for v in grid[grid > upper[j]]:
            newly = int(np.count_nonzero(blocked_vals <= v))
            if violations + newly > budget:
                dropped = False
                break
            upper[j] = v
            admitted = newly
        if dropped and violations + len(blocked_vals) <= budget:
            upper[j] = np.inf
            admitted = len(blocked_vals)
        violations += admitted

    return LogicalDependency(
        class_index=seed.label,
        lower={j + 1: float(lower[j]) for j in range(n) if lower[j] != -np.inf},
        upper={j + 1: float(upper[j]) for j in range(n) if upper[j] != np.inf},
    )


def mine_lds(
    learning_set: LearningSet, config: Optional[MiningConfig] = None
) -> LDSet:
    """Mine maximal admissible LDs from every seed of every class.

    Unseparable seeds become warnings, not failures; duplicate boxes are
    removed and each class list is sorted canonically.
    """
    config = config or MiningConfig()
    warnings: list[str] = []
    by_class: dict[int, list[LogicalDependency]] = {
        i: [] for i in range(learning_set.deviated_count + 1)
    }
    seen: set[tuple] = set()
    for seed in learning_set.samples:
        try:
            ld = grow_maximal_ld(seed, learning_set, config)
        except UnseparableSeedError as exc:
            warnings.append(str(exc))
            continue
        if ld.key() not in seen:
            seen.add(ld.key())
            by_class[ld.class_index].append(ld)
    return LDSet(
        by_class={i: tuple(sorted(lds, key=LogicalDependency.key)) for i, lds in by_class.items()},
        warnings=tuple(warnings),
    )


def similarity(x: Sequence[float], lds: LDSet, class_index: int) -> float:
    """Fraction of the class's LDs covering x; 0 when the class has none."""
    members = lds.by_class.get(class_index, ())
    if not members:
        return 0.0
    return sum(eval_ld(ld, x) for ld in members) / len(members)


def classify(x: Sequence[float], lds: LDSet) -> ClassifyOutcome:
    """Vote by per-class similarity; argmax when unique and positive."""
    scores = {i: similarity(x, lds, i) for i in lds.classes()}
    if not scores:
        return ClassifyOutcome(label=None, reason="all-zero", scores={})
    best = max(scores.values())
    if best <= 0.0:
        return ClassifyOutcome(label=None, reason="all-zero", scores=scores)
    winners = [i for i, v in scores.items() if v == best]
    if len(winners) > 1:
        return ClassifyOutcome(label=None, reason="tied", scores=scores)
    return ClassifyOutcome(label=winners[0], reason=None, scores=scores)


def ld_classifier(lds: LDSet) -> Callable[[Sequence[float]], ClassifyOutcome]:
    """Bind an LDSet into a reusable classifier callable."""
    return lambda x: classify(x, lds)


def ld_overlap(
    a: LogicalDependency, b: LogicalDependency
) -> Optional[tuple[dict[int, float], dict[int, float]]]:
    """Intersection box of two LDs, or None when they are disjoint."""
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    for j in set(a.lower) | set(b.lower):
        lower[j] = max(a.lower.get(j, -np.inf), b.lower.get(j, -np.inf))
    for j in set(a.upper) | set(b.upper):
        upper[j] = min(a.upper.get(j, np.inf), b.upper.get(j, np.inf))
    for j, lo in lower.items():
        if j in upper and lo > upper[j]:
            return None
    return lower, upper


def indeterminateness_areas(
    lds: LDSet,
) -> list[tuple[int, int, dict[int, float], dict[int, float]]]:
    """All pairwise overlap boxes between LDs of distinct classes.

    Each entry is (class_a, class_b, lower, upper) with class_a < class_b;
    points inside such a box score positively for both classes.
    """
    areas = []
    classes = lds.classes()
    for ia, ca in enumerate(classes):
        for cb in classes[ia + 1 :]:
            for ld_a in lds.by_class[ca]:
                for ld_b in lds.by_class[cb]:
                    box = ld_overlap(ld_a, ld_b)
                    if box is not None:
                        areas.append((ca, cb, box[0], box[1]))
    return areas


def ldset_to_json(lds: LDSet) -> list[dict]:
    """JSON form: array of {class, lower: {j: v}, upper: {j: v}}, 1-based."""
    return [
        {
            "class": ld.class_index,
            "lower": {str(j): v for j, v in sorted(ld.lower.items())},
            "upper": {str(j): v for j, v in sorted(ld.upper.items())},
        }
        for ld in lds.all_lds()
    ]


def ldset_from_json(data: list[dict]) -> LDSet:
    by_class: dict[int, list[LogicalDependency]] = {}
    for entry in data:
        ld = LogicalDependency(
            class_index=int(entry["class"]),
            lower={int(j): float(v) for j, v in entry.get("lower", {}).items()},
            upper={int(j): float(v) for j, v in entry.get("upper", {}).items()},
        )
        by_class.setdefault(ld.class_index, []).append(ld)
    return LDSet(
        by_class={i: tuple(sorted(lds, key=LogicalDependency.key)) for i, lds in by_class.items()}
    )


def save_ldset(lds: LDSet, dest: Union[str, Path]) -> None:
    Path(dest).write_text(
        json.dumps(ldset_to_json(lds), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_ldset(source: Union[str, Path]) -> LDSet:
    return ldset_from_json(json.loads(Path(source).read_text(encoding="utf-8")))
