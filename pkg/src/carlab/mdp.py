"""Tabular MDP estimation, value iteration, and policy comparison.

States are class labels; the normal class is absorbing under a synthetic
``stay`` action with zero reward.  Rewards derive from level-diagram
distances, so progress toward the normal class pays off and regression
costs, and cumulative reward telescopes along any trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np

from .core import CarlabError, NORMAL_CLASS, TraceEvent, TraceMap, group_traces
from .poset import LevelDiagram, distance_to_normal

STAY_ACTION = "stay"
ROW_SUM_TOL = 1e-12

# (destination, probability, reward) triples per (state, action)
Outcomes = tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class MDPModel:
    states: tuple[int, ...]
    gamma: float
    transitions: dict[int, dict[str, Outcomes]]

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise CarlabError("gamma must lie in [0, 1)")
        members = set(self.states)
        for s in self.states:
            if s not in self.transitions or not self.transitions[s]:
                raise CarlabError(f"state {s} has no actions")
            for a, outcomes in self.transitions[s].items():
                total = 0.0
                for dst, p, _ in outcomes:
                    if dst not in members:
                        raise CarlabError(f"unknown destination state {dst}")
                    total += p
                if abs(total - 1.0) > ROW_SUM_TOL:
                    raise CarlabError(
                        f"row ({s}, {a}) sums to {total!r}, expected 1"
                    )
        if NORMAL_CLASS in members:
            row = self.transitions[NORMAL_CLASS]
            if row != {STAY_ACTION: ((NORMAL_CLASS, 1.0, 0.0),)}:
                raise CarlabError("the normal class must be absorbing")

    def actions(self, state: int) -> tuple[str, ...]:
        return tuple(sorted(self.transitions[state]))


@dataclass(frozen=True)
class Policy:
    """Per-state action distribution; deterministic policies put unit mass."""

    decision: dict[int, dict[str, float]]

    @staticmethod
    def deterministic(mapping: Mapping[int, str]) -> "Policy":
        return Policy(decision={s: {a: 1.0} for s, a in mapping.items()})

    def action(self, state: int) -> str:
        dist = self.decision[state]
        if len(dist) != 1:
            raise CarlabError(f"policy is stochastic at state {state}")
        return next(iter(dist))

    def support(self, state: int) -> tuple[str, ...]:
        return tuple(sorted(a for a, p in self.decision[state].items() if p > 0))


ValueFunction = dict[int, float]


@dataclass(frozen=True)
class VIResult:
    values: ValueFunction
    policy: Policy
    iterations: int
    residual: float


@dataclass(frozen=True)
class ComparisonReport:
    v_optimal: ValueFunction
    v_observed: ValueFunction
    regret: ValueFunction
    optimal_actions: dict[int, tuple[str, ...]]
    agreement: dict[int, bool]
    max_regret: float
    verdict: str  # "matches-optimal" | "suboptimal"


def reward_from_levels(diagram: LevelDiagram):
    """Reward callable (s, a, s') -> level(s) - level(s')."""

    def reward(s: int, a: str, dst: int) -> float:
        return float(distance_to_normal(diagram, s) - distance_to_normal(diagram, dst))

    return reward


def _neg_level_reward(diagram: LevelDiagram):
    def reward(s: int, a: str, dst: int) -> float:
        return float(-distance_to_normal(diagram, dst))

    return reward


def estimate_mdp(
    traces: Union[TraceMap, Iterable[TraceEvent]],
    diagram: LevelDiagram,
    gamma: float = 0.9,
    smoothing: float = 0.0,
    reward_shape: str = "level-diff",
) -> MDPModel:
    """Frequency-estimate the transition model from traces.

    P(s, a, s') = (count + smoothing) / (row count + smoothing * |S|);
    actions per state are those observed there.  The normal class gets
    the synthetic absorbing row.
    """
    if smoothing < 0:
        raise CarlabError("smoothing must be >= 0")
    if reward_shape == "level-diff":
        reward = reward_from_levels(diagram)
    elif reward_shape == "neg-level":
        reward = _neg_level_reward(diagram)
    else:
        raise CarlabError(f"unknown reward shape {reward_shape!r}")
    grouped = group_traces(traces)
    counts: dict[tuple[int, str], dict[int, int]] = {}
    states: set[int] = {NORMAL_CLASS}
    for events in grouped.values():
        for e in events:
            states.add(e.assigned_class)
        for prev, nxt in zip(events, events[1:]):
            row = counts.setdefault((prev.assigned_class, prev.applied_action), {})
            row[nxt.assigned_class] = row.get(nxt.assigned_class, 0) + 1
    for s in states:
        if s not in diagram.levels:
            raise CarlabError(f"class {s} missing from the level diagram")
    observed_sources = {s for s, _ in counts}
    for s in sorted(states - {NORMAL_CLASS}):
        if s not in observed_sources:
            raise CarlabError(f"state {s} has no observed action")
    ordered = tuple(sorted(states))
    size = len(ordered)
    transitions: dict[int, dict[str, Outcomes]] = {
        NORMAL_CLASS: {STAY_ACTION: ((NORMAL_CLASS, 1.0, 0.0),)}
    }
    for (s, a), row in sorted(counts.items()):
        total = sum(row.values())
        outcomes = []
        for dst in ordered:
            raw = row.get(dst, 0)
            p = (raw + smoothing) / (total + smoothing * size)
            if p > 0.0:
                outcomes.append((dst, p, reward(s, a, dst)))
        transitions.setdefault(s, {})[a] = tuple(outcomes)
    return MDPModel(states=ordered, gamma=gamma, transitions=transitions)


def value_iteration(mdp: MDPModel, tol: float = 1e-9) -> VIResult:
    """Bellman optimality sweeps to a residual of at most ``tol``.

    Stops when the sup-norm sweep change falls to ``tol``; the returned
    values then satisfy the Bellman residual bound gamma * tol <= tol.
    The greedy policy breaks ties toward the lowest action id.
    """
    index = {s: k for k, s in enumerate(mdp.states)}
    values = np.zeros(len(mdp.states))
    iterations = 0
    while True:
        iterations += 1
        new_values = np.empty_like(values)
        for s in mdp.states:
            best = -np.inf
            for a in mdp.actions(s):
                q = 0.0
                for dst, p, r in mdp.transitions[s][a]:
                    q += p * (r + mdp.gamma * values[index[dst]])
                best = max(best, q)
            new_values[index[s]] = best
        delta = float(np.max(np.abs(new_values - values)))
        values = new_values
        if delta <= tol:
            break
    greedy: dict[int, str] = {}
    residual = 0.0
    for s in mdp.states:
        best_a = None
        best_q = -np.inf
        for a in mdp.actions(s):
            q = 0.0
            for dst, p, r in mdp.transitions[s][a]:
                q += p * (r + mdp.gamma * values[index[dst]])
            if q > best_q:
                best_q = q
                best_a = a
        greedy[s] = best_a
        residual = max(residual, abs(best_q - values[index[s]]))
    return VIResult(
        values={s: float(values[index[s]]) for s in mdp.states},
        policy=Policy.deterministic(greedy),
        iterations=iterations,
        residual=residual,
    )


def policy_evaluation(
    mdp: MDPModel, policy: Policy, tol: float = 1e-9
) -> ValueFunction:
    """Iterative fixed-point evaluation of a (possibly stochastic) policy."""
    for s in mdp.states:
        if s not in policy.decision:
            raise CarlabError(f"policy does not cover state {s}")
        available = set(mdp.actions(s))
        for a in policy.support(s):
            if a not in available:
                raise CarlabError(f"policy uses unavailable action {a!r} at {s}")
        total = sum(policy.decision[s].values())
        if abs(total - 1.0) > 1e-9:
            raise CarlabError(f"policy distribution at {s} sums to {total!r}")
    index = {s: k for k, s in enumerate(mdp.states)}
    values = np.zeros(len(mdp.states))
    while True:
        new_values = np.empty_like(values)
        for s in mdp.states:
            v = 0.0
            for a, weight in policy.decision[s].items():
                if weight == 0.0:
                    continue
                for dst, p, r in mdp.transitions[s][a]:
                    v += weight * p * (r + mdp.gamma * values[index[dst]])
            new_values[index[s]] = v
        delta = float(np.max(np.abs(new_values - values)))
        values = new_values
        if delta <= tol:
            break
    return {s: float(values[index[s]]) for s in mdp.states}


def extract_observed_policy(
    traces: Union[TraceMap, Iterable[TraceEvent]]
) -> Policy:
    """Empirical action frequencies per deviated state, plus the synthetic
    stay decision at the normal class."""
    grouped = group_traces(traces)
    counts: dict[int, dict[str, int]] = {}
    for events in grouped.values():
        for e in events:
            if e.assigned_class == NORMAL_CLASS:
                continue
            row = counts.setdefault(e.assigned_class, {})
            row[e.applied_action] = row.get(e.applied_action, 0) + 1
    decision: dict[int, dict[str, float]] = {
        NORMAL_CLASS: {STAY_ACTION: 1.0}
    }
    for s, row in sorted(counts.items()):
        total = sum(row.values())
        decision[s] = {a: c / total for a, c in sorted(row.items())}
    return Policy(decision=decision)


def compare_policies(
    observed: Policy, mdp: MDPModel, tol: float = 1e-9
) -> ComparisonReport:
    """Observed-vs-optimal report: values, per-state regret, agreement.

    A state agrees when the observed policy puts all its mass on actions
    that are optimal under the computed value function.
    """
    vi = value_iteration(mdp, tol=tol)
    v_obs = policy_evaluation(mdp, observed, tol=tol)
    atol = 1e-8
    optimal_actions: dict[int, tuple[str, ...]] = {}
    for s in mdp.states:
        qs = {}
        for a in mdp.actions(s):
            qs[a] = sum(
                p * (r + mdp.gamma * vi.values[dst])
                for dst, p, r in mdp.transitions[s][a]
            )
        best = max(qs.values())
        optimal_actions[s] = tuple(sorted(a for a, q in qs.items() if q >= best - atol))
    regret = {s: vi.values[s] - v_obs[s] for s in mdp.states}
    agreement = {
        s: set(observed.support(s)) <= set(optimal_actions[s]) for s in mdp.states
    }
    max_regret = max(regret.values(), default=0.0)
    verdict = (
        "matches-optimal"
        if all(agreement.values()) and max_regret <= atol
        else "suboptimal"
    )
    return ComparisonReport(
        v_optimal=vi.values,
        v_observed=v_obs,
        regret=regret,
        optimal_actions=optimal_actions,
        agreement=agreement,
        max_regret=max_regret,
        verdict=verdict,
    )


def mdp_to_json(mdp: MDPModel) -> dict:
    """JSON form: {states, gamma, transitions: [{s, a, s', p, r}]}."""
    rows = []
    for s in mdp.states:
        for a in mdp.actions(s):
            for dst, p, r in mdp.transitions[s][a]:
                rows.append({"s": s, "a": a, "s'": dst, "p": p, "r": r})
    return {"states": list(mdp.states), "gamma": mdp.gamma, "transitions": rows}


def mdp_from_json(data: dict) -> MDPModel:
    transitions: dict[int, dict[str, list]] = {}
    for row in data["transitions"]:
        transitions.setdefault(int(row["s"]), {}).setdefault(row["a"], []).append(
            (int(row["s'"]), float(row["p"]), float(row["r"]))
        )
    return MDPModel(
        states=tuple(int(s) for s in data["states"]),
        gamma=float(data["gamma"]),
        transitions={
            s: {a: tuple(outs) for a, outs in acts.items()}
            for s, acts in transitions.items()
        },
    )


def save_mdp(mdp: MDPModel, dest: Union[str, Path]) -> None:
    Path(dest).write_text(
        json.dumps(mdp_to_json(mdp), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_mdp(source: Union[str, Path]) -> MDPModel:
    return mdp_from_json(json.loads(Path(source).read_text(encoding="utf-8")))
