"""Fit an MDP from trace data and compare observed vs optimal policies.

The trace log plays the role of recorded treatment histories: states are
classes, actions are the recorded interventions, and reward is the level
drop toward the normal class.  Value iteration computes the optimal
policy; the observed policy is the empirical action mix in the data.

Run:  python demos/03_policy_comparison.py
"""

from carlab import synth
from carlab.mdp import (
    compare_policies,
    estimate_mdp,
    extract_observed_policy,
    value_iteration,
)
from carlab.poset import ClassTransitionGraph, Transition, build_level_diagram

rng = synth.default_rng()
traces = synth.random_trace_log(rng, n_objects=60, classes=4, max_len=10)
lengths = sorted(len(events) for events in traces.values())
print(f"traces: {len(traces)} objects, lengths {lengths[0]}..{lengths[-1]}")

# A chain diagram fixes the reward geometry: one level per class.
chain = ClassTransitionGraph.build(
    [Transition(i, f"a{i}", i - 1, 1) for i in (1, 2, 3)]
)
diagram = build_level_diagram(chain)

model = estimate_mdp(traces, diagram, gamma=0.9, smoothing=0.5)
print(f"states: {model.states}")
for s in model.states:
    for a in model.actions(s):
        row = {dst: round(p, 3) for dst, p, _ in model.transitions[s][a]}
        print(f"  P({s}, {a}) = {row}")

vi = value_iteration(model, tol=1e-9)
print("\noptimal values:", {s: round(v, 4) for s, v in vi.values.items()})
print("optimal policy:", {s: vi.policy.action(s) for s in model.states})
print("iterations:", vi.iterations, " residual:", vi.residual)

observed = extract_observed_policy(traces)
report = compare_policies(observed, model)
print("\nobserved vs optimal:", report.verdict)
for s in model.states:
    print(
        f"  state {s}: regret={report.regret[s]:.5f}"
        f"  observed={ {a: round(p, 2) for a, p in observed.decision[s].items()} }"
        f"  optimal={list(report.optimal_actions[s])}"
    )
