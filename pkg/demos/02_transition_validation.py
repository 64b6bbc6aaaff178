"""Validate that observed class transitions order toward the normal class.

Builds two transition graphs: a healthy one that drains into class 0,
and a broken one with a cycle and a stranded class.  Shows the order
axioms, the unique-minimum check, the level diagram, neighborhoods, and
counter-class selection.

Run:  python demos/02_transition_validation.py
"""

from carlab.poset import (
    ClassTransitionGraph,
    Transition,
    build_level_diagram,
    counter_class,
    neighborhood,
    validate_to_normal,
)

healthy = ClassTransitionGraph.build(
    [
        Transition(1, "a1", 0, 40),
        Transition(2, "a2", 1, 25),
        Transition(3, "a3", 1, 10),
        Transition(4, "a4", 2, 12),
        Transition(4, "a4", 3, 3),  # stochastic outcome, same action
    ]
)

verdict = validate_to_normal(healthy)
print("healthy graph verdict:", verdict.verdict)
print("  axioms:", verdict.poset.passed, " minimum:", verdict.minimum.minimal)
print("  nondeterministic pairs:", dict(verdict.nondeterministic))

diagram = build_level_diagram(healthy)
print("  levels:", diagram.levels, " height:", diagram.height)

# Neighborhoods grow outward from the normal class; a link threshold
# filters classes that only occasionally transition inward.
for depth in (1, 2, 3):
    print(f"  neighborhood depth {depth}:", sorted(neighborhood(healthy, depth)))
print("  with threshold 0.9:", sorted(neighborhood(healthy, 2, link_threshold=0.9)))

# The far half of the diagram is the counter-class used when mining
# rules for the normal class.
print("  counter-class at h/2:", sorted(counter_class(diagram, 0.5)))

broken = ClassTransitionGraph.build(
    [
        Transition(1, "a1", 2, 5),
        Transition(2, "a2", 1, 5),  # 1 <-> 2 cycle
        Transition(3, "a3", 0, 2),
    ],
    classes=[4],  # stranded: no path to normal
)
verdict = validate_to_normal(broken)
print("\nbroken graph verdict:", verdict.verdict)
print("  counterexample cycle:", verdict.poset.counterexample_cycle)
print("  unleveled classes:", verdict.diagram.unleveled)
