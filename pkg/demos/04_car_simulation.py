"""Run the classify-act recursion forward and measure convergence.

Uses a constructed contracting instance: class i lives in the band
f1 = i and its action shifts the band down by one, so every object must
reach the normal class in at most height(diagram) steps.  Then breaks
one action on purpose to show cycle detection.

Run:  python demos/04_car_simulation.py
"""

from carlab import synth
from carlab.carsim import ActionSpec, convergence_metrics, register_actions, run_car
from carlab.lcpr import ld_classifier, mine_lds
from carlab.poset import build_level_diagram

levels = 4
dataset, specs, graph = synth.contracting_instance(deviated_count=levels)
diagram = build_level_diagram(graph)
print(f"contracting instance: {dataset.m} objects, diagram height {diagram.height}")

classifier = ld_classifier(mine_lds(dataset))
actions = register_actions(specs, deviated_count=levels)

report = run_car(dataset.samples, classifier, actions, max_steps=levels)
metrics = convergence_metrics(report)
print("fraction normal within k:", [round(v, 3) for v in metrics["fraction_normal_within"]])
print("mean steps:", metrics["mean_steps"], " p90:", metrics["p90_steps"])
print("stalls:", metrics["stalls"])

sample_id = dataset.samples[-1].object_id
print(f"\ntrace of {sample_id}:")
for event in report.traces[sample_id]:
    print(
        f"  step {event.step}: state={event.state} class={event.assigned_class}"
        f" action={event.applied_action}"
    )

# Break class 2's action into the identity: its objects cycle forever,
# which the simulator proves after one repeat and reports as a stall.
broken = [
    spec if spec.class_index != 2 else ActionSpec(
        action_id="noop", class_index=2, kind="affine",
        alpha=(1.0, 1.0), beta=(0.0, 0.0),
    )
    for spec in specs
]
report = run_car(
    dataset.samples, classifier, register_actions(broken, levels), max_steps=8
)
metrics = convergence_metrics(report)
print("\nwith a broken action on class 2:")
print("terminal fraction:", metrics["terminal_fraction"])
print("stalls:", metrics["stalls"])
