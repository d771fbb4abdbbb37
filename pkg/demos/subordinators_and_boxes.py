"""Two stable subordinators meet iff alpha1 + alpha2 > 1; a box count confirms a path dimension."""
from additive_levy import AdditiveProcess, isotropic_stable, stable_subordinator, subordinator_intersection
from additive_levy.simulate import SimulationConfig, box_counting_dimension

for a1, a2 in [(0.6, 0.6), (0.4, 0.4), (0.7, 0.45), (0.5, 0.5)]:
    v = subordinator_intersection(stable_subordinator(a1), stable_subordinator(a2))
    print(f"alpha = ({a1}, {a2})  sum {a1 + a2:.2f}  {v.verdict}  {', '.join(v.flags)}")

box = box_counting_dimension(SimulationConfig(AdditiveProcess([isotropic_stable(0.6)]), h=2 ** -18, replicates=2))
print(f"stable 0.6 path on the line: box dimension {box.dim:.3f} (residual {box.residual:.3f})")
