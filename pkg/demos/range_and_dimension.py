"""Does the range of a stable additive process have positive volume, and what is its dimension?

Sweeps a few (alpha, N, d) and prints the quadrature verdict next to the closed-form answer.
"""
from additive_levy import AdditiveProcess, hausdorff_dimension_range, isotropic_stable, range_positivity
from additive_levy.analysis import stable_oracle

print(f"{'alpha':>5} {'N':>2} {'d':>2}  {'verdict':<10} {'oracle':<6} {'dim':>6} {'min(d,aN)':>9}")
for alpha, N, d in [(0.6, 2, 1), (0.6, 2, 2), (1.5, 1, 2), (0.8, 3, 3), (2.0, 2, 2)]:
    proc = AdditiveProcess([isotropic_stable(alpha, d)] * N)
    verdict = range_positivity(proc).verdict
    dim = hausdorff_dimension_range(proc).dim
    oracle = stable_oracle(alpha, N=N, d=d)["range_positive"]
    print(f"{alpha:5.1f} {N:2d} {d:2d}  {verdict:<10} {str(oracle):<6} {dim:6.3f} {min(d, alpha * N):9.2f}")
