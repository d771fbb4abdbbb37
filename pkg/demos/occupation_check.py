"""Monte Carlo check of E|O(xi)|^2 = Re 1/(1 + Psi(xi)) for one-dimensional Brownian motion.

Coarse meshes are biased; the exact expectation of the lattice sum is printed alongside.
"""
import math

from additive_levy import AdditiveProcess, brownian
from additive_levy.simulate import SimulationConfig, occupation_fourier

proc = AdditiveProcess([brownian(1)])
xi = 1.0
for h in (1.0, 0.5, 0.25, 1 / 256):
    s = occupation_fourier(SimulationConfig(proc, h=h, replicates=2000, seed=1), [xi])
    a, b = math.exp(-h), math.exp(-h * xi * xi)
    lattice = (1 - a) / (1 + a) * (1 + a * b) / (1 - a * b)
    print(f"h={h:<9.5g} estimate {s.estimate:.4f} +- {s.stderr:.4f}   lattice {lattice:.4f}   limit {s.target:.4f}")
