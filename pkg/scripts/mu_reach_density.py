"""How the sample-level critical-function estimate on the ninja star depends on
grid density, next to the continuum value along the cusp bisector."""
import math

from ripsrecon.geometry import make_shape, sample_shape
from ripsrecon.invariants import critical_function_estimate

depths = [0.1, 0.05, 0.02, 0.01]
r = 1.0
print("continuum " + "  ".join(f"{math.sqrt(2 * r * d + d * d) / (r + d):.4f}" for d in depths))
for n in (500, 1000, 2000, 4000, 8000, 16000):
    cloud, _ = sample_shape(make_shape("ninja_star", r=r), n)
    rows = critical_function_estimate(cloud, depths, seed=0)["rows"]
    print(f"n={n:<7d} " + "  ".join(f"{row['chi_estimate']:.4f}" for row in rows))
