# Helicity of the ABC flow three ways, and the quadratic-helicity bound.
import time

import numpy as np

from hopflink import (BeltramiField, arnold_ratio, delta2_bound, energy, helicity_pairs,
                      helicity_spectral, linking_distribution, quadratic_helicity_pairs)

abc = BeltramiField(1.0, 1.0, 1.0, 1.0)

# For a Beltrami field A = B / k, so helicity equals energy over k.
chi = helicity_spectral(abc)
U = energy(abc)
print(f"chi={chi:.3f}  U={U:.3f}  3(2pi)^3={3 * (2 * np.pi) ** 3:.3f}")
print("U/(k|chi|):", arnold_ratio(abc))

# The same number as an average of asymptotic linking over random pairs of
# field lines.  A modest sample keeps the demo quick.
t0 = time.perf_counter()
d = linking_distribution(abc, 120, 60.0, seed=1)
est = helicity_pairs(abc, samples=d)
print(f"pairs: {est.value:.1f} +- {est.error:.1f} ({time.perf_counter() - t0:.0f}s)")

# Second moment of the linking distribution against its upper bound.
q = quadratic_helicity_pairs(abc, samples=d)
b = delta2_bound(abc, 20000, seed=1)
print(f"chi2={q.value:.2f} +- {q.error:.2f}   delta2 bound={b.value:.2f} +- {b.error:.2f}")
print("empirical CDF at 0:", d.cdf(0.0))
