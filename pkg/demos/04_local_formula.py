# Derivative terms of the local formula and the synthetic separable kernel.
import numpy as np

from hopflink import (BeltramiField, delta2_bound, local_formula_partial_sum, nabla_term,
                      synthetic_kernel_check)
from hopflink.helicity import local_formula_terms

abc = BeltramiField(1.0, 1.0, 1.0, 1.0)
terms = local_formula_terms(abc, s_max=2, n_samples=4000, seed=0)
for (i, j), t in sorted(terms.items()):
    print(f"term({i},{j}) = {t.value:12.3f} +- {t.error:.3f}")
print("main term equals the bound:", terms[(0, 0)].value == delta2_bound(abc, 4000, 0).value)

for a in (0.0, 0.1, 0.3, 1.0):
    print(f"a={a}: partial sums", np.round(local_formula_partial_sum(abc, a, 2, terms=terms), 2))

# Second-order finite differences: halving h divides the error by four.
x1, x2 = np.array([0.3, 1.2, 2.0]), np.array([1.0, 0.5, 2.5])
v = [nabla_term(abc, 1, 1, x1, x2, h) for h in (0.012, 0.006, 0.003)]
print("FD error ratio:", (v[0] - v[1]) / (v[1] - v[2]))

# For a separable kernel the series is available in closed form.
print("lam=0:", synthetic_kernel_check(1.3, 0.0, 1.0, 2.0, 0.2, 0.4, 2 * np.pi, 0.5, 3))
print("lam0=0:", synthetic_kernel_check(0.0, 2.0, 1.0, 3.0, 0.2, 0.4, 2 * np.pi, 0.0, 0))
