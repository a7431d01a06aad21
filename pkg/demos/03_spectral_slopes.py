# Power-law ensembles: shell spectra and their log-log slopes.
import numpy as np

from hopflink import (SpectrumConfig, delta2_bound, energy, fit_slope, generate_ensemble,
                      helicity_spectral, shell_spectrum, sphere_average)

print("<sin^2>:", sphere_average("sin2"), " <|sin|>:", sphere_average("abs_sin"))

for alpha in (0.5, 1.0, 1.5):
    slopes = {q: [] for q in ("helicity", "energy", "quad_main")}
    for seed in range(8):
        f = generate_ensemble(SpectrumConfig(alpha, 1, 12, 32, "right", seed))
        for q in slopes:
            slopes[q].append(fit_slope(shell_spectrum(f, q)).slope)
    print(f"alpha={alpha}: " + "  ".join(f"{q} {np.mean(v):+.2f}" for q, v in slopes.items()))
print("expected: helicity 1-2a, energy 2-2a, quad_main 6-4a")

# Equal left and right content: helicity vanishes, the bound does not.
f = generate_ensemble(SpectrumConfig(1.0, 1, 12, 32, "balanced", 0))
b = delta2_bound(f, 50000, 0, dcut=0.1 * f.domain.L)
print(f"balanced: chi={helicity_spectral(f):.1e}  U={energy(f):.1f}  "
      f"delta2 (r > L/10) = {b.value:.0f} +- {b.error:.0f}")
