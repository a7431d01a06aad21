# Linking of closed loops and of finite field-line segments.
import numpy as np

from hopflink import (BeltramiField, Loop, closed_curve_linking, hopf_link, segment_linking,
                      trace)

# Two unit circles, each through the other's centre, link once.
c1, c2 = hopf_link()
print("Hopf link:", closed_curve_linking(c1, c2))

# Traversing one loop twice doubles the integral.
c2x2 = Loop.circle((1, 0, 0), (0, -1, 0), 1.0, turns=2, axis=(1, 0, 0))
print("double traversal:", closed_curve_linking(c1, c2x2))

# Far-apart coaxial circles do not link.
far = Loop.circle((0, 0, 5), (0, 0, 1), 1.0)
print("unlinked:", closed_curve_linking(c1, far))

# Field lines of the ABC flow are open curves on the 3-torus.  Trace one in
# magnetic time (dx/dt = B) and look at the speed along it.
abc = BeltramiField(1.0, 1.0, 1.0, 1.0)
line = trace(abc, [0.3, 0.2, 1.0], 20.0)
speed = np.linalg.norm(line.B, axis=1)
print(f"{len(line.t)} samples, speed {speed.min():.3f}..{speed.max():.3f}")

# Segment linking grows like T^2 times the asymptotic linking number.
x1, x2 = [0.3, 0.2, 1.0], [1.5, 0.4, 2.0]
for T in (10.0, 40.0, 160.0):
    L = segment_linking(abc, x1, x2, T, on_proximity="ignore")
    print(f"T={T:6.1f}  L_T={L: .4f}  L_T/T^2={L / T**2: .3e}")
