"""Two cameras on a 16-camera ring: the 1-sigma ellipse at the center.

Pairing camera 0 with cameras further round the ring widens the angle
between the rays. The error ellipse shrinks along its major axis and becomes
a circle at 90 degrees. Monte Carlo triangulation confirms each ellipse.
"""
import numpy as np

from mocapvar import McConfig
from mocapvar.experiments import PAIR_ANGLES, run_pair_angle_sweep

rows = run_pair_angle_sweep(PAIR_ANGLES, McConfig(20_000, seed=1))
print(f"{'angle':>7} {'major mm':>9} {'minor mm':>9} {'MC major':>9} {'MC minor':>9}")
for r in rows:
    print(f"{np.degrees(r.angle):6.1f}° {r.theory.major * 1e3:9.4f} {r.theory.minor * 1e3:9.4f} "
          f"{r.mc.major * 1e3:9.4f} {r.mc.minor * 1e3:9.4f}")

# Points on the closed-form ellipse, ready for plotting.
curve = rows[1].theory.polyline(8)
print("pi/4 ellipse samples (x, y) mm:\n", np.round(curve[:, :2] * 1e3, 4))
